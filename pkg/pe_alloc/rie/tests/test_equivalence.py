"""
Tests for the variant registry and the side-by-side equivalence oracle.
"""

import os
from dataclasses import replace

import numpy as np
import pytest

from pe_alloc.core import config, feature_flags
from pe_alloc.core.exceptions import ContractViolationError
from pe_alloc.rie import registry
from pe_alloc.rie.equivalence import run_trial, verify_rie_equivalence
from pe_alloc.rie.pb import PBCase
from pe_alloc.rie.pc import PCCase
from pe_alloc.rie.pm import PMCase
from pe_alloc.rie.registry import VARIANT_REGISTRY, get_rie_case
from pe_alloc.rie.state import absolute_deviation, relative_deviation

VARIANTS = ["PB", "PS", "PM", "PC", "PS_POWER"]


@pytest.fixture(autouse=True)
def reset_feature_flags(monkeypatch: pytest.MonkeyPatch) -> None:
    feature_flags.set_pb_update_form(None)
    feature_flags.set_pm_channel_form(None)
    monkeypatch.delenv("PE_ALLOC_PB_UPDATE_FORM", raising=False)
    monkeypatch.delenv("PE_ALLOC_PM_CHANNEL_FORM", raising=False)
    yield
    feature_flags.set_pb_update_form(None)
    feature_flags.set_pm_channel_form(None)


def test_registry_lists_every_variant() -> None:
    assert sorted(VARIANT_REGISTRY) == sorted(VARIANTS)
    for name in VARIANTS:
        assert get_rie_case(name).variant == name


def test_registry_accepts_lowercase_and_options() -> None:
    case = get_rie_case("pm", channel_form="printed")
    assert isinstance(case, PMCase)
    assert case.channel_form == "printed"
    assert get_rie_case("PB", form="printed").form == "printed"


def test_unknown_variant_rejected() -> None:
    with pytest.raises(ValueError, match="Valid options"):
        get_rie_case("PR")


def test_unknown_option_rejected() -> None:
    with pytest.raises(TypeError):
        get_rie_case("PC", channel_form="hk")


def test_broken_registry_entry(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setitem(VARIANT_REGISTRY, "PB", "pe_alloc.rie.pb.NoSuchCase")
    with pytest.raises(ImportError, match="NoSuchCase"):
        get_rie_case("PB")
    monkeypatch.setitem(VARIANT_REGISTRY, "PB", "pe_alloc.rie.pb.PBState")
    with pytest.raises(TypeError, match="RieCase"):
        registry.get_rie_case("PB")


def test_relative_deviation_scale() -> None:
    assert relative_deviation(np.array([0.5]), np.array([0.6])) == pytest.approx(0.1)
    assert relative_deviation(np.array([10.0]), np.array([11.0])) == pytest.approx(0.1)
    with pytest.raises(ContractViolationError):
        relative_deviation(np.zeros(2), np.zeros(3))


def test_absolute_deviation_ignores_state_scale() -> None:
    assert absolute_deviation(np.array([0.5]), np.array([0.6])) == pytest.approx(0.1)
    assert absolute_deviation(np.array([10.0]), np.array([11.0])) == pytest.approx(1.0)
    assert absolute_deviation(np.zeros(0), np.zeros(0)) == 0.0
    with pytest.raises(ContractViolationError):
        absolute_deviation(np.zeros(2), np.zeros(3))


class _OffsetPC(PCCase):
    def step(self, state):
        out = super().step(state)
        return replace(out, D=out.D + 1e-6)


def test_acceptance_uses_absolute_deviation(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr("pe_alloc.rie.equivalence.get_rie_case", lambda variant, **options: _OffsetPC())
    first = verify_rie_equivalence("PC", trials=2, iters=1, seed=0, tol=1.0)
    assert first.worst_error == pytest.approx(1e-6, rel=1e-3)
    assert first.worst_rel_error < first.worst_error
    assert first.to_dict()["worst_rel_error"] == first.worst_rel_error

    tol = 0.5 * (first.worst_rel_error + first.worst_error)
    report = verify_rie_equivalence("PC", trials=2, iters=1, seed=0, tol=tol)
    assert not report.passed
    assert report.failed_trials >= 1
    assert report.to_rows()[-1]["max_abs_error"] == report.worst_error


@pytest.mark.parametrize("variant", VARIANTS)
def test_small_equivalence_run_passes(variant: str) -> None:
    report = verify_rie_equivalence(variant, trials=3, iters=5, seed=1)
    assert report.passed, report.to_dict()
    assert report.trials == 3
    assert report.failed_trials == 0
    assert all(len(trace.errors) == 5 for trace in report.traces)


@pytest.mark.parametrize("form", ["hk", "printed"])
def test_pm_equivalence_with_each_channel_form(form: str) -> None:
    report = verify_rie_equivalence("PM", trials=3, iters=5, seed=2, channel_form=form)
    assert report.passed, report.to_dict()
    assert report.options == {"channel_form": form}


def test_single_user_instances_exercise_empty_pools(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(config, "EQUIVALENCE_MAX_USERS", 1)
    report = verify_rie_equivalence("PS", trials=3, iters=5)
    assert report.passed
    assert all(trace.sizes["UE"] == 1 for trace in report.traces)


def test_rows_carry_every_iteration_and_a_summary() -> None:
    report = verify_rie_equivalence("PB", trials=2, iters=3)
    rows = report.to_rows()
    assert len(rows) == 2 * 3 + 1
    assert rows[0] == {"trial": 0, "iteration": 1, "max_abs_error": report.traces[0].errors[0]}
    assert rows[-1]["trial"] == "summary"
    assert rows[-1]["max_abs_error"] == report.worst_error


def test_trials_are_seeded_independently_of_workers() -> None:
    serial = verify_rie_equivalence("PC", trials=4, iters=3, seed=5)
    threaded = verify_rie_equivalence("PC", trials=4, iters=3, seed=5, workers=2)
    assert [t.seed for t in serial.traces] == [t.seed for t in threaded.traces]
    assert [t.errors for t in serial.traces] == [t.errors for t in threaded.traces]


def test_failing_trial_is_recorded() -> None:
    class Exploding(PBCase):
        def step(self, state):
            raise RuntimeError("boom")

    trace = run_trial(Exploding(), trial=0, seed=0, iters=2)
    assert trace.error == "RuntimeError: boom"
    assert trace.worst == float("inf")


def test_zero_trials_rejected() -> None:
    with pytest.raises(ContractViolationError, match="trials"):
        verify_rie_equivalence("PB", trials=0)


@pytest.mark.slow
@pytest.mark.parametrize("variant", VARIANTS)
def test_full_equivalence_run(variant: str) -> None:
    if os.environ.get("RUN_SLOW") != "1":
        pytest.skip("RUN_SLOW not enabled")
    report = verify_rie_equivalence(variant, trials=config.RIE_TRIALS, iters=config.RIE_ITERS)
    assert report.passed, report.to_dict()
