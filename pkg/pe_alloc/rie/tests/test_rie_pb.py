"""
Tests for the bandwidth iteration as one APE_I along UE.
"""

import numpy as np
import pytest

from pe_alloc.baselines.gd_bandwidth import gd_pb_step, init_pb_state
from pe_alloc.baselines.problems import ProblemInstance
from pe_alloc.core import feature_flags
from pe_alloc.core.permutation import check_equivariance
from pe_alloc.rie.pb import PBCase, pack_pb, power_slot, rie_pb_step, unpack_pb
from pe_alloc.rie.state import relative_deviation


@pytest.fixture(autouse=True)
def reset_feature_flags(monkeypatch: pytest.MonkeyPatch) -> None:
    feature_flags.set_pb_update_form(None)
    monkeypatch.delenv("PE_ALLOC_PB_UPDATE_FORM", raising=False)
    yield
    feature_flags.set_pb_update_form(None)


def _side_by_side(inst, steps, form):
    raw = init_pb_state(inst)
    state = pack_pb(inst, raw, form=form)
    worst = 0.0
    for _ in range(steps):
        raw = gd_pb_step(inst, raw, form=form)
        state = rie_pb_step(state)
        worst = max(worst, relative_deviation(pack_pb(inst, raw, form=form).D, state.D))
    return raw, state, worst


def test_processor_reads_power_slot() -> None:
    d = np.array([[0.3, 1.0, 2.0, 0.5, 4.0], [0.7, 1.5, 1.0, 0.5, 2.0]])
    np.testing.assert_array_equal(power_slot(d).data, [[0.3], [0.7]])


def test_single_user_reproduces_raw_step() -> None:
    inst = ProblemInstance.pb([2.0])
    raw, state, worst = _side_by_side(inst, 1, "lagrangian")
    assert worst == pytest.approx(0.0, abs=1e-15)
    back = unpack_pb(state)
    np.testing.assert_allclose(back.p, raw.p, rtol=0, atol=1e-15)
    assert back.power_multiplier == pytest.approx(raw.power_multiplier, abs=1e-15)


@pytest.mark.parametrize("form", ["lagrangian", "printed"])
def test_four_user_trajectory_matches(form: str) -> None:
    inst = ProblemInstance.pb([0.8, 1.9, 3.3, 4.6])
    _, state, worst = _side_by_side(inst, 20, form)
    assert state.iteration == 20
    assert worst <= 1e-9


def test_env_form_reaches_both_steppers(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("PE_ALLOC_PB_UPDATE_FORM", "printed")
    inst = ProblemInstance.pb([1.0, 2.0, 3.0])
    _, _, worst = _side_by_side(inst, 10, None)
    assert worst <= 1e-9


def test_stack_has_one_ordinary_recursion() -> None:
    case = PBCase()
    state = case.sample_state(np.random.default_rng(1))
    (desc,) = case.describe(state)
    assert desc.recursion_count == 1
    assert desc.pairwise_slots == 0
    assert desc.attention_slots == 0
    assert desc.kinds_at(1) == ["APE_I"]


def test_step_is_user_equivariant() -> None:
    case = PBCase()
    inst = ProblemInstance.pb([0.6, 1.2, 2.4, 3.6])
    state = case.pack(inst, case.raw_step(inst, init_pb_state(inst)))
    report = check_equivariance(case.step_function(state), *case.schemes(state), state.D, trials=20)
    assert report.passed, report.to_dict()
