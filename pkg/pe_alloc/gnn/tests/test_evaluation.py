"""
Tests for SE-ratio evaluation against WMMSE.
"""

import numpy as np
import pytest

from pe_alloc.baselines.problems import ProblemInstance
from pe_alloc.baselines.wmmse_miso import wmmse_ps_solve
from pe_alloc.core.exceptions import ContractViolationError
from pe_alloc.gnn.descriptors import preset_descriptors
from pe_alloc.gnn.evaluation import (
    bootstrap_ci,
    eval_se_ratio,
    eval_size_generalization,
    policy_sum_rates,
)
from pe_alloc.gnn.model import build_gnn_from_problem
from pe_alloc.gnn.objective import ps_precoders
from pe_alloc.gnn.training import draw_ps_dataset


def _model():
    return build_gnn_from_problem(preset_descriptors("PS"), widths=[8], layers=1, seed=2)


def test_replayed_wmmse_has_unit_ratio() -> None:
    instances = draw_ps_dataset(5, 4, 2, seed=0)
    report = eval_se_ratio(lambda inst: wmmse_ps_solve(inst).precoders, instances)
    np.testing.assert_allclose(report.ratios, 1.0, rtol=1e-12)
    assert report.ci_low <= 1.0 <= report.ci_high
    assert report.excluded == 0


def test_silent_policy_has_zero_ratio() -> None:
    instances = draw_ps_dataset(4, 4, 3, seed=1)
    report = eval_se_ratio(lambda inst: np.zeros_like(inst.channels), instances)
    assert report.mean == 0.0
    assert report.summary()["samples"] == 4


def test_zero_channel_samples_are_excluded() -> None:
    instances = draw_ps_dataset(3, 4, 2, seed=2)
    instances.append(ProblemInstance.ps(np.zeros((4, 2), dtype=complex)))
    report = eval_se_ratio(lambda inst: wmmse_ps_solve(inst).precoders, instances)
    assert report.excluded == 1
    assert report.samples == 3
    assert len(report.to_rows()) == 3


def test_model_rates_follow_input_order_across_user_counts() -> None:
    model = _model()
    instances = draw_ps_dataset(2, 4, 3, seed=3) + draw_ps_dataset(2, 4, 1, seed=3)
    instances = [instances[0], instances[2], instances[1], instances[3]]
    batched = policy_sum_rates(model, instances)
    one_by_one = policy_sum_rates(
        lambda inst: ps_precoders(model, inst.channels[None], inst.p_max).to_array()[0], instances
    )
    np.testing.assert_allclose(batched, one_by_one, rtol=1e-10)


def test_evaluation_rejects_other_variants() -> None:
    pc = ProblemInstance.pc(np.ones((2, 2)))
    with pytest.raises(ContractViolationError):
        eval_se_ratio(lambda inst: None, [pc])
    instances = draw_ps_dataset(2, 4, 2, seed=4)
    with pytest.raises(ContractViolationError, match="one SE per instance"):
        eval_se_ratio(lambda inst: np.zeros_like(inst.channels), instances, baseline=[1.0])


def test_bootstrap_interval() -> None:
    assert bootstrap_ci([0.7] * 10) == pytest.approx((0.7, 0.7))
    values = np.random.default_rng(5).uniform(0.5, 1.0, size=50)
    low, high = bootstrap_ci(values, resamples=500, seed=1)
    assert low < values.mean() < high
    assert bootstrap_ci(values, resamples=500, seed=1) == (low, high)
    assert all(np.isnan(bootstrap_ci([])))


def test_generalization_row_matches_direct_evaluation() -> None:
    model = _model()
    table = eval_size_generalization(model, train_sizes=[2], test_sizes=[2, 3], samples=6, seed=4)
    assert [row["K"] for row in table.rows] == [2, 3]
    assert [row["in_training"] for row in table.rows] == [True, False]
    direct = eval_se_ratio(model, draw_ps_dataset(6, 4, 2, seed=4, label="test-K2"))
    assert table.ratio_at(2) == pytest.approx(direct.mean, rel=1e-12)
    with pytest.raises(KeyError):
        table.ratio_at(7)
