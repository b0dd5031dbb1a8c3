"""
Tests for the projected primal-dual bandwidth solver.
"""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from pe_alloc.baselines.gd_bandwidth import (
    PBState,
    gd_pb_solve,
    gd_pb_step,
    init_pb_state,
    pb_slackness,
)
from pe_alloc.baselines.problems import ProblemInstance, pb_rates
from pe_alloc.core import config, feature_flags
from pe_alloc.core.exceptions import ContractViolationError, InfeasibleProblemError


@pytest.fixture(autouse=True)
def reset_feature_flags(monkeypatch: pytest.MonkeyPatch) -> None:
    feature_flags.set_pb_update_form(None)
    monkeypatch.delenv("PE_ALLOC_PB_UPDATE_FORM", raising=False)
    yield
    feature_flags.set_pb_update_form(None)


def _canonical(gains=(1.0,)) -> ProblemInstance:
    return ProblemInstance.pb(list(gains), p_max=1.0, noise_density=1.0, rate_target=1.0)


def _min_bandwidth(gain: float, power: float, target: float = 1.0) -> float:
    """Smallest B with B log2(1 + p g / B) = s0 (rate grows with B)."""
    return brentq(lambda b: b * math.log2(1.0 + power * gain / b) - target, 1e-9, 1e6, xtol=1e-14)


def test_single_user_matches_grid_search() -> None:
    sol = gd_pb_solve(_canonical(), tol=1e-8)
    assert sol.converged

    p_grid = np.linspace(0.01, 1.0, 100)[:, None]
    b_grid = np.linspace(0.5, 3.0, 251)[None, :]
    rate = b_grid * np.log2(1.0 + p_grid / b_grid)
    feasible = rate >= 1.0 - 1e-12
    cost = np.where(feasible, np.broadcast_to(b_grid, rate.shape), np.inf)
    i, j = np.unravel_index(np.argmin(cost), cost.shape)

    assert sol.p[0] == pytest.approx(p_grid[i, 0], abs=1e-2)
    assert sol.bandwidth[0] == pytest.approx(b_grid[0, j], abs=1e-2)
    assert sol.p[0] == pytest.approx(1.0, abs=1e-4)
    assert sol.bandwidth[0] == pytest.approx(1.0, abs=1e-4)


def test_single_user_multipliers() -> None:
    sol = gd_pb_solve(_canonical(), tol=1e-8)
    # dL/dB = 0 and dL/dp = 0 at p = B = 1.
    mu = 1.0 / (1.0 - 1.0 / (2.0 * math.log(2.0)))
    assert sol.rate_multipliers[0] == pytest.approx(mu, abs=1e-3)
    assert sol.power_multiplier == pytest.approx(mu / (2.0 * math.log(2.0)), abs=1e-3)


def test_symmetric_users_split_evenly() -> None:
    inst = _canonical(gains=(2.0, 2.0))
    sol = gd_pb_solve(inst, tol=1e-8)
    np.testing.assert_allclose(sol.p, [0.5, 0.5], atol=1e-4)
    assert sol.bandwidth[0] == pytest.approx(sol.bandwidth[1], abs=1e-9)
    assert sol.bandwidth[0] == pytest.approx(_min_bandwidth(2.0, 0.5), abs=1e-3)


def test_constraints_and_slackness_at_convergence() -> None:
    inst = _canonical(gains=(3.0, 4.0, 5.0))
    sol = gd_pb_solve(inst, tol=1e-8)
    assert sol.converged
    rates = pb_rates(inst, sol.p, sol.bandwidth)
    assert np.all(rates >= inst.rate_target - 1e-6)
    assert float(np.sum(sol.p)) <= inst.p_max + 1e-6
    rate_slack, power_slack = pb_slackness(inst, sol)
    assert np.max(np.abs(rate_slack)) <= 1e-4
    assert abs(power_slack) <= 1e-4


def test_trace_records_all_updates() -> None:
    sol = gd_pb_solve(_canonical(), max_iters=25, tol=0.0)
    assert not sol.converged
    assert sol.iterations == 25
    for key in ("p", "bandwidth", "mu", "lambda", "objective"):
        assert len(sol.trace[key]) == 26
    np.testing.assert_array_equal(sol.trace["p"][-1], sol.p)


def test_infeasible_rate_target_rejected() -> None:
    inst = ProblemInstance.pb([1.0], p_max=1e-3, noise_density=1.0, rate_target=1e3)
    with pytest.raises(InfeasibleProblemError):
        gd_pb_solve(inst)


def test_diverging_multipliers_reported(monkeypatch: pytest.MonkeyPatch) -> None:
    # The single-user optimum needs mu near 3.59; a low ceiling is crossed.
    monkeypatch.setattr(config, "PB_MULTIPLIER_CEILING", 1.5)
    with pytest.raises(InfeasibleProblemError, match="diverged"):
        gd_pb_solve(_canonical())


def test_initial_state() -> None:
    state = init_pb_state(_canonical(gains=(1.0, 2.0, 3.0, 4.0)))
    np.testing.assert_array_equal(state.p, np.full(4, 0.25))
    np.testing.assert_array_equal(state.bandwidth, np.ones(4))
    np.testing.assert_array_equal(state.rate_multipliers, np.ones(4))
    assert state.power_multiplier == 1.0


def test_bandwidth_floor_and_nonnegative_duals() -> None:
    inst = _canonical(gains=(1.0, 1.0))
    state = PBState(
        p=np.array([0.0, 0.9]),
        bandwidth=np.array([1e-12, 1e-3]),
        rate_multipliers=np.array([0.0, 0.0]),
        power_multiplier=0.0,
    )
    nxt = gd_pb_step(inst, state, step_size=10.0)
    assert np.all(nxt.bandwidth >= config.PB_BANDWIDTH_FLOOR)
    assert np.all(nxt.rate_multipliers >= 0.0)
    assert nxt.power_multiplier >= 0.0
    assert np.all(nxt.p >= 0.0)


def test_step_form_follows_flag(monkeypatch: pytest.MonkeyPatch) -> None:
    inst = _canonical(gains=(1.0, 2.0))
    state = init_pb_state(inst)
    lagrangian = gd_pb_step(inst, state, form="lagrangian")
    printed = gd_pb_step(inst, state, form="printed")
    assert not np.allclose(lagrangian.p, printed.p)

    monkeypatch.setenv("PE_ALLOC_PB_UPDATE_FORM", "printed")
    from_env = gd_pb_step(inst, state)
    np.testing.assert_array_equal(from_env.p, printed.p)
    np.testing.assert_array_equal(from_env.bandwidth, printed.bandwidth)


def test_bad_step_size_rejected() -> None:
    with pytest.raises(ContractViolationError):
        gd_pb_solve(_canonical(), step_size=0.0)
    with pytest.raises(ContractViolationError):
        gd_pb_solve(ProblemInstance.pc(np.eye(2)))
