"""
Tests for WMMSE power control.
"""

import numpy as np
import pytest

from pe_alloc.baselines.channels import generate_channels
from pe_alloc.baselines.problems import ProblemInstance, pc_sum_rate
from pe_alloc.baselines.wmmse_power import (
    fixed_beam_power_solve,
    init_pc_state,
    wmmse_pc_solve,
    wmmse_pc_step,
)
from pe_alloc.core.exceptions import ContractViolationError


def test_single_link_uses_full_power() -> None:
    inst = ProblemInstance.pc(np.array([[0.7]]), p_max=2.0, noise_power=0.1)
    sol = wmmse_pc_solve(inst)
    assert sol.converged
    assert sol.powers[0] == pytest.approx(2.0, rel=1e-9)


def test_weak_coupling_uses_full_power_everywhere() -> None:
    G = np.array([[1.0, 1e-6], [1e-6, 1.0]])
    sol = wmmse_pc_solve(ProblemInstance.pc(G, p_max=1.0, noise_power=0.1))
    np.testing.assert_allclose(sol.powers, [1.0, 1.0], atol=1e-3)


def test_strong_interference_near_grid_optimum() -> None:
    G = np.array([[1.0, 3.0], [3.0, 0.8]])
    inst = ProblemInstance.pc(G, p_max=1.0, noise_power=0.1)
    sol = wmmse_pc_solve(inst)

    grid = np.linspace(0.0, 1.0, 201)
    best = max(pc_sum_rate(G, np.array([a, b]), 0.1) for a in grid for b in grid)
    assert sol.sum_rate >= 0.95 * best
    # the stronger link takes the channel
    assert sol.powers[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.powers[1] == pytest.approx(0.0, abs=1e-6)


def test_powers_stay_in_budget() -> None:
    inst = generate_channels("PC", {"users": 5, "bs_antennas": 4}, seed=3)
    state = init_pc_state(inst.gains, inst.p_max, inst.noise_power)
    for _ in range(30):
        state = wmmse_pc_step(inst.gains, inst.p_max, inst.noise_power, state)
        assert np.all(state.powers >= 0.0)
        assert np.all(state.powers <= inst.p_max + 1e-12)


def test_trace_is_monotone() -> None:
    inst = generate_channels("PC", {"users": 4, "bs_antennas": 4}, seed=8)
    sol = wmmse_pc_solve(inst, max_iters=300)
    assert np.all(np.diff(sol.trace) >= -1e-9)


def test_fixed_beam_matches_gain_matrix_solver() -> None:
    inst = generate_channels("PC", {"users": 4, "bs_antennas": 6}, seed=12)
    direct = wmmse_pc_solve(inst, max_iters=100, tol=0.0)
    beams = fixed_beam_power_solve(inst, max_iters=100, tol=0.0)
    np.testing.assert_allclose(beams.powers, direct.powers, atol=1e-12)
    np.testing.assert_allclose(beams.trace, direct.trace, atol=1e-12)


def test_fixed_beam_requires_pair() -> None:
    with pytest.raises(ContractViolationError, match="pair"):
        fixed_beam_power_solve(ProblemInstance.pc(np.eye(2)))
    with pytest.raises(ContractViolationError):
        wmmse_pc_solve(ProblemInstance.pb([1.0]))
