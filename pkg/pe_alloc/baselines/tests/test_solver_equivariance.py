"""
Relabeling users permutes every solver's output the same way.
"""

import numpy as np

from pe_alloc.baselines.channels import generate_channels
from pe_alloc.baselines.gd_bandwidth import gd_pb_solve
from pe_alloc.baselines.problems import ProblemInstance
from pe_alloc.baselines.wmmse_mimo import wmmse_pm_solve
from pe_alloc.baselines.wmmse_miso import wmmse_ps_solve
from pe_alloc.baselines.wmmse_power import wmmse_pc_solve

PERM = np.array([2, 0, 3, 1])


def test_bandwidth_solver() -> None:
    inst = ProblemInstance.pb([3.0, 4.0, 5.0, 6.0])
    base = gd_pb_solve(inst, max_iters=500, tol=0.0)
    moved = gd_pb_solve(ProblemInstance.pb(inst.gains[PERM]), max_iters=500, tol=0.0)
    np.testing.assert_allclose(moved.p, base.p[PERM], atol=1e-10)
    np.testing.assert_allclose(moved.bandwidth, base.bandwidth[PERM], atol=1e-10)


def test_miso_solver() -> None:
    inst = generate_channels("PS", {"users": 4, "bs_antennas": 4}, seed=1)
    base = wmmse_ps_solve(inst, max_iters=30, tol=0.0)
    moved = wmmse_ps_solve(
        ProblemInstance.ps(inst.channels[:, PERM], inst.p_max, inst.noise_power),
        max_iters=30,
        tol=0.0,
    )
    np.testing.assert_allclose(moved.precoders, base.precoders[:, PERM], atol=1e-8)


def test_mimo_solver() -> None:
    sizes = {"users": 4, "bs_antennas": 4, "ue_antennas": 2, "streams": 1}
    inst = generate_channels("PM", sizes, seed=2)
    base = wmmse_pm_solve(inst, iters=3)
    moved = wmmse_pm_solve(
        ProblemInstance.pm(inst.channels[PERM], inst.streams, inst.p_max, inst.noise_power),
        iters=3,
    )
    np.testing.assert_allclose(moved.precoders, base.precoders[PERM], atol=1e-9)
    np.testing.assert_allclose(moved.receivers, base.receivers[PERM], atol=1e-9)


def test_power_control_solver() -> None:
    inst = generate_channels("PC", {"users": 4, "bs_antennas": 4}, seed=3)
    base = wmmse_pc_solve(inst, max_iters=50, tol=0.0)
    moved = wmmse_pc_solve(
        ProblemInstance.pc(inst.gains[np.ix_(PERM, PERM)], inst.p_max, inst.noise_power),
        max_iters=50,
        tol=0.0,
    )
    np.testing.assert_allclose(moved.powers, base.powers[PERM], atol=1e-10)
