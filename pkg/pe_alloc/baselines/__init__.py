"""
Reference iterative solvers for the four allocation problems and the channel
generators that feed them.

The solvers double as oracles for the re-expressed iterations and as the
denominators of the learned models' SE ratios.
"""

from .channels import draw_rician, generate_channels, path_loss_db, steering_vector
from .gd_bandwidth import PBSolution, PBState, gd_pb_solve, gd_pb_step, init_pb_state
from .problems import ProblemInstance, evaluate_objective
from .wmmse_mimo import PMSolution, PMState, init_pm_state, wmmse_pm_solve, wmmse_pm_step
from .wmmse_miso import PSSolution, PSState, init_ps_state, wmmse_ps_solve, wmmse_ps_step
from .wmmse_power import (
    PCSolution,
    PCState,
    fixed_beam_power_solve,
    init_pc_state,
    wmmse_pc_solve,
    wmmse_pc_step,
)

__all__ = [
    "PBSolution",
    "PBState",
    "PCSolution",
    "PCState",
    "PMSolution",
    "PMState",
    "PSSolution",
    "PSState",
    "ProblemInstance",
    "draw_rician",
    "evaluate_objective",
    "fixed_beam_power_solve",
    "gd_pb_solve",
    "gd_pb_step",
    "generate_channels",
    "init_pb_state",
    "init_pc_state",
    "init_pm_state",
    "init_ps_state",
    "path_loss_db",
    "steering_vector",
    "wmmse_pc_solve",
    "wmmse_pc_step",
    "wmmse_pm_solve",
    "wmmse_pm_step",
    "wmmse_ps_solve",
    "wmmse_ps_step",
]
