"""
WMMSE power control for the K-user interference channel.

With ``G[k, j]`` the gain from transmitter ``j`` to receiver ``k`` the
updates run in block order (v from iterate ``l``, then u from the new v,
then z from the new u and v):

    v_k <- [ z_k u_k G_kk / sum_j z_j u_j^2 G[j, k]^2 ]_0^sqrt(P_max)
    u_k <- v_k G_kk / (sum_j v_j^2 G[k, j]^2 + sigma^2)
    z_k <- 1 / (1 - u_k v_k G_kk)

Powers are ``p_k = v_k^2``. ``fixed_beam_power_solve`` runs the same updates
on an instance given by beams and channels, reading each gain as
``|w_j^H h_k|`` from the pair.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError
from .problems import ProblemInstance, pair_gains, pc_sum_rate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PCState:
    v: np.ndarray
    u: np.ndarray
    z: np.ndarray
    iteration: int = 0

    @property
    def powers(self) -> np.ndarray:
        return self.v**2


@dataclass
class PCSolution:
    powers: np.ndarray
    state: PCState
    trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = False
    iterations: int = 0

    @property
    def sum_rate(self) -> float:
        return float(self.trace[-1]) if self.trace.size else 0.0


def transmit_update(
    numerator: np.ndarray, denominator: np.ndarray, p_max: float
) -> np.ndarray:
    """``clip(numerator / denominator, 0, sqrt(P_max))`` with 0 where the denominator is 0."""
    safe = np.where(denominator > 0, denominator, 1.0)
    return np.where(denominator > 0, np.clip(numerator / safe, 0.0, math.sqrt(p_max)), 0.0)


def receive_update(
    v: np.ndarray, direct: np.ndarray, received: np.ndarray, noise_power: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Receiver and weight from ``received = sum_j v_j^2 G[k, j]^2``."""
    u = v * direct / (received + noise_power)
    z = 1.0 / (1.0 - u * v * direct)
    return u, z


def init_pc_state(gains: np.ndarray, p_max: float, noise_power: float) -> PCState:
    K = gains.shape[0]
    v = np.full(K, math.sqrt(p_max) / 2.0)
    u, z = receive_update(v, np.diag(gains), (gains**2) @ (v**2), noise_power)
    return PCState(v, u, z)


def wmmse_pc_step(
    gains: np.ndarray, p_max: float, noise_power: float, state: PCState
) -> PCState:
    """One block-ordered update of ``(v, u, z)``."""
    direct = np.diag(gains)
    sq = gains**2
    leak = (state.z * state.u**2) @ sq  # sum_j z_j u_j^2 G[j, k]^2
    v = transmit_update(state.z * state.u * direct, leak, p_max)
    u, z = receive_update(v, direct, sq @ (v**2), noise_power)
    return PCState(v, u, z, state.iteration + 1)


def _iterate(
    gains_of: Callable[[], np.ndarray],
    p_max: float,
    noise_power: float,
    max_iters: int,
    tol: float,
    state: Optional[PCState],
) -> PCSolution:
    G = gains_of()
    state = state or init_pc_state(G, p_max, noise_power)
    trace: List[float] = [pc_sum_rate(G, state.powers, noise_power)]
    converged = False
    for _ in range(max_iters):
        nxt = wmmse_pc_step(gains_of(), p_max, noise_power, state)
        change = max(
            float(np.max(np.abs(nxt.v - state.v))),
            float(np.max(np.abs(nxt.u - state.u))),
            float(np.max(np.abs(nxt.z - state.z))),
        )
        state = nxt
        trace.append(pc_sum_rate(G, state.powers, noise_power))
        if change < tol:
            converged = True
            break
    if not converged:
        logger.warning("PC WMMSE stopped at max_iters=%d without converging", max_iters)
    else:
        logger.info("PC WMMSE converged after %d iterations", state.iteration)
    return PCSolution(state.powers, state, np.asarray(trace), converged, state.iteration)


def wmmse_pc_solve(
    inst: ProblemInstance,
    max_iters: int = config.PC_MAX_ITERS,
    tol: float = config.PC_TOL,
    state: Optional[PCState] = None,
) -> PCSolution:
    """
    Iterate the power updates on the gain matrix until the largest change
    of ``(v, u, z)`` is below ``tol``.

    Raises:
        ContractViolationError: On a non-PC instance.
    """
    if inst.variant != "PC":
        raise ContractViolationError(f"wmmse_pc_solve needs a PC instance, got {inst.variant}")
    G = inst.gains
    return _iterate(
        lambda: G, inst.p_max, inst.noise_power, max_iters, tol, state
    )


def fixed_beam_power_solve(
    inst: ProblemInstance,
    max_iters: int = config.PC_MAX_ITERS,
    tol: float = config.PC_TOL,
    state: Optional[PCState] = None,
) -> PCSolution:
    """
    Power allocation for pre-determined unit-norm beams, reading gains from
    the ``(W, H)`` pair.

    Raises:
        ContractViolationError: If the instance was not built from a pair.
    """
    if inst.variant != "PC" or not inst.has_pair:
        raise ContractViolationError("fixed_beam_power_solve needs a PC instance built from (W, H)")
    W, H = inst.beams, inst.channels
    return _iterate(
        lambda: pair_gains(W, H), inst.p_max, inst.noise_power, max_iters, tol, state
    )
