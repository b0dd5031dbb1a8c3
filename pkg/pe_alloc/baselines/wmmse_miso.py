"""
WMMSE sum-SE precoding for the MU-MISO downlink.

One step, from precoders ``W`` (``(N_B, K)``, column ``w_k``):
    receivers  u_k = h_k^H w_k / (sum_j |h_k^H w_j|^2 + sigma^2)
    weights    z_k = (sum_j |h_k^H w_j|^2 + sigma^2) / (sum_{j!=k} |h_k^H w_j|^2 + sigma^2)
    precoders  w_k = z_k u_k (A + nu I)^{-1} h_k,  A = sum_j z_j |u_j|^2 h_j h_j^H

The dual ``nu >= 0`` enforces ``||W||_F^2 <= P_max``: ``nu = 0`` when the
unconstrained solution fits the budget, otherwise bisection on the
eigen-decomposition of ``A``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError
from .problems import ProblemInstance, ps_sum_rate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PSState:
    """Precoders of iterate ``l`` and the receivers/weights computed from ``l - 1``."""

    precoders: np.ndarray
    receivers: np.ndarray
    weights: np.ndarray
    iteration: int = 0


@dataclass
class PSSolution:
    precoders: np.ndarray
    receivers: np.ndarray
    weights: np.ndarray
    trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = False
    iterations: int = 0

    @property
    def sum_rate(self) -> float:
        return float(self.trace[-1]) if self.trace.size else 0.0


def scale_to_budget(precoders: np.ndarray, p_max: float) -> np.ndarray:
    """Scale precoders so that ``||W||_F^2 == p_max``; zero stays zero."""
    power = float(np.sum(np.abs(precoders) ** 2))
    if power == 0.0:
        return np.zeros_like(precoders)
    return precoders * math.sqrt(p_max / power)


def init_ps_state(inst: ProblemInstance) -> PSState:
    """Matched-filter precoders scaled onto the budget."""
    K = inst.users
    W = scale_to_budget(inst.channels.copy(), inst.p_max)
    return PSState(W, np.zeros(K, dtype=np.complex128), np.ones(K))


def receive_terms(
    signal: np.ndarray, interference: np.ndarray, noise_power: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    MMSE receiver and weight from ``h_k^H w_k`` and ``sum_{j!=k} |h_k^H w_j|^2``.

    Elementwise; shared with the re-expressed iteration.
    """
    rest = interference + noise_power
    total = rest + np.abs(signal) ** 2
    return signal / total, total / rest


def receiver_update(
    channels: np.ndarray, precoders: np.ndarray, noise_power: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Receivers ``u`` and weights ``z`` for every UE."""
    cross = channels.conj().T @ precoders  # [k, j] = h_k^H w_j
    signal = np.diag(cross)
    power = np.abs(cross) ** 2
    interference = power.sum(axis=1) - np.abs(signal) ** 2
    return receive_terms(signal, interference, noise_power)


def precoder_moments(
    channels: np.ndarray, receivers: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    ``A = sum z|u|^2 h h^H``, ``C = sum z^2 |u|^2 h h^H`` and the right-hand
    sides ``z_k u_k h_k`` (columns).
    """
    a = weights * np.abs(receivers) ** 2
    A = (channels * a[None, :]) @ channels.conj().T
    C = (channels * (a * weights)[None, :]) @ channels.conj().T
    rhs = channels * (weights * receivers)[None, :]
    return A, C, rhs


def dual_precoders(
    A: np.ndarray, C: np.ndarray, rhs: np.ndarray, p_max: float
) -> np.ndarray:
    """
    Solve ``(A + nu I) W = rhs`` with the smallest ``nu >= 0`` meeting the
    budget; ``||W||_F^2 = tr((A + nu I)^{-2} C)``.

    At ``nu = 0`` eigenvalues below ``1e-12 * max`` are treated as null
    (pseudo-inverse). Bisection runs on ``[0, sqrt(tr C / p_max)]`` and
    returns the feasible end.
    """
    trace_c = float(np.real(np.trace(C)))
    if trace_c <= 0.0:
        return np.zeros_like(rhs)

    eigvals, V = np.linalg.eigh(A)
    eigvals = np.maximum(eigvals, 0.0)
    projected_c = np.real(np.einsum("ij,jk,ki->i", V.conj().T, C, V))
    projected_rhs = V.conj().T @ rhs

    threshold = 1e-12 * max(float(eigvals.max()), 0.0)
    live = eigvals > threshold

    def power(nu: float) -> float:
        if nu == 0.0:
            return float(np.sum(projected_c[live] / eigvals[live] ** 2))
        return float(np.sum(projected_c / (eigvals + nu) ** 2))

    def solve(nu: float) -> np.ndarray:
        if nu == 0.0:
            inv = np.where(live, 1.0 / np.where(live, eigvals, 1.0), 0.0)
        else:
            inv = 1.0 / (eigvals + nu)
        return V @ (inv[:, None] * projected_rhs)

    if np.any(live) and power(0.0) <= p_max:
        return solve(0.0)

    lo, hi = 0.0, math.sqrt(trace_c / p_max)
    for _ in range(config.DUAL_BISECTION_MAX_HALVINGS):
        if hi - lo <= config.DUAL_BISECTION_TOL:
            break
        mid = 0.5 * (lo + hi)
        if power(mid) > p_max:
            lo = mid
        else:
            hi = mid
    return solve(hi)


def wmmse_ps_step(inst: ProblemInstance, state: PSState) -> PSState:
    """Receivers and weights from ``W``, then the new ``W``."""
    u, z = receiver_update(inst.channels, state.precoders, inst.noise_power)
    A, C, rhs = precoder_moments(inst.channels, u, z)
    W = dual_precoders(A, C, rhs, inst.p_max)
    return PSState(W, u, z, state.iteration + 1)


def wmmse_ps_solve(
    inst: ProblemInstance,
    max_iters: int = config.WMMSE_MAX_ITERS,
    tol: float = config.WMMSE_TOL,
    state: Optional[PSState] = None,
) -> PSSolution:
    """
    Run WMMSE until the sum-SE change drops below ``tol``.

    A zero channel matrix returns zero precoders with SE 0.

    Raises:
        ContractViolationError: On a non-PS instance.
    """
    if inst.variant != "PS":
        raise ContractViolationError(f"wmmse_ps_solve needs a PS instance, got {inst.variant}")
    state = state or init_ps_state(inst)
    trace: List[float] = [ps_sum_rate(inst.channels, state.precoders, inst.noise_power)]

    if not np.any(inst.channels):
        logger.info("zero channel matrix, returning zero precoders")
        return PSSolution(state.precoders, state.receivers, state.weights, np.asarray(trace), True, 0)

    converged = False
    for _ in range(max_iters):
        state = wmmse_ps_step(inst, state)
        trace.append(ps_sum_rate(inst.channels, state.precoders, inst.noise_power))
        if trace[-1] - trace[-2] < -config.WMMSE_MONOTONE_TOL:
            logger.warning(
                "WMMSE objective decreased by %.3g at iteration %d",
                trace[-2] - trace[-1],
                state.iteration,
            )
        if abs(trace[-1] - trace[-2]) < tol:
            converged = True
            break

    logger.info(
        "PS WMMSE %s after %d iterations, SE=%.6f",
        "converged" if converged else "stopped",
        state.iteration,
        trace[-1],
    )
    return PSSolution(
        state.precoders, state.receivers, state.weights, np.asarray(trace), converged, state.iteration
    )
