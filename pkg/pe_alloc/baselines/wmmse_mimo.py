"""
High-SNR approximated WMMSE updates for MU-MIMO precoding.

UE ``k`` has channel ``H_k`` (``N_U x N_B``) and ``M`` streams with
receivers ``u_mk`` and precoders ``w_mk``. Both updates read iterate ``l``:

    u_mk <- 2 H_k w_mk
            - sum_{p!=m} (w_pk^H H_k^H H_k w_mk) H_k w_pk
            - sum_{j!=k} sum_p (w_pj^H H_k^H H_k w_mk) H_k w_pj
    w_mk <- 2 H_k^H u_mk
            - sum_{p!=m} (u_pk^H C_k H_k^H u_mk) H_k^H u_pk
            - sum_{j!=k} sum_p (u_pj^H H_j H_k^H u_mk) H_j^H u_pj

The first sum of each update is the inter-stream interference of UE ``k``;
the second is that of all other UEs. ``C_k`` is ``H_k`` in the ``hk``
channel form and ``sum_{j!=k} H_j`` in the ``printed`` form.

No power projection is applied per step; the SE is evaluated after
scaling the precoders onto the budget.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError
from ..core.feature_flags import get_pm_channel_form
from .problems import ProblemInstance, pm_sum_rate
from .wmmse_miso import scale_to_budget

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PMState:
    """``receivers`` is ``(K, N_U, M)`` and ``precoders`` is ``(K, N_B, M)``."""

    receivers: np.ndarray
    precoders: np.ndarray
    iteration: int = 0


@dataclass
class PMSolution:
    receivers: np.ndarray
    precoders: np.ndarray
    trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0


def init_pm_state(inst: ProblemInstance) -> PMState:
    """Channel-conjugate precoders (first ``M`` columns of ``H_k^H``) on the budget."""
    M = inst.streams
    W = np.conj(np.transpose(inst.channels, (0, 2, 1)))[:, :, :M]
    W = scale_to_budget(W, inst.p_max)
    U = inst.channels @ W
    return PMState(U, W)


def intra_channels(channels: np.ndarray, form: str) -> np.ndarray:
    """Channel ``C_k`` of the inter-stream coefficient of the precoder update."""
    if form == "hk":
        return channels
    return channels.sum(axis=0, keepdims=True) - channels


def wmmse_pm_step(
    inst: ProblemInstance, state: PMState, channel_form: Optional[str] = None
) -> PMState:
    """One application of the two approximated updates."""
    form = get_pm_channel_form(channel_form)
    H, U, W = inst.channels, state.receivers, state.precoders
    K, _, M = W.shape

    # Columns (p, j) flattened UE-major: every stream of every UE.
    W_all = np.concatenate(list(W), axis=1)  # (N_B, K*M)
    R = np.conj(np.transpose(H, (0, 2, 1))) @ U  # r_mk = H_k^H u_mk, (K, N_B, M)
    R_all = np.concatenate(list(R), axis=1)
    C = intra_channels(H, form)

    U_new = np.empty_like(U)
    W_new = np.empty_like(W)
    for k in range(K):
        own = slice(k * M, (k + 1) * M)
        G = H[k] @ W_all  # column (p, j) holds H_k w_pj
        gram = G.conj().T @ G  # [(p,j), (m,k)] = w_pj^H H_k^H H_k w_mk
        gram[own, own] -= np.diag(np.diag(gram[own, own]))
        U_new[k] = 2.0 * G[:, own] - G @ gram[:, own]

        inter = R_all.conj().T @ R[k]  # [(p,j), m] = u_pj^H H_j H_k^H u_mk
        inter[own, :] = 0.0
        intra = U[k].conj().T @ C[k] @ R[k]  # [p, m] = u_pk^H C_k H_k^H u_mk
        np.fill_diagonal(intra, 0.0)
        W_new[k] = 2.0 * R[k] - R_all @ inter - R[k] @ intra

    return PMState(U_new, W_new, state.iteration + 1)


def wmmse_pm_solve(
    inst: ProblemInstance,
    iters: int = config.PM_DEFAULT_ITERS,
    channel_form: Optional[str] = None,
    state: Optional[PMState] = None,
) -> PMSolution:
    """
    Iterate the approximated updates ``iters`` times.

    The trace holds the log-det SE of the budget-scaled precoders before the
    first step and after every step.

    Raises:
        ContractViolationError: On a non-PM instance.
    """
    if inst.variant != "PM":
        raise ContractViolationError(f"wmmse_pm_solve needs a PM instance, got {inst.variant}")
    state = state or init_pm_state(inst)

    def se(s: PMState) -> float:
        return pm_sum_rate(inst.channels, scale_to_budget(s.precoders, inst.p_max), inst.noise_power)

    trace: List[float] = [se(state)]
    for _ in range(iters):
        state = wmmse_pm_step(inst, state, channel_form)
        trace.append(se(state))
        logger.debug("PM step %d: SE=%.6f", state.iteration, trace[-1])

    return PMSolution(state.receivers, state.precoders, np.asarray(trace), state.iteration)
