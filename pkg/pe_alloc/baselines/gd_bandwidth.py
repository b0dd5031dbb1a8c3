"""
Projected primal-dual gradient iteration for the bandwidth problem.

    min  sum_k B_k
    s.t. B_k log2(1 + p_k g_k / (N0 B_k)) >= s0,   sum_k p_k <= P_max

Each iteration updates ``(p, B, mu, lambda)`` simultaneously from iterate
``l``. The ``lagrangian`` form takes gradient steps on
``L = sum B + sum mu (s0 - s) + lambda (sum p - P_max)``; the ``printed``
form keeps the alternative sign pattern of the four updates with the step
size inserted. Bandwidth is floored at a small positive constant.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError, InfeasibleProblemError
from ..core.feature_flags import get_pb_update_form
from .problems import ProblemInstance, pb_rates

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class PBState:
    """Iterate ``l`` of the bandwidth solver; ``power_multiplier`` is shared."""

    p: np.ndarray
    bandwidth: np.ndarray
    rate_multipliers: np.ndarray
    power_multiplier: float
    iteration: int = 0

    def as_rows(self, gains: np.ndarray) -> np.ndarray:
        """``(K, 5)`` rows ``[p, B, mu, lambda, g]``."""
        lam = np.full_like(self.p, self.power_multiplier)
        return np.stack([self.p, self.bandwidth, self.rate_multipliers, lam, gains], axis=-1)


@dataclass
class PBSolution:
    p: np.ndarray
    bandwidth: np.ndarray
    rate_multipliers: np.ndarray
    power_multiplier: float
    trace: Dict[str, np.ndarray] = field(default_factory=dict)
    converged: bool = False
    iterations: int = 0

    @property
    def total_bandwidth(self) -> float:
        return float(np.sum(self.bandwidth))


def check_feasible(inst: ProblemInstance) -> None:
    """
    Raise when even unlimited bandwidth cannot meet the rate targets.

    As ``B -> inf`` the rate tends to ``p g / (N0 ln 2)``, so user ``k``
    needs more than ``s0 N0 ln2 / g_k`` watts.

    Raises:
        InfeasibleProblemError: If the required powers exhaust ``P_max``.
    """
    needed = float(np.sum(inst.rate_target * inst.noise_density * LN2 / inst.gains))
    if needed >= inst.p_max:
        raise InfeasibleProblemError(
            f"rate target {inst.rate_target} needs more than {needed:.6g} W "
            f"in total, budget is {inst.p_max:.6g} W"
        )


def init_pb_state(inst: ProblemInstance) -> PBState:
    K = inst.users
    return PBState(
        p=np.full(K, inst.p_max / K),
        bandwidth=np.full(K, config.PB_INITIAL_BANDWIDTH),
        rate_multipliers=np.full(K, config.PB_INITIAL_MULTIPLIER),
        power_multiplier=config.PB_INITIAL_MULTIPLIER,
    )


def pb_user_update(
    p: np.ndarray,
    bandwidth: np.ndarray,
    mu: np.ndarray,
    lam: np.ndarray,
    gains: np.ndarray,
    total_power: np.ndarray,
    inst: ProblemInstance,
    step_size: float,
    form: str,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    One simultaneous update of ``(p, B, mu, lambda)``, elementwise per user.

    Every input broadcasts against the others; ``total_power`` is the sum
    of all users' powers at iterate ``l``. The per-user form lets the
    re-expressed iteration reuse the exact arithmetic.
    """
    n0, s0, eta = inst.noise_density, inst.rate_target, step_size
    received = p * gains
    snr = received / (n0 * bandwidth)
    log_term = np.log2(1.0 + snr)
    denom = LN2 * (n0 * bandwidth + received)

    if form == "lagrangian":
        rate = bandwidth * log_term
        p_new = p - eta * (lam - mu * bandwidth * gains / denom)
        b_new = bandwidth - eta * (1.0 - mu * (log_term - received / denom))
        mu_new = mu + eta * (s0 - rate)
    else:
        p_new = p + eta * (lam - mu * gains / denom)
        b_new = bandwidth - eta * (
            1.0 + mu * log_term - mu * received / (bandwidth * n0 + received)
        )
        mu_new = mu + eta * (bandwidth * log_term - s0)
    lam_new = lam + eta * (total_power - inst.p_max)

    return (
        np.maximum(p_new, 0.0),
        np.maximum(b_new, config.PB_BANDWIDTH_FLOOR),
        np.maximum(mu_new, 0.0),
        np.maximum(lam_new, 0.0),
    )


def gd_pb_step(
    inst: ProblemInstance,
    state: PBState,
    step_size: float = config.PB_STEP_SIZE,
    form: Optional[str] = None,
) -> PBState:
    """One raw iteration of the four updates."""
    form = get_pb_update_form(form)
    p, B, mu, lam = pb_user_update(
        state.p,
        state.bandwidth,
        state.rate_multipliers,
        np.asarray(state.power_multiplier),
        inst.gains,
        np.sum(state.p),
        inst,
        step_size,
        form,
    )
    return PBState(p, B, mu, float(lam), state.iteration + 1)


def gd_pb_solve(
    inst: ProblemInstance,
    step_size: float = config.PB_STEP_SIZE,
    max_iters: int = config.PB_MAX_ITERS,
    tol: float = config.PB_TOL,
    decay: float = config.PB_STEP_DECAY,
    form: Optional[str] = None,
    state: Optional[PBState] = None,
) -> PBSolution:
    """
    Iterate the bandwidth updates until the largest change is below ``tol``.

    Args:
        inst: PB instance.
        step_size: Initial step size (> 0).
        max_iters: Iteration cap.
        tol: Convergence threshold on the largest absolute update.
        decay: Geometric step decay per iteration (1.0 keeps it fixed).
        form: Update form; resolved through the feature flag when omitted.
        state: Optional starting iterate.

    Returns:
        ``PBSolution`` with a trace of every update sequence.

    Raises:
        ContractViolationError: On a non-PB instance or step size <= 0.
        InfeasibleProblemError: If the rate targets cannot be met, either
            by the power pre-check or by a multiplier crossing the ceiling.
    """
    if inst.variant != "PB":
        raise ContractViolationError(f"gd_pb_solve needs a PB instance, got {inst.variant}")
    if not step_size > 0 or not 0 < decay <= 1.0:
        raise ContractViolationError("step_size must be > 0 and decay in (0, 1]")
    check_feasible(inst)

    form = get_pb_update_form(form)
    state = state or init_pb_state(inst)
    history: Dict[str, List] = {"p": [], "bandwidth": [], "mu": [], "lambda": [], "objective": []}

    def record(s: PBState) -> None:
        history["p"].append(s.p)
        history["bandwidth"].append(s.bandwidth)
        history["mu"].append(s.rate_multipliers)
        history["lambda"].append(s.power_multiplier)
        history["objective"].append(float(np.sum(s.bandwidth)))

    record(state)
    eta = step_size
    converged = False
    for _ in range(max_iters):
        nxt = gd_pb_step(inst, state, eta, form)
        change = max(
            float(np.max(np.abs(nxt.p - state.p))),
            float(np.max(np.abs(nxt.bandwidth - state.bandwidth))),
            float(np.max(np.abs(nxt.rate_multipliers - state.rate_multipliers))),
            abs(nxt.power_multiplier - state.power_multiplier),
        )
        state = nxt
        record(state)
        if (
            np.max(state.rate_multipliers) > config.PB_MULTIPLIER_CEILING
            or state.power_multiplier > config.PB_MULTIPLIER_CEILING
        ):
            raise InfeasibleProblemError(
                f"multipliers diverged past {config.PB_MULTIPLIER_CEILING:g} "
                f"at iteration {state.iteration}"
            )
        if change < tol:
            converged = True
            break
        eta *= decay

    if converged:
        logger.info("PB solver converged after %d iterations", state.iteration)
    else:
        logger.warning("PB solver stopped at max_iters=%d without converging", max_iters)

    return PBSolution(
        p=state.p,
        bandwidth=state.bandwidth,
        rate_multipliers=state.rate_multipliers,
        power_multiplier=state.power_multiplier,
        trace={key: np.asarray(values) for key, values in history.items()},
        converged=converged,
        iterations=state.iteration,
    )


def pb_slackness(inst: ProblemInstance, solution: PBSolution) -> Tuple[np.ndarray, float]:
    """Complementary-slackness residuals ``(mu_k (s0 - s_k), lambda (sum p - P))``."""
    rates = pb_rates(inst, solution.p, solution.bandwidth)
    return (
        solution.rate_multipliers * (inst.rate_target - rates),
        solution.power_multiplier * (float(np.sum(solution.p)) - inst.p_max),
    )


__all__ = [
    "PBSolution",
    "PBState",
    "check_feasible",
    "gd_pb_solve",
    "gd_pb_step",
    "init_pb_state",
    "pb_slackness",
    "pb_user_update",
]
