"""
Side-by-side oracle for the re-expressed iterations.

Each trial draws a fresh instance, packs the solver's initial iterate and
then advances the raw stepper and the re-expressed stepper independently,
comparing the packed raw iterate against the re-expressed state after every
step. Acceptance is on the absolute deviation; the deviation relative to the
state scale is reported next to it.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError
from ..utils import derive_seed
from .interfaces import RieCase
from .registry import get_rie_case, normalize_variant
from .state import absolute_deviation, relative_deviation

logger = logging.getLogger(__name__)


@dataclass
class TrialTrace:
    trial: int
    seed: int
    sizes: Dict[str, int] = field(default_factory=dict)
    errors: List[float] = field(default_factory=list)
    rel_errors: List[float] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def worst(self) -> float:
        if self.error is not None:
            return float("inf")
        return max(self.errors, default=0.0)

    @property
    def worst_rel(self) -> float:
        if self.error is not None:
            return float("inf")
        return max(self.rel_errors, default=0.0)


@dataclass
class EquivalenceReport:
    variant: str
    passed: bool
    worst_error: float
    tol: float
    iters: int
    traces: List[TrialTrace] = field(default_factory=list)
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.traces)

    @property
    def failed_trials(self) -> int:
        return sum(1 for t in self.traces if t.worst > self.tol)

    @property
    def worst_rel_error(self) -> float:
        return max((t.worst_rel for t in self.traces), default=0.0)

    def to_rows(self) -> List[Dict[str, Any]]:
        """Per-iteration deviation rows followed by one summary row."""
        rows: List[Dict[str, Any]] = []
        for trace in self.traces:
            for it, err in enumerate(trace.errors, start=1):
                rows.append({"trial": trace.trial, "iteration": it, "max_abs_error": err})
            if trace.error is not None:
                rows.append(
                    {"trial": trace.trial, "iteration": len(trace.errors) + 1, "max_abs_error": float("inf")}
                )
        rows.append({"trial": "summary", "iteration": self.iters, "max_abs_error": self.worst_error})
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "passed": self.passed,
            "worst_error": self.worst_error,
            "worst_rel_error": self.worst_rel_error,
            "tol": self.tol,
            "trials": self.trials,
            "iters": self.iters,
            "failed_trials": self.failed_trials,
            "options": dict(self.options),
        }


def run_trial(case: RieCase, trial: int, seed: int, iters: int) -> TrialTrace:
    trace = TrialTrace(trial=trial, seed=seed)
    rng = np.random.default_rng(seed)
    try:
        inst = case.draw_instance(rng)
        raw = case.initial_state(inst)
        state = case.pack(inst, raw)
        trace.sizes = state.sizes()
        for _ in range(iters):
            raw = case.raw_step(inst, raw)
            state = case.step(state)
            expected = case.pack(inst, raw).D
            trace.errors.append(absolute_deviation(expected, state.D))
            trace.rel_errors.append(relative_deviation(expected, state.D))
    except Exception as exc:  # recorded in the report
        logger.warning("%s trial %d failed: %s", case.variant, trial, exc)
        trace.error = f"{type(exc).__name__}: {exc}"
    return trace


def verify_rie_equivalence(
    variant: str,
    trials: int = config.RIE_TRIALS,
    iters: int = config.RIE_ITERS,
    tol: float = config.RIE_EQUIVALENCE_TOL,
    seed: int = 0,
    workers: int = 1,
    **options: Any,
) -> EquivalenceReport:
    """
    Run raw and re-expressed steppers side by side on random instances.

    Args:
        variant: PB, PS, PM, PC or PS_POWER.
        trials: Number of random instances.
        iters: Steps per instance.
        tol: Largest accepted absolute deviation.
        seed: Base seed; trial ``t`` uses ``derive_seed(seed, variant, t)``.
        workers: Trials evaluated concurrently.
        **options: Case options (update forms).

    Returns:
        EquivalenceReport. Trials that raise are recorded as failures.

    Raises:
        ContractViolationError: If ``trials`` or ``iters`` is not positive.
        ValueError: On an unknown variant or flag value.
    """
    if trials < 1:
        raise ContractViolationError(f"trials must be >= 1, got {trials}")
    if iters < 1:
        raise ContractViolationError(f"iters must be >= 1, got {iters}")
    variant = normalize_variant(variant)
    case = get_rie_case(variant, **options)
    seeds = [derive_seed(seed, variant, t) for t in range(trials)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(lambda t: run_trial(case, t, seeds[t], iters), range(trials)))
    else:
        traces = [run_trial(case, t, seeds[t], iters) for t in range(trials)]

    worst = max(t.worst for t in traces)
    report = EquivalenceReport(
        variant=variant,
        passed=worst <= tol,
        worst_error=worst,
        tol=tol,
        iters=iters,
        traces=traces,
        options=dict(options),
    )
    logger.info(
        "%s equivalence: %d trials x %d iters, worst=%.3e, passed=%s",
        variant,
        trials,
        iters,
        worst,
        report.passed,
    )
    return report
