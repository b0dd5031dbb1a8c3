"""
SE-ratio evaluation of learned PS precoding policies against WMMSE.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..baselines.problems import ProblemInstance, ps_sum_rate
from ..baselines.wmmse_miso import wmmse_ps_solve
from ..core import config
from ..core.exceptions import ContractViolationError
from ..utils import derive_seed
from .descriptors import preset_descriptors
from .model import GnnModel, build_gnn_from_problem, resolve_arm
from .objective import ps_precoders, sum_rate_tensor
from .training import TrainConfig, draw_ps_dataset, group_by_users, train_unsupervised

logger = logging.getLogger(__name__)

Policy = Union[GnnModel, Callable[[ProblemInstance], np.ndarray]]


@dataclass
class SERatioReport:
    ratios: np.ndarray
    policy_se: np.ndarray
    baseline_se: np.ndarray
    excluded: int = 0
    ci_low: float = float("nan")
    ci_high: float = float("nan")

    @property
    def mean(self) -> float:
        return float(np.mean(self.ratios)) if self.ratios.size else float("nan")

    @property
    def samples(self) -> int:
        return int(self.ratios.size)

    def summary(self) -> Dict[str, Any]:
        return {
            "mean_ratio": self.mean,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "samples": self.samples,
            "excluded": self.excluded,
        }

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {"sample": i, "ratio": float(r)} for i, r in enumerate(self.ratios)
        ]


def bootstrap_ci(
    values: Sequence[float],
    resamples: int = config.BOOTSTRAP_RESAMPLES,
    level: float = config.CONFIDENCE_LEVEL,
    seed: int = 0,
) -> Tuple[float, float]:
    """Percentile bootstrap interval of the mean."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return float("nan"), float("nan")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, values.size, size=(resamples, values.size))
    means = values[picks].mean(axis=1)
    tail = (1.0 - level) / 2.0
    return float(np.quantile(means, tail)), float(np.quantile(means, 1.0 - tail))


def policy_sum_rates(policy: Policy, instances: Sequence[ProblemInstance]) -> np.ndarray:
    """Sum SE of ``policy`` on each instance, in input order."""
    if not isinstance(policy, GnnModel):
        return np.array(
            [ps_sum_rate(i.channels, policy(i), i.noise_power) for i in instances]
        )
    rates = {}
    for group in group_by_users(instances):
        H = np.stack([i.channels for i in group])
        W = ps_precoders(policy, H, group[0].p_max)
        se = sum_rate_tensor(H, W, group[0].noise_power).numpy()
        for inst, value in zip(group, se):
            rates[id(inst)] = float(value)
    return np.array([rates[id(i)] for i in instances])


def baseline_sum_rates(instances: Sequence[ProblemInstance]) -> np.ndarray:
    return np.array([wmmse_ps_solve(i).sum_rate for i in instances])


def eval_se_ratio(
    policy: Policy,
    instances: Sequence[ProblemInstance],
    baseline: Optional[Sequence[float]] = None,
    resamples: int = config.BOOTSTRAP_RESAMPLES,
    level: float = config.CONFIDENCE_LEVEL,
    seed: int = 0,
) -> SERatioReport:
    """
    Per-sample ratio of the policy's SE to the WMMSE SE.

    Samples whose WMMSE SE is zero are excluded and counted.

    Raises:
        ContractViolationError: On non-PS instances or a baseline of the
            wrong length.
    """
    if any(i.variant != "PS" for i in instances):
        raise ContractViolationError("SE-ratio evaluation needs PS instances")
    denominators = baseline_sum_rates(instances) if baseline is None else np.asarray(baseline)
    if len(denominators) != len(instances):
        raise ContractViolationError("baseline must have one SE per instance")
    numerators = policy_sum_rates(policy, instances)
    keep = denominators > 0
    excluded = int(np.sum(~keep))
    if excluded:
        logger.warning("excluded %d samples with zero WMMSE SE", excluded)
    ratios = numerators[keep] / denominators[keep]
    low, high = bootstrap_ci(ratios, resamples, level, seed)
    return SERatioReport(ratios, numerators, denominators, excluded, low, high)


@dataclass
class GeneralizationTable:
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def ratio_at(self, users: int) -> float:
        for row in self.rows:
            if row["K"] == users:
                return row["mean_ratio"]
        raise KeyError(users)


def eval_size_generalization(
    model: GnnModel,
    train_sizes: Sequence[int],
    test_sizes: Sequence[int],
    bs_antennas: int = 4,
    samples: int = 200,
    seed: int = 0,
    channel_model: str = "rayleigh",
    p_max: float = config.P_MAX_W,
    noise_power: Optional[float] = None,
) -> GeneralizationTable:
    """
    Mean SE ratio at each test user count, without retraining.

    Rows carry ``K, mean_ratio, ci_low, ci_high`` plus ``samples``,
    ``excluded`` and whether ``K`` was seen in training.
    """
    seen = set(int(k) for k in train_sizes)
    table = GeneralizationTable()
    for k in test_sizes:
        instances = draw_ps_dataset(
            samples, bs_antennas, int(k), seed, channel_model, p_max, noise_power,
            label=f"test-K{k}",
        )
        report = eval_se_ratio(model, instances, seed=derive_seed(seed, "bootstrap", int(k)))
        table.rows.append(
            {
                "K": int(k),
                "mean_ratio": report.mean,
                "ci_low": report.ci_low,
                "ci_high": report.ci_high,
                "samples": report.samples,
                "excluded": report.excluded,
                "in_training": int(k) in seen,
            }
        )
        logger.info("K=%d mean SE ratio %.4f", k, report.mean)
    return table


def compare_arms(
    arms: Sequence[str],
    seeds: Sequence[int],
    cfg: TrainConfig,
    test_samples: int = 200,
    widths: Optional[Sequence[int]] = None,
    layers: int = config.LAYER_COUNT,
) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    """
    Train every arm under the same data and budget for each seed.

    Returns:
        Per-(arm, seed) rows and per-arm summaries with a bootstrap
        interval over seeds.
    """
    users = cfg.users or int(round(cfg.k_mean))
    per_run: List[Dict[str, Any]] = []
    for seed in seeds:
        run_cfg = replace(cfg, seed=int(seed))
        test = draw_ps_dataset(
            test_samples, cfg.bs_antennas, users, int(seed), cfg.channel_model, cfg.p_max,
            cfg.noise_power, label="arm-test",
        )
        baseline = baseline_sum_rates(test)
        for arm in arms:
            model = build_gnn_from_problem(
                preset_descriptors("PS"), widths, layers, attention=resolve_arm(arm),
                seed=derive_seed(int(seed), "init"),
            )
            train_unsupervised(model, run_cfg)
            report = eval_se_ratio(model, test, baseline=baseline, seed=int(seed))
            per_run.append({"arm": arm, "seed": int(seed), "mean_ratio": report.mean})

    summary = []
    for arm in arms:
        values = [r["mean_ratio"] for r in per_run if r["arm"] == arm]
        low, high = bootstrap_ci(values, seed=derive_seed(0, arm))
        summary.append(
            {"arm": arm, "mean_ratio": float(np.mean(values)), "ci_low": low, "ci_high": high}
        )
    return per_run, summary
