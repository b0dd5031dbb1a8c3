"""
Unsupervised training of PS precoding GNNs.

The loss is the negative sum SE averaged over the samples of a batch.
Samples with different user counts are grouped by ``K`` inside a batch;
each group is one forward/backward pass and the group gradients are
summed in ascending ``K`` order, so results do not depend on the number of
worker threads.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..baselines.channels import FADING_MODELS, generate_channels
from ..baselines.problems import ProblemInstance
from ..core import config
from ..core.exceptions import ContractViolationError, DomainError, TrainingDivergenceError
from ..core.tensor import GradientTape
from ..utils import derive_seed
from .model import GnnModel
from .objective import negative_sum_rate
from .optim import Adam, named_gradients

logger = logging.getLogger(__name__)

OBJECTIVES: Tuple[str, ...] = ("neg_se",)


@dataclass(frozen=True)
class TrainConfig:
    """
    Training settings. ``users=None`` draws each sample's user count from
    the shifted-exponential mixture (``k_mean``, ``k_std``, capped at
    ``k_max``).
    """

    seed: int
    train_samples: int = 500
    batch_size: int = config.BATCH_SIZE
    epochs: int = config.EPOCHS
    learning_rate: float = config.LEARNING_RATE
    lr_decay: float = 1.0
    bs_antennas: int = 4
    users: Optional[int] = 2
    k_mean: float = config.TRAIN_K_MEAN
    k_std: float = config.TRAIN_K_STD
    k_max: int = config.TRAIN_K_MAX
    channel_model: str = "rayleigh"
    p_max: float = config.P_MAX_W
    noise_power: Optional[float] = None
    objective: str = "neg_se"
    workers: int = 1

    def __post_init__(self) -> None:
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ContractViolationError(f"seed must be an integer, got {self.seed!r}")
        for name in ("train_samples", "batch_size", "epochs", "bs_antennas", "k_max", "workers"):
            if getattr(self, name) < 1:
                raise ContractViolationError(f"{name} must be positive")
        if self.users is not None and self.users < 1:
            raise ContractViolationError("users must be positive")
        if self.learning_rate <= 0 or not 0 < self.lr_decay <= 1:
            raise ContractViolationError("learning rate must be positive, decay in (0, 1]")
        if self.k_std <= 0 or self.k_mean - self.k_std < 0:
            raise ContractViolationError("K mixture needs 0 < k_std <= k_mean")
        if self.p_max <= 0 or (self.noise_power is not None and self.noise_power <= 0):
            raise ContractViolationError("p_max and noise_power must be positive")
        if self.channel_model not in FADING_MODELS:
            raise ContractViolationError(
                f"Invalid channel model: {self.channel_model!r}. "
                f"Valid options: {', '.join(FADING_MODELS)}"
            )
        if self.objective not in OBJECTIVES:
            raise ContractViolationError(
                f"Invalid objective: {self.objective!r}. Valid options: {', '.join(OBJECTIVES)}"
            )


@dataclass
class TrainResult:
    model: GnnModel
    loss_curve: List[float] = field(default_factory=list)
    samples: int = 0
    seed: int = 0

    def to_rows(self) -> List[Dict[str, Any]]:
        return [{"epoch": i + 1, "loss": loss} for i, loss in enumerate(self.loss_curve)]


# ============================================================================
# DATA
# ============================================================================


def sample_user_counts(
    n: int,
    rng: np.random.Generator,
    mean: float = config.TRAIN_K_MEAN,
    std: float = config.TRAIN_K_STD,
    k_max: int = config.TRAIN_K_MAX,
) -> np.ndarray:
    """
    ``K = round(mean - std + Exp(std))``, clipped to ``[1, k_max]``.

    The shifted exponential has the requested mean and standard deviation;
    with mean 2 and std 1 about 92% of the draws satisfy ``K <= 3``.
    """
    continuous = (mean - std) + rng.exponential(std, size=n)
    return np.clip(np.rint(continuous), 1, k_max).astype(int)


def draw_ps_dataset(
    n: int,
    bs_antennas: int,
    users: Any,
    seed: int,
    channel_model: str = "rayleigh",
    p_max: float = config.P_MAX_W,
    noise_power: Optional[float] = None,
    label: str = "train",
) -> List[ProblemInstance]:
    """
    ``n`` PS instances; ``users`` is one count or a per-sample sequence.
    Sample ``i`` depends only on ``(seed, label, i)``.
    """
    counts = np.broadcast_to(np.asarray(users, dtype=int), (n,))
    return [
        generate_channels(
            "PS",
            {"users": int(counts[i]), "bs_antennas": bs_antennas},
            model=channel_model,
            seed=derive_seed(seed, label, i),
            p_max=p_max,
            noise_power=noise_power,
        )
        for i in range(n)
    ]


def training_set(cfg: TrainConfig) -> List[ProblemInstance]:
    if cfg.users is None:
        rng = np.random.default_rng(derive_seed(cfg.seed, "user-counts"))
        users: Any = sample_user_counts(cfg.train_samples, rng, cfg.k_mean, cfg.k_std, cfg.k_max)
    else:
        users = cfg.users
    return draw_ps_dataset(
        cfg.train_samples,
        cfg.bs_antennas,
        users,
        cfg.seed,
        cfg.channel_model,
        cfg.p_max,
        cfg.noise_power,
    )


def group_by_users(instances: Sequence[ProblemInstance]) -> List[List[ProblemInstance]]:
    groups: Dict[int, List[ProblemInstance]] = {}
    for inst in instances:
        groups.setdefault(inst.users, []).append(inst)
    return [groups[k] for k in sorted(groups)]


def _stack(group: Sequence[ProblemInstance]) -> Tuple[np.ndarray, float, float]:
    first = group[0]
    if any(i.p_max != first.p_max or i.noise_power != first.noise_power for i in group):
        raise ContractViolationError("a batch group mixes power budgets or noise powers")
    return np.stack([i.channels for i in group]), first.p_max, first.noise_power


# ============================================================================
# GRADIENTS
# ============================================================================


def group_loss_and_gradients(
    model: GnnModel, group: Sequence[ProblemInstance]
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Summed ``-SE`` of one equal-``K`` group and its parameter gradients."""
    H, p_max, noise_power = _stack(group)
    with GradientTape() as tape:
        loss = negative_sum_rate(model, H, p_max, noise_power)
    grads = tape.backward(loss, params=model.store.tensors())
    return loss.item(), named_gradients(model.store, grads)


def batch_loss_and_gradients(
    model: GnnModel,
    batch: Sequence[ProblemInstance],
    workers: int = 1,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Mean ``-SE`` over ``batch`` and its gradient."""
    groups = group_by_users(batch)
    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda g: group_loss_and_gradients(model, g), groups))
    else:
        parts = [group_loss_and_gradients(model, g) for g in groups]

    total = 0.0
    grads = {name: np.zeros(model.store[name].shape) for name in model.store}
    for loss, group_grads in parts:
        total += loss
        for name, grad in group_grads.items():
            grads[name] += grad
    n = len(batch)
    return total / n, {name: g / n for name, g in grads.items()}


def dataset_loss(model: GnnModel, instances: Sequence[ProblemInstance]) -> float:
    """Mean ``-SE`` over ``instances`` without recording a tape."""
    total = 0.0
    for group in group_by_users(instances):
        H, p_max, noise_power = _stack(group)
        total += negative_sum_rate(model, H, p_max, noise_power).item()
    return total / len(instances)


# ============================================================================
# TRAINING LOOP
# ============================================================================


def _divergence(
    message: str, model: GnnModel, epoch: int, batch: int, last_finite: Optional[float]
) -> TrainingDivergenceError:
    snapshot = {
        "epoch": epoch,
        "batch": batch,
        "last_finite_loss": last_finite,
        "parameter_norms": model.store.norms(),
    }
    logger.error("training diverged at epoch %d batch %d: %s", epoch, batch, message)
    return TrainingDivergenceError(f"training diverged: {message}", snapshot)


def train_unsupervised(
    model: GnnModel,
    cfg: TrainConfig,
    instances: Optional[Sequence[ProblemInstance]] = None,
) -> TrainResult:
    """
    Train ``model`` in place by minimizing the mean negative sum SE.

    Args:
        model: A PS model (2 input and 2 output features).
        cfg: Training settings; ``cfg.seed`` fixes data and batch order.
        instances: Training instances; drawn from ``cfg`` when omitted.

    Returns:
        The trained model and its per-epoch mean training loss.

    Raises:
        TrainingDivergenceError: On a non-finite loss, gradient or
            parameter; the snapshot records epoch, batch, the last finite
            loss and parameter norms.
    """
    data = list(instances) if instances is not None else training_set(cfg)
    if not data:
        raise ContractViolationError("training needs at least one instance")
    rng = np.random.default_rng(derive_seed(cfg.seed, "batches"))
    optimizer = Adam(model.store, lr=cfg.learning_rate)
    result = TrainResult(model, samples=len(data), seed=cfg.seed)
    last_finite: Optional[float] = None

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(data))
        weighted = 0.0
        for batch_index, start in enumerate(range(0, len(data), cfg.batch_size), start=1):
            batch = [data[i] for i in order[start : start + cfg.batch_size]]
            try:
                loss, grads = batch_loss_and_gradients(model, batch, cfg.workers)
            except DomainError as exc:
                raise _divergence(str(exc), model, epoch, batch_index, last_finite) from exc
            if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise _divergence("non-finite loss or gradient", model, epoch, batch_index, last_finite)
            last_finite = loss
            try:
                optimizer.step(grads)
            except DomainError as exc:
                raise _divergence(str(exc), model, epoch, batch_index, last_finite) from exc
            weighted += loss * len(batch)
            logger.debug("epoch %d batch %d loss %.6f", epoch, batch_index, loss)
        result.loss_curve.append(weighted / len(data))
        optimizer.lr *= cfg.lr_decay
        logger.info("epoch %d/%d mean loss %.6f", epoch, cfg.epochs, result.loss_curve[-1])
    return result
