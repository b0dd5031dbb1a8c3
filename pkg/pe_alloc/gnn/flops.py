"""
Analytic multiply-add counts of descriptor-built GNNs.

The count walks the template tree of one layer with the number of
representation vectors each part is applied to. Work done on (self,
neighbor) pairs inside attention processors is tallied separately as the
pairwise stage; it dominates and scales with the square of the attention
set's size.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np

from ..core.exceptions import ContractViolationError
from ..core.pe_functions import AttentionProcessor, OneSetTemplate, PairProcessor
from .layers import Dense, GcnCombiner, Sequential
from .model import GnnModel, build_gnn_from_problem

logger = logging.getLogger(__name__)


@dataclass
class FlopCount:
    total: float = 0.0
    pairwise: float = 0.0

    def add(self, amount: float, pairwise: bool) -> None:
        self.total += amount
        if pairwise:
            self.pairwise += amount


class _Counter:
    def __init__(self, model: GnnModel, sizes: Mapping[str, int]):
        self.width = model.spec.hidden_width
        self.lengths: Dict[int, int] = {}
        for level in model.plan.levels:
            name = level.descriptor.name
            if name not in sizes:
                raise ContractViolationError(f"no size given for set {name!r}")
            self.lengths[level.axis] = int(sizes[name])
        self.count = FlopCount()

    def visit(self, obj: Any, vectors: float, pairwise: bool) -> None:
        w = self.width
        if isinstance(obj, Dense):
            self.count.add(vectors * obj.fan_in * obj.fan_out, pairwise)
        elif isinstance(obj, Sequential):
            for layer in obj.layers:
                self.visit(layer, vectors, pairwise)
        elif isinstance(obj, GcnCombiner):
            self.visit(obj.self_map, vectors, pairwise)
            self.visit(obj.neighbor_map, vectors, pairwise)
            # sum and activation
            self.count.add(2 * vectors * w, pairwise)
        elif isinstance(obj, OneSetTemplate):
            self.template(obj, vectors, pairwise)
        elif isinstance(obj, PairProcessor):
            raise ContractViolationError("fixed pairwise processors have no analytic count")
        elif callable(obj):
            # activations and other parameter-free elementwise maps
            self.count.add(vectors * w, pairwise)

    def attention(self, proc: AttentionProcessor, vectors: float, length: int, pairwise: bool) -> None:
        w = self.width
        self.visit(proc.query, vectors, pairwise)
        self.visit(proc.key, vectors, pairwise)
        pairs = vectors * length
        # logits, softmax, weighted sum
        self.count.add(pairs * (2 * w + 3), True)
        self.visit(proc.value, pairs if proc.pair_value else vectors, proc.pair_value or pairwise)

    def processor(self, proc: Any, vectors: float, length: int, pairwise: bool) -> None:
        if isinstance(proc, AttentionProcessor):
            self.attention(proc, vectors, length, pairwise)
        else:
            self.visit(proc, vectors, pairwise)

    def template(self, t: OneSetTemplate, vectors: float, pairwise: bool) -> None:
        w = self.width
        length = self.lengths[t.axis]
        self.processor(t.processor, vectors, length, pairwise)
        self.count.add(vectors * w, pairwise)
        if t.is_nested:
            subsets = max(length // (t.subset_size or 1), 1)
            self.processor(t.q3, vectors, length, pairwise)
            self.visit(t.q2, vectors * subsets / length, pairwise)
            self.count.add(2 * vectors * w, pairwise)
        self.visit(t.combiner, vectors, pairwise)


def count_flops(model: GnnModel, sizes: Mapping[str, int]) -> FlopCount:
    """
    Multiply-adds of one forward pass on a single sample of ``sizes``.

    Args:
        model: A built model.
        sizes: Set name to element count.

    Raises:
        ContractViolationError: If a set has no size.
    """
    counter = _Counter(model, sizes)
    vectors = float(math.prod(int(sizes[d.name]) for d in model.descriptors))
    spec = model.spec
    counter.count.add(vectors * spec.in_features * spec.hidden_width, False)
    for root in model.layers:
        counter.visit(root, vectors, False)
        if model.plan.output_function:
            counter.count.add(2 * vectors * spec.hidden_width, False)
    counter.count.add(vectors * spec.hidden_width * spec.out_features, False)
    return counter.count


def all_attention_variant(model: GnnModel) -> GnnModel:
    """Same descriptors and widths with attention in every recursion."""
    spec = model.spec
    return build_gnn_from_problem(
        spec.descriptors,
        [spec.hidden_width],
        spec.layer_count,
        attention="all",
        in_features=spec.in_features,
        out_features=spec.out_features,
        pooling=spec.pooling,
    )


def fit_loglog_slope(sizes: Sequence[float], counts: Sequence[float]) -> float:
    """Least-squares slope of ``log(count)`` against ``log(size)``."""
    if len(sizes) < 2:
        raise ContractViolationError("a slope needs at least two sizes")
    slope, _ = np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(counts, float)), 1)
    return float(slope)


def flop_scaling(
    model: GnnModel,
    base_sizes: Mapping[str, int],
    dim: str,
    values: Sequence[int],
    stage: str = "total",
) -> List[Dict[str, Any]]:
    """
    Rows ``dim, size, count`` sweeping one set's size with the others fixed.

    ``stage`` selects the ``total`` or the ``pairwise`` count.
    """
    if stage not in ("total", "pairwise"):
        raise ValueError(f"Invalid stage: {stage!r}. Valid options: total, pairwise")
    rows = []
    for value in values:
        sizes = dict(base_sizes)
        sizes[dim] = int(value)
        count = count_flops(model, sizes)
        rows.append({"dim": dim, "size": int(value), "count": getattr(count, stage)})
    logger.debug("FLOP sweep over %s: %s", dim, [r["count"] for r in rows])
    return rows
