"""
Executable one-set permutation-equivariant templates and their recursive
composition.

Layout conventions:
    - Tensors carry set axes followed by one trailing feature axis; set axes
      are addressed by negative indices (``-2`` is the last set axis).
    - Pair tensors for attention-style processors add a leading neighbor
      axis: ``x_self`` has shape ``(1, ..., K, ..., F)`` and ``x_nbr`` has
      shape ``(K, ..., 1, ..., F)``, so negative indices keep their meaning
      inside pairwise processors and nested templates can run on them.
    - Nested axes are flattened subset-major: element ``k`` of subset ``m``
      sits at ``m * subset_size + k``.

Template equations (pool over ``j != k``, ``i != m``):
    APE_I:   y_k    = f(x_k, sum_j q(x_j))
    APE_II:  y_k    = f(x_k, sum_j q(x_k, x_j))
    NPE_I:   y_km   = f(x_km, [sum_j q1(x_jm), sum_i q2(sum_j q3(x_ji))])
    NPE_II:  y_km   = f(x_km, [sum_j q1(x_km, x_jm), sum_i q2(sum_j q3(x_km, x_ji))])
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .exceptions import ContractViolationError
from .tensor import (
    Tensor,
    add,
    as_tensor,
    broadcast_to,
    concat,
    contract_axis,
    expand_dims,
    mean_axis,
    moveaxis,
    mul,
    reshape,
    softmax,
    sub,
    sum_axis,
)

logger = logging.getLogger(__name__)

TEMPLATE_KINDS: Tuple[str, ...] = ("APE_I", "APE_II", "NPE_I", "NPE_II")
POOLING_MODES: Tuple[str, ...] = ("sum", "mean")

Combiner = Callable[[Tensor, Tensor], Tensor]


# ============================================================================
# PAIR HELPERS
# ============================================================================


def pair_tensors(x: Any, axis: int) -> Tuple[Tensor, Tensor]:
    """Return ``(x_self, x_nbr)`` broadcastable views over set axis ``axis``."""
    x = as_tensor(x)
    n = x.ndim
    x_self = expand_dims(x, 0)
    x_nbr = expand_dims(moveaxis(x, axis, 0), n + 1 + axis)
    return x_self, x_nbr


def pair_mask(matrix: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    """
    Lay a ``(neighbor, self)`` 0/1 matrix out for a pair tensor of rank
    ``ndim`` whose self index sits at negative axis ``axis``.
    """
    n_nbr, n_self = matrix.shape
    position = ndim + axis
    shape = [1] * ndim
    shape[0] = n_nbr
    shape[position] = n_self
    return np.asarray(matrix, dtype=np.float64).reshape(shape)


def feature_concat(a: Any, b: Any) -> Tensor:
    """Concatenate features after broadcasting the leading (set) axes."""
    a, b = as_tensor(a), as_tensor(b)
    lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    a = broadcast_to(a, lead + a.shape[-1:])
    b = broadcast_to(b, lead + b.shape[-1:])
    return concat([a, b], axis=-1)


# ============================================================================
# PROCESSORS
# ============================================================================


class PairProcessor:
    """Pairwise processor ``q(x_self, x_nbr)`` pooled by a masked sum."""

    pairwise = True
    normalized = False

    def __init__(self, fn: Callable[[Tensor, Tensor], Tensor]):
        self.fn = fn

    def parts(self) -> List[Any]:
        return [self.fn]

    def pool(
        self,
        x_self: Tensor,
        x_nbr: Tensor,
        axis: int,
        mask: Optional[np.ndarray],
        self_mask: Optional[np.ndarray] = None,
    ) -> Tensor:
        out = as_tensor(self.fn(x_self, x_nbr))
        if mask is not None:
            out = mul(out, mask)
        return sum_axis(out, axis)


class Pairwise(PairProcessor):
    """Pairwise processor that runs ``inner`` on the concatenated pair."""

    def __init__(self, inner: Callable[[Tensor], Tensor]):
        self.inner = inner
        super().__init__(lambda xs, xn: inner(feature_concat(xs, xn)))

    def parts(self) -> List[Any]:
        return [self.inner]


class AttentionProcessor:
    """
    Softmax-weighted pooling: ``sum_j softmax_j(<Q x_k, K x_j>) V x_j``.

    Logits are summed over features, scaled, and averaged over
    ``reduce_axes`` (other set axes), so one weight is shared by every
    element of those axes. ``include_self`` adds the ``j == k`` term.
    With ``pair_value`` the value map reads ``[x_k, x_j]`` instead of
    ``x_j`` alone.
    """

    pairwise = True
    normalized = True

    def __init__(
        self,
        query: Callable[[Tensor], Tensor],
        key: Callable[[Tensor], Tensor],
        value: Callable[[Tensor], Tensor],
        reduce_axes: Sequence[int] = (),
        include_self: bool = False,
        scale: float = 1.0,
        pair_value: bool = False,
    ):
        self.query = query
        self.key = key
        self.value = value
        self.reduce_axes = tuple(reduce_axes)
        self.include_self = include_self
        self.scale = float(scale)
        self.pair_value = pair_value

    def parts(self) -> List[Any]:
        return [self.query, self.key, self.value]

    def pool(
        self,
        x_self: Tensor,
        x_nbr: Tensor,
        axis: int,
        mask: Optional[np.ndarray],
        self_mask: Optional[np.ndarray] = None,
    ) -> Tensor:
        logits = sum_axis(mul(self.query(x_self), self.key(x_nbr)), -1, keepdims=True)
        logits = mul(logits, self.scale)
        for ax in self.reduce_axes:
            logits = mean_axis(logits, ax, keepdims=True)

        allowed = mask
        if allowed is not None and self.include_self and self_mask is not None:
            allowed = allowed + self_mask
        if self.pair_value:
            values = self.value(feature_concat(x_self, x_nbr))
        else:
            values = self.value(x_nbr)
        if allowed is None:
            weights = softmax(logits, axis=axis)
        else:
            logits = add(logits, (1.0 - allowed) * config.ATTENTION_MASK_LOGIT)
            weights = mul(softmax(logits, axis=axis), allowed)
        return sum_axis(mul(weights, values), axis)


def _is_pairwise(processor: Any) -> bool:
    return bool(getattr(processor, "pairwise", False))


def _nested_templates(obj: Any) -> List["OneSetTemplate"]:
    if obj is None:
        return []
    if isinstance(obj, OneSetTemplate):
        return [obj]
    parts = getattr(obj, "parts", None)
    if callable(parts):
        found: List[OneSetTemplate] = []
        for part in parts():
            found.extend(_nested_templates(part))
        return found
    return []


def _count_attention(obj: Any) -> int:
    """Attention processors owned directly by ``obj`` (not by nested templates)."""
    if isinstance(obj, AttentionProcessor):
        return 1
    return 0


# ============================================================================
# COMBINER ADAPTERS
# ============================================================================


class Joined:
    """Combiner ``f(x, s) = inner([x, s])`` for templates and plain maps."""

    def __init__(self, inner: Callable[[Tensor], Tensor]):
        self.inner = inner

    def parts(self) -> List[Any]:
        return [self.inner]

    def __call__(self, x: Tensor, pooled: Tensor) -> Tensor:
        return self.inner(feature_concat(x, pooled))


def add_pooled(x: Tensor, pooled: Tensor) -> Tensor:
    """Combiner ``f(x, s) = x + s``."""
    return add(x, pooled)


def pooled_only(x: Tensor, pooled: Tensor) -> Tensor:
    """Combiner ``f(x, s) = s``."""
    return as_tensor(pooled)


def identity(x: Any) -> Tensor:
    return as_tensor(x)


# ============================================================================
# ONE-SET TEMPLATES
# ============================================================================


@dataclass(frozen=True)
class OneSetTemplate:
    """
    One-set PE function along set axis ``axis``.

    APE kinds use ``processor`` as ``q``; NPE kinds use ``processor`` as
    ``q1`` with ``q2``/``q3`` and require ``subset_size``. ``*_II`` kinds
    need pairwise ``q1`` (and ``q3``); ``q2`` is always ordinary.
    """

    kind: str
    combiner: Combiner
    processor: Any
    axis: int = -2
    q2: Optional[Callable[[Tensor], Tensor]] = None
    q3: Any = None
    subset_size: Optional[int] = None
    pooling: str = "sum"
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in TEMPLATE_KINDS:
            raise ContractViolationError(
                f"Invalid template kind: {self.kind!r}. "
                f"Valid options: {', '.join(TEMPLATE_KINDS)}"
            )
        if self.pooling not in POOLING_MODES:
            raise ContractViolationError(
                f"Invalid pooling: {self.pooling!r}. "
                f"Valid options: {', '.join(POOLING_MODES)}"
            )
        if self.axis > -2:
            raise ContractViolationError(
                f"Set axes are addressed from the end and precede the feature "
                f"axis; got axis {self.axis}"
            )
        wants_pairs = self.kind.endswith("_II")
        if _is_pairwise(self.processor) != wants_pairs:
            raise ContractViolationError(
                f"{self.kind} needs {'a pairwise' if wants_pairs else 'an ordinary'} processor"
            )
        if self.kind.startswith("NPE"):
            if self.q2 is None or self.q3 is None:
                raise ContractViolationError(f"{self.kind} needs q2 and q3 processors")
            if _is_pairwise(self.q3) != wants_pairs or _is_pairwise(self.q2):
                raise ContractViolationError(
                    f"{self.kind} processor kinds do not match the template"
                )

    @property
    def is_nested(self) -> bool:
        return self.kind.startswith("NPE")

    def subtemplates(self) -> List["OneSetTemplate"]:
        found: List[OneSetTemplate] = []
        for part in (self.combiner, self.processor, self.q2, self.q3):
            found.extend(_nested_templates(part))
        return found

    def pairwise_slots(self) -> int:
        return sum(1 for q in (self.processor, self.q3) if _is_pairwise(q))

    def attention_slots(self) -> int:
        return sum(_count_attention(q) for q in (self.processor, self.q3))

    def __call__(self, x: Any) -> Tensor:
        return one_set_apply(self, x)


def _scale(t: Tensor, count: int, pooling: str) -> Tensor:
    if pooling == "mean":
        return mul(t, 1.0 / max(count, 1))
    return t


def _check_set_axis(x: Tensor, axis: int) -> None:
    if x.ndim < 2 or not -x.ndim <= axis <= -2:
        raise ContractViolationError(
            f"Set axis {axis} is not available on a tensor of shape {x.shape}"
        )


def one_set_apply(t: OneSetTemplate, x: Any) -> Tensor:
    """
    Apply a one-set template along its set axis.

    Raises:
        ContractViolationError: Missing set axis, or an NPE template without
            (or with non-dividing) subset metadata.
    """
    x = as_tensor(x)
    _check_set_axis(x, t.axis)
    length = x.shape[t.axis]
    if t.kind == "APE_I":
        return _ape_one(t, x, length)
    if t.kind == "APE_II":
        return _ape_two(t, x, length)

    if t.subset_size is None or t.subset_size < 1:
        raise ContractViolationError(f"{t.kind} requires subset metadata (subset_size)")
    if length % t.subset_size != 0:
        raise ContractViolationError(
            f"Axis length {length} is not a whole number of subsets of {t.subset_size}"
        )
    if t.kind == "NPE_I":
        return _npe_one(t, x, length // t.subset_size, t.subset_size)
    return _npe_two(t, x, length // t.subset_size, t.subset_size)


def _ape_one(t: OneSetTemplate, x: Tensor, k: int) -> Tensor:
    processed = as_tensor(t.processor(x))
    pooled = sub(sum_axis(processed, t.axis, keepdims=True), processed)
    return t.combiner(x, _scale(pooled, k - 1, t.pooling))


def _ape_two(t: OneSetTemplate, x: Tensor, k: int) -> Tensor:
    x_self, x_nbr = pair_tensors(x, t.axis)
    ndim = x.ndim + 1
    eye = np.eye(k)
    pooled = t.processor.pool(
        x_self,
        x_nbr,
        0,
        pair_mask(1.0 - eye, ndim, t.axis),
        pair_mask(eye, ndim, t.axis),
    )
    if not t.processor.normalized:
        pooled = _scale(pooled, k - 1, t.pooling)
    return t.combiner(x, pooled)


def _npe_one(t: OneSetTemplate, x: Tensor, m: int, k: int) -> Tensor:
    within = np.kron(np.eye(m), np.ones((k, k)) - np.eye(k))
    gather = np.kron(np.eye(m), np.ones((1, k)))
    spread = np.kron(np.ones((m, m)) - np.eye(m), np.ones((k, 1)))

    first = contract_axis(as_tensor(t.processor(x)), within, t.axis)
    per_subset = contract_axis(as_tensor(t.q3(x)), gather, t.axis)
    per_subset = _scale(per_subset, k, t.pooling)
    second = contract_axis(as_tensor(t.q2(per_subset)), spread, t.axis)
    pooled = concat(
        [_scale(first, k - 1, t.pooling), _scale(second, m - 1, t.pooling)], axis=-1
    )
    return t.combiner(x, pooled)


def _npe_two(t: OneSetTemplate, x: Tensor, m: int, k: int) -> Tensor:
    length = m * k
    x_self, x_nbr = pair_tensors(x, t.axis)
    ndim = x.ndim + 1
    subset = np.arange(length) // k
    same = (subset[:, None] == subset[None, :]).astype(np.float64)
    eye = np.eye(length)

    first = t.processor.pool(
        x_self,
        x_nbr,
        0,
        pair_mask(same - eye, ndim, t.axis),
        pair_mask(eye, ndim, t.axis),
    )
    if not t.processor.normalized:
        first = _scale(first, k - 1, t.pooling)

    # Neighbors grouped by subset: (m, k, ...) against (1, 1, ..., self, ...).
    grouped = reshape(x_nbr, (m, k) + x_nbr.shape[1:])
    per_subset = t.q3.pool(expand_dims(x_self, 0), grouped, 1, None, None)
    if not t.q3.normalized:
        per_subset = _scale(per_subset, k, t.pooling)
    other = (np.arange(m)[:, None] != subset[None, :]).astype(np.float64)
    second = sum_axis(mul(as_tensor(t.q2(per_subset)), pair_mask(other, ndim, t.axis)), 0)
    second = _scale(second, m - 1, t.pooling)
    return t.combiner(x, concat([first, second], axis=-1))


# ============================================================================
# RECURSION STACK
# ============================================================================


@dataclass
class LevelInfo:
    depth: int
    axis: int
    kind: str
    label: str
    pairwise_slots: int
    attention_slots: int


@dataclass
class StackDescription:
    levels: List[LevelInfo] = field(default_factory=list)
    output_function: bool = False

    @property
    def recursion_count(self) -> int:
        return max((lvl.depth for lvl in self.levels), default=0)

    @property
    def pairwise_slots(self) -> int:
        return sum(lvl.pairwise_slots for lvl in self.levels)

    @property
    def pairwise_templates(self) -> int:
        return sum(1 for lvl in self.levels if lvl.pairwise_slots)

    @property
    def attention_slots(self) -> int:
        return sum(lvl.attention_slots for lvl in self.levels)

    def attention_depths(self) -> List[int]:
        return sorted({lvl.depth for lvl in self.levels if lvl.attention_slots})

    def kinds_at(self, depth: int) -> List[str]:
        return sorted({lvl.kind for lvl in self.levels if lvl.depth == depth})

    def to_rows(self) -> List[dict]:
        return [
            {
                "depth": lvl.depth,
                "axis": lvl.axis,
                "kind": lvl.kind,
                "label": lvl.label,
                "pairwise_slots": lvl.pairwise_slots,
                "attention_slots": lvl.attention_slots,
            }
            for lvl in self.levels
        ]


class RecursionStack:
    """
    Root template whose combiners and processors recursively hold templates
    on the remaining set axes, plus an optional joint-group output function.

    Raises:
        ContractViolationError: If a set axis is covered twice along one
            recursion path, or some declared set axis is never covered.
    """

    def __init__(
        self,
        root: OneSetTemplate,
        set_axes: Sequence[int],
        output_mask: Optional[np.ndarray] = None,
    ):
        self.root = root
        self.set_axes = tuple(sorted(set(set_axes)))
        self.output_mask = None if output_mask is None else np.asarray(output_mask, dtype=np.float64)
        self._description = self._validate()

    def _validate(self) -> StackDescription:
        description = StackDescription(output_function=self.output_mask is not None)
        covered: set = set()

        def walk(template: OneSetTemplate, path: frozenset, depth: int) -> None:
            if template.axis in path:
                raise ContractViolationError(
                    f"Set axis {template.axis} is covered twice along one recursion path"
                )
            covered.add(template.axis)
            description.levels.append(
                LevelInfo(
                    depth=depth,
                    axis=template.axis,
                    kind=template.kind,
                    label=template.label,
                    pairwise_slots=template.pairwise_slots(),
                    attention_slots=template.attention_slots(),
                )
            )
            for child in template.subtemplates():
                walk(child, path | {template.axis}, depth + 1)

        walk(self.root, frozenset(), 1)
        missing = set(self.set_axes) - covered
        extra = covered - set(self.set_axes)
        if missing or extra:
            raise ContractViolationError(
                f"Stack covers set axes {sorted(covered)}, declared {list(self.set_axes)}"
            )
        return description

    def describe(self) -> StackDescription:
        return self._description

    def __call__(self, x: Any) -> Tensor:
        return recursive_compose(self, x)


def recursive_compose(stack: RecursionStack, x: Any) -> Tensor:
    """Apply the stack, then the output function when a joint mask is attached."""
    x = as_tensor(x)
    for axis in stack.set_axes:
        _check_set_axis(x, axis)
    phi = stack.root(x)
    if stack.output_mask is None:
        return phi
    return output_function(phi, x, stack.output_mask)


def output_function(phi_out: Any, x: Any, joint_mask: np.ndarray) -> Tensor:
    """``Y = phi_out * mask + x * (1 - mask)``."""
    mask = np.asarray(joint_mask, dtype=np.float64)
    return add(mul(phi_out, mask), mul(x, 1.0 - mask))


def block_mask(
    shape: Sequence[int],
    axes: Tuple[int, int],
    blocks: Tuple[int, int] = (1, 1),
) -> np.ndarray:
    """
    Broadcastable mask equal to 1 where the two joint axes index the same
    group: ``i // blocks[0] == j // blocks[1]``.
    """
    shape = tuple(shape)
    a, b = axes
    n_a, n_b = shape[a], shape[b]
    if n_a % blocks[0] or n_b % blocks[1] or n_a // blocks[0] != n_b // blocks[1]:
        raise ContractViolationError(
            f"Axes of lengths {n_a} and {n_b} do not form equal block groups {blocks}"
        )
    groups = (np.arange(n_a)[:, None] // blocks[0]) == (np.arange(n_b)[None, :] // blocks[1])
    out_shape = [1] * len(shape)
    out_shape[a % len(shape)] = n_a
    out_shape[b % len(shape)] = n_b
    if a % len(shape) > b % len(shape):
        groups = groups.T
    return groups.astype(np.float64).reshape(out_shape)


def identity_mask(shape: Sequence[int], axes: Tuple[int, int]) -> np.ndarray:
    """Mask realizing ``I_K`` over two jointly permuted axes."""
    return block_mask(shape, axes, (1, 1))
