"""
Arbitrary and nested permutations, permutation schemes over tensor axes, and
a randomized equivariance checker.

Conventions:
    - ``Permutation.mapping[i]`` is the destination of source element ``i``;
      ``apply`` moves element ``i`` of the permuted axis to ``mapping[i]``.
    - ``matrix()`` returns the 0/1 matrix ``P`` with ``P @ x == apply(x)``.
    - A nested permutation over ``M`` subsets of ``K`` elements sends element
      ``(m, k)`` (flat index ``m*K + k``) to ``outer[m]*K + inner[m][k]``;
      its matrix is ``kron(P_outer, I_K) @ blockdiag(P_1, ..., P_M)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import config
from .exceptions import ContractViolationError
from .tensor import Tensor, getitem

logger = logging.getLogger(__name__)

Sample = Union[np.ndarray, Callable[[np.random.Generator], np.ndarray]]


def _to_array(value: Any) -> np.ndarray:
    if isinstance(value, Tensor):
        return value.data
    return np.asarray(value, dtype=np.float64)


class Permutation:
    """Bijection on ``{0, ..., K-1}``."""

    __slots__ = ("_mapping",)

    def __init__(self, mapping: Sequence[int]):
        arr = np.asarray(mapping, dtype=np.int64).reshape(-1)
        if arr.size == 0:
            raise ContractViolationError("Permutation needs at least one element")
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ContractViolationError(f"Not a bijection: {arr.tolist()}")
        arr.setflags(write=False)
        self._mapping = arr

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return cls(np.arange(size))

    @property
    def mapping(self) -> np.ndarray:
        return self._mapping

    @property
    def size(self) -> int:
        return int(self._mapping.size)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Permutation) and np.array_equal(
            self._mapping, other._mapping
        )

    def __hash__(self) -> int:
        return hash(self._mapping.tobytes())

    def __repr__(self) -> str:
        return f"Permutation({self._mapping.tolist()})"

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self._mapping)
        inv[self._mapping] = np.arange(self.size)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """Permutation applying ``other`` first, then ``self``."""
        if other.size != self.size:
            raise ContractViolationError(
                f"Cannot compose permutations of sizes {self.size} and {other.size}"
            )
        return Permutation(self._mapping[other._mapping])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self._mapping, np.arange(self.size)))

    def matrix(self) -> np.ndarray:
        mat = np.zeros((self.size, self.size))
        mat[self._mapping, np.arange(self.size)] = 1.0
        return mat

    def apply(self, x: Any, axis: int = 0) -> Any:
        """Permute ``x`` along ``axis``; tensors stay differentiable."""
        source = np.argsort(self._mapping)
        if isinstance(x, Tensor):
            ndim = x.ndim
            if x.shape[axis] != self.size:
                raise ContractViolationError(
                    f"Axis {axis} has length {x.shape[axis]}, permutation has {self.size}"
                )
            position = axis % ndim
            index = (slice(None),) * position + (source,)
            return getitem(x, index)
        arr = np.asarray(x)
        if arr.shape[axis] != self.size:
            raise ContractViolationError(
                f"Axis {axis} has length {arr.shape[axis]}, permutation has {self.size}"
            )
        return np.take(arr, source, axis=axis)


@dataclass(frozen=True)
class NestedPermutation:
    """Outer permutation of ``M`` subsets combined with one inner permutation per subset."""

    outer: Permutation
    inner: Tuple[Permutation, ...]

    def __post_init__(self) -> None:
        if not self.inner:
            raise ContractViolationError("NestedPermutation needs at least one subset")
        if len(self.inner) != self.outer.size:
            raise ContractViolationError(
                f"Outer permutation covers {self.outer.size} subsets, "
                f"got {len(self.inner)} inner permutations"
            )
        sizes = {p.size for p in self.inner}
        if len(sizes) != 1:
            raise ContractViolationError(
                f"Nested subsets must have equal sizes, got {sorted(sizes)}"
            )

    @property
    def subset_count(self) -> int:
        return self.outer.size

    @property
    def subset_size(self) -> int:
        return self.inner[0].size

    @property
    def size(self) -> int:
        return self.subset_count * self.subset_size

    def as_permutation(self) -> Permutation:
        k = self.subset_size
        mapping = np.empty(self.size, dtype=np.int64)
        for m, inner in enumerate(self.inner):
            mapping[m * k : (m + 1) * k] = self.outer.mapping[m] * k + inner.mapping
        return Permutation(mapping)

    def matrix(self) -> np.ndarray:
        block = np.zeros((self.size, self.size))
        k = self.subset_size
        for m, inner in enumerate(self.inner):
            block[m * k : (m + 1) * k, m * k : (m + 1) * k] = inner.matrix()
        return np.kron(self.outer.matrix(), np.eye(k)) @ block

    def inverse(self) -> "NestedPermutation":
        outer_inv = self.outer.inverse()
        # Subset outer[m] is restored by inner[m]^{-1}.
        inner_inv = tuple(
            self.inner[int(outer_inv.mapping[m])].inverse()
            for m in range(self.subset_count)
        )
        return NestedPermutation(outer_inv, inner_inv)

    def apply(self, x: Any, axis: int = 0) -> Any:
        return self.as_permutation().apply(x, axis)


def build_permutation(size: int, seed: int) -> Permutation:
    """
    Draw a uniformly random permutation of ``size`` elements.

    Raises:
        ContractViolationError: If ``size < 1``.
    """
    if size < 1:
        raise ContractViolationError(f"Permutation size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)
    return Permutation(rng.permutation(size))


def build_nested_permutation(subset_sizes: Sequence[int], seed: int) -> NestedPermutation:
    """
    Draw a random nested permutation over subsets of the given sizes.

    Raises:
        ContractViolationError: Empty size list, empty subsets, or unequal
            subset sizes.
    """
    sizes = list(subset_sizes)
    if not sizes:
        raise ContractViolationError("Nested permutation needs at least one subset")
    if any(s < 1 for s in sizes):
        raise ContractViolationError(f"Subsets must be nonempty, got sizes {sizes}")
    if len(set(sizes)) != 1:
        raise ContractViolationError(
            f"Nested subsets must have equal sizes, got {sizes}"
        )
    rng = np.random.default_rng(seed)
    outer = Permutation(rng.permutation(len(sizes)))
    inner = tuple(Permutation(rng.permutation(sizes[0])) for _ in sizes)
    return NestedPermutation(outer, inner)


# ============================================================================
# SCHEMES
# ============================================================================

_RULE_KINDS = ("fixed", "arbitrary", "nested")


@dataclass(frozen=True)
class AxisRule:
    """
    Permutation rule for one tensor axis.

    Axes whose rules share a ``symbol`` are permuted jointly (one shared
    permutation). Nested rules may also share an ``outer_symbol`` so that two
    nested axes permute their subsets together while keeping independent
    within-subset permutations.
    """

    kind: str = "fixed"
    symbol: Optional[str] = None
    subset_size: Optional[int] = None
    outer_symbol: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in _RULE_KINDS:
            raise ContractViolationError(
                f"Invalid axis rule kind: {self.kind!r}. "
                f"Valid options: {', '.join(_RULE_KINDS)}"
            )
        if self.kind != "fixed" and not self.symbol:
            raise ContractViolationError(f"{self.kind} axis rule needs a symbol")
        if self.kind == "nested" and (self.subset_size is None or self.subset_size < 1):
            raise ContractViolationError("nested axis rule needs a positive subset_size")

    @classmethod
    def fixed(cls) -> "AxisRule":
        return cls("fixed")

    @classmethod
    def arbitrary(cls, symbol: str) -> "AxisRule":
        return cls("arbitrary", symbol)

    @classmethod
    def nested(
        cls, symbol: str, subset_size: int, outer_symbol: Optional[str] = None
    ) -> "AxisRule":
        return cls("nested", symbol, subset_size, outer_symbol)

    @property
    def outer_key(self) -> str:
        return self.outer_symbol or f"{self.symbol}:outer"


@dataclass
class PermutationDraw:
    """Permutations bound to scheme symbols for one trial."""

    arbitrary: Dict[str, Permutation] = field(default_factory=dict)
    outer: Dict[str, Permutation] = field(default_factory=dict)
    inner: Dict[str, Tuple[Permutation, ...]] = field(default_factory=dict)

    def resolve(self, rule: AxisRule, length: int) -> Optional[Permutation]:
        if rule.kind == "fixed":
            return None
        if rule.kind == "arbitrary":
            perm = self.arbitrary.get(rule.symbol)
            if perm is None:
                raise ContractViolationError(f"Symbol {rule.symbol!r} is not bound")
            if perm.size != length:
                raise ContractViolationError(
                    f"Symbol {rule.symbol!r} bound to size {perm.size}, axis has {length}"
                )
            return perm
        outer = self.outer.get(rule.outer_key)
        inner = self.inner.get(rule.symbol)
        if outer is None or inner is None:
            raise ContractViolationError(f"Nested symbol {rule.symbol!r} is not bound")
        nested = NestedPermutation(outer, inner)
        if nested.size != length:
            raise ContractViolationError(
                f"Nested symbol {rule.symbol!r} covers {nested.size} elements, "
                f"axis has {length}"
            )
        return nested.as_permutation()


class PermutationScheme:
    """One ``AxisRule`` per tensor axis."""

    def __init__(self, rules: Sequence[AxisRule]):
        self.rules: Tuple[AxisRule, ...] = tuple(rules)

    @classmethod
    def of(cls, *rules: AxisRule) -> "PermutationScheme":
        return cls(rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __repr__(self) -> str:
        parts = []
        for rule in self.rules:
            if rule.kind == "fixed":
                parts.append("fixed")
            elif rule.kind == "arbitrary":
                parts.append(rule.symbol)
            else:
                parts.append(f"{rule.symbol}[{rule.subset_size}]")
        return f"PermutationScheme({', '.join(parts)})"

    @property
    def joint_groups(self) -> List[List[int]]:
        """Axis index lists that share one permutation (groups of size >= 2)."""
        groups: Dict[str, List[int]] = {}
        for axis, rule in enumerate(self.rules):
            if rule.kind != "fixed":
                groups.setdefault(f"{rule.kind}:{rule.symbol}", []).append(axis)
        return [axes for axes in groups.values() if len(axes) > 1]

    def _check_rank(self, shape: Tuple[int, ...]) -> None:
        if len(shape) != len(self.rules):
            raise ContractViolationError(
                f"Scheme has {len(self.rules)} axis rules, tensor has shape {shape}"
            )

    def draw(
        self,
        rng: np.random.Generator,
        shape: Tuple[int, ...],
        into: Optional[PermutationDraw] = None,
    ) -> PermutationDraw:
        """
        Bind every symbol to a fresh random permutation.

        Symbols already bound in ``into`` are reused after a size check.
        """
        self._check_rank(shape)
        drawn = into if into is not None else PermutationDraw()
        for axis, rule in enumerate(self.rules):
            length = shape[axis]
            if rule.kind == "arbitrary":
                if rule.symbol not in drawn.arbitrary:
                    drawn.arbitrary[rule.symbol] = Permutation(rng.permutation(length))
            elif rule.kind == "nested":
                if length % rule.subset_size != 0:
                    raise ContractViolationError(
                        f"Axis {axis} of length {length} is not divisible into "
                        f"subsets of {rule.subset_size}"
                    )
                count = length // rule.subset_size
                if rule.outer_key not in drawn.outer:
                    drawn.outer[rule.outer_key] = Permutation(rng.permutation(count))
                if rule.symbol not in drawn.inner:
                    drawn.inner[rule.symbol] = tuple(
                        Permutation(rng.permutation(rule.subset_size))
                        for _ in range(count)
                    )
            # Validates joint-group sizes.
            drawn.resolve(rule, length)
        return drawn

    def apply(self, x: Any, drawn: PermutationDraw, inverse: bool = False) -> Any:
        shape = tuple(x.shape) if hasattr(x, "shape") else np.shape(x)
        self._check_rank(shape)
        out = x
        for axis, rule in enumerate(self.rules):
            perm = drawn.resolve(rule, shape[axis])
            if perm is None:
                continue
            out = (perm.inverse() if inverse else perm).apply(out, axis)
        return out


@dataclass
class EquivarianceReport:
    passed: bool
    max_abs_error: float
    trials: int
    failed_trials: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "max_abs_error": self.max_abs_error,
            "trials": self.trials,
            "failed_trials": self.failed_trials,
        }


def check_equivariance(
    f: Callable[[np.ndarray], Any],
    input_scheme: PermutationScheme,
    output_scheme: PermutationScheme,
    sample: Sample,
    trials: int = config.EQUIVARIANCE_TRIALS,
    tol: float = config.EQUIVARIANCE_TOL,
    seed: int = 0,
) -> EquivarianceReport:
    """
    Check ``permute(f(x)) == f(permute(x))`` on randomly drawn permutations.

    Args:
        f: Function of one array; may return an array or a tensor.
        input_scheme: Rules for the axes of ``x``.
        output_scheme: Rules for the axes of ``f(x)``; symbols are bound by the
            input draw, so joint groups share one permutation across sides.
        sample: Fixed input array, or a callable drawing one from an RNG.
        trials: Number of random trials.
        tol: Maximum accepted absolute deviation.
        seed: Seed for samples and permutations.

    Raises:
        ContractViolationError: If a scheme does not match its tensor's rank
            or an output symbol is not bound by the input scheme.
    """
    if trials < 1:
        raise ContractViolationError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    failed = 0
    for _ in range(trials):
        x = sample(rng) if callable(sample) else np.asarray(sample, dtype=np.float64)
        drawn = input_scheme.draw(rng, x.shape)
        y = _to_array(f(x))
        y_from_permuted = _to_array(f(input_scheme.apply(x, drawn)))
        expected = _to_array(output_scheme.apply(y, drawn))
        if expected.shape != y_from_permuted.shape:
            raise ContractViolationError(
                f"Output shapes differ: {expected.shape} vs {y_from_permuted.shape}"
            )
        err = float(np.max(np.abs(expected - y_from_permuted))) if expected.size else 0.0
        worst = max(worst, err)
        if err > tol:
            failed += 1
    report = EquivarianceReport(
        passed=failed == 0, max_abs_error=worst, trials=trials, failed_trials=failed
    )
    logger.debug("equivariance %s: %s", input_scheme, report)
    return report
