"""
Representation states and the template pieces shared by the re-expressed
iterations.

A representation state is a dense array with one axis per set followed by
a trailing slot axis; ``slots`` names what each entry of the slot axis
holds. Leaves of the templates work on plain arrays (``.data``) and hand
tensors back to the template machinery.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from ..core.exceptions import ContractViolationError
from ..core.pe_functions import OneSetTemplate, RecursionStack, StackDescription
from ..core.tensor import Tensor, add, as_tensor

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RepresentationState:
    """
    State ``D`` of one re-expressed iteration.

    Attributes:
        variant: Problem the layout belongs to (PB, PS, PM, PC, PS_POWER).
        D: Array of shape ``set axes + (len(slots),)``.
        slots: Name of every entry of the trailing axis.
        axes: Name of every set axis, in tensor order.
        constants: Scalars entering the combiners unchanged.
        iteration: Number of steps applied since packing.
    """

    variant: str
    D: np.ndarray
    slots: Tuple[str, ...]
    axes: Tuple[str, ...]
    constants: Mapping[str, Any] = field(default_factory=dict)
    iteration: int = 0

    def __post_init__(self) -> None:
        if self.D.ndim != len(self.axes) + 1 or self.D.shape[-1] != len(self.slots):
            raise ContractViolationError(
                f"{self.variant} state of shape {self.D.shape} does not match "
                f"axes {list(self.axes)} and slots {list(self.slots)}"
            )

    def slot(self, name: str) -> np.ndarray:
        return self.D[..., self.slots.index(name)]

    def sizes(self) -> Dict[str, int]:
        return dict(zip(self.axes, self.D.shape[:-1]))

    def advance(self, D: Any) -> "RepresentationState":
        """Next state with the same layout."""
        arr = D.data if isinstance(D, Tensor) else np.asarray(D, dtype=np.float64)
        return replace(self, D=np.array(arr), iteration=self.iteration + 1)

    def layout(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "axes": list(self.axes),
            "sizes": self.sizes(),
            "slots": list(self.slots),
        }


# ============================================================================
# LEAF HELPERS
# ============================================================================


def values(x: Any) -> np.ndarray:
    return as_tensor(x).data


def complex_at(x: Any, re_index: int) -> np.ndarray:
    """Complex number stored in slots ``re_index`` (real) and ``re_index + 1``."""
    d = values(x)
    return d[..., re_index] + 1j * d[..., re_index + 1]


def complex_features(z: np.ndarray) -> Tensor:
    return Tensor(np.stack([z.real, z.imag], axis=-1))


def real_feature(a: np.ndarray) -> Tensor:
    return Tensor(np.asarray(a, dtype=np.float64)[..., None])


def replace_slots(x: Any, updates: Mapping[int, np.ndarray]) -> Tensor:
    """Copy of ``x`` with whole slots overwritten (values broadcast)."""
    d = np.array(values(x))
    for index, value in updates.items():
        d[..., index] = value
    return Tensor(d)


class Nested:
    """
    Leaf function that runs templates on other set axes.

    ``parts()`` exposes the templates so the recursion-stack walk records
    them one level below the template that owns this leaf.
    """

    def __init__(self, fn: Callable[..., Any], *templates: OneSetTemplate):
        self.fn = fn
        self.templates = templates

    def parts(self) -> List[Any]:
        return list(self.templates)

    def __call__(self, *args: Any) -> Tensor:
        return as_tensor(self.fn(*args))


class _AddSelf:
    def __init__(self, fn: Callable[[Any], Any]):
        self.fn = fn

    def __call__(self, x: Tensor, pooled: Tensor) -> Tensor:
        return add(self.fn(x), pooled)


def axis_total(axis: int, fn: Callable[[Any], Any], label: str = "") -> OneSetTemplate:
    """
    APE_I whose output at every element is ``sum_j fn(x_j)`` over ``axis``:
    the pooled sum over the other elements plus the element's own term.
    """
    return OneSetTemplate("APE_I", _AddSelf(fn), fn, axis=axis, label=label)


def describe_stacks(stacks: Sequence[RecursionStack]) -> List[StackDescription]:
    return [stack.describe() for stack in stacks]


def absolute_deviation(expected: np.ndarray, actual: np.ndarray) -> float:
    """``max|expected - actual|``; 0 for empty states."""
    expected = np.asarray(expected, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if expected.shape != actual.shape:
        raise ContractViolationError(f"State shapes differ: {expected.shape} vs {actual.shape}")
    if expected.size == 0:
        return 0.0
    return float(np.max(np.abs(expected - actual)))


def relative_deviation(expected: np.ndarray, actual: np.ndarray) -> float:
    """``max|expected - actual| / max(1, max|expected|)``."""
    deviation = absolute_deviation(expected, actual)
    expected = np.asarray(expected, dtype=np.float64)
    if expected.size == 0:
        return 0.0
    return deviation / max(1.0, float(np.max(np.abs(expected))))
