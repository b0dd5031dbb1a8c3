"""
Dense float64 tensors with define-by-run reverse-mode differentiation.

Tensors are immutable: their data arrays are read-only and every primitive
returns a fresh tensor. Differentiation is recorded on an explicit
``GradientTape`` that is active inside a ``with`` block; primitives applied
outside any tape compute values only. A tape is consumed by one backward
pass, so each forward pass records onto a new tape (the network structure is
allowed to change between passes, e.g. with the number of users).

Example:
    >>> w = Tensor([1.0, 2.0], requires_grad=True)
    >>> with GradientTape() as tape:
    ...     loss = sum_axis(w * w)
    >>> tape.backward(loss)[w].data
    array([2., 4.])
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from . import config
from .exceptions import ContractViolationError, DomainError, GradientTapeError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]
Axis = Union[int, Tuple[int, ...], None]

_local = threading.local()


def _tape_stack() -> List["GradientTape"]:
    stack = getattr(_local, "tapes", None)
    if stack is None:
        stack = []
        _local.tapes = stack
    return stack


def _active_tape() -> Optional["GradientTape"]:
    stack = _tape_stack()
    return stack[-1] if stack else None


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Function:
    """
    Base class for differentiable primitives.

    Subclasses implement ``forward`` on raw arrays and ``backward``, which maps
    the gradient of the output to one gradient (or None) per input.
    """

    name = "function"

    def __init__(self, *tensors: "Tensor"):
        self.tensors = tensors

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{self.name}: forward not implemented")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{self.name}: backward not implemented")

    @classmethod
    def apply(cls, *tensors: "Tensor", **kwargs: Any) -> "Tensor":
        func = cls(*tensors)
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                out = func.forward(*(t.data for t in tensors), **kwargs)
        except ValueError as exc:
            raise ContractViolationError(f"{cls.name}: {exc}") from exc

        out = np.asarray(out, dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise DomainError(f"{cls.name} produced a non-finite value")

        requires_grad = any(t.requires_grad for t in tensors)
        result = Tensor._wrap(out, requires_grad=requires_grad)
        tape = _active_tape()
        if tape is not None and requires_grad:
            tape._record(func, tensors, result)
        return result

    @staticmethod
    def unbroadcast(grad: np.ndarray, to_shape: Tuple[int, ...]) -> np.ndarray:
        """Sum out broadcast dimensions so that ``grad`` matches ``to_shape``."""
        if grad.shape == to_shape:
            return grad
        while grad.ndim > len(to_shape):
            grad = grad.sum(axis=0)
        for dim, size in enumerate(to_shape):
            if size == 1 and grad.shape[dim] != 1:
                grad = grad.sum(axis=dim, keepdims=True)
        return grad


class Tensor:
    """
    Immutable dense float64 array with an optional gradient requirement.

    Args:
        data: Array-like payload; copied and made read-only.
        requires_grad: Whether gradients flow to this tensor.
        name: Optional label (parameter name) used in diagnostics.

    Raises:
        DomainError: If the payload contains NaN or infinity.
    """

    __slots__ = ("_data", "requires_grad", "name", "__weakref__")
    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ):
        arr = np.array(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise DomainError("Tensor data must be finite")
        self._data = _readonly(arr)
        self.requires_grad = bool(requires_grad)
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool) -> "Tensor":
        obj = cls.__new__(cls)
        obj._data = _readonly(arr)
        obj.requires_grad = requires_grad
        obj.name = None
        return obj

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(self._data.size)

    def numpy(self) -> np.ndarray:
        return np.array(self._data)

    def item(self) -> float:
        if self._data.size != 1:
            raise ContractViolationError(
                f"item() requires a single element, got shape {self.shape}"
            )
        return float(self._data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor._wrap(self._data, requires_grad=False)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __len__(self) -> int:
        return len(self._data)

    # Arithmetic sugar; every operator routes through a primitive.
    def __add__(self, other: Any) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        if isinstance(other, Tensor):
            return mul(self, reciprocal(other))
        divisor = np.asarray(other, dtype=np.float64)
        if np.any(divisor == 0):
            raise DomainError("division by zero")
        return mul(self, 1.0 / divisor)

    def __rtruediv__(self, other: Any) -> "Tensor":
        return mul(other, reciprocal(self))

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __matmul__(self, other: Any) -> "Tensor":
        return matmul(self, other)

    def __rmatmul__(self, other: Any) -> "Tensor":
        return matmul(other, self)

    def __getitem__(self, index: Any) -> "Tensor":
        return getitem(self, index)

    def sum(self, axis: Axis = None, keepdims: bool = False) -> "Tensor":
        return sum_axis(self, axis, keepdims=keepdims)

    def mean(self, axis: Axis = None, keepdims: bool = False) -> "Tensor":
        return mean_axis(self, axis, keepdims=keepdims)

    def reshape(self, *shape: Any) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(value: Any) -> Tensor:
    """Return ``value`` as a tensor; non-tensors become constants."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


# ============================================================================
# PRIMITIVES
# ============================================================================


class _Add(Function):
    name = "add"

    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad):
        return (
            self.unbroadcast(grad, self.shapes[0]),
            self.unbroadcast(grad, self.shapes[1]),
        )


class _Sub(Function):
    name = "sub"

    def forward(self, a, b):
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad):
        return (
            self.unbroadcast(grad, self.shapes[0]),
            self.unbroadcast(-grad, self.shapes[1]),
        )


class _Mul(Function):
    name = "mul"

    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return (
            self.unbroadcast(grad * self.b, self.a.shape),
            self.unbroadcast(grad * self.a, self.b.shape),
        )


class _Matmul(Function):
    name = "matmul"

    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise ValueError(
                f"operands need at least 2 dims, got {a.shape} and {b.shape}"
            )
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad):
        grad_a = np.matmul(grad, np.swapaxes(self.b, -1, -2))
        grad_b = np.matmul(np.swapaxes(self.a, -1, -2), grad)
        return (
            self.unbroadcast(grad_a, self.a.shape),
            self.unbroadcast(grad_b, self.b.shape),
        )


def _normalize_axes(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    normalized = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise ValueError(f"axis {ax} out of range for {ndim} dims")
        normalized.append(ax % ndim)
    return tuple(sorted(set(normalized)))


class _Sum(Function):
    name = "sum_axis"

    def forward(self, x, axis=None, keepdims=False):
        self.shape = x.shape
        self.axes = _normalize_axes(axis, x.ndim)
        self.keepdims = keepdims
        return np.sum(x, axis=self.axes, keepdims=keepdims)

    def backward(self, grad):
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        return (np.broadcast_to(grad, self.shape).copy(),)


class _Concat(Function):
    name = "concat_axis"

    def forward(self, *arrays, axis=-1):
        self.axis = axis
        self.sizes = [a.shape[axis] for a in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        bounds = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, bounds, axis=self.axis))


class _Relu(Function):
    name = "relu"

    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0.0)

    def backward(self, grad):
        return (grad * self.mask,)


class _Exp(Function):
    name = "exp"

    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class _Log(Function):
    name = "log"

    def forward(self, x):
        if np.any(x <= 0):
            raise DomainError("log of a non-positive value")
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class _Reciprocal(Function):
    name = "reciprocal"

    def forward(self, x):
        if np.any(x == 0):
            raise DomainError("reciprocal of zero")
        self.out = 1.0 / x
        return self.out

    def backward(self, grad):
        return (-grad * self.out * self.out,)


class _Clip(Function):
    name = "clip"

    def forward(self, x, low=None, high=None):
        lo = -np.inf if low is None else low
        hi = np.inf if high is None else high
        # Boundary points belong to the pass-through branch.
        self.mask = (x >= lo) & (x <= hi)
        return np.clip(x, lo, hi)

    def backward(self, grad):
        return (grad * self.mask,)


class _Softmax(Function):
    name = "softmax_axis"

    def forward(self, x, axis=-1):
        self.axis = axis
        shifted = x - np.max(x, axis=axis, keepdims=True)
        e = np.exp(shifted)
        self.out = e / np.sum(e, axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        s = self.out
        inner = np.sum(grad * s, axis=self.axis, keepdims=True)
        return (s * (grad - inner),)


class _Norm(Function):
    name = "norm"

    def forward(self, x, axis=None, keepdims=False):
        self.x = x
        self.axes = _normalize_axes(axis, x.ndim)
        self.keepdims = keepdims
        self.out = np.sqrt(np.sum(x * x, axis=self.axes, keepdims=True))
        if keepdims:
            return self.out
        return np.squeeze(self.out, axis=self.axes)

    def backward(self, grad):
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        safe = np.where(self.out > 0, self.out, 1.0)
        # Subgradient 0 at the origin.
        return (np.where(self.out > 0, grad * self.x / safe, 0.0),)


class _Reshape(Function):
    name = "reshape"

    def forward(self, x, shape=()):
        self.shape = x.shape
        return np.reshape(x, shape)

    def backward(self, grad):
        return (np.reshape(grad, self.shape),)


class _Moveaxis(Function):
    name = "moveaxis"

    def forward(self, x, source=0, destination=0):
        self.source, self.destination = source, destination
        return np.moveaxis(x, source, destination)

    def backward(self, grad):
        return (np.moveaxis(grad, self.destination, self.source),)


class _BroadcastTo(Function):
    name = "broadcast_to"

    def forward(self, x, shape=()):
        self.shape = x.shape
        return np.broadcast_to(x, shape)

    def backward(self, grad):
        return (self.unbroadcast(grad, self.shape),)


class _GetItem(Function):
    name = "getitem"

    def forward(self, x, index=None):
        self.shape = x.shape
        self.index = index
        return x[index]

    def backward(self, grad):
        full = np.zeros(self.shape)
        np.add.at(full, self.index, grad)
        return (full,)


class _ContractAxis(Function):
    name = "contract_axis"

    def forward(self, x, matrix=None, axis=-1):
        self.matrix = matrix
        self.axis = axis
        mixed = np.tensordot(matrix, x, axes=([1], [axis]))
        return np.moveaxis(mixed, 0, axis)

    def backward(self, grad):
        mixed = np.tensordot(self.matrix.T, grad, axes=([1], [self.axis]))
        return (np.moveaxis(mixed, 0, self.axis),)


# ============================================================================
# PUBLIC KERNELS
# ============================================================================


def add(a: Any, b: Any) -> Tensor:
    return _Add.apply(as_tensor(a), as_tensor(b))


def sub(a: Any, b: Any) -> Tensor:
    return _Sub.apply(as_tensor(a), as_tensor(b))


def mul(a: Any, b: Any) -> Tensor:
    return _Mul.apply(as_tensor(a), as_tensor(b))


def matmul(a: Any, b: Any) -> Tensor:
    return _Matmul.apply(as_tensor(a), as_tensor(b))


def sum_axis(x: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:
    return _Sum.apply(as_tensor(x), axis=axis, keepdims=keepdims)


def mean_axis(x: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    count = 1
    for ax in _normalize_axes(axis, x.ndim):
        count *= x.shape[ax]
    return mul(sum_axis(x, axis, keepdims=keepdims), 1.0 / max(count, 1))


def concat(tensors: Sequence[Any], axis: int = -1) -> Tensor:
    items = [as_tensor(t) for t in tensors]
    if not items:
        raise ContractViolationError("concat needs at least one tensor")
    if len(items) == 1:
        return items[0]
    return _Concat.apply(*items, axis=axis)


def relu(x: Any) -> Tensor:
    return _Relu.apply(as_tensor(x))


def exp(x: Any) -> Tensor:
    return _Exp.apply(as_tensor(x))


def log(x: Any) -> Tensor:
    return _Log.apply(as_tensor(x))


def reciprocal(x: Any) -> Tensor:
    return _Reciprocal.apply(as_tensor(x))


def clip(x: Any, low: Optional[float] = None, high: Optional[float] = None) -> Tensor:
    return _Clip.apply(as_tensor(x), low=low, high=high)


def softmax(x: Any, axis: int = -1) -> Tensor:
    return _Softmax.apply(as_tensor(x), axis=axis)


def norm(x: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:
    return _Norm.apply(as_tensor(x), axis=axis, keepdims=keepdims)


def square(x: Any) -> Tensor:
    x = as_tensor(x)
    return mul(x, x)


def reshape(x: Any, shape: Sequence[int]) -> Tensor:
    return _Reshape.apply(as_tensor(x), shape=tuple(shape))


def moveaxis(x: Any, source: int, destination: int) -> Tensor:
    return _Moveaxis.apply(as_tensor(x), source=source, destination=destination)


def expand_dims(x: Any, axis: int) -> Tensor:
    x = as_tensor(x)
    shape = list(x.shape)
    position = axis if axis >= 0 else x.ndim + 1 + axis
    shape.insert(position, 1)
    return reshape(x, shape)


def broadcast_to(x: Any, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    if tuple(shape) == x.shape:
        return x
    return _BroadcastTo.apply(x, shape=tuple(shape))


def getitem(x: Any, index: Any) -> Tensor:
    return _GetItem.apply(as_tensor(x), index=index)


def contract_axis(x: Any, matrix: np.ndarray, axis: int) -> Tensor:
    """
    Mix ``x`` along ``axis`` with a constant matrix: ``y[i] = Σ_j A[i, j] x[j]``.

    The axis keeps its position; its length becomes ``matrix.shape[0]``.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    x = as_tensor(x)
    if matrix.ndim != 2 or matrix.shape[1] != x.shape[axis]:
        raise ContractViolationError(
            f"contract_axis: matrix {matrix.shape} does not match axis "
            f"{axis} of {x.shape}"
        )
    return _ContractAxis.apply(x, matrix=matrix, axis=axis)


_BINARY_KINDS: Dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "matmul": matmul,
}
_UNARY_KINDS: Dict[str, Callable[..., Tensor]] = {
    "sum_axis": sum_axis,
    "relu": relu,
    "exp": exp,
    "log": log,
    "reciprocal": reciprocal,
    "clip": clip,
    "softmax_axis": softmax,
    "norm": norm,
}


def kernel_set(a: Any, b: Any = None, kind: str = "add", **kwargs: Any) -> Tensor:
    """
    Dispatch one primitive by name.

    ``concat_axis`` takes ``a`` as a sequence of tensors; unary kinds ignore
    ``b``; keyword arguments (``axis``, ``keepdims``, ``low``, ``high``) are
    forwarded.

    Raises:
        ContractViolationError: Unknown kind or non-conforming shapes.
        DomainError: Log of non-positive or reciprocal of zero.
    """
    if kind in _BINARY_KINDS:
        return _BINARY_KINDS[kind](a, b)
    if kind in _UNARY_KINDS:
        return _UNARY_KINDS[kind](a, **kwargs)
    if kind == "concat_axis":
        items = list(a) if b is None else [a, b]
        return concat(items, **kwargs)
    raise ContractViolationError(f"Unknown kernel kind: {kind!r}")


# ============================================================================
# GRADIENT TAPE
# ============================================================================


@dataclass
class _Node:
    func: Function
    inputs: Tuple[Tensor, ...]
    output: Tensor


class GradientTape:
    """
    Append-only record of primitives applied while the tape is active.

    Nodes are appended in execution order, so every node's parents precede
    it. ``backward`` may be called once per recording.
    """

    def __init__(self) -> None:
        self.nodes: List[_Node] = []
        self._consumed = False

    def __enter__(self) -> "GradientTape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    def _record(self, func: Function, inputs: Tuple[Tensor, ...], output: Tensor) -> None:
        self.nodes.append(_Node(func, inputs, output))

    def backward(
        self,
        loss: Tensor,
        params: Optional[Sequence[Tensor]] = None,
    ) -> Dict[Tensor, Tensor]:
        """
        Propagate d(loss)/d(·) through the recorded primitives.

        Args:
            loss: Scalar tensor recorded on this tape.
            params: Optional leaves that must all receive a gradient; leaves
                that did not influence the loss get zeros.

        Returns:
            Mapping from each gradient-requiring leaf to its gradient.

        Raises:
            GradientTapeError: Non-scalar loss, loss not on this tape, or a
                second backward call on the same recording.
        """
        if self._consumed:
            raise GradientTapeError("backward() already ran on this tape; re-record")
        if loss.size != 1:
            raise GradientTapeError(f"loss must be scalar, got shape {loss.shape}")

        produced = {id(node.output) for node in self.nodes}
        if id(loss) not in produced:
            raise GradientTapeError("loss was not recorded on this tape")
        self._consumed = True

        grads: Dict[int, np.ndarray] = {id(loss): np.ones(loss.shape)}
        leaves: Dict[int, Tensor] = {}

        for node in reversed(self.nodes):
            grad_out = grads.pop(id(node.output), None)
            if grad_out is None:
                continue
            input_grads = node.func.backward(grad_out)
            for tensor, grad_in in zip(node.inputs, input_grads):
                if grad_in is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + grad_in
                else:
                    grads[key] = np.asarray(grad_in, dtype=np.float64)
                if key not in produced:
                    leaves[key] = tensor

        result: Dict[Tensor, Tensor] = {}
        for key, tensor in leaves.items():
            result[tensor] = Tensor._wrap(
                np.array(grads.get(key, np.zeros(tensor.shape))).reshape(tensor.shape),
                requires_grad=False,
            )
        for param in params or ():
            if param not in result:
                result[param] = Tensor._wrap(np.zeros(param.shape), requires_grad=False)
        logger.debug("backward over %d nodes, %d leaves", len(self.nodes), len(result))
        return result


def backward(
    loss: Tensor,
    tape: GradientTape,
    params: Optional[Sequence[Tensor]] = None,
) -> Dict[Tensor, Tensor]:
    """Functional alias of ``GradientTape.backward``."""
    return tape.backward(loss, params=params)


# ============================================================================
# GRADIENT CHECK
# ============================================================================


@dataclass
class GradCheckReport:
    passed: bool
    max_rel_error: float
    checked: int
    worst: Optional[Tuple[int, Tuple[int, ...]]] = None
    failures: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "max_rel_error": self.max_rel_error,
            "checked": self.checked,
            "worst": self.worst,
            "failures": list(self.failures),
        }


def grad_check(
    f: Callable[[List[Tensor]], Tensor],
    params: Sequence[Tensor],
    step: float = config.GRAD_CHECK_STEP,
    tol: float = config.GRAD_CHECK_TOL,
    max_components: Optional[int] = None,
    seed: int = 0,
) -> GradCheckReport:
    """
    Compare tape gradients against central finite differences.

    Args:
        f: Scalar function of the parameter list.
        params: Parameter values at which to check.
        step: Finite-difference step.
        tol: Maximum accepted relative error.
        max_components: If set, check a random subset of this many components
            per parameter.
        seed: Seed of the component subset.

    Returns:
        Report with the worst relative error; failures are listed, not raised.
    """
    if step <= 0:
        raise ContractViolationError(f"step must be positive, got {step}")
    base = [Tensor(p.data, requires_grad=True, name=p.name) for p in params]

    with GradientTape() as tape:
        loss = f(base)
    grads = tape.backward(loss, params=base)

    rng = np.random.default_rng(seed)
    report = GradCheckReport(passed=True, max_rel_error=0.0, checked=0)
    for index, param in enumerate(base):
        flat_count = param.size
        positions = np.arange(flat_count)
        if max_components is not None and flat_count > max_components:
            positions = np.sort(rng.choice(flat_count, size=max_components, replace=False))
        analytic = grads[param].data.reshape(-1)
        for position in positions:
            multi = np.unravel_index(int(position), param.shape) if param.shape else ()
            plus = param.numpy()
            minus = param.numpy()
            plus[multi] += step
            minus[multi] -= step
            args_plus = list(base)
            args_minus = list(base)
            args_plus[index] = Tensor(plus)
            args_minus[index] = Tensor(minus)
            numeric = (f(args_plus).item() - f(args_minus).item()) / (2.0 * step)
            exact = float(analytic[position])
            denom = max(abs(exact), abs(numeric), config.GRAD_CHECK_FLOOR)
            rel = abs(exact - numeric) / denom
            report.checked += 1
            if rel > report.max_rel_error:
                report.max_rel_error = rel
                report.worst = (index, tuple(int(i) for i in multi))
            if rel > tol:
                report.passed = False
                report.failures.append(
                    f"param {index} {tuple(int(i) for i in multi)}: "
                    f"analytic={exact:.6e} numeric={numeric:.6e} rel={rel:.2e}"
                )
    logger.debug(
        "grad_check: %d components, max rel error %.3e", report.checked, report.max_rel_error
    )
    return report
