"""
Parameterized building blocks: a named parameter store, dense maps, and the
two update equations every GNN layer is built from.

``gcn_update``       d'_k = σ(V d_k + Σ_{j≠k} U d_j)
``attention_update`` d'_k = FFN(d_k + Σ_j softmax_j((U_q d_k)ᵀ(U_k d_j)) U_v d_j)

``gcn_template`` and ``attention_processor`` are the general forms: the
model plugs nested templates or feed-forward networks in for ``V``, the
processor ``q`` and the value map, so they run along any set axis of a
multi-set representation.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from contextlib import contextmanager
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError, SchemaError
from ..core.pe_functions import AttentionProcessor, OneSetTemplate, identity
from ..core.serialization import ParameterEntry
from ..core.tensor import Tensor, add, as_tensor, matmul, moveaxis, relu

logger = logging.getLogger(__name__)

Activation = Callable[[Tensor], Tensor]

ACTIVATIONS: Dict[str, Activation] = {"relu": relu, "identity": identity}


class ParameterStore:
    """
    Ordered mapping of parameter names to trainable tensors.

    Tensors are immutable, so layers look their weights up by name on every
    call and optimizers install fresh tensors with ``assign``.
    """

    def __init__(self, seed: int = 0, init_scale: float = config.INIT_SCALE):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()
        self._rng = np.random.default_rng(seed)
        self.init_scale = float(init_scale)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def create(self, name: str, shape: Tuple[int, ...], fan_in: Optional[int] = None) -> Tensor:
        if name in self._params:
            raise ContractViolationError(f"parameter {name} already exists")
        if fan_in is None:
            values = np.zeros(shape)
        else:
            values = self._rng.standard_normal(shape) * self.init_scale / np.sqrt(fan_in)
        tensor = Tensor(values, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def tensors(self) -> List[Tensor]:
        return list(self._params.values())

    def assign(self, values: Dict[str, np.ndarray]) -> None:
        for name, value in values.items():
            old = self._params[name]
            if np.shape(value) != old.shape:
                raise ContractViolationError(
                    f"parameter {name}: shape {np.shape(value)} != {old.shape}"
                )
            self._params[name] = Tensor(value, requires_grad=True, name=name)

    @contextmanager
    def using(self, tensors: Sequence[Tensor]) -> Iterator["ParameterStore"]:
        """Temporarily run with ``tensors`` (in store order) as the parameters."""
        tensors = list(tensors)
        if len(tensors) != len(self._params):
            raise ContractViolationError(
                f"expected {len(self._params)} parameter tensors, got {len(tensors)}"
            )
        saved = OrderedDict(self._params)
        try:
            for name, tensor in zip(saved, tensors):
                if tensor.shape != saved[name].shape:
                    raise ContractViolationError(f"parameter {name}: shape {tensor.shape}")
                self._params[name] = tensor
            yield self
        finally:
            self._params = saved

    @property
    def size(self) -> int:
        return sum(t.size for t in self._params.values())

    def norms(self) -> Dict[str, float]:
        return {name: float(np.linalg.norm(t.data)) for name, t in self._params.items()}

    def entries(self) -> List[ParameterEntry]:
        return [ParameterEntry(name, t.numpy()) for name, t in self._params.items()]

    def load_entries(self, entries: Sequence[ParameterEntry]) -> None:
        """
        Raises:
            SchemaError: If names or shapes differ from the store's layout.
        """
        incoming = {e.name: e.values for e in entries}
        if list(incoming) != list(self._params):
            raise SchemaError("parameter names do not match the model layout")
        for name, value in incoming.items():
            if value.shape != self._params[name].shape:
                raise SchemaError(f"parameter {name} has shape {value.shape}")
        self.assign(incoming)


def transpose(w: Any) -> Tensor:
    return moveaxis(as_tensor(w), -1, -2)


class Dense:
    """Pointwise affine map on the feature axis, ``act(x W + b)``."""

    def __init__(
        self,
        store: ParameterStore,
        name: str,
        fan_in: int,
        fan_out: int,
        activation: str = "relu",
        bias: bool = True,
    ):
        if activation not in ACTIVATIONS:
            raise ContractViolationError(
                f"Invalid activation: {activation!r}. Valid options: {', '.join(ACTIVATIONS)}"
            )
        self.store = store
        self.name = name
        self.fan_in = fan_in
        self.fan_out = fan_out
        self.activation = activation
        self.weight = f"{name}.weight"
        self.bias = f"{name}.bias" if bias else None
        store.create(self.weight, (fan_in, fan_out), fan_in=fan_in)
        if self.bias:
            store.create(self.bias, (fan_out,))

    def __call__(self, x: Any) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.fan_in:
            raise ContractViolationError(
                f"{self.name}: expected {self.fan_in} features, got {x.shape[-1]}"
            )
        out = matmul(x, self.store[self.weight])
        if self.bias:
            out = add(out, self.store[self.bias])
        return ACTIVATIONS[self.activation](out)


class Sequential:
    def __init__(self, *layers: Callable[[Tensor], Tensor]):
        self.layers = list(layers)

    def parts(self) -> List[Any]:
        return list(self.layers)

    def __call__(self, x: Any) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return as_tensor(x)


def feed_forward(
    store: ParameterStore, name: str, sizes: Sequence[int], activation: str = "relu"
) -> Sequential:
    """Dense layers ``sizes[0] -> ... -> sizes[-1]``, all with ``activation``."""
    if len(sizes) < 2:
        raise ContractViolationError("feed-forward network needs at least two sizes")
    return Sequential(
        *(
            Dense(store, f"{name}.{i}", sizes[i], sizes[i + 1], activation)
            for i in range(len(sizes) - 1)
        )
    )


# ============================================================================
# REFERENCE UPDATES
# ============================================================================


class GcnCombiner:
    """
    Combiner ``act(self_map(x) + neighbor_map(s))`` of a graph-convolution
    layer, where ``s`` is the pooled neighbor term.
    """

    def __init__(
        self,
        self_map: Callable[[Tensor], Tensor],
        neighbor_map: Callable[[Tensor], Tensor],
        activation: Activation = relu,
    ):
        self.self_map = self_map
        self.neighbor_map = neighbor_map
        self.activation = activation

    def parts(self) -> List[Any]:
        return [self.self_map, self.neighbor_map]

    def __call__(self, x: Tensor, pooled: Tensor) -> Tensor:
        return self.activation(add(as_tensor(self.self_map(x)), as_tensor(self.neighbor_map(pooled))))


def gcn_template(
    self_map: Callable[[Tensor], Tensor],
    neighbor_map: Callable[[Tensor], Tensor],
    processor: Any = identity,
    activation: Activation = relu,
    kind: str = "APE_I",
    axis: int = -2,
    pooling: str = "sum",
    label: str = "gcn",
    **nested: Any,
) -> OneSetTemplate:
    """
    One-set template ``d'_k = act(V(d_k) + U(sum_{j != k} q(d_j)))``.

    ``self_map`` and ``neighbor_map`` play ``V`` and ``U``; ``processor``
    is ``q`` and must be pairwise for ``*_II`` kinds. NPE kinds take
    ``q2``, ``q3`` and ``subset_size`` through ``nested``, and their pooled
    term is the within-subset sum next to the across-subset sum.
    """
    return OneSetTemplate(
        kind,
        combiner=GcnCombiner(self_map, neighbor_map, activation),
        processor=processor,
        axis=axis,
        pooling=pooling,
        label=label,
        **nested,
    )


def attention_processor(
    query: Callable[[Tensor], Tensor],
    key: Callable[[Tensor], Tensor],
    value: Callable[[Tensor], Tensor],
    scale: float = 1.0,
    reduce_axes: Sequence[int] = (),
    pair_value: bool = False,
) -> AttentionProcessor:
    """Softmax attention over every ``j`` including ``k`` itself."""
    return AttentionProcessor(
        query=query,
        key=key,
        value=value,
        reduce_axes=reduce_axes,
        include_self=True,
        scale=scale,
        pair_value=pair_value,
    )


def gcn_update(
    D: Any,
    V: Any,
    U: Any,
    activation: Activation = relu,
    axis: int = -2,
) -> Tensor:
    """
    One graph-convolution layer along ``axis``.

    ``V`` and ``U`` are ``(out, in)`` matrices acting on column
    representations; with ``U = 0`` the update is pointwise.
    """
    V, U = as_tensor(V), as_tensor(U)
    template = gcn_template(
        lambda x: matmul(x, transpose(V)),
        lambda s: matmul(s, transpose(U)),
        activation=activation,
        axis=axis,
    )
    return template(D)


def attention_update(
    D: Any,
    U_q: Any,
    U_k: Any,
    U_v: Any,
    ffn: Callable[[Tensor], Tensor] = identity,
    axis: int = -2,
) -> Tensor:
    """
    One encoder-style attention layer along ``axis``.

    The softmax runs over every ``j`` including ``k`` itself; ``ffn`` is
    applied to ``d_k`` plus the attention output.
    """
    U_q, U_k, U_v = as_tensor(U_q), as_tensor(U_k), as_tensor(U_v)
    processor = attention_processor(
        query=lambda x: matmul(x, transpose(U_q)),
        key=lambda x: matmul(x, transpose(U_k)),
        value=lambda x: matmul(x, transpose(U_v)),
    )
    template = OneSetTemplate(
        "APE_II",
        combiner=lambda x, pooled: ffn(add(x, pooled)),
        processor=processor,
        axis=axis,
        label="attention",
    )
    return template(D)
