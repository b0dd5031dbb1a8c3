"""
Descriptor-built GNNs.

Each layer is one recursion stack planned by ``plan_structure``. Every
recursion is a graph-convolution template ``act(V(d_k) + U(pooled))``
along its set's axis: ``V`` and the processor(s) are the one-set templates
of recursion ``s + 1`` (behind a pointwise projection where the input is
wider than the representation), the last recursion uses feed-forward
networks, and ``U`` is a linear map of the pooled term. Attention
processors compute their weights from pointwise query/key maps and feed
the pair ``[d_k, d_j]`` to the next recursion as the value.

Model arms for the attention-placement experiment:
    ``ue_attention``  attention where the planner puts it (interference set)
    ``no_attention``  ordinary processors everywhere
    ``an_attention``  attention on the antenna recursion only
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core import config
from ..core.exceptions import ContractViolationError
from ..core.pe_functions import OneSetTemplate, RecursionStack, StackDescription
from ..core.permutation import PermutationScheme
from ..core.tensor import Tensor, as_tensor
from .descriptors import PlannedLevel, SetDescriptor, StructurePlan, plan_structure
from .layers import Dense, ParameterStore, Sequential, attention_processor, feed_forward, gcn_template

logger = logging.getLogger(__name__)

MODEL_ARMS: Dict[str, str] = {
    "ue_attention": "interference",
    "no_attention": "none",
    "an_attention": "AN",
}


def resolve_arm(arm: str) -> str:
    """
    Attention placement of a model arm.

    Raises:
        ValueError: On an unknown arm.
    """
    key = arm.strip().lower()
    if key not in MODEL_ARMS:
        raise ValueError(f"Invalid model arm: {arm!r}. Valid options: {', '.join(MODEL_ARMS)}")
    return MODEL_ARMS[key]


@dataclass(frozen=True)
class ModelSpec:
    """Everything needed to rebuild a model's structure."""

    descriptors: Tuple[SetDescriptor, ...]
    in_features: int
    out_features: int
    hidden_width: int = config.HIDDEN_WIDTH
    layer_count: int = config.LAYER_COUNT
    attention: str = "interference"
    pooling: str = "sum"

    def to_manifest(self) -> Dict[str, Any]:
        return {
            "descriptors": [d.to_dict() for d in self.descriptors],
            "in_features": self.in_features,
            "output_dim": self.out_features,
            "hidden_width": self.hidden_width,
            "layer_count": self.layer_count,
            "attention": self.attention,
            "pooling": self.pooling,
        }

    @classmethod
    def from_manifest(cls, manifest: Dict[str, Any]) -> "ModelSpec":
        return cls(
            descriptors=tuple(SetDescriptor.from_dict(d) for d in manifest["descriptors"]),
            in_features=int(manifest["in_features"]),
            out_features=int(manifest["output_dim"]),
            hidden_width=int(manifest["hidden_width"]),
            layer_count=int(manifest["layer_count"]),
            attention=str(manifest.get("attention", "interference")),
            pooling=str(manifest.get("pooling", "sum")),
        )


class _TemplateBuilder:
    def __init__(self, plan: StructurePlan, store: ParameterStore, width: int, pooling: str):
        self.plan = plan
        self.store = store
        self.width = width
        self.pooling = pooling

    def _inner(self, depth: int, name: str, fan_in: int) -> Any:
        """Map of ``fan_in`` features to ``width``: next template or an FNN."""
        w = self.width
        if depth == self.plan.recursion_count:
            return feed_forward(self.store, name, [fan_in, w, w])
        child = self.build(depth + 1, name)
        if fan_in == w:
            return child
        return Sequential(Dense(self.store, f"{name}.proj", fan_in, w), child)

    def _processor(self, level: PlannedLevel, name: str) -> Any:
        w = self.width
        if not level.attention:
            return self._inner(level.depth, name, w)
        deeper = [lvl.axis for lvl in self.plan.levels if lvl.depth > level.depth]
        return attention_processor(
            query=Dense(self.store, f"{name}.query", w, w, activation="identity"),
            key=Dense(self.store, f"{name}.key", w, w, activation="identity"),
            value=self._inner(level.depth, f"{name}.value", 2 * w),
            scale=1.0 / np.sqrt(w),
            reduce_axes=deeper,
            pair_value=True,
        )

    def build(self, depth: int, prefix: str) -> OneSetTemplate:
        level = self.plan.levels[depth - 1]
        w = self.width
        nested = level.template_kind.startswith("NPE")
        name = f"{prefix}.r{depth}"
        pooled_width = 2 * w if nested else w
        kwargs: Dict[str, Any] = {}
        if nested:
            kwargs = {
                "q2": Dense(self.store, f"{name}.q2", w, w),
                "q3": self._processor(level, f"{name}.q3"),
                "subset_size": level.descriptor.flat_subset_size,
            }
        return gcn_template(
            self_map=self._inner(depth, f"{name}.self", w),
            neighbor_map=Dense(self.store, f"{name}.neighbor", pooled_width, w, activation="identity"),
            processor=self._processor(level, f"{name}.q1" if nested else f"{name}.q"),
            kind=level.template_kind,
            axis=level.axis,
            pooling=self.pooling,
            label=level.descriptor.name,
            **kwargs,
        )


class GnnModel:
    """
    Stack of descriptor-planned PE layers between a pointwise input
    embedding and a pointwise output head.

    Inputs have shape ``(..., N_1, ..., N_S, in_features)``; leading axes
    are batch axes. Outputs replace the feature axis with ``out_features``.
    """

    def __init__(self, spec: ModelSpec, seed: int = 0):
        if spec.layer_count < 1 or spec.hidden_width < 1:
            raise ContractViolationError("layer_count and hidden_width must be positive")
        self.spec = spec
        self.plan = plan_structure(spec.descriptors, spec.attention)
        self.store = ParameterStore(seed)
        w = spec.hidden_width
        self.embed = Dense(self.store, "embed", spec.in_features, w)
        builder = _TemplateBuilder(self.plan, self.store, w, spec.pooling)
        self.layers: List[OneSetTemplate] = [
            builder.build(1, f"layer{i}") for i in range(spec.layer_count)
        ]
        self.head = Dense(self.store, "head", w, spec.out_features, activation="identity")
        self._stacks: Dict[Tuple[int, ...], List[RecursionStack]] = {}
        logger.debug(
            "built GNN: %d layers x %d recursions, %d parameters",
            spec.layer_count,
            self.plan.recursion_count,
            self.store.size,
        )

    @property
    def descriptors(self) -> Tuple[SetDescriptor, ...]:
        return self.spec.descriptors

    @property
    def set_count(self) -> int:
        return len(self.spec.descriptors)

    def stacks(self, shape: Sequence[int]) -> List[RecursionStack]:
        """Recursion stacks (with the joint mask for ``shape``) of every layer."""
        key = tuple(shape[:-1]) + (self.spec.hidden_width,)
        if key not in self._stacks:
            mask = self.plan.joint_mask(key)
            self._stacks[key] = [
                RecursionStack(root, self.plan.set_axes, output_mask=mask) for root in self.layers
            ]
        return self._stacks[key]

    def describe(self) -> StackDescription:
        """Structure of one layer (every layer has the same structure)."""
        return RecursionStack(
            self.layers[0],
            self.plan.set_axes,
            output_mask=np.ones(1) if self.plan.output_function else None,
        ).describe()

    def structure_rows(self) -> List[Dict[str, Any]]:
        return self.plan.to_rows()

    def representations(self, x: Any) -> Tensor:
        x = as_tensor(x)
        if x.ndim < self.set_count + 1 or x.shape[-1] != self.spec.in_features:
            raise ContractViolationError(
                f"input of shape {x.shape} does not carry {self.set_count} set axes "
                f"and {self.spec.in_features} features"
            )
        h = self.embed(x)
        for stack in self.stacks(x.shape):
            h = stack(h)
        return h

    def __call__(self, x: Any) -> Tensor:
        return self.head(self.representations(x))

    def scheme(self, batch_axes: int = 0) -> PermutationScheme:
        return self.plan.scheme(batch_axes)

    @property
    def parameter_count(self) -> int:
        return self.store.size


def build_gnn_from_problem(
    descriptors: Sequence[SetDescriptor],
    widths: Optional[Sequence[int]] = None,
    layers: int = config.LAYER_COUNT,
    attention: str = "interference",
    in_features: int = 2,
    out_features: int = 2,
    pooling: str = "sum",
    seed: int = 0,
) -> GnnModel:
    """
    Build a GNN following the recursion plan of ``descriptors``.

    Args:
        descriptors: One descriptor per set, in tensor axis order.
        widths: Hidden widths; all layers share one width, so a single
            value (or ``None`` for the configured default) is expected.
        layers: Number of recursion stacks.
        attention: Placement passed to ``plan_structure``.
        in_features: Input features per element (2 for complex channels).
        out_features: Output features per element.
        pooling: ``sum`` or ``mean`` pooling in every template.
        seed: Parameter initialization seed.

    Raises:
        ContractViolationError: On invalid descriptors or widths.
    """
    widths = [config.HIDDEN_WIDTH] if widths is None else list(widths)
    if len(set(widths)) != 1:
        raise ContractViolationError(f"all layers share one hidden width, got {widths}")
    spec = ModelSpec(
        descriptors=tuple(descriptors),
        in_features=in_features,
        out_features=out_features,
        hidden_width=int(widths[0]),
        layer_count=int(layers),
        attention=attention,
        pooling=pooling,
    )
    model = GnnModel(spec, seed=seed)
    logger.info(
        "GNN with %d recursions per layer, attention at %s, output function %s",
        model.plan.recursion_count,
        model.plan.attention_levels() or "none",
        "yes" if model.plan.output_function else "no",
    )
    return model
