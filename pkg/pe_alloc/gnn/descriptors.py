"""
Set descriptors and the recursion planner for descriptor-built GNNs.

A problem is described by one ``SetDescriptor`` per set, listed in tensor
axis order: descriptor ``i`` of ``S`` lives at set axis ``i - S - 1`` of a
``(..., N_1, ..., N_S, F)`` representation. ``plan_structure`` turns the list
into the recursion plan the model builder follows:

    1. one recursion per set;
    2. the set whose interference is present but not reflected in the
       parameters (at most one) is recursed on first;
    3. normal sets get APE templates, nested sets NPE templates;
    4. the first recursion carries the attention processor when (2) fired;
    5. an output function is attached iff some sets form a joint group.

Three-tier nested sets are planned as two-tier nested sets whose subsets
are the top tier, with the lower tiers flattened into one subset.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import ContractViolationError
from ..core.pe_functions import block_mask
from ..core.permutation import AxisRule, PermutationScheme

logger = logging.getLogger(__name__)

SET_KINDS: Tuple[str, ...] = ("normal", "nested", "nested3")
ATTENTION_MODES: Tuple[str, ...] = ("interference", "none", "all")


@dataclass(frozen=True)
class SetDescriptor:
    """
    One set of a wireless problem.

    Args:
        name: Set label (``"UE"``, ``"AN"``, ``"DS"``, ...).
        kind: ``normal``, ``nested`` or ``nested3``.
        subset_size: Elements per subset of a ``nested`` set. The subset
            count follows from the axis length at instantiation.
        tiers: Sizes of the lower tiers of a ``nested3`` set, outermost
            first (e.g. UEs per cell, streams per UE).
        joint_group: Sets sharing a group id are permuted jointly.
        interference_present: Elements of this set interfere with each other.
        interference_in_parameters: The interference is visible in the
            problem parameters (e.g. cross gains of a gain matrix).
    """

    name: str
    kind: str = "normal"
    subset_size: Optional[int] = None
    tiers: Tuple[int, ...] = ()
    joint_group: Optional[str] = None
    interference_present: bool = False
    interference_in_parameters: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise ContractViolationError("set descriptor needs a name")
        if self.kind not in SET_KINDS:
            raise ContractViolationError(
                f"Invalid set kind: {self.kind!r}. Valid options: {', '.join(SET_KINDS)}"
            )
        object.__setattr__(self, "tiers", tuple(int(t) for t in self.tiers))
        if self.kind == "normal" and (self.subset_size is not None or self.tiers):
            raise ContractViolationError(f"normal set {self.name} takes no subset metadata")
        if self.kind == "nested" and (self.subset_size is None or self.subset_size < 1):
            raise ContractViolationError(f"nested set {self.name} needs subset_size >= 1")
        if self.kind == "nested3" and (len(self.tiers) < 2 or min(self.tiers) < 1):
            raise ContractViolationError(
                f"three-tier set {self.name} needs two lower tier sizes >= 1"
            )

    @property
    def qualifies_for_attention(self) -> bool:
        return self.interference_present and not self.interference_in_parameters

    @property
    def family(self) -> str:
        return "APE" if self.kind == "normal" else "NPE"

    @property
    def flat_subset_size(self) -> Optional[int]:
        """Subset size of the two-tier template realizing this set."""
        if self.kind == "nested":
            return self.subset_size
        if self.kind == "nested3":
            return math.prod(self.tiers)
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "subset_size": self.subset_size,
            "tiers": list(self.tiers),
            "joint_group": self.joint_group,
            "interference_present": self.interference_present,
            "interference_in_parameters": self.interference_in_parameters,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "SetDescriptor":
        try:
            return cls(
                name=str(payload["name"]),
                kind=str(payload.get("kind", "normal")),
                subset_size=payload.get("subset_size"),
                tiers=tuple(payload.get("tiers") or ()),
                joint_group=payload.get("joint_group"),
                interference_present=bool(payload.get("interference_present", False)),
                interference_in_parameters=bool(payload.get("interference_in_parameters", False)),
            )
        except KeyError as exc:
            raise ContractViolationError(f"set descriptor missing {exc.args[0]}") from exc


# ============================================================================
# PRESETS
# ============================================================================


def _ps() -> List[SetDescriptor]:
    return [SetDescriptor("AN"), SetDescriptor("UE", interference_present=True)]


def _pc() -> List[SetDescriptor]:
    return [
        SetDescriptor(
            "RX",
            joint_group="pair",
            interference_present=True,
            interference_in_parameters=True,
        ),
        SetDescriptor("TX", joint_group="pair"),
    ]


def _pb() -> List[SetDescriptor]:
    return [SetDescriptor("UE")]


def _pm(ue_antennas: int = 2, streams: int = 2) -> List[SetDescriptor]:
    return [
        SetDescriptor("AN_BS"),
        SetDescriptor("AN_UE", "nested", subset_size=ue_antennas, joint_group="UE"),
        SetDescriptor(
            "DS", "nested", subset_size=streams, joint_group="UE", interference_present=True
        ),
    ]


def _ris_multicell_miso(ues_per_cell: int = 2, antennas_per_bs: int = 2) -> List[SetDescriptor]:
    return [
        SetDescriptor(
            "UE", "nested", subset_size=ues_per_cell, joint_group="cell", interference_present=True
        ),
        SetDescriptor("AN_BS", "nested", subset_size=antennas_per_bs, joint_group="cell"),
        SetDescriptor("RE"),
    ]


def _ris_singlecell_mimo(ue_antennas: int = 2, streams: int = 2) -> List[SetDescriptor]:
    return [
        SetDescriptor(
            "DS", "nested", subset_size=streams, joint_group="UE", interference_present=True
        ),
        SetDescriptor("AN_UE", "nested", subset_size=ue_antennas, joint_group="UE"),
        SetDescriptor("AN_BS"),
        SetDescriptor("RE"),
    ]


def _wideband_miso() -> List[SetDescriptor]:
    return [
        SetDescriptor("UE", interference_present=True),
        SetDescriptor("AN_BS"),
        SetDescriptor("RF"),
        SetDescriptor("SC"),
    ]


def _multicell_wideband_mimo(
    ues_per_cell: int = 2, streams: int = 2, ue_antennas: int = 2, rf_per_cell: int = 2,
    antennas_per_bs: int = 2,
) -> List[SetDescriptor]:
    return [
        SetDescriptor(
            "DS", "nested3", tiers=(ues_per_cell, streams), joint_group="cell",
            interference_present=True,
        ),
        SetDescriptor("AN_UE", "nested3", tiers=(ues_per_cell, ue_antennas), joint_group="cell"),
        SetDescriptor("RF", "nested", subset_size=rf_per_cell, joint_group="cell"),
        SetDescriptor("AN_BS", "nested", subset_size=antennas_per_bs, joint_group="cell"),
        SetDescriptor("SC"),
    ]


PRESETS = {
    "PB": _pb,
    "PS": _ps,
    "PM": _pm,
    "PC": _pc,
    "RIS_MULTICELL_MISO": _ris_multicell_miso,
    "RIS_SINGLECELL_MIMO": _ris_singlecell_mimo,
    "WIDEBAND_MISO": _wideband_miso,
    "MULTICELL_WIDEBAND_MIMO": _multicell_wideband_mimo,
}


def preset_descriptors(name: str, **sizes: int) -> List[SetDescriptor]:
    """
    Descriptors of a named problem.

    Raises:
        ValueError: If ``name`` is not a preset.
    """
    key = name.strip().upper().replace("-", "_")
    if key not in PRESETS:
        raise ValueError(f"Invalid preset: {name!r}. Valid options: {', '.join(PRESETS)}")
    return PRESETS[key](**sizes)


# ============================================================================
# PLANNING
# ============================================================================


@dataclass(frozen=True)
class PlannedLevel:
    depth: int
    descriptor: SetDescriptor
    axis: int
    template_kind: str
    attention: bool

    def to_row(self) -> Dict[str, Any]:
        return {
            "recursion": self.depth,
            "set": self.descriptor.name,
            "set_kind": self.descriptor.kind,
            "template": self.template_kind,
            "processor": "attention" if self.attention else "ordinary",
            "joint_group": self.descriptor.joint_group or "",
        }


@dataclass
class StructurePlan:
    descriptors: List[SetDescriptor]
    levels: List[PlannedLevel]
    joint_groups: Dict[str, List[int]] = field(default_factory=dict)
    attention_mode: str = "interference"

    @property
    def recursion_count(self) -> int:
        return len(self.levels)

    @property
    def output_function(self) -> bool:
        return bool(self.joint_groups)

    @property
    def set_axes(self) -> Tuple[int, ...]:
        return tuple(level.axis for level in self.levels)

    def attention_levels(self) -> List[int]:
        return [level.depth for level in self.levels if level.attention]

    def to_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for level in self.levels:
            row = level.to_row()
            row["output_function"] = "yes" if self.output_function else "no"
            rows.append(row)
        return rows

    def axis_of(self, name: str) -> int:
        for level in self.levels:
            if level.descriptor.name == name:
                return level.axis
        raise ContractViolationError(f"no set named {name!r}")

    def joint_mask(self, shape: Sequence[int]) -> Optional[np.ndarray]:
        """
        Output-function mask for a representation of ``shape``: 1 where all
        sets of every joint group index the same group element.

        Raises:
            ContractViolationError: If joint sets do not split into equal
                numbers of groups.
        """
        if not self.joint_groups:
            return None
        mask = np.ones([1] * len(shape))
        S = len(self.descriptors)
        for members in self.joint_groups.values():
            first = members[0]
            for other in members[1:]:
                axes = (first - S - 1, other - S - 1)
                blocks = (
                    self.descriptors[first].flat_subset_size or 1,
                    self.descriptors[other].flat_subset_size or 1,
                )
                mask = mask * block_mask(shape, axes, blocks)
        return mask

    def scheme(self, batch_axes: int = 0) -> PermutationScheme:
        """Permutation scheme a model built from this plan is equivariant to."""
        rules = [AxisRule.fixed() for _ in range(batch_axes)]
        for d in self.descriptors:
            symbol = d.joint_group or d.name
            if d.kind == "normal":
                rules.append(AxisRule.arbitrary(symbol))
            else:
                rules.append(AxisRule.nested(d.name, d.flat_subset_size, outer_symbol=symbol))
        rules.append(AxisRule.fixed())
        return PermutationScheme(rules)


def _joint_groups(descriptors: Sequence[SetDescriptor]) -> Dict[str, List[int]]:
    groups: Dict[str, List[int]] = {}
    for index, d in enumerate(descriptors):
        if d.joint_group is not None:
            groups.setdefault(d.joint_group, []).append(index)
    for group, members in groups.items():
        if len(members) < 2:
            raise ContractViolationError(f"joint group {group!r} has a single set")
        families = {descriptors[i].family for i in members}
        if len(families) > 1:
            raise ContractViolationError(
                f"joint group {group!r} mixes normal and nested sets"
            )
    return groups


def plan_structure(
    descriptors: Sequence[SetDescriptor],
    attention: str = "interference",
) -> StructurePlan:
    """
    Plan the recursions of a descriptor-built GNN.

    Args:
        descriptors: One descriptor per set, in tensor axis order.
        attention: ``interference`` places attention as described in the
            module docstring; ``none`` uses ordinary processors everywhere;
            ``all`` puts attention in every recursion; any set name puts
            attention on that set's recursion only.

    Raises:
        ContractViolationError: Empty or duplicated sets, more than one set
            qualifying for the first recursion, or malformed joint groups.
    """
    descriptors = list(descriptors)
    if not descriptors:
        raise ContractViolationError("at least one set descriptor is required")
    names = [d.name for d in descriptors]
    if len(set(names)) != len(names):
        raise ContractViolationError(f"set names must be unique, got {names}")
    qualifying = [i for i, d in enumerate(descriptors) if d.qualifies_for_attention]
    if len(qualifying) > 1:
        raise ContractViolationError(
            "more than one set has interference that is not reflected in the parameters: "
            + ", ".join(names[i] for i in qualifying)
        )
    if attention not in ATTENTION_MODES and attention not in names:
        raise ContractViolationError(
            f"Invalid attention placement: {attention!r}. "
            f"Valid options: {', '.join(ATTENTION_MODES + tuple(names))}"
        )

    order = qualifying + [i for i in range(len(descriptors)) if i not in qualifying]
    S = len(descriptors)
    levels = []
    for depth, index in enumerate(order, start=1):
        d = descriptors[index]
        if attention == "all":
            use_attention = True
        elif attention == "none":
            use_attention = False
        elif attention == "interference":
            use_attention = depth == 1 and index in qualifying
        else:
            use_attention = d.name == attention
        suffix = "_II" if use_attention else "_I"
        levels.append(PlannedLevel(depth, d, index - S - 1, d.family + suffix, use_attention))

    plan = StructurePlan(descriptors, levels, _joint_groups(descriptors), attention)
    logger.debug(
        "planned %d recursions, attention at %s, output function %s",
        plan.recursion_count,
        plan.attention_levels(),
        plan.output_function,
    )
    return plan
