"""
Tests for set descriptors, presets and the recursion planner.
"""

import numpy as np
import pytest

from pe_alloc.core.exceptions import ContractViolationError
from pe_alloc.gnn.descriptors import SetDescriptor, plan_structure, preset_descriptors


def _rows(plan):
    return [(r["set"], r["template"], r["processor"]) for r in plan.to_rows()]


def test_ps_plan_puts_attention_on_users_first() -> None:
    plan = plan_structure(preset_descriptors("PS"))
    assert plan.recursion_count == 2
    assert _rows(plan) == [("UE", "APE_II", "attention"), ("AN", "APE_I", "ordinary")]
    assert plan.attention_levels() == [1]
    assert not plan.output_function


def test_pc_plan_has_no_attention_and_an_output_function() -> None:
    plan = plan_structure(preset_descriptors("PC"))
    assert plan.recursion_count == 2
    assert plan.attention_levels() == []
    assert plan.output_function
    assert all(r["output_function"] == "yes" for r in plan.to_rows())


def test_pb_plan_is_a_single_recursion() -> None:
    plan = plan_structure(preset_descriptors("PB"))
    assert _rows(plan) == [("UE", "APE_I", "ordinary")]


def test_ris_multicell_miso_row() -> None:
    plan = plan_structure(preset_descriptors("RIS_MULTICELL_MISO"))
    assert _rows(plan) == [
        ("UE", "NPE_II", "attention"),
        ("AN_BS", "NPE_I", "ordinary"),
        ("RE", "APE_I", "ordinary"),
    ]
    assert plan.output_function
    assert plan.joint_groups == {"cell": [0, 1]}


def test_ris_singlecell_mimo_row() -> None:
    plan = plan_structure(preset_descriptors("ris-singlecell-mimo"))
    assert _rows(plan) == [
        ("DS", "NPE_II", "attention"),
        ("AN_UE", "NPE_I", "ordinary"),
        ("AN_BS", "APE_I", "ordinary"),
        ("RE", "APE_I", "ordinary"),
    ]
    assert plan.output_function


def test_wideband_miso_row() -> None:
    plan = plan_structure(preset_descriptors("WIDEBAND_MISO"))
    assert [r["template"] for r in plan.to_rows()] == ["APE_II", "APE_I", "APE_I", "APE_I"]
    assert plan.attention_levels() == [1]
    assert not plan.output_function


def test_three_tier_sets_flatten_lower_tiers() -> None:
    plan = plan_structure(preset_descriptors("MULTICELL_WIDEBAND_MIMO", ues_per_cell=3))
    assert plan.recursion_count == 5
    first = plan.levels[0]
    assert (first.descriptor.name, first.template_kind) == ("DS", "NPE_II")
    assert first.descriptor.flat_subset_size == 3 * 2
    assert sorted(plan.joint_groups["cell"]) == [0, 1, 2, 3]


def test_two_qualifying_sets_rejected() -> None:
    descriptors = [
        SetDescriptor("UE", interference_present=True),
        SetDescriptor("SC", interference_present=True),
    ]
    with pytest.raises(ContractViolationError, match="more than one set"):
        plan_structure(descriptors)


def test_interference_in_parameters_does_not_qualify() -> None:
    descriptors = [
        SetDescriptor("AN"),
        SetDescriptor("UE", interference_present=True, interference_in_parameters=True),
    ]
    plan = plan_structure(descriptors)
    assert [lvl.descriptor.name for lvl in plan.levels] == ["AN", "UE"]
    assert plan.attention_levels() == []


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "tree"},
        {"kind": "nested"},
        {"kind": "normal", "subset_size": 2},
        {"kind": "nested3", "tiers": (2,)},
    ],
)
def test_malformed_descriptor_rejected(kwargs) -> None:
    with pytest.raises(ContractViolationError):
        SetDescriptor("X", **kwargs)


def test_malformed_joint_groups_rejected() -> None:
    with pytest.raises(ContractViolationError, match="single set"):
        plan_structure([SetDescriptor("A", joint_group="g"), SetDescriptor("B")])
    with pytest.raises(ContractViolationError, match="mixes"):
        plan_structure(
            [
                SetDescriptor("A", joint_group="g"),
                SetDescriptor("B", "nested", subset_size=2, joint_group="g"),
            ]
        )


def test_empty_and_duplicate_sets_rejected() -> None:
    with pytest.raises(ContractViolationError):
        plan_structure([])
    with pytest.raises(ContractViolationError, match="unique"):
        plan_structure([SetDescriptor("A"), SetDescriptor("A")])


def test_unknown_preset_and_placement() -> None:
    with pytest.raises(ValueError, match="Valid options"):
        preset_descriptors("P-R")
    with pytest.raises(ContractViolationError, match="Valid options"):
        plan_structure(preset_descriptors("PS"), attention="RF")


def test_named_and_all_attention_placements() -> None:
    named = plan_structure(preset_descriptors("PS"), attention="AN")
    assert named.attention_levels() == [2]
    everywhere = plan_structure(preset_descriptors("PS"), attention="all")
    assert everywhere.attention_levels() == [1, 2]


def test_joint_masks() -> None:
    pc = plan_structure(preset_descriptors("PC"))
    mask = pc.joint_mask((3, 3, 5))
    np.testing.assert_array_equal(mask[..., 0], np.eye(3))

    pm = plan_structure(preset_descriptors("PM", ue_antennas=2, streams=1))
    mask = pm.joint_mask((4, 6, 3, 8))
    assert mask.shape == (1, 6, 3, 1)
    np.testing.assert_array_equal(mask[0, :, :, 0], np.kron(np.eye(3), np.ones((2, 1))))
    with pytest.raises(ContractViolationError):
        pm.joint_mask((4, 6, 4, 8))


def test_descriptor_dict_round_trip() -> None:
    d = SetDescriptor("DS", "nested3", tiers=(2, 3), joint_group="cell", interference_present=True)
    assert SetDescriptor.from_dict(d.to_dict()) == d
