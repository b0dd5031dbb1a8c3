"""
Tests for the approximated MU-MIMO step over the order-3 block state.
"""

from dataclasses import replace

import numpy as np
import pytest

from pe_alloc.baselines.problems import ProblemInstance
from pe_alloc.baselines.wmmse_mimo import init_pm_state, wmmse_pm_step
from pe_alloc.core import feature_flags
from pe_alloc.core.exceptions import ContractViolationError
from pe_alloc.core.pe_functions import pair_tensors
from pe_alloc.core.permutation import check_equivariance
from pe_alloc.rie.pm import PMCase, build_pm_stack, pack_pm, rie_pm_step, scale_to_spectral_norm, unpack_pm
from pe_alloc.rie.state import relative_deviation


@pytest.fixture(autouse=True)
def reset_feature_flags(monkeypatch: pytest.MonkeyPatch) -> None:
    feature_flags.set_pm_channel_form(None)
    monkeypatch.delenv("PE_ALLOC_PM_CHANNEL_FORM", raising=False)
    yield
    feature_flags.set_pm_channel_form(None)


def _instance(K, N_B, N_U, M, seed=0):
    rng = np.random.default_rng(seed)
    H = (rng.standard_normal((K, N_U, N_B)) + 1j * rng.standard_normal((K, N_U, N_B))) / np.sqrt(2)
    return ProblemInstance.pm(scale_to_spectral_norm(H, 0.5), streams=M, p_max=0.04)


def _side_by_side(inst, steps, form):
    raw = init_pm_state(inst)
    state = pack_pm(inst, raw, form)
    errors = []
    for _ in range(steps):
        raw = wmmse_pm_step(inst, raw, form)
        state = rie_pm_step(state)
        errors.append(relative_deviation(pack_pm(inst, raw, form).D, state.D))
    return raw, state, errors


def test_pack_places_blocks_on_the_diagonal() -> None:
    inst = _instance(2, 3, 2, 1)
    state = pack_pm(inst, init_pm_state(inst))
    assert state.D.shape == (3, 4, 2, 9)
    assert np.all(state.D[:, 0:2, 1, :] == 0.0)
    assert np.all(state.D[:, 2:4, 0, :] == 0.0)
    assert np.all(state.slot("mask")[:, 0:2, 0] == 1.0)
    back = unpack_pm(state)
    np.testing.assert_array_equal(back.precoders, init_pm_state(inst).precoders)


def test_single_stream_single_user_matches() -> None:
    inst = _instance(1, 3, 1, 1, seed=2)
    _, _, errors = _side_by_side(inst, 5, "hk")
    assert max(errors) <= 1e-12


def test_both_stream_tiers_read_the_self_element() -> None:
    case = PMCase()
    inst = _instance(2, 3, 2, 2, seed=4)
    state = case.pack(inst, case.raw_step(inst, init_pm_state(inst)))
    root = build_pm_stack(state).root
    assert not getattr(root.q2, "pairwise", False)

    x_self, x_nbr = pair_tensors(state.D, root.axis)
    # same-UE streams (q1) and other-UE streams (q3) both change with the self element
    for slot in (root.processor, root.q3):
        assert slot.pairwise
        base = slot.fn(x_self, x_nbr).data
        rescaled = slot.fn(x_self * 2.0, x_nbr).data
        assert not np.allclose(base, rescaled)


@pytest.mark.parametrize("form", ["hk", "printed"])
def test_two_user_two_stream_trajectory_matches(form: str) -> None:
    inst = _instance(2, 4, 2, 2, seed=7)
    raw, state, errors = _side_by_side(inst, 5, form)
    assert max(errors) <= 1e-9
    back = unpack_pm(state)
    np.testing.assert_allclose(back.receivers, raw.receivers, atol=1e-9)
    np.testing.assert_allclose(back.precoders, raw.precoders, atol=1e-9)


def test_channel_forms_give_different_steps() -> None:
    inst = _instance(3, 4, 2, 2, seed=4)
    hk = rie_pm_step(pack_pm(inst, init_pm_state(inst), "hk"))
    printed = rie_pm_step(pack_pm(inst, init_pm_state(inst), "printed"))
    assert not np.allclose(hk.slot("w_re"), printed.slot("w_re"))


def test_off_diagonal_blocks_stay_zero() -> None:
    inst = _instance(3, 2, 2, 1, seed=1)
    state = rie_pm_step(pack_pm(inst, init_pm_state(inst)))
    D = state.D
    for k in range(3):
        for j in range(3):
            if j != k:
                assert np.all(D[:, 2 * k : 2 * k + 2, j, :] == 0.0)


def test_nonzero_off_diagonal_block_rejected() -> None:
    inst = _instance(2, 2, 1, 1)
    state = pack_pm(inst, init_pm_state(inst))
    D = state.D.copy()
    D[0, 0, 1, 0] = 1e-3
    with pytest.raises(ContractViolationError, match="off-diagonal"):
        rie_pm_step(replace(state, D=D))


def test_first_recursion_is_pairwise_npe_along_streams() -> None:
    case = PMCase()
    inst = _instance(2, 3, 2, 2)
    (desc,) = case.describe(case.pack(inst, init_pm_state(inst)))
    assert desc.recursion_count == 3
    assert desc.output_function
    root = desc.to_rows()[0]
    assert (root["kind"], root["label"]) == ("NPE_II", "DS")
    # q1 and q3 of the one NPE_II; no pairwise slot below it
    assert desc.pairwise_templates == 1
    assert desc.pairwise_slots == 2
    assert desc.kinds_at(2) == ["APE_I"]
    assert desc.kinds_at(3) == ["APE_I"]


@pytest.mark.parametrize("form", ["hk", "printed"])
def test_step_is_nested_joint_equivariant(form: str) -> None:
    case = PMCase(channel_form=form)
    inst = _instance(3, 3, 2, 2, seed=9)
    state = case.pack(inst, case.raw_step(inst, init_pm_state(inst)))
    report = check_equivariance(case.step_function(state), *case.schemes(state), state.D, trials=10)
    assert report.passed, report.to_dict()
