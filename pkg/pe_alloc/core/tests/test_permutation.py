"""
Tests for permutations, nested permutations, schemes and the equivariance
checker (including negative controls).
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pe_alloc.core import tensor as T
from pe_alloc.core.exceptions import ContractViolationError
from pe_alloc.core.pe_functions import Joined, OneSetTemplate
from pe_alloc.core.permutation import (
    AxisRule,
    NestedPermutation,
    Permutation,
    PermutationScheme,
    build_nested_permutation,
    build_permutation,
    check_equivariance,
)


def _set_scheme(*symbols: str) -> PermutationScheme:
    rules = [AxisRule.arbitrary(s) if s else AxisRule.fixed() for s in symbols]
    return PermutationScheme(rules + [AxisRule.fixed()])


def test_size_one_is_identity() -> None:
    for seed in range(5):
        assert build_permutation(1, seed).is_identity()


def test_size_two_swap_is_reachable() -> None:
    drawn = {tuple(build_permutation(2, seed).mapping.tolist()) for seed in range(32)}
    assert drawn == {(0, 1), (1, 0)}


def test_build_permutation_is_deterministic() -> None:
    assert build_permutation(7, 42) == build_permutation(7, 42)


def test_compose_with_inverse_is_identity() -> None:
    p = build_permutation(5, 3)
    assert p.compose(p.inverse()).is_identity()
    assert p.inverse().compose(p).is_identity()


def test_empty_permutation_rejected() -> None:
    with pytest.raises(ContractViolationError):
        build_permutation(0, 1)


def test_non_bijection_rejected() -> None:
    with pytest.raises(ContractViolationError, match="bijection"):
        Permutation([0, 0, 2])


def test_apply_moves_source_to_destination() -> None:
    p = Permutation([2, 0, 1])
    np.testing.assert_array_equal(p.apply(np.array([10.0, 20.0, 30.0])), [20.0, 30.0, 10.0])
    x = np.arange(3.0)
    np.testing.assert_array_equal(p.matrix() @ x, p.apply(x))


def test_apply_keeps_tensors_differentiable() -> None:
    p = Permutation([1, 2, 0])
    x = T.Tensor([1.0, 2.0, 3.0], requires_grad=True)
    with T.GradientTape() as tape:
        loss = T.sum_axis(p.apply(x) * np.array([1.0, 10.0, 100.0]))
    np.testing.assert_array_equal(tape.backward(loss)[x].data, [10.0, 100.0, 1.0])


def test_nested_single_subset_reduces_to_inner() -> None:
    nested = build_nested_permutation([4], seed=9)
    assert nested.as_permutation() == nested.inner[0]


def test_nested_outer_swap_moves_whole_subsets() -> None:
    nested = NestedPermutation(
        Permutation([1, 0]), (Permutation.identity(3), Permutation.identity(3))
    )
    x = np.array([11.0, 21.0, 31.0, 12.0, 22.0, 32.0])
    np.testing.assert_array_equal(nested.apply(x), [12.0, 22.0, 32.0, 11.0, 21.0, 31.0])


def test_nested_matches_kronecker_matrix() -> None:
    nested = build_nested_permutation([4, 4, 4], seed=17)
    x = np.random.default_rng(0).normal(size=12)
    np.testing.assert_allclose(nested.matrix() @ x, nested.apply(x), rtol=0, atol=0)


def test_nested_inverse_round_trip() -> None:
    nested = build_nested_permutation([3, 3], seed=5)
    x = np.random.default_rng(1).normal(size=6)
    np.testing.assert_array_equal(nested.inverse().apply(nested.apply(x)), x)


def test_unequal_subsets_rejected() -> None:
    with pytest.raises(ContractViolationError, match="equal sizes"):
        build_nested_permutation([2, 3], seed=0)
    with pytest.raises(ContractViolationError):
        build_nested_permutation([], seed=0)


@settings(max_examples=40, deadline=None)
@given(
    k=st.integers(min_value=1, max_value=6),
    n=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_scheme_inverse_round_trip(k: int, n: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    scheme = PermutationScheme(
        [AxisRule.arbitrary("a"), AxisRule.nested("b", n), AxisRule.fixed()]
    )
    x = rng.normal(size=(k, 2 * n, 3))
    drawn = scheme.draw(rng, x.shape)
    back = scheme.apply(scheme.apply(x, drawn), drawn, inverse=True)
    np.testing.assert_array_equal(back, x)


def test_joint_axes_share_one_permutation() -> None:
    scheme = _set_scheme("p", "p")
    drawn = scheme.draw(np.random.default_rng(4), (5, 5, 1))
    assert scheme.joint_groups == [[0, 1]]
    x = np.arange(25.0).reshape(5, 5, 1)
    perm = drawn.arbitrary["p"]
    expected = perm.apply(perm.apply(x, 0), 1)
    np.testing.assert_array_equal(scheme.apply(x, drawn), expected)


def test_joint_axes_need_equal_sizes() -> None:
    with pytest.raises(ContractViolationError):
        _set_scheme("p", "p").draw(np.random.default_rng(0), (3, 4, 1))


def test_nested_axes_share_outer_permutation() -> None:
    scheme = PermutationScheme(
        [AxisRule.nested("u", 2, outer_symbol="ue"), AxisRule.nested("d", 3, outer_symbol="ue")]
    )
    drawn = scheme.draw(np.random.default_rng(8), (6, 9))
    assert len(drawn.outer) == 1
    assert drawn.outer["ue"].size == 3


def test_nested_axis_must_divide() -> None:
    scheme = PermutationScheme([AxisRule.nested("d", 2), AxisRule.fixed()])
    with pytest.raises(ContractViolationError, match="not divisible"):
        scheme.draw(np.random.default_rng(0), (5, 1))


def test_scheme_rank_mismatch_rejected() -> None:
    with pytest.raises(ContractViolationError, match="axis rules"):
        check_equivariance(
            lambda x: x, _set_scheme("k"), _set_scheme("k"), np.ones((3, 2, 2)), trials=1
        )


def test_identity_passes_with_zero_error() -> None:
    report = check_equivariance(
        lambda x: x,
        _set_scheme("a", "b"),
        _set_scheme("a", "b"),
        lambda rng: rng.normal(size=(3, 4, 2)),
        trials=10,
    )
    assert report.passed
    assert report.max_abs_error == 0.0


def test_sort_is_a_failing_negative_control() -> None:
    report = check_equivariance(
        lambda x: np.sort(x, axis=0),
        _set_scheme("k"),
        _set_scheme("k"),
        lambda rng: rng.normal(size=(4, 1)),
        trials=50,
    )
    assert not report.passed
    assert report.failed_trials > 0


def test_two_dimensional_scheme_rejects_joint_only_function() -> None:
    # X @ X is joint-PE but not equivariant to independent row/column permutations.
    def square(x):
        return (x[..., 0] @ x[..., 0])[..., None]

    sample = lambda rng: rng.normal(size=(4, 4, 1))  # noqa: E731
    joint = check_equivariance(square, _set_scheme("p", "p"), _set_scheme("p", "p"), sample)
    independent = check_equivariance(
        square, _set_scheme("p", "q"), _set_scheme("p", "q"), sample
    )
    assert joint.passed
    assert not independent.passed


def test_ape_one_template_with_random_networks_passes() -> None:
    rng = np.random.default_rng(12)
    w_proc = T.Tensor(rng.normal(size=(3, 5)))
    w_comb = T.Tensor(rng.normal(size=(8, 2)))
    template = OneSetTemplate(
        "APE_I",
        combiner=Joined(lambda z: T.matmul(T.relu(z), w_comb)),
        processor=lambda x: T.relu(T.matmul(x, w_proc)),
        axis=-2,
    )
    report = check_equivariance(
        template,
        _set_scheme("k"),
        _set_scheme("k"),
        lambda r: r.uniform(-1.0, 1.0, size=(6, 3)),
        trials=50,
        tol=1e-9,
    )
    assert report.passed, report
