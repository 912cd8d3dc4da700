import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linflow.operators import (
    MultiIndex,
    OperatorError,
    OperatorFamily,
    TruncatedOperator,
    commutator_defect,
    family_bound,
    matrix_exponential,
    multi_index_operator,
    operator_norm,
    schatten_norm,
)


def test_operator_norm_identity():
    for n in (1, 3, 7):
        assert operator_norm(TruncatedOperator.identity(n)) == pytest.approx(1.0, rel=1e-12)


def test_operator_norm_diagonal_hand_oracle():
    # singular values of a diagonal matrix are the absolute entries
    assert operator_norm(TruncatedOperator.diagonal([3.0, -4.0])) == pytest.approx(4.0, rel=1e-12)


def test_operator_norm_rank_one_projection():
    assert operator_norm(TruncatedOperator.basis_projection(5, 2)) == pytest.approx(1.0, rel=1e-12)


def test_operator_norm_rejects_nonfinite():
    with pytest.raises(OperatorError):
        TruncatedOperator([[1.0, np.nan], [0.0, 1.0]])


def test_operator_norm_submultiplicative_1000_trials():
    rng = np.random.default_rng(1234)
    for _ in range(1000):
        a = rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4))
        lhs = operator_norm(a @ b)
        rhs = operator_norm(a) * operator_norm(b)
        assert lhs <= rhs * (1 + 1e-9)


def test_schatten_hand_oracle():
    t = TruncatedOperator.diagonal([3.0, 4.0])
    assert schatten_norm(t, 1) == pytest.approx(7.0, rel=1e-12)
    assert schatten_norm(t, 2) == pytest.approx(5.0, rel=1e-12)


def test_schatten_identity():
    for n in (2, 5):
        for p in (1.0, 2.0, 3.5):
            assert schatten_norm(TruncatedOperator.identity(n), p) == pytest.approx(
                n ** (1.0 / p), rel=1e-12)


def test_schatten_rejects_p_below_one():
    with pytest.raises(ValueError):
        schatten_norm(TruncatedOperator.identity(2), 0.5)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_schatten_frobenius_and_monotonicity(seed):
    m = np.random.default_rng(seed).standard_normal((4, 4))
    t = TruncatedOperator(m)
    frob = np.sqrt(np.sum(m**2))
    assert schatten_norm(t, 2) == pytest.approx(frob, rel=1e-10)
    assert schatten_norm(t, 4) <= schatten_norm(t, 2) * (1 + 1e-12)
    # the largest singular value is one term of every Schatten sum
    for p in (1.0, 2.0, 4.0):
        assert schatten_norm(t, p) >= operator_norm(t) * (1 - 1e-12)


def test_matrix_exponential_zero_and_diagonal():
    assert np.array_equal(matrix_exponential(TruncatedOperator.zero(3)).entries, np.eye(3))
    d = matrix_exponential(TruncatedOperator.diagonal([1.0, -2.0, 0.5]))
    assert np.allclose(d.entries, np.diag(np.exp([1.0, -2.0, 0.5])), rtol=1e-14)


def test_matrix_exponential_accuracy_at_norm_20():
    # diagonalizable oracle: exp(Q D Q^T) = Q exp(D) Q^T
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    d = np.array([20.0, -20.0, 3.0, -1.0, 0.0])
    m = q @ np.diag(d) @ q.T
    expected = q @ np.diag(np.exp(d)) @ q.T
    got = matrix_exponential(TruncatedOperator(m)).entries
    assert np.max(np.abs(got - expected)) <= 1e-12 * np.max(np.abs(expected))


def test_matrix_exponential_skew_is_orthogonal():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((4, 4))
    s = a - a.T
    q = matrix_exponential(TruncatedOperator(s)).entries
    assert operator_norm(q.T @ q - np.eye(4)) <= 1e-10


def test_matrix_exponential_overflow_names_norm():
    with pytest.raises(OverflowError, match="operator norm"):
        matrix_exponential(TruncatedOperator.diagonal([1e4]))


def test_commuting_exponential_identity():
    # exp(A+B) = exp(A) exp(B) for commuting pairs
    rng = np.random.default_rng(11)
    c = rng.standard_normal((3, 3))
    c = 0.3 * (c + c.T)
    a = TruncatedOperator(0.7 * c)
    b = TruncatedOperator(0.2 * c @ c - 0.4 * c)
    lhs = matrix_exponential(a + b).entries
    rhs = matrix_exponential(a).entries @ matrix_exponential(b).entries
    assert operator_norm(lhs - rhs) <= 1e-9 * operator_norm(lhs)
    d1 = TruncatedOperator.diagonal([0.1, -0.7, 2.0])
    d2 = TruncatedOperator.diagonal([1.3, 0.0, -0.5])
    lhs = matrix_exponential(d1 + d2).entries
    rhs = matrix_exponential(d1).entries @ matrix_exponential(d2).entries
    assert operator_norm(lhs - rhs) <= 1e-9 * operator_norm(lhs)


def _projection_family():
    return OperatorFamily(
        drift=TruncatedOperator.zero(3),
        noise=(TruncatedOperator.basis_projection(3, 1),
               TruncatedOperator.basis_projection(3, 2)),
    )


def test_family_bound_examples():
    empty = OperatorFamily(drift=TruncatedOperator.zero(2), noise=())
    assert family_bound(empty) == 0.0
    assert family_bound(_projection_family()) == pytest.approx(2.0, rel=1e-12)


def test_family_bound_matches_per_matrix_svd():
    rng = np.random.default_rng(3)
    mats = [rng.standard_normal((4, 4)) for _ in range(3)]
    fam = OperatorFamily(drift=TruncatedOperator.zero(4),
                         noise=tuple(TruncatedOperator(m) for m in mats))
    expected = sum(np.linalg.svd(m, compute_uv=False)[0] for m in mats)
    assert family_bound(fam) == pytest.approx(expected, rel=1e-12)


def test_multi_index_operator():
    fam = _projection_family()
    b1 = multi_index_operator(fam, MultiIndex((1,)))
    assert np.array_equal(b1.entries, fam.noise[0].entries)
    # orthogonal projections multiply to zero
    prod = multi_index_operator(fam, MultiIndex((1, 2)))
    assert np.all(prod.entries == 0.0)
    with pytest.raises(OperatorError):
        fam.member(3)


def test_multi_index_norm_submultiplicative():
    rng = np.random.default_rng(21)
    fam = OperatorFamily(
        drift=TruncatedOperator(rng.standard_normal((3, 3))),
        noise=tuple(TruncatedOperator(rng.standard_normal((3, 3))) for _ in range(2)),
    )
    alpha = MultiIndex((0, 2, 1, 1))
    prod_norm = operator_norm(multi_index_operator(fam, alpha))
    bound = np.prod([operator_norm(fam.member(a)) for a in alpha.entries])
    assert prod_norm <= bound * (1 + 1e-9)


def test_multi_index_validation():
    with pytest.raises(OperatorError):
        MultiIndex(())
    with pytest.raises(OperatorError):
        MultiIndex((-1,))
    assert MultiIndex((0, 1, 2)).order == 3


def test_commutator_defect_flags_pair():
    fam = OperatorFamily(
        drift=TruncatedOperator.zero(2),
        noise=(TruncatedOperator([[0.0, 1.0], [0.0, 0.0]]),
               TruncatedOperator([[0.0, 0.0], [1.0, 0.0]])),
    )
    defect, pair = commutator_defect(fam)
    assert defect > 0.5
    assert pair == (1, 2)


def test_family_dimension_checks():
    with pytest.raises(OperatorError):
        OperatorFamily(drift=TruncatedOperator.zero(2),
                       noise=(TruncatedOperator.zero(3),))
