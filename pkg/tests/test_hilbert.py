import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_sgd.errors import ContractError, OperatorError
from adaptive_sgd.hilbert import (
    Covector,
    InnerProductOperator,
    Point,
    axpy,
    dual_norm_sq,
    dual_pair,
    primal_norm_sq,
    riesz_inverse,
    riesz_map,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def random_spd(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    return M @ M.T + n * np.eye(n)


@pytest.mark.parametrize(
    "H, d, expected",
    [
        (InnerProductOperator.identity(3), [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
        (InnerProductOperator.from_matrix(np.diag([2.0, 4.0])), [2.0, 4.0], [1.0, 1.0]),
        (InnerProductOperator.from_matrix([[2.0, 1.0], [1.0, 2.0]]), [3.0, 3.0], [1.0, 1.0]),
    ],
)
def test_riesz_inverse_examples(H, d, expected):
    g = riesz_inverse(H, Covector(d))
    assert isinstance(g, Point)
    np.testing.assert_allclose(g.entries, expected, rtol=1e-14)


def test_riesz_inverse_solves_system():
    M = random_spd(6, 1)
    H = InnerProductOperator.from_matrix(M)
    d = np.arange(1.0, 7.0)
    g = riesz_inverse(H, Covector(d))
    np.testing.assert_allclose(M @ g.entries, d, rtol=1e-12)


def test_dimension_mismatch_is_contract_error():
    with pytest.raises(ContractError):
        riesz_inverse(InnerProductOperator.identity(3), Covector([1.0, 2.0]))
    with pytest.raises(ContractError):
        dual_pair(Covector([1.0]), Point([1.0, 2.0]))
    with pytest.raises(ContractError):
        axpy(Point([1.0]), 1.0, Point([1.0, 2.0]))


def test_point_and_covector_do_not_mix():
    with pytest.raises(ContractError):
        riesz_inverse(InnerProductOperator.identity(2), Point([1.0, 2.0]))
    with pytest.raises(ContractError):
        Point([1.0, 2.0]) + Covector([1.0, 2.0])
    with pytest.raises(ContractError):
        dual_pair(Point([1.0]), Covector([1.0]))


def test_non_finite_entries_rejected():
    with pytest.raises(ContractError):
        Point([1.0, np.nan])
    with pytest.raises(ContractError):
        Covector([np.inf])


def test_vectors_are_immutable():
    a = np.array([1.0, 2.0])
    p = Point(a)
    a[0] = 5.0
    assert p.entries[0] == 1.0
    with pytest.raises(ValueError):
        p.entries[0] = 3.0


@pytest.mark.parametrize(
    "m",
    [
        [[1.0, 2.0], [0.0, 1.0]],  # not symmetric
        [[1.0, 0.0], [0.0, -1.0]],  # indefinite
        [[0.0, 0.0], [0.0, 0.0]],  # singular
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],  # not square
    ],
)
def test_invalid_operators(m):
    with pytest.raises(OperatorError):
        InnerProductOperator.from_matrix(m)


def test_dual_pair_examples():
    assert dual_pair(Covector([1.0, 0.0]), Point([0.0, 1.0])) == 0.0
    assert dual_pair(Covector([1.0, 2.0]), Point([3.0, 4.0])) == 11.0


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=20))
def test_dual_pair_matches_loop(pairs):
    d = [p[0] for p in pairs]
    v = [p[1] for p in pairs]
    expected = 0.0
    for a, b in zip(d, v):
        expected += a * b
    assert dual_pair(Covector(d), Point(v)) == pytest.approx(expected, rel=1e-12, abs=1e-9)


@given(st.integers(1, 8), finite, st.integers(0, 2**31))
def test_dual_pair_bilinear(n, a, seed):
    rng = np.random.default_rng(seed)
    d1, d2, v = (rng.standard_normal(n) for _ in range(3))
    lhs = dual_pair(a * Covector(d1) + Covector(d2), Point(v))
    rhs = a * dual_pair(Covector(d1), Point(v)) + dual_pair(Covector(d2), Point(v))
    scale = abs(a) * np.abs(d1) @ np.abs(v) + np.abs(d2) @ np.abs(v)
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1e-300)


def test_dual_norm_examples():
    assert dual_norm_sq(InnerProductOperator.identity(2), Covector([3.0, 4.0])) == 25.0
    assert dual_norm_sq(InnerProductOperator.from_matrix([[4.0]]), Covector([2.0])) == pytest.approx(1.0, rel=1e-15)


@settings(max_examples=50)
@given(st.integers(1, 100), st.integers(0, 2**31))
def test_dual_norm_matches_dense_solve(n, seed):
    M = random_spd(n, seed)
    d = np.random.default_rng(seed + 1).standard_normal(n)
    H = InnerProductOperator.from_matrix(M)
    expected = d @ np.linalg.solve(M, d)
    got = dual_norm_sq(H, Covector(d))
    assert got >= 0
    assert got == pytest.approx(expected, rel=1e-10)


@given(st.lists(finite, min_size=1, max_size=30))
def test_identity_dual_norm_is_euclidean(d):
    a = np.array(d)
    assert dual_norm_sq(InnerProductOperator.identity(len(d)), Covector(a)) == float(np.dot(a, a))


def test_dual_norm_zero_iff_zero():
    H = InnerProductOperator.from_matrix(random_spd(4, 3))
    assert dual_norm_sq(H, Covector(np.zeros(4))) == 0.0
    assert dual_norm_sq(H, Covector([0.0, 1e-8, 0.0, 0.0])) > 0.0


def test_riesz_map_isometry():
    # ||grad||_X^2 = ||f'||_{X*}^2 for grad = H^{-1} f'
    M = random_spd(5, 7)
    H = InnerProductOperator.from_matrix(M)
    d = Covector(np.random.default_rng(0).standard_normal(5))
    g = riesz_inverse(H, d)
    assert primal_norm_sq(H, g) == pytest.approx(dual_norm_sq(H, d), rel=1e-12)
    np.testing.assert_allclose(riesz_map(H, g).entries, d.entries, rtol=1e-10)


@pytest.mark.parametrize(
    "w, a, v, expected",
    [([1.0, 1.0], 0.0, [9.0, 9.0], [1.0, 1.0]), ([0.0, 0.0], 1.0, [2.0, 3.0], [2.0, 3.0]), ([1.0, 2.0], -2.0, [1.0, 1.0], [-1.0, 0.0])],
)
def test_axpy(w, a, v, expected):
    np.testing.assert_array_equal(axpy(Point(w), a, Point(v)).entries, expected)
