import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curvedvem.poly import (
    MonomialBasis,
    build_goplus,
    decompose_vector_poly,
    decomposition_tables,
    deriv_matrix,
    dim_poly,
    divergence,
    eval_scaled,
    exponents,
    monomial_index,
    multiply_xi,
    product_index,
)


def test_dimensions():
    assert [dim_poly(2, d) for d in range(5)] == [1, 3, 6, 10, 15]
    assert dim_poly(2, -1) == 0
    assert dim_poly(1, 3) == 4


def test_exponent_ordering():
    assert exponents(2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    for j, (a, b) in enumerate(exponents(4)):
        assert monomial_index(a, b) == j


def test_product_index():
    P = product_index(1, 2)
    e3 = exponents(3)
    for i, ei in enumerate(exponents(1)):
        for j, ej in enumerate(exponents(2)):
            assert tuple(e3[P[i, j]]) == tuple(ei + ej)


def test_basis_is_scaled():
    b = MonomialBasis((1.0, 2.0), 0.5, 2)
    vals = b.eval(np.array([1.5, 1.0]))
    xi, eta = 1.0, -2.0
    np.testing.assert_allclose(vals, [1, xi, eta, xi * xi, xi * eta, eta * eta])


def test_derivative_matrix():
    # d/dxi of xi^2 eta = 2 xi eta
    D = deriv_matrix(3, 0)
    col = D[:, monomial_index(2, 1)]
    assert col[monomial_index(1, 1)] == 2 and np.count_nonzero(col) == 1


def test_goplus_ranks():
    for k in range(0, 5):
        g = build_goplus(k)
        assert len(g) == dim_poly(2, k - 1)


def test_rotated_monomial_is_divergence_free():
    for k in range(1, 4):
        np.testing.assert_allclose(divergence(build_goplus(k).coeffs[0], 1.0), 0.0, atol=1e-14)


def test_decomposition_example():
    # (eta, 0) = grad(xi eta / 2) + (1/2) (eta, -xi)
    v = np.zeros((2, 3))
    v[0, 2] = 1.0
    p, c = decompose_vector_poly(v)
    expect = np.zeros(6)
    expect[monomial_index(1, 1)] = 0.5
    np.testing.assert_allclose(p, expect, atol=1e-15)
    np.testing.assert_allclose(c, [0.5], atol=1e-15)


def _grad(p, scale):
    d = 0
    while dim_poly(2, d) < p.size:
        d += 1
    gx = deriv_matrix(d, 0) @ p / scale
    gy = deriv_matrix(d, 1) @ p / scale
    return np.stack([gx, gy])


@given(st.integers(0, 3), st.floats(0.1, 10.0), st.data())
@settings(max_examples=80, deadline=None)
def test_decomposition_reconstructs(k, scale, data):
    n = dim_poly(2, k)
    v = data.draw(arrays(float, (2, n), elements=st.floats(-5, 5)))
    p, c = decompose_vector_poly(v, scale)
    rec = _grad(p, scale)[:, :n]
    if k >= 1:
        rec = rec + np.tensordot(c, build_goplus(k).coeffs, axes=(0, 0))
    np.testing.assert_allclose(rec, v, atol=1e-10 * (1 + np.abs(v).max()))
    assert p[0] == 0.0


def test_tables_match_decomposition():
    for k in range(4):
        P, C = decomposition_tables(k)
        n = dim_poly(2, k)
        for j in range(2 * n):
            v = np.zeros(2 * n)
            v[j] = 1.0
            p, c = decompose_vector_poly(v.reshape(2, n))
            np.testing.assert_allclose(P[j], p, atol=1e-13)
            np.testing.assert_allclose(C[j], c, atol=1e-13)


def test_multiply_xi_evaluates_consistently(rng):
    c = rng.normal(size=6)
    pts = rng.uniform(-1, 1, (5, 2))
    lhs = eval_scaled(3, pts[:, 0], pts[:, 1]) @ multiply_xi(c, 1)
    rhs = pts[:, 1] * (eval_scaled(2, pts[:, 0], pts[:, 1]) @ c)
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_bad_size_rejected():
    with pytest.raises(ValueError):
        divergence(np.zeros((2, 4)), 1.0)
