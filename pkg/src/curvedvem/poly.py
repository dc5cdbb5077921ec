"""Scaled monomials and vector-polynomial algebra on a single element.

Element monomials are ``xi**a * eta**b`` with ``xi = (x - x_E)/h_E`` and
``eta = (y - y_E)/h_E``, ordered graded-lexicographically::

    1, xi, eta, xi^2, xi*eta, eta^2, xi^3, ...

Vector polynomials over ``[M_d(E)]^2`` are stored as arrays of shape
``(2, dim_poly(2, d))`` (x-component coefficients, y-component
coefficients). The flat vector basis used by the local matrices lists all
``m e_x`` first, then all ``m e_y``.

Edge monomials live on the reference interval ``[0, 1]`` as ``(s - 1/2)**j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def dim_poly(n: int, d: int) -> int:
    """Dimension of polynomials of degree ``<= d`` in ``n`` variables."""
    if d < 0:
        return 0
    return math.comb(d + n, n)


@lru_cache(maxsize=None)
def exponents(d: int) -> np.ndarray:
    """Exponent pairs ``(a, b)`` of the 2D monomials up to degree ``d``."""
    out = [(n - b, b) for n in range(d + 1) for b in range(n + 1)]
    arr = np.array(out, dtype=int).reshape(-1, 2)
    arr.setflags(write=False)
    return arr


def monomial_index(a: int, b: int) -> int:
    n = a + b
    return n * (n + 1) // 2 + b


@lru_cache(maxsize=None)
def product_index(d1: int, d2: int) -> np.ndarray:
    """``P[i, j]`` = index in degree ``d1+d2`` of monomial_i * monomial_j."""
    e1, e2 = exponents(d1), exponents(d2)
    s = e1[:, None, :] + e2[None, :, :]
    n = s[..., 0] + s[..., 1]
    idx = n * (n + 1) // 2 + s[..., 1]
    idx.setflags(write=False)
    return idx


def eval_scaled(d: int, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Monomials of degree ``<= d`` at scaled coordinates; shape ``(npts, pi_d)``."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    eta = np.asarray(eta, dtype=float).reshape(-1)
    px = np.ones((xi.size, d + 1))
    py = np.ones((xi.size, d + 1))
    for j in range(1, d + 1):
        px[:, j] = px[:, j - 1] * xi
        py[:, j] = py[:, j - 1] * eta
    e = exponents(d)
    return px[:, e[:, 0]] * py[:, e[:, 1]]


def eval_edge(d: int, s: np.ndarray) -> np.ndarray:
    """Edge monomials ``(s - 1/2)**j``, ``j = 0..d``; shape ``(npts, d+1)``."""
    u = np.asarray(s, dtype=float).reshape(-1) - 0.5
    return u[:, None] ** np.arange(d + 1)[None, :]


@dataclass(frozen=True)
class MonomialBasis:
    """Scaled monomials of degree ``<= degree`` anchored at ``anchor``."""

    anchor: tuple[float, float]
    scale: float
    degree: int

    @property
    def size(self) -> int:
        return dim_poly(2, self.degree)

    def scaled(self, points) -> tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (pts[:, 0] - self.anchor[0]) / self.scale,
            (pts[:, 1] - self.anchor[1]) / self.scale,
        )

    def eval(self, points, degree: int | None = None) -> np.ndarray:
        """Values at ``points`` (shape ``(npts, size)``; 1-D for one point)."""
        d = self.degree if degree is None else degree
        single = np.ndim(points) == 1
        vals = eval_scaled(d, *self.scaled(points))
        return vals[0] if single else vals

    def with_degree(self, degree: int) -> MonomialBasis:
        return MonomialBasis(self.anchor, self.scale, degree)


@lru_cache(maxsize=None)
def deriv_matrix(d: int, axis: int) -> np.ndarray:
    """Coefficient map of ``d/dxi`` (axis 0) or ``d/deta`` (axis 1) on degree ``d``."""
    e = exponents(d)
    out = np.zeros((len(e), len(e)))
    for j, (a, b) in enumerate(e):
        if axis == 0 and a > 0:
            out[monomial_index(a - 1, b), j] = a
        elif axis == 1 and b > 0:
            out[monomial_index(a, b - 1), j] = b
    out.setflags(write=False)
    return out


def grad_monomial(basis: MonomialBasis, index: int) -> np.ndarray:
    """Physical gradient of monomial ``index``; shape ``(2, basis.size)``."""
    d = basis.degree
    return np.stack([deriv_matrix(d, 0)[:, index], deriv_matrix(d, 1)[:, index]]) / basis.scale


def div_vector_monomial(basis: MonomialBasis, component: int, index: int) -> np.ndarray:
    """Divergence of ``m_index * e_component`` as scalar coefficients."""
    return deriv_matrix(basis.degree, component)[:, index] / basis.scale


def divergence(coeffs: np.ndarray, scale: float) -> np.ndarray:
    """Divergence of a vector polynomial given by ``(2, pi_d)`` coefficients."""
    d = _degree_of(coeffs.shape[1])
    return (deriv_matrix(d, 0) @ coeffs[0] + deriv_matrix(d, 1) @ coeffs[1]) / scale


def _degree_of(size: int) -> int:
    d = 0
    while dim_poly(2, d) < size:
        d += 1
    if dim_poly(2, d) != size:
        raise ValueError(f"{size} is not a 2D polynomial space dimension")
    return d


def embed(coeffs: np.ndarray, degree: int) -> np.ndarray:
    """Zero-pad coefficients (last axis) to a higher degree."""
    n = dim_poly(2, degree)
    out = np.zeros(coeffs.shape[:-1] + (n,))
    out[..., : coeffs.shape[-1]] = coeffs
    return out


def multiply_xi(coeffs: np.ndarray, axis: int) -> np.ndarray:
    """Multiply a scalar polynomial by ``xi`` (axis 0) or ``eta`` (axis 1)."""
    d = _degree_of(coeffs.shape[-1])
    e = exponents(d)
    out = np.zeros(coeffs.shape[:-1] + (dim_poly(2, d + 1),))
    for j, (a, b) in enumerate(e):
        tgt = monomial_index(a + 1, b) if axis == 0 else monomial_index(a, b + 1)
        out[..., tgt] += coeffs[..., j]
    return out


@dataclass(frozen=True)
class GOplusBasis:
    """Rotated vector monomials ``m1_perp * m`` for ``m`` in ``M_{k-1}(E)``.

    ``coeffs`` has shape ``(dim_poly(2, k-1), 2, dim_poly(2, k))`` and is
    expressed in scaled coordinates, so it does not depend on the element.
    """

    degree: int
    coeffs: np.ndarray

    def __len__(self) -> int:
        return self.coeffs.shape[0]


def _goplus_coeffs(k: int) -> np.ndarray:
    nk = dim_poly(2, k)
    nm = dim_poly(2, k - 1)
    out = np.zeros((nm, 2, nk))
    for j in range(nm):
        unit = np.zeros(nm)
        unit[j] = 1.0
        # m1_perp = (eta, -xi)
        out[j, 0] = embed(multiply_xi(unit, 1), k)
        out[j, 1] = -embed(multiply_xi(unit, 0), k)
    return out


@lru_cache(maxsize=None)
def build_goplus(k: int) -> GOplusBasis:
    """Complement of the gradients inside ``[P_k]^2`` (empty for ``k = 0``)."""
    out = _goplus_coeffs(k)
    if np.linalg.matrix_rank(_change_of_basis(k)) != 2 * dim_poly(2, k):
        raise ArithmeticError("gradient + G-oplus family is rank deficient")
    out.setflags(write=False)
    return GOplusBasis(k, out)


@lru_cache(maxsize=None)
def _change_of_basis(k: int) -> np.ndarray:
    """Columns: scaled gradients of ``M_{k+1} minus 1``, then G-oplus, flattened."""
    nk = dim_poly(2, k)
    n1 = dim_poly(2, k + 1)
    dx, dy = deriv_matrix(k + 1, 0), deriv_matrix(k + 1, 1)
    cols = [np.concatenate([dx[:nk, j], dy[:nk, j]]) for j in range(1, n1)]
    cols.extend(g.reshape(-1) for g in _goplus_coeffs(k))
    mat = np.array(cols).T
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def _change_of_basis_inv(k: int) -> np.ndarray:
    inv = np.linalg.inv(_change_of_basis(k))
    inv.setflags(write=False)
    return inv


def decompose_vector_poly(v: np.ndarray, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Split ``v`` into ``grad(p) + sum(c_i g_i)``.

    Parameters
    ----------
    v : ndarray, shape (2, pi_k)
        Vector polynomial coefficients on scaled monomials.
    scale : float
        Element size ``h`` used by the scaled monomials.

    Returns
    -------
    p : ndarray, shape (pi_{k+1},)
        Scalar potential with zero constant term.
    c : ndarray, shape (pi_{k-1},)
        Coefficients along :func:`build_goplus` ``(k)``.
    """
    v = np.asarray(v, dtype=float)
    k = _degree_of(v.shape[1])
    sol = _change_of_basis_inv(k) @ v.reshape(-1)
    n1 = dim_poly(2, k + 1)
    p = np.zeros(n1)
    p[1:] = scale * sol[: n1 - 1]
    return p, sol[n1 - 1 :]


@lru_cache(maxsize=None)
def decomposition_tables(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Potentials and G-oplus weights of every flat vector monomial (``h = 1``).

    Returns ``P`` of shape ``(2 pi_k, pi_{k+1})`` and ``C`` of shape
    ``(2 pi_k, pi_{k-1})`` with ``m_j = grad(h P[j]) + sum_b C[j, b] g_b``.
    """
    nk = dim_poly(2, k)
    inv = _change_of_basis_inv(k)
    n1 = dim_poly(2, k + 1)
    P = np.zeros((2 * nk, n1))
    P[:, 1:] = inv[: n1 - 1].T
    C = inv[n1 - 1 :].T.copy()
    P.setflags(write=False)
    C.setflags(write=False)
    return P, C
