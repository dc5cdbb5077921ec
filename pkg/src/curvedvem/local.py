"""Element-level mixed VEM matrices.

Velocity dofs on an element ``E`` (``k`` is the order):

* edge moments ``(1/|e|) int_e v.n_E m~_j ds`` of the outward normal trace
  against the mapped edge monomials, ``j = 0..k``, edges in loop order;
* divergence moments ``(h/|E|) int_E div(v) m_a`` for ``m_a`` in ``M_k``
  without the constant;
* interior moments ``(1/|E|) int_E v.g_b`` against the G-oplus basis.

The pressure is a polynomial of ``M_k(E)``. Everything that touches the
virtual functions goes through these dofs and the projection onto
``[M_k(E)]^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .mesh import NATURAL, Mesh
from .poly import MonomialBasis, build_goplus, decomposition_tables, deriv_matrix, dim_poly, eval_edge, product_index
from .quadrature import (
    edge_rule,
    element_basis,
    element_rule_general,
    gram_edge,
    gram_element,
    monomial_integrals,
)

MAX_ORDER = 3


class ParameterError(ValueError):
    pass


class ElementError(RuntimeError):
    """Raised when the local matrices of one element cannot be built."""

    def __init__(self, elem: int, message: str):
        super().__init__(f"element {elem}: {message}")
        self.elem = elem


@dataclass(frozen=True)
class ElementDofLayout:
    """Local velocity and pressure dof bookkeeping of one element."""

    k: int
    n_edges: int

    @property
    def per_edge(self) -> int:
        return self.k + 1

    @property
    def n_div(self) -> int:
        return dim_poly(2, self.k) - 1

    @property
    def n_interior(self) -> int:
        return dim_poly(2, self.k - 1)

    @property
    def n_velocity(self) -> int:
        return self.n_edges * self.per_edge + self.n_div + self.n_interior

    @property
    def n_pressure(self) -> int:
        return dim_poly(2, self.k)

    def edge_block(self, local_edge: int) -> slice:
        start = local_edge * self.per_edge
        return slice(start, start + self.per_edge)

    @property
    def div_block(self) -> slice:
        start = self.n_edges * self.per_edge
        return slice(start, start + self.n_div)

    @property
    def interior_block(self) -> slice:
        start = self.n_edges * self.per_edge + self.n_div
        return slice(start, start + self.n_interior)


def _check_order(k: int) -> None:
    if not 0 <= k <= MAX_ORDER:
        raise ParameterError(f"order k must be in 0..{MAX_ORDER}, got {k}")


def dof_count(mesh: Mesh, elem: int, k: int) -> tuple[int, int]:
    """``(n_velocity, n_pressure)`` for element ``elem`` at order ``k``."""
    _check_order(k)
    lay = ElementDofLayout(k, len(mesh.elements[elem].loop))
    return lay.n_velocity, lay.n_pressure


def edge_trace_from_dofs(H_e: np.ndarray, length: float, dofs) -> np.ndarray:
    """Coefficients of ``v.n`` over the mapped edge monomials.

    Solves ``H_e c = |e| dofs`` with ``H_e`` the edge Gram matrix.
    """
    try:
        return sla.solve(H_e, length * np.asarray(dofs, dtype=float), assume_a="pos")
    except (sla.LinAlgError, ValueError) as exc:
        raise ElementError(-1, f"singular edge Gram matrix ({exc})") from exc


@dataclass
class ElementContext:
    """Geometric data of one element shared by all local operators."""

    mesh: Mesh
    elem: int
    k: int
    layout: ElementDofLayout
    basis: MonomialBasis
    area: float
    h: float
    loop: tuple[tuple[int, int], ...]
    lengths: np.ndarray
    H_E: np.ndarray
    H_e: list[np.ndarray]
    moments: np.ndarray = field(repr=False)  # div-moment map, (pi_k, N)

    @classmethod
    def build(cls, mesh: Mesh, elem: int, k: int) -> ElementContext:
        _check_order(k)
        el = mesh.elements[elem]
        lay = ElementDofLayout(k, len(el.loop))
        lengths = np.array([mesh.edge_length(e) for e, _ in el.loop])
        H_E = gram_element(mesh, elem, k)
        H_e = [gram_edge(mesh, e, k) for e, _ in el.loop]
        mom = np.zeros((lay.n_pressure, lay.n_velocity))
        for l, L in enumerate(lengths):
            mom[0, lay.edge_block(l).start] = L
        mom[1:, lay.div_block] = np.eye(lay.n_div) * el.area / el.diameter
        return cls(
            mesh, elem, k, lay, element_basis(mesh, elem, k), el.area, el.diameter,
            el.loop, lengths, H_E, H_e, mom,
        )


def divergence_from_dofs(ctx: ElementContext, dofs=None) -> np.ndarray:
    """Coefficients of ``div v`` over ``M_k(E)``.

    With ``dofs=None`` the full ``(pi_k, N)`` map is returned.
    """
    lin = sla.solve(ctx.H_E, ctx.moments, assume_a="pos")
    return lin if dofs is None else lin @ np.asarray(dofs, dtype=float)


def compute_D(ctx: ElementContext) -> np.ndarray:
    """``D[i, j] = dof_i(m_j)`` for the flat vector monomials ``m_j``."""
    k, lay, mesh = ctx.k, ctx.layout, ctx.mesh
    nk = dim_poly(2, k)
    D = np.zeros((lay.n_velocity, 2 * nk))
    for l, (e, sgn) in enumerate(ctx.loop):
        rule = edge_rule(mesh, e, 2 * k)
        vals = ctx.basis.eval(rule.points)
        tr = eval_edge(k, rule.s) * (rule.weights * sgn / ctx.lengths[l])[:, None]
        D[lay.edge_block(l), :nk] = tr.T @ (vals * rule.normals[:, [0]])
        D[lay.edge_block(l), nk:] = tr.T @ (vals * rule.normals[:, [1]])
    if lay.n_div:
        # int div(m_j) m_a = (H_E @ divcoef)[a]
        for comp in (0, 1):
            div = deriv_matrix(k, comp) / ctx.h
            D[lay.div_block, comp * nk : (comp + 1) * nk] = (ctx.h / ctx.area) * (ctx.H_E @ div)[1:]
    if lay.n_interior:
        g = build_goplus(k).coeffs
        for comp in (0, 1):
            D[lay.interior_block, comp * nk : (comp + 1) * nk] = (ctx.H_E @ g[:, comp, :].T).T / ctx.area
    return D


def compute_projection(ctx: ElementContext) -> np.ndarray:
    """Matrix mapping velocity dofs to the coefficients of the L2 projection.

    Uses ``m = grad(phi) + sum c g`` so that
    ``int v.m = int_dE (v.n) phi - int_E div(v) phi + sum c |E| dof_g``.
    """
    k, lay, mesh = ctx.k, ctx.layout, ctx.mesh
    nk = dim_poly(2, k)
    P, C = decomposition_tables(k)
    phi = ctx.h * P  # potentials in M_{k+1}(E)
    R = np.zeros((2 * nk, lay.n_velocity))
    for l, (e, _) in enumerate(ctx.loop):
        rule = edge_rule(mesh, e, 2 * k + 1)
        vals = ctx.basis.eval(rule.points, degree=k + 1)
        Phi = (phi @ vals.T) @ (eval_edge(k, rule.s) * rule.weights[:, None])
        R[:, lay.edge_block(l)] = Phi @ np.linalg.inv(ctx.H_e[l]) * ctx.lengths[l]
    ints = monomial_integrals(mesh, ctx.elem, 2 * k + 1)
    Q = phi @ ints[product_index(k + 1, k)]
    R -= Q @ divergence_from_dofs(ctx)
    if lay.n_interior:
        R[:, lay.interior_block] += C * ctx.area
    G = np.kron(np.eye(2), ctx.H_E)
    return sla.solve(G, R, assume_a="pos")


def _check_spd(K: np.ndarray) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.shape != (2, 2) or not np.allclose(K, K.T, rtol=1e-13, atol=0.0):
        raise ParameterError("K must be a symmetric 2x2 tensor")
    if np.linalg.eigvalsh(K)[0] <= 0.0:
        raise ParameterError("K must be positive definite")
    return K


def stabilization_parameter(area: float, mu: float, K) -> float:
    """``mu |E| / kbar`` with ``kbar`` the mean eigenvalue of ``K``."""
    return mu * area / (0.5 * float(np.trace(K)))


def local_a(ctx: ElementContext, Pi: np.ndarray, D: np.ndarray, mu: float, K) -> tuple[np.ndarray, np.ndarray]:
    """Consistency plus stabilization matrices; returns ``(A, S)``."""
    K = _check_spd(K)
    if not mu > 0.0:
        raise ParameterError("mu must be positive")
    M = np.kron(mu * np.linalg.inv(K), ctx.H_E)
    T = np.eye(ctx.layout.n_velocity) - D @ Pi
    S = stabilization_parameter(ctx.area, mu, K) * (T.T @ T)
    A = Pi.T @ M @ Pi + S
    return 0.5 * (A + A.T), S


def local_b(ctx: ElementContext) -> np.ndarray:
    """``B[a, i] = -int_E div(phi_i) m_a``, exact from the dofs."""
    return -ctx.moments.copy()


def local_rhs(ctx: ElementContext, f=None, pbar=None) -> tuple[np.ndarray, np.ndarray]:
    """Source moments and natural boundary load.

    Parameters
    ----------
    f : callable, optional
        ``f(points) -> values``; the source in ``div q + f = 0``.
    pbar : callable, optional
        ``pbar(points) -> values`` on boundary edges marked NATURAL.
    """
    k, lay, mesh = ctx.k, ctx.layout, ctx.mesh
    rhs_f = np.zeros(lay.n_pressure)
    if f is not None:
        rule = element_rule_general(mesh, ctx.elem, 2 * k + 2)
        vals = np.asarray(f(rule.points), dtype=float) * rule.weights
        rhs_f = ctx.basis.eval(rule.points).T @ vals
    rhs_nbc = np.zeros(lay.n_velocity)
    if pbar is not None:
        for l, (e, _) in enumerate(ctx.loop):
            if mesh.edges[e].marker != NATURAL:
                continue
            rule = edge_rule(mesh, e, 2 * k + 2)
            b = eval_edge(k, rule.s).T @ (np.asarray(pbar(rule.points), dtype=float) * rule.weights)
            rhs_nbc[lay.edge_block(l)] = -ctx.lengths[l] * np.linalg.solve(ctx.H_e[l], b)
    return rhs_f, rhs_nbc


@dataclass(frozen=True)
class LocalMatrices:
    """All local operators of one element.

    ``Pi`` maps dofs to ``[M_k(E)]^2`` coefficients (x-components first),
    ``D`` holds the dofs of the vector monomials, ``A = consistency + S``,
    ``B`` is the exact divergence pairing.
    """

    layout: ElementDofLayout
    basis: MonomialBasis
    Pi: np.ndarray
    D: np.ndarray
    A: np.ndarray
    S: np.ndarray
    B: np.ndarray
    rhs_f: np.ndarray
    rhs_nbc: np.ndarray


def local_matrices(mesh: Mesh, elem: int, k: int, mu: float, K, f=None, pbar=None, cache=None) -> LocalMatrices:
    """Build every local operator of ``elem``.

    ``cache`` (a dict) shares ``Pi, D, A, S, B`` between translated copies of
    the same straight element.
    """
    ctx = ElementContext.build(mesh, elem, k)
    key = _shape_key(mesh, elem, k, mu, K) if cache is not None else None
    try:
        if key is not None and key in cache:
            Pi, D, A, S, B = cache[key]
        else:
            D = compute_D(ctx)
            Pi = compute_projection(ctx)
            A, S = local_a(ctx, Pi, D, mu, K)
            B = local_b(ctx)
            if key is not None:
                cache[key] = (Pi, D, A, S, B)
        rhs_f, rhs_nbc = local_rhs(ctx, f, pbar)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise ElementError(elem, str(exc)) from exc
    return LocalMatrices(ctx.layout, ctx.basis, Pi, D, A, S, B, rhs_f, rhs_nbc)


def _shape_key(mesh: Mesh, elem: int, k: int, mu: float, K):
    """Translation-invariant fingerprint of a straight element, else ``None``."""
    if mesh.element_curved(elem):
        return None
    el = mesh.elements[elem]
    c = np.array(el.centroid)
    rel = []
    for e, sgn in el.loop:
        ed = mesh.edges[e]
        rel.append(mesh.vertices[ed.v0] - c)
        rel.append(mesh.vertices[ed.v1] - c)
        rel.append((sgn, sgn))
    rel = np.round(np.array(rel, dtype=float) / el.diameter, 12) + 0.0
    return (k, float(mu), tuple(np.asarray(K, dtype=float).ravel()), rel.tobytes())
