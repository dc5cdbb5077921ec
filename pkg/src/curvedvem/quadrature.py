"""Quadrature on elements with exactly curved edges.

Two independent routes are provided:

* :func:`monomial_integrals` reduces ``int_E m`` to boundary integrals with
  the divergence theorem, which is exact for polynomials on straight
  polygons and spectrally accurate on analytic arcs;
* :func:`element_rule_general` builds a fan of (possibly curved) triangles
  from the element centroid for non-polynomial integrands.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from .poly import MonomialBasis, dim_poly, eval_edge, eval_scaled, exponents, product_index

if TYPE_CHECKING:
    from .mesh import Element, Mesh

#: extra Gauss points on curved edges (their integrands are not polynomial)
CURVED_OVERSAMPLING = 3

#: curved edges turning more than this (radians) use composite Gauss pieces
MAX_PIECE_TURN = 0.25

#: Gram matrices with a larger condition number trigger a warning
GRAM_WARN_COND = 1e12
GRAM_FAIL_COND = 1e14


class QuadratureError(ValueError):
    pass


class SingularBasisError(QuadratureError):
    pass


@lru_cache(maxsize=None)
def gauss_rule(npoints: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    if not 1 <= npoints <= 64:
        raise QuadratureError("npoints must be in [1, 64]")
    x, w = np.polynomial.legendre.leggauss(npoints)
    nodes, weights = 0.5 * (x + 1.0), 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def edge_npoints(order: int, curved: bool, oversampling: int = CURVED_OVERSAMPLING) -> int:
    n = max(1, math.ceil((order + 1) / 2))
    return n + oversampling if curved else n


def edge_nodes(mesh: Mesh, edge: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference nodes/weights on ``[0, 1]`` for an edge.

    Straight edges get a plain ``n``-point Gauss rule; curved edges are
    split into pieces turning at most :data:`MAX_PIECE_TURN` radians, each
    with ``n`` points.
    """
    s, w = gauss_rule(n)
    if not mesh.edges[edge].curved:
        return s, w
    pieces = _edge_pieces(mesh, edge)
    if pieces == 1:
        return s, w
    offs = np.arange(pieces)[:, None]
    return ((offs + s[None, :]) / pieces).ravel(), np.tile(w / pieces, pieces)


def _edge_pieces(mesh: Mesh, edge: int) -> int:
    key = ("pieces", edge)
    if key not in mesh._cache:
        tan = mesh.edge_tangent(edge, np.linspace(0.0, 1.0, 33))
        ang = np.unwrap(np.arctan2(tan[:, 1], tan[:, 0]))
        turn = float(np.sum(np.abs(np.diff(ang))))
        mesh._cache[key] = max(1, math.ceil(turn / MAX_PIECE_TURN))
    return mesh._cache[key]


@dataclass(frozen=True)
class EdgeRule:
    """Quadrature on one edge in its intrinsic direction.

    ``weights`` already include the metric ``|gamma'|``; ``normals`` are the
    unit normals to the right of the intrinsic direction (outward for an
    element that traverses the edge with sign ``+1``).
    """

    edge: int
    s: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray


def edge_rule(mesh: Mesh, edge: int, order: int, oversampling: int = CURVED_OVERSAMPLING) -> EdgeRule:
    """Gauss rule on ``edge`` exact to degree ``order`` on straight edges."""
    if order < 0:
        raise QuadratureError("order must be >= 0")
    curved = mesh.edges[edge].curved
    n = edge_npoints(order, curved, oversampling)
    key = ("edge_rule", edge, n)
    cache = mesh._cache
    if key in cache:
        return cache[key]
    if mesh.edge_length(edge) < 1e-14:
        raise QuadratureError(f"degenerate edge {edge}")
    s, w = edge_nodes(mesh, edge, n)
    pts = mesh.edge_map(edge, s)
    tan = mesh.edge_tangent(edge, s)
    speed = np.hypot(tan[:, 0], tan[:, 1])
    normals = np.column_stack([tan[:, 1], -tan[:, 0]]) / speed[:, None]
    rule = EdgeRule(edge, s, pts, w * speed, normals)
    cache[key] = rule
    return rule


def monomial_integrals(
    mesh: Mesh,
    elem: int,
    max_degree: int,
    basis: MonomialBasis | None = None,
    oversampling: int = CURVED_OVERSAMPLING,
    element: Element | None = None,
) -> np.ndarray:
    """``int_E m dE`` for every scaled monomial of degree ``<= max_degree``.

    Uses ``int_E m = sum_e int_e A(m) n_x ds`` with ``A(m)`` the
    x-antiderivative of ``m``.
    """
    el = mesh.elements[elem] if element is None else element
    if basis is None:
        basis = element_basis(mesh, elem, max_degree)
    key = ("monints", elem, max_degree, basis.anchor, basis.scale, oversampling)
    if element is None and key in mesh._cache:
        return mesh._cache[key]
    h = basis.scale
    e_hi = exponents(max_degree)
    # column of xi^(a+1) eta^b in the degree max_degree+1 table
    n = e_hi[:, 0] + 1 + e_hi[:, 1]
    cols = n * (n + 1) // 2 + e_hi[:, 1]
    factor = h / (e_hi[:, 0] + 1.0)
    total = np.zeros(len(e_hi))
    for e, sgn in el.loop:
        rule = edge_rule(mesh, e, max_degree + 1, oversampling)
        vals = eval_scaled(max_degree + 1, *basis.scaled(rule.points))[:, cols]
        total += sgn * (rule.weights * rule.normals[:, 0]) @ vals
    total *= factor
    if element is None:
        mesh._cache[key] = total
    return total


def element_basis(mesh: Mesh, elem: int, degree: int) -> MonomialBasis:
    el = mesh.elements[elem]
    return MonomialBasis(el.centroid, el.diameter, degree)


@dataclass(frozen=True)
class ElementRule:
    elem: int
    points: np.ndarray
    weights: np.ndarray
    star_shaped: bool


def element_rule_general(
    mesh: Mesh, elem: int, order: int, oversampling: int = CURVED_OVERSAMPLING
) -> ElementRule:
    """Centroid-fan rule, exact to degree ``order`` on straight elements.

    Each edge spans the blended triangle ``(r, s) -> (1-r) c + r gamma(s)``
    with Jacobian ``r * cross(gamma(s) - c, gamma'(s))``, integrated with a
    tensor Gauss rule. If the element is not star-shaped with respect to its
    centroid the signed fan is still used (exact for polynomials, accurate
    for integrands smooth on the convex hull) and a warning is issued.
    """
    key = ("elem_rule", elem, order, oversampling)
    if key in mesh._cache:
        return mesh._cache[key]
    el = mesh.elements[elem]
    center = np.array(el.centroid)
    rule = _fan_rule(mesh, el, center, order, oversampling)
    if not rule[2]:
        alt = mesh.vertices[mesh.element_vertices(elem)].mean(axis=0)
        rule_alt = _fan_rule(mesh, el, alt, order, oversampling)
        if rule_alt[2]:
            rule = rule_alt
        else:
            warnings.warn(
                f"element {elem} is not star-shaped w.r.t. its fan centre; using signed fan",
                stacklevel=2,
            )
    out = ElementRule(elem, rule[0], rule[1], rule[2])
    mesh._cache[key] = out
    return out


def _fan_rule(mesh, el, center, order, oversampling):
    nr = max(1, math.ceil((order + 2) / 2))
    r, wr = gauss_rule(nr)
    pts, wts = [], []
    star = True
    for e, sgn in el.loop:
        curved = mesh.edges[e].curved
        s, ws = edge_nodes(mesh, e, edge_npoints(order + (1 if curved else 0), curved, oversampling))
        gam = mesh.edge_map(e, s)
        tan = mesh.edge_tangent(e, s)
        rel = gam - center
        cross = sgn * (rel[:, 0] * tan[:, 1] - rel[:, 1] * tan[:, 0])
        if curved:
            check = mesh.edge_map(e, np.linspace(0, 1, 9))
            ctan = mesh.edge_tangent(e, np.linspace(0, 1, 9))
            crel = check - center
            ccross = sgn * (crel[:, 0] * ctan[:, 1] - crel[:, 1] * ctan[:, 0])
            if np.any(ccross <= 0.0):
                star = False
        elif np.any(cross <= 0.0):
            star = False
        p = (1.0 - r)[:, None, None] * center + r[:, None, None] * gam[None, :, :]
        w = (wr * r)[:, None] * (ws * cross)[None, :]
        pts.append(p.reshape(-1, 2))
        wts.append(w.reshape(-1))
    return np.concatenate(pts), np.concatenate(wts), star


@dataclass(frozen=True)
class MassMatrices:
    H_E: np.ndarray
    G_E: np.ndarray
    H_e: dict[int, np.ndarray]


def gram_element(mesh: Mesh, elem: int, k: int) -> np.ndarray:
    """Scalar Gram matrix of ``M_k(E)``."""
    ints = monomial_integrals(mesh, elem, 2 * k)
    H = ints[product_index(k, k)]
    _check_gram(H, f"element {elem}")
    return H


def gram_edge(mesh: Mesh, edge: int, k: int, oversampling: int = CURVED_OVERSAMPLING) -> np.ndarray:
    """Gram matrix of the mapped edge monomials, ``int_e m_i m_j ds``."""
    key = ("gram_edge", edge, k, oversampling)
    if key in mesh._cache:
        return mesh._cache[key]
    rule = edge_rule(mesh, edge, 2 * k, oversampling)
    vals = eval_edge(k, rule.s)
    H = (vals * rule.weights[:, None]).T @ vals
    _check_gram(H, f"edge {edge}")
    mesh._cache[key] = H
    return H


def mass_matrices(mesh: Mesh, elem: int, k: int) -> MassMatrices:
    if k > 3:
        raise QuadratureError("orders above 3 are not supported")
    H = gram_element(mesh, elem, k)
    n = dim_poly(2, k)
    G = np.zeros((2 * n, 2 * n))
    G[:n, :n] = H
    G[n:, n:] = H
    He = {e: gram_edge(mesh, e, k) for e, _ in mesh.elements[elem].loop}
    return MassMatrices(H, G, He)


def _check_gram(H: np.ndarray, what: str) -> None:
    if H.shape[0] == 1:
        return
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > GRAM_FAIL_COND:
        raise SingularBasisError(f"{what}: Gram matrix condition number {cond:.3g}")
    if cond > GRAM_WARN_COND:
        warnings.warn(f"{what}: ill-conditioned Gram matrix ({cond:.3g})", stacklevel=3)


def integrate(mesh: Mesh, elem: int, func, order: int) -> float | np.ndarray:
    """``int_E func`` with the general element rule; ``func(points) -> values``."""
    rule = element_rule_general(mesh, elem, order)
    vals = np.asarray(func(rule.points))
    return np.tensordot(rule.weights, vals, axes=(0, 0))
