"""Cutting a structured background grid along exact curves.

Each curve is clipped to the grid box, split wherever it crosses a grid line
(or ends on another curve), and every background cell is rebuilt as the
faces of the planar graph formed by its sides and the curve pieces inside
it. Sub-elements keep the exact curve geometry on their curved edges.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import replace

import numpy as np

from .curves import TANGENT_TOL, CurveDef
from .mesh import INTERNAL, NATURAL, Edge, Mesh, MeshError


class CutError(MeshError):
    pass


def clip_to_box(curve: CurveDef, bbox, tol: float = TANGENT_TOL) -> list[tuple[float, float]]:
    """Parameter sub-intervals of ``curve`` lying inside ``bbox``."""
    xmin, xmax, ymin, ymax = bbox
    sides = [
        ((xmin, ymin), (xmax, ymin)),
        ((xmax, ymin), (xmax, ymax)),
        ((xmin, ymax), (xmax, ymax)),
        ((xmin, ymin), (xmin, ymax)),
    ]
    ts = set(curve.interval)
    for p, q in sides:
        ts.update(it.t for it in curve.intersect_segment(p, q, tol))
    ts = sorted(ts)
    keep: list[list[float]] = []
    for a, b in zip(ts[:-1], ts[1:]):
        if b - a <= 1e-14 * max(1.0, abs(a), abs(b)):
            continue
        x, y = curve.eval(0.5 * (a + b))
        if xmin - tol <= x <= xmax + tol and ymin - tol <= y <= ymax + tol:
            if keep and keep[-1][1] == a:
                keep[-1][1] = b
            else:
                keep.append([a, b])
    return [tuple(k) for k in keep]


class _Registry:
    """Vertex table that snaps points onto grid vertices and lines."""

    def __init__(self, mesh: Mesh, tol: float):
        g = mesh.grid
        self.xs, self.ys = g.xs, g.ys
        self.nx, self.ny = g.nx, g.ny
        self.points = [tuple(p) for p in mesh.vertices]
        self.tol = tol
        self.q = max(tol, 1e-12) * 10.0
        self.lookup: dict[tuple[int, int], int] = {}
        # grid edge -> extra vertex ids lying on it
        self.on_edge: dict[tuple[str, int, int], list[int]] = {}

    def grid_vertex(self, i: int, j: int) -> int:
        return j * (self.nx + 1) + i

    def _line(self, coords, v):
        i = int(np.argmin(np.abs(coords - v)))
        return i if abs(coords[i] - v) <= self.tol else None

    def add(self, p) -> int:
        x, y = float(p[0]), float(p[1])
        iv = self._line(self.xs, x)
        jh = self._line(self.ys, y)
        if iv is not None and jh is not None:
            return self.grid_vertex(iv, jh)
        if iv is not None:
            x = float(self.xs[iv])
        if jh is not None:
            y = float(self.ys[jh])
        key = (round(x / self.q), round(y / self.q))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                hit = self.lookup.get((key[0] + dx, key[1] + dy))
                if hit is not None and math.hypot(self.points[hit][0] - x, self.points[hit][1] - y) <= self.tol:
                    return hit
        vid = len(self.points)
        self.points.append((x, y))
        self.lookup[key] = vid
        if iv is not None:
            j = min(max(int(np.searchsorted(self.ys, y)) - 1, 0), self.ny - 1)
            self.on_edge.setdefault(("v", iv, j), []).append(vid)
        if jh is not None:
            i = min(max(int(np.searchsorted(self.xs, x)) - 1, 0), self.nx - 1)
            self.on_edge.setdefault(("h", i, jh), []).append(vid)
        return vid


def cut_by_curves(mesh: Mesh, curves, region_rule=None, tol: float = TANGENT_TOL) -> Mesh:
    """Split the cells of a structured grid along ``curves``.

    Parameters
    ----------
    mesh : Mesh
        Output of :func:`~curvedvem.mesh.build_quad_grid` (straight edges).
    curves : sequence of CurveDef
        Curves used over their full parameter interval, clipped to the grid
        box. Curves may end on another curve (T-junctions) but must not
        cross each other.
    region_rule : callable, optional
        ``region_rule(point) -> int`` evaluated at an interior point of every
        element. Defaults to keeping region 0.
    tol : float
        Tangency / snapping tolerance in domain units.

    Returns
    -------
    Mesh
        New mesh whose elements never straddle a curve. Badly shaped
        sub-elements are kept as they are.
    """
    if mesh.grid is None:
        raise CutError("cut_by_curves needs a structured background grid")
    if any(ed.curved for ed in mesh.edges):
        raise CutError("background mesh must have straight edges only")
    curves = list(curves)
    grid = mesh.grid
    xs, ys = grid.xs, grid.ys
    bbox = grid.bbox
    reg = _Registry(mesh, tol)

    pieces = [(ci, a, b) for ci, c in enumerate(curves) for a, b in clip_to_box(c, bbox, tol)]

    # curve endpoints that land on another piece become split points there
    extra: dict[int, list[float]] = {n: [] for n in range(len(pieces))}
    for n, (ci, a, b) in enumerate(pieces):
        for t_end in (a, b):
            p = curves[ci].eval(t_end)
            for m, (cj, a2, b2) in enumerate(pieces):
                if m == n:
                    continue
                t = curves[cj].restrict(a2, b2).locate(p, tol=1e3 * tol)
                if t is not None and a2 < t < b2:
                    extra[m].append(t)

    cell_arcs: dict[tuple[int, int], list[tuple[int, float, float, int, int]]] = {}
    for n, (ci, a, b) in enumerate(pieces):
        c = curves[ci].restrict(a, b)
        ts = [a, b] + extra[n]
        for x in xs:
            ts += [it.t for it in c.intersect_segment((x, ys[0]), (x, ys[-1]), tol)]
        for y in ys:
            ts += [it.t for it in c.intersect_segment((xs[0], y), (xs[-1], y), tol)]
        ts = sorted(ts)
        pts = c.eval(np.array(ts))
        keep_t, keep_id = [], []
        for t, p in zip(ts, pts):
            vid = reg.add(p)
            if keep_id and keep_id[-1] == vid:
                continue
            keep_t.append(t)
            keep_id.append(vid)
        for (t0, v0), (t1, v1) in zip(zip(keep_t, keep_id), zip(keep_t[1:], keep_id[1:])):
            mid = c.eval(0.5 * (t0 + t1))
            i = min(max(int(np.searchsorted(xs, mid[0])) - 1, 0), grid.nx - 1)
            j = min(max(int(np.searchsorted(ys, mid[1])) - 1, 0), grid.ny - 1)
            cell_arcs.setdefault((i, j), []).append((ci, t0, t1, v0, v1))

    if not cell_arcs:
        # nothing to cut: hand back the grid, relabelled if asked
        if region_rule is None:
            return mesh
        return mesh._rebuild(cells=[(el.loop, int(region_rule(np.array(el.centroid)))) for el in mesh.elements])

    points = np.array(reg.points)
    edges: list[Edge] = []
    straight_ids: dict[tuple[int, int], int] = {}

    def straight_edge(u: int, v: int, side: str | None) -> tuple[int, int]:
        key = (min(u, v), max(u, v))
        if key not in straight_ids:
            straight_ids[key] = len(edges)
            marker = NATURAL if side else INTERNAL
            edges.append(Edge(u, v, marker=marker, side=side))
        eid = straight_ids[key]
        return eid, (1 if edges[eid].v0 == u else -1)

    def side_chain(kind: str, i: int, j: int) -> list[int]:
        if kind == "h":
            a, b = reg.grid_vertex(i, j), reg.grid_vertex(i + 1, j)
            mids = sorted(reg.on_edge.get(("h", i, j), []), key=lambda v: points[v][0])
        else:
            a, b = reg.grid_vertex(i, j), reg.grid_vertex(i, j + 1)
            mids = sorted(reg.on_edge.get(("v", i, j), []), key=lambda v: points[v][1])
        return [a, *mids, b]

    def side_name(kind: str, i: int, j: int) -> str | None:
        if kind == "h":
            return "bottom" if j == 0 else "top" if j == grid.ny else None
        return "left" if i == 0 else "right" if i == grid.nx else None

    cells: list[tuple[list[tuple[int, int]], int]] = []
    for j in range(grid.ny):
        for i in range(grid.nx):
            # counterclockwise boundary of the background cell
            boundary: list[tuple[int, int]] = []
            for kind, ii, jj, rev in (("h", i, j, False), ("v", i + 1, j, False), ("h", i, j + 1, True), ("v", i, j, True)):
                chain = side_chain(kind, ii, jj)
                if rev:
                    chain = chain[::-1]
                name = side_name(kind, ii, jj)
                for u, v in zip(chain[:-1], chain[1:]):
                    boundary.append(straight_edge(u, v, name))
            arcs = cell_arcs.get((i, j), [])
            if not arcs:
                cells.append((boundary, 0))
                continue
            arc_edges = []
            for ci, t0, t1, v0, v1 in arcs:
                arc_edges.append(len(edges))
                edges.append(Edge(v0, v1, ci, (t0, t1), INTERNAL))
            for loop in _faces(points, curves, edges, [e for e, _ in boundary] + arc_edges):
                cells.append((loop, 0))

    out = Mesh(points, edges, cells, curves=curves)
    if region_rule is not None:
        # geometry is unchanged by relabelling, so patch the elements in place
        out.elements = tuple(
            replace(el, region=int(region_rule(out.interior_point(n)))) for n, el in enumerate(out.elements)
        )
        out.regions = {el.region: str(el.region) for el in out.elements}
    small = [n for n, el in enumerate(out.elements) if el.area < 1e-12 * (xs[1] - xs[0]) * (ys[1] - ys[0])]
    if small:
        warnings.warn(f"{len(small)} tiny sub-elements produced by the cut", stacklevel=2)
    return out


def _faces(points, curves, edges, edge_ids) -> list[list[tuple[int, int]]]:
    """Bounded faces (counterclockwise signed loops) of a small planar graph."""
    half = []  # (from, to, edge, sign, angle)
    for e in edge_ids:
        ed = edges[e]
        for sgn in (1, -1):
            u, v = (ed.v0, ed.v1) if sgn > 0 else (ed.v1, ed.v0)
            if ed.curved:
                t0, t1 = ed.interval
                c = curves[ed.curve]
                d = c.deriv(t0) * (t1 - t0) if sgn > 0 else -c.deriv(t1) * (t1 - t0)
            else:
                d = points[v] - points[u]
            half.append((u, v, e, sgn, math.atan2(d[1], d[0])))
    out_of: dict[int, list[int]] = {}
    for h, (u, _, _, _, ang) in enumerate(half):
        out_of.setdefault(u, []).append(h)
    for u in out_of:
        out_of[u].sort(key=lambda h: half[h][4])

    def twin(h):
        return h + 1 if h % 2 == 0 else h - 1

    def nxt(h):
        v = half[h][1]
        lst = out_of[v]
        idx = lst.index(twin(h))
        return lst[idx - 1]

    seen = [False] * len(half)
    faces = []
    for h0 in range(len(half)):
        if seen[h0]:
            continue
        loop = []
        h = h0
        while not seen[h]:
            seen[h] = True
            loop.append(h)
            h = nxt(h)
        signed = [(half[h][2], half[h][3]) for h in loop]
        if _signed_area(points, curves, edges, signed) > 0.0:
            faces.append(signed)
    return faces


def _signed_area(points, curves, edges, loop) -> float:
    pts = []
    for e, sgn in loop:
        ed = edges[e]
        if ed.curved:
            t0, t1 = ed.interval
            p = curves[ed.curve].eval(np.linspace(t0, t1, 17))
        else:
            p = points[[ed.v0, ed.v1]]
        pts.append(p[::-1][:-1] if sgn < 0 else p[:-1])
    p = np.concatenate(pts)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
