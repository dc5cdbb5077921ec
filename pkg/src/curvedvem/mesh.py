"""Polygonal meshes whose edges may follow exact curves."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .curves import CurveDef, CurveError

NATURAL = "NATURAL"
ESSENTIAL = "ESSENTIAL"
INTERNAL = "INTERNAL"
MARKERS = (NATURAL, ESSENTIAL, INTERNAL)

SIDES = ("bottom", "right", "top", "left")

#: samples per curved edge used for diameters and point-in-element tests
CURVE_SAMPLES = 17


class MeshError(ValueError):
    """Base class for mesh problems."""


class MeshFormatError(MeshError):
    """Malformed mesh file."""


class MeshValidationError(MeshError):
    """Mesh violates a structural invariant."""

    def __init__(self, message: str, offenders=()):
        self.offenders = list(offenders)
        if self.offenders:
            message = f"{message}: {self.offenders}"
        super().__init__(message)


@dataclass(frozen=True)
class Edge:
    """Edge from vertex ``v0`` to ``v1``.

    Curved edges reference ``curves[curve]`` restricted to ``interval``;
    ``gamma(interval[0])`` is ``v0`` and ``gamma(interval[1])`` is ``v1``,
    so the interval orientation is the edge's intrinsic direction.
    """

    v0: int
    v1: int
    curve: int | None = None
    interval: tuple[float, float] | None = None
    marker: str = INTERNAL
    side: str | None = None

    @property
    def curved(self) -> bool:
        return self.curve is not None


@dataclass(frozen=True)
class Element:
    """Counterclockwise loop of signed edges (``+1`` = traversed v0 -> v1)."""

    loop: tuple[tuple[int, int], ...]
    region: int = 0
    centroid: tuple[float, float] = (0.0, 0.0)
    diameter: float = 0.0
    area: float = 0.0


@dataclass(frozen=True)
class GridInfo:
    nx: int
    ny: int
    bbox: tuple[float, float, float, float]  # xmin, xmax, ymin, ymax

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.bbox[0], self.bbox[1], self.nx + 1)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.bbox[2], self.bbox[3], self.ny + 1)


class Mesh:
    """Immutable polygonal mesh with optionally curved edges.

    Element centroids, diameters and areas are computed on construction
    (exact divergence-theorem integrals); invariants are checked unless
    ``validate=False``.
    """

    def __init__(
        self,
        vertices,
        edges,
        cells,
        curves=(),
        regions=None,
        grid: GridInfo | None = None,
        validate: bool = True,
    ):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        self.vertices.setflags(write=False)
        self.curves: tuple[CurveDef, ...] = tuple(curves)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.regions: dict[int, str] = dict(regions or {})
        self.grid = grid
        self._cache: dict = {}
        if validate:
            self._check_edges()
        elements = []
        for loop, region in cells:
            loop = tuple((int(e), int(s)) for e, s in loop)
            elements.append(Element(loop, int(region)))
        self.elements: tuple[Element, ...] = tuple(elements)
        if validate:
            self._check_loops()
        self.elements = tuple(self._with_geometry(i) for i in range(len(self.elements)))
        for el in self.elements:
            self.regions.setdefault(el.region, str(el.region))
        if validate:
            self._check_edge_usage()

    # -- sizes -----------------------------------------------------------
    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    # -- edge geometry -----------------------------------------------------
    def edge_map(self, e: int, s):
        """Points of edge ``e`` at reference abscissae ``s`` in [0, 1]."""
        ed = self.edges[e]
        s = np.asarray(s, dtype=float)
        if ed.curved:
            t0, t1 = ed.interval
            return self.curves[ed.curve].eval(t0 + s * (t1 - t0))
        a, b = self.vertices[ed.v0], self.vertices[ed.v1]
        return a + s[..., None] * (b - a)

    def edge_tangent(self, e: int, s):
        """``d gamma / ds`` for the reference abscissa ``s``."""
        ed = self.edges[e]
        s = np.asarray(s, dtype=float)
        if ed.curved:
            t0, t1 = ed.interval
            return self.curves[ed.curve].deriv(t0 + s * (t1 - t0)) * (t1 - t0)
        a, b = self.vertices[ed.v0], self.vertices[ed.v1]
        return np.broadcast_to(b - a, s.shape + (2,)).copy()

    def edge_length(self, e: int) -> float:
        """Arc length of edge ``e`` (``|h_e|``)."""
        key = ("len", e)
        if key not in self._cache:
            ed = self.edges[e]
            if ed.curved:
                t0, t1 = sorted(ed.interval)
                length = self.curves[ed.curve].arc_length(t0, t1)
            else:
                length = float(np.linalg.norm(self.vertices[ed.v1] - self.vertices[ed.v0]))
            self._cache[key] = length
        return self._cache[key]

    def edge_samples(self, e: int, n: int = CURVE_SAMPLES) -> np.ndarray:
        if self.edges[e].curved:
            return self.edge_map(e, np.linspace(0.0, 1.0, n))
        ed = self.edges[e]
        return self.vertices[[ed.v0, ed.v1]]

    def element_vertices(self, i: int) -> list[int]:
        """Start vertex of each signed edge in the loop."""
        out = []
        for e, sgn in self.elements[i].loop:
            ed = self.edges[e]
            out.append(ed.v0 if sgn > 0 else ed.v1)
        return out

    def boundary_polyline(self, i: int, n: int = CURVE_SAMPLES) -> np.ndarray:
        """Closed-loop sample of the element boundary (curved edges sampled)."""
        pts = []
        for e, sgn in self.elements[i].loop:
            p = self.edge_samples(e, n)
            if sgn < 0:
                p = p[::-1]
            pts.append(p[:-1])
        return np.concatenate(pts)

    def element_curved(self, i: int) -> bool:
        return any(self.edges[e].curved for e, _ in self.elements[i].loop)

    @cached_property
    def edge_elements(self) -> list[list[tuple[int, int]]]:
        """For each edge, the ``(element, sign)`` pairs that use it."""
        out: list[list[tuple[int, int]]] = [[] for _ in self.edges]
        for i, el in enumerate(self.elements):
            for e, sgn in el.loop:
                out[e].append((i, sgn))
        return out

    # -- geometry ----------------------------------------------------------
    def _with_geometry(self, i: int) -> Element:
        from .quadrature import monomial_integrals
        from .poly import MonomialBasis

        el = self.elements[i]
        verts = self.vertices[self.element_vertices(i)]
        samples = [verts]
        for e, _ in el.loop:
            if self.edges[e].curved:
                samples.append(self.edge_samples(e))
        pts = np.concatenate(samples)
        diameter = float(pdist(pts).max()) if len(pts) > 1 else 0.0
        if diameter <= 0.0:
            raise MeshValidationError("degenerate element", [i])
        anchor = verts.mean(axis=0)
        basis = MonomialBasis((float(anchor[0]), float(anchor[1])), diameter, 1)
        ints = monomial_integrals(self, i, 1, basis=basis, element=el)
        area = float(ints[0])
        if not area > 0.0:
            raise MeshValidationError("element with nonpositive area", [(i, area)])
        centroid = anchor + diameter * ints[1:3] / area
        return replace(el, centroid=(float(centroid[0]), float(centroid[1])), diameter=diameter, area=area)

    def element_geometry(self, i: int) -> tuple[np.ndarray, float, float]:
        """``(centroid, diameter, area)`` of element ``i``."""
        el = self.elements[i]
        return np.array(el.centroid), el.diameter, el.area

    @property
    def mesh_size(self) -> float:
        """Mean element diameter."""
        return float(np.mean([el.diameter for el in self.elements]))

    @property
    def total_area(self) -> float:
        return float(sum(el.area for el in self.elements))

    def contains(self, i: int, point) -> bool:
        """Point-in-element test against the sampled boundary."""
        return _inside(self.boundary_polyline(i, 65), point)

    def interior_point(self, i: int) -> np.ndarray:
        """A point strictly inside element ``i`` (centroid when it qualifies)."""
        poly = self.boundary_polyline(i, 65)
        c = np.array(self.elements[i].centroid)
        if _inside(poly, c) and _clearance(poly, c) > 1e-9 * self.elements[i].diameter:
            return c
        # widest chord of a horizontal scanline through the centroid height
        best, best_w = None, -1.0
        for y in c[1] + self.elements[i].diameter * np.linspace(-0.5, 0.5, 41):
            xs = _scanline(poly, y)
            for a, b in zip(xs[0::2], xs[1::2]):
                if b - a > best_w:
                    best, best_w = np.array([0.5 * (a + b), y]), b - a
        if best is None:
            raise MeshValidationError("could not find an interior point", [i])
        return best

    # -- validation ----------------------------------------------------------
    def _check_edges(self):
        bad = []
        for i, ed in enumerate(self.edges):
            if ed.marker not in MARKERS:
                bad.append((i, f"marker {ed.marker!r}"))
            if not (0 <= ed.v0 < len(self.vertices) and 0 <= ed.v1 < len(self.vertices)):
                bad.append((i, "vertex index out of range"))
                continue
            if ed.curved:
                if not 0 <= ed.curve < len(self.curves):
                    bad.append((i, f"unknown curve {ed.curve}"))
                    continue
                if ed.interval is None:
                    bad.append((i, "curved edge without interval"))
                    continue
                try:
                    ends = self.curves[ed.curve].eval(np.array(ed.interval))
                except CurveError as exc:
                    bad.append((i, str(exc)))
                    continue
                err = max(
                    np.linalg.norm(ends[0] - self.vertices[ed.v0]),
                    np.linalg.norm(ends[1] - self.vertices[ed.v1]),
                )
                if err > 1e-10:
                    bad.append((i, f"curve ends off vertices by {err:.3g}"))
        if bad:
            raise MeshValidationError("invalid edges", bad)

    def _check_loops(self):
        bad = []
        for i, el in enumerate(self.elements):
            if len(el.loop) < 2:
                bad.append(i)
                continue
            ends = []
            for e, sgn in el.loop:
                if not 0 <= e < len(self.edges) or sgn not in (1, -1):
                    bad.append(i)
                    break
                ed = self.edges[e]
                ends.append((ed.v0, ed.v1) if sgn > 0 else (ed.v1, ed.v0))
            else:
                if any(ends[j][1] != ends[(j + 1) % len(ends)][0] for j in range(len(ends))):
                    bad.append(i)
        if bad:
            raise MeshValidationError("element loops do not close", bad)

    def _check_edge_usage(self):
        bad = []
        for e, uses in enumerate(self.edge_elements):
            ed = self.edges[e]
            if len(uses) == 0 or len(uses) > 2:
                bad.append((e, f"used by {len(uses)} elements"))
            elif len(uses) == 2:
                if uses[0][1] == uses[1][1]:
                    bad.append((e, "same traversal sign in both elements"))
                if ed.marker != INTERNAL:
                    bad.append((e, "interior edge with boundary marker"))
            elif ed.marker == INTERNAL:
                bad.append((e, "boundary edge without boundary marker"))
        if bad:
            raise MeshValidationError("inconsistent edge usage", bad)

    # -- derived meshes --------------------------------------------------------
    def _rebuild(self, **kw) -> Mesh:
        args = dict(
            vertices=self.vertices,
            edges=self.edges,
            cells=[(el.loop, el.region) for el in self.elements],
            curves=self.curves,
            regions=self.regions,
            grid=self.grid,
        )
        args.update(kw)
        return Mesh(**args)

    def with_markers(self, side_markers: dict[str, str]) -> Mesh:
        """Assign NATURAL/ESSENTIAL markers to boundary edges by bbox side."""
        edges = []
        for ed in self.edges:
            if ed.side is not None and ed.side in side_markers:
                ed = replace(ed, marker=side_markers[ed.side])
            edges.append(ed)
        return self._rebuild(edges=edges)

    def straightened(self) -> Mesh:
        """Replace every curved edge by the chord between its end vertices."""
        edges = [replace(ed, curve=None, interval=None) for ed in self.edges]
        return self._rebuild(edges=edges)

    def perturbed(self, amplitude: float, rng: np.random.Generator) -> Mesh:
        """Randomly move interior vertices of a straight mesh.

        Each interior vertex moves by up to ``amplitude`` times the shortest
        incident edge in each coordinate.
        """
        if any(ed.curved for ed in self.edges):
            raise MeshError("perturbation is only defined for straight meshes")
        on_boundary = np.zeros(self.n_vertices, dtype=bool)
        shortest = np.full(self.n_vertices, np.inf)
        for e, ed in enumerate(self.edges):
            if ed.marker != INTERNAL:
                on_boundary[[ed.v0, ed.v1]] = True
            length = self.edge_length(e)
            shortest[ed.v0] = min(shortest[ed.v0], length)
            shortest[ed.v1] = min(shortest[ed.v1], length)
        shift = rng.uniform(-1.0, 1.0, size=self.vertices.shape) * amplitude * shortest[:, None]
        shift[on_boundary] = 0.0
        return self._rebuild(vertices=self.vertices + shift, grid=None)

    def renumbered(self, perm) -> Mesh:
        """Mesh with elements reordered: new element ``j`` is old ``perm[j]``."""
        cells = [(self.elements[p].loop, self.elements[p].region) for p in perm]
        return self._rebuild(cells=cells, grid=None)

    @classmethod
    def from_polygon(cls, points, marker: str = NATURAL, curves=(), curved_edges=None) -> Mesh:
        """Single-element mesh from counterclockwise polygon vertices.

        ``curved_edges`` maps a polygon edge index ``j`` (from vertex ``j`` to
        ``j+1``) to ``(curve index, (t0, t1))``.
        """
        points = np.asarray(points, dtype=float)
        n = len(points)
        curved_edges = curved_edges or {}
        edges = []
        for j in range(n):
            c = curved_edges.get(j)
            edges.append(
                Edge(j, (j + 1) % n, None if c is None else c[0], None if c is None else tuple(c[1]), marker)
            )
        return cls(points, edges, [([(j, 1) for j in range(n)], 0)], curves=curves)

    # -- equality (structural) ----------------------------------------------
    def structurally_equal(self, other: Mesh) -> bool:
        return (
            np.array_equal(self.vertices, other.vertices)
            and self.edges == other.edges
            and self.curves == other.curves
            and [(el.loop, el.region) for el in self.elements]
            == [(el.loop, el.region) for el in other.elements]
            and self.regions == other.regions
        )


def _inside(poly: np.ndarray, p) -> bool:
    x, y = p
    xs, ys = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(xs, -1), np.roll(ys, -1)
    cond = (ys > y) != (yn > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = xs + (y - ys) * (xn - xs) / (yn - ys)
    return bool(np.count_nonzero(cond & (x < xcross)) % 2)


def _clearance(poly: np.ndarray, p) -> float:
    a = poly
    b = np.roll(poly, -1, axis=0)
    d = b - a
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / np.maximum(np.einsum("ij,ij->i", d, d), 1e-300), 0, 1)
    proj = a + t[:, None] * d
    return float(np.min(np.linalg.norm(proj - p, axis=1)))


def _scanline(poly: np.ndarray, y: float) -> list[float]:
    xs, ys = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(xs, -1), np.roll(ys, -1)
    cond = (ys > y) != (yn > y)
    xc = xs[cond] + (y - ys[cond]) * (xn[cond] - xs[cond]) / (yn[cond] - ys[cond])
    return sorted(xc.tolist())


def build_quad_grid(nx: int, ny: int, bbox=(0.0, 1.0, 0.0, 1.0)) -> Mesh:
    """Structured ``nx`` by ``ny`` grid of axis-aligned quads on ``bbox``.

    ``bbox`` is ``(xmin, xmax, ymin, ymax)``. Boundary edges carry the side
    name (``bottom``, ``right``, ``top``, ``left``) and a NATURAL marker.
    """
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be >= 1")
    xmin, xmax, ymin, ymax = map(float, bbox)
    if not (xmax > xmin and ymax > ymin):
        raise MeshError(f"degenerate bounding box {bbox}")
    grid = GridInfo(nx, ny, (xmin, xmax, ymin, ymax))
    xs, ys = grid.xs, grid.ys
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    edges: list[Edge] = []
    hid = {}
    for j in range(ny + 1):
        for i in range(nx):
            side = "bottom" if j == 0 else "top" if j == ny else None
            hid[i, j] = len(edges)
            edges.append(Edge(vid(i, j), vid(i + 1, j), marker=NATURAL if side else INTERNAL, side=side))
    vid_e = {}
    for j in range(ny):
        for i in range(nx + 1):
            side = "left" if i == 0 else "right" if i == nx else None
            vid_e[i, j] = len(edges)
            edges.append(Edge(vid(i, j), vid(i, j + 1), marker=NATURAL if side else INTERNAL, side=side))
    cells = []
    for j in range(ny):
        for i in range(nx):
            loop = [(hid[i, j], 1), (vid_e[i + 1, j], 1), (hid[i, j + 1], -1), (vid_e[i, j], -1)]
            cells.append((loop, 0))
    return Mesh(vertices, edges, cells, grid=grid)


# -- file format ---------------------------------------------------------------


def mesh_to_dict(mesh: Mesh) -> dict:
    out = {
        "vertices": mesh.vertices.tolist(),
        "curves": [c.to_dict() for c in mesh.curves],
        "edges": [
            {
                "v": [ed.v0, ed.v1],
                "curve": None if not ed.curved else {"ref": ed.curve, "interval": list(ed.interval)},
                "marker": ed.marker,
                "side": ed.side,
            }
            for ed in mesh.edges
        ],
        "cells": [{"edges": [list(p) for p in el.loop], "region": el.region} for el in mesh.elements],
        "regions": {str(k): v for k, v in sorted(mesh.regions.items())},
    }
    if mesh.grid is not None:
        out["grid"] = {"nx": mesh.grid.nx, "ny": mesh.grid.ny, "bbox": list(mesh.grid.bbox)}
    return out


def mesh_from_dict(data: dict) -> Mesh:
    for key in ("vertices", "curves", "edges", "cells", "regions"):
        if key not in data:
            raise MeshFormatError(f"mesh file is missing required key {key!r}")
    try:
        curves = [CurveDef.from_dict(c) for c in data["curves"]]
    except (CurveError, TypeError) as exc:
        raise MeshFormatError(f"bad curve record: {exc}") from None
    edges = []
    for i, rec in enumerate(data["edges"]):
        try:
            v0, v1 = rec["v"]
            c = rec.get("curve")
            edges.append(
                Edge(
                    int(v0),
                    int(v1),
                    None if c is None else int(c["ref"]),
                    None if c is None else tuple(float(t) for t in c["interval"]),
                    rec.get("marker", INTERNAL),
                    rec.get("side"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MeshFormatError(f"edges[{i}]: malformed record ({exc!r})") from None
    cells = []
    for i, rec in enumerate(data["cells"]):
        try:
            cells.append(([(int(e), int(s)) for e, s in rec["edges"]], int(rec["region"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise MeshFormatError(f"cells[{i}]: malformed record ({exc!r})") from None
    grid = None
    if "grid" in data:
        g = data["grid"]
        grid = GridInfo(int(g["nx"]), int(g["ny"]), tuple(float(v) for v in g["bbox"]))
    regions = {int(k): str(v) for k, v in data["regions"].items()}
    return Mesh(data["vertices"], edges, cells, curves=curves, regions=regions, grid=grid)


def save_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(mesh), indent=1))


def load_mesh(path) -> Mesh:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeshFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise MeshFormatError(f"{path}: top-level value must be an object")
    return mesh_from_dict(data)
