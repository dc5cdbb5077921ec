"""Benchmark problems: curved interface, listric fault and patch tests.

A :class:`ProblemSpec` bundles the physical data (piecewise-constant
permeability per region, viscosity, source, boundary data) with the
geometry needed to build meshes. Region-dependent fields take
``(points, region)`` so that data which jumps across an interface is
evaluated on the correct side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .curves import CurveDef, graph_intersections
from .cut import cut_by_curves
from .mesh import ESSENTIAL, NATURAL, SIDES, Mesh, build_quad_grid

Field = Callable[[np.ndarray, int], np.ndarray]


class ProblemError(ValueError):
    pass


def _zero(points, region=None):
    return np.zeros(len(np.atleast_2d(points)))


@dataclass
class ProblemSpec:
    """Physical data and geometry of a Darcy problem.

    Attributes
    ----------
    bbox : tuple
        ``(xmin, xmax, ymin, ymax)`` of the rectangular domain.
    curves : list of CurveDef
        Interfaces used to cut the background grid.
    region_rule : callable
        ``region_rule(point) -> region id``.
    permeabilities : dict
        Region id to 2x2 SPD tensor ``K``.
    boundary : dict
        Side name (``left``, ``right``, ``bottom``, ``top``) to NATURAL or
        ESSENTIAL.
    source, pbar, qbar : callable
        ``f`` with ``div q + f = 0``, boundary pressure and boundary flux.
    exact_p, exact_q : callable, optional
        Exact pressure and velocity for error computation.
    """

    name: str
    bbox: tuple[float, float, float, float]
    permeabilities: dict[int, np.ndarray]
    mu: float = 1.0
    curves: list[CurveDef] = field(default_factory=list)
    region_rule: Callable | None = None
    region_labels: dict[int, str] = field(default_factory=dict)
    boundary: dict[str, str] = field(default_factory=lambda: {s: NATURAL for s in SIDES})
    source: Field = _zero
    pbar: Field = _zero
    qbar: Field | None = None
    exact_p: Field | None = None
    exact_q: Field | None = None
    default_order: int = 1
    cells_per_unit: tuple[int, int] = (1, 1)

    def __post_init__(self):
        self.permeabilities = {int(r): np.asarray(K, dtype=float) for r, K in self.permeabilities.items()}
        for r, K in self.permeabilities.items():
            if K.shape != (2, 2) or not np.allclose(K, K.T) or np.linalg.eigvalsh(K)[0] <= 0.0:
                raise ProblemError(f"permeability of region {r} is not SPD")
        if not self.mu > 0.0:
            raise ProblemError("mu must be positive")
        if NATURAL not in self.boundary.values():
            raise ProblemError("at least one side must carry a natural (pressure) condition")

    @property
    def has_exact(self) -> bool:
        return self.exact_p is not None and self.exact_q is not None

    def permeability(self, region: int) -> np.ndarray:
        try:
            return self.permeabilities[region]
        except KeyError:
            raise ProblemError(f"no permeability for region {region}") from None

    def build_mesh(self, n: int, geometry: str = "curved") -> Mesh:
        """Cut an ``n``-based background grid; ``geometry`` is curved or straight."""
        if geometry not in ("curved", "straight"):
            raise ProblemError("geometry must be 'curved' or 'straight'")
        nx, ny = n * self.cells_per_unit[0], n * self.cells_per_unit[1]
        grid = build_quad_grid(nx, ny, self.bbox)
        mesh = cut_by_curves(grid, self.curves, self.region_rule) if self.curves else grid
        if self.region_rule is not None and not self.curves:
            mesh = mesh._rebuild(cells=[(el.loop, self.region_rule(np.array(el.centroid))) for el in mesh.elements])
        if geometry == "straight":
            mesh = mesh.straightened()
        return mesh.with_markers(self.boundary)


# -- internal interface -------------------------------------------------------

INTERFACE_RADIUS = 0.45
INTERFACE_K2 = 0.01


def problem_internal_interface() -> ProblemSpec:
    """Quarter-disk inclusion of radius 0.45 at the origin of the unit square.

    Region 2 (inside) has ``K = 0.01 I``, region 1 has ``K = I``. The exact
    pressure is ``r^2`` inside and ``0.01 r^2 + R^2 (1 - 0.01)`` outside, so
    the velocity is ``-0.02 (x, y)`` everywhere and ``f = 0.04``.
    """
    R, k2 = INTERFACE_RADIUS, INTERFACE_K2

    def region_rule(p):
        return 2 if math.hypot(p[0], p[1]) < R else 1

    def exact_p(x, region):
        x = np.atleast_2d(x)
        r2 = x[:, 0] ** 2 + x[:, 1] ** 2
        return r2 if region == 2 else k2 * r2 + R**2 * (1.0 - k2)

    def exact_q(x, region):
        return -2.0 * k2 * np.atleast_2d(x)

    def source(x, region):
        return np.full(len(np.atleast_2d(x)), 4.0 * k2)

    return ProblemSpec(
        name="interface",
        bbox=(0.0, 1.0, 0.0, 1.0),
        permeabilities={1: np.eye(2), 2: k2 * np.eye(2)},
        curves=[CurveDef.circle_arc((0.0, 0.0), R, 0.0, math.pi / 2)],
        region_rule=region_rule,
        region_labels={1: "matrix", 2: "inclusion"},
        source=source,
        pbar=exact_p,
        exact_p=exact_p,
        exact_q=exact_q,
        default_order=1,
    )


# -- listric fault -------------------------------------------------------------

LISTRIC_XI = (1.0, 0.01, 1.0, 1.0, 0.01, 1.0)
LISTRIC_BBOX = (-1.0, 1.0, -0.5, 0.5)


def listric_curves() -> dict[str, CurveDef]:
    """The fault and the four horizons over their full domain range."""
    xmin, xmax = LISTRIC_BBOX[:2]
    return {
        "fault": CurveDef.graph_sqrt(-1.25, 1.1, 1.01, xmin, xmax),
        "h2": CurveDef.graph_parabola(0.25, 1.1, 0.01, xmin, xmax),
        "h3": CurveDef.graph_parabola(0.25, 1.1, -0.21, xmin, xmax),
        "h4": CurveDef.graph_sqrt(0.5, 1.1, -0.41, xmin, xmax),
        "h5": CurveDef.graph_sqrt(0.75, 1.1, -0.01, xmin, xmax),
    }


def problem_listric_fault() -> ProblemSpec:
    """Fault with broken horizons; six layers with ``K = xi I``.

    The horizons below the fault (footwall) run from the left side to the
    fault, those above it (hanging wall) from the fault to the point where
    they leave the domain. Regions are numbered footwall bottom to top
    (1, 2, 3), then hanging wall top to bottom (4, 5, 6).
    """
    c = listric_curves()
    fault = c["fault"]
    xmin = LISTRIC_BBOX[0]

    def meet(h):
        (x,) = graph_intersections(fault, h)
        return x

    pieces = [
        fault,
        c["h4"].restrict(xmin, meet(c["h4"])),
        c["h5"].restrict(xmin, meet(c["h5"])),
        c["h2"].restrict(meet(c["h2"]), c["h2"].interval[1]),
        c["h3"].restrict(meet(c["h3"]), c["h3"].interval[1]),
    ]

    def region_rule(p):
        x, y = float(p[0]), float(p[1])
        if y < fault.graph_y(x):
            if y < c["h4"].graph_y(x):
                return 1
            return 2 if y < c["h5"].graph_y(x) else 3
        if y > c["h2"].graph_y(x):
            return 4
        return 5 if y > c["h3"].graph_y(x) else 6

    def pbar(x, region):
        x = np.atleast_2d(x)
        return np.where(x[:, 1] < 0.0, 1.0, 0.0)

    return ProblemSpec(
        name="fault",
        bbox=LISTRIC_BBOX,
        permeabilities={i + 1: xi * np.eye(2) for i, xi in enumerate(LISTRIC_XI)},
        curves=pieces,
        region_rule=region_rule,
        region_labels={1: "footwall-low", 2: "footwall-seal", 3: "footwall-top",
                       4: "hanging-top", 5: "hanging-seal", 6: "hanging-low"},
        boundary={"left": ESSENTIAL, "right": ESSENTIAL, "bottom": NATURAL, "top": NATURAL},
        pbar=pbar,
        qbar=None,
        default_order=2,
        cells_per_unit=(2, 1),
    )


# -- patch test ------------------------------------------------------------------


def patch_polynomial(k: int):
    """Exponents of ``p = sum_{a+b<=k} x^a y^b``."""
    return [(n - b, b) for n in range(k + 1) for b in range(n + 1)]


def problem_patch_test(k: int) -> ProblemSpec:
    """``p`` the full monomial sum of degree ``k``, ``K = I``, natural BC."""
    if not 0 <= k <= 3:
        raise ProblemError("patch test defined for k = 0..3")
    terms = patch_polynomial(k)

    def _pow(v, n):
        return v**n if n >= 0 else np.zeros_like(v)

    def exact_p(x, region=0):
        x = np.atleast_2d(x)
        return sum(_pow(x[:, 0], a) * _pow(x[:, 1], b) for a, b in terms)

    def exact_q(x, region=0):
        x = np.atleast_2d(x)
        gx = sum(a * _pow(x[:, 0], a - 1) * _pow(x[:, 1], b) for a, b in terms if a)
        gy = sum(b * _pow(x[:, 0], a) * _pow(x[:, 1], b - 1) for a, b in terms if b)
        zero = np.zeros(len(x))
        return -np.column_stack([zero + gx, zero + gy])

    def source(x, region=0):
        # f = -div q = laplacian of p
        x = np.atleast_2d(x)
        lap = np.zeros(len(x))
        for a, b in terms:
            if a >= 2:
                lap += a * (a - 1) * _pow(x[:, 0], a - 2) * _pow(x[:, 1], b)
            if b >= 2:
                lap += b * (b - 1) * _pow(x[:, 0], a) * _pow(x[:, 1], b - 2)
        return lap

    return ProblemSpec(
        name="patch",
        bbox=(0.0, 1.0, 0.0, 1.0),
        permeabilities={0: np.eye(2)},
        source=source,
        pbar=exact_p,
        exact_p=exact_p,
        exact_q=exact_q,
        default_order=k,
    )


PROBLEMS = {
    "interface": problem_internal_interface,
    "fault": problem_listric_fault,
    "patch": problem_patch_test,
}


def get_problem(name: str, k: int | None = None) -> ProblemSpec:
    if name not in PROBLEMS:
        raise ProblemError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    if name == "patch":
        return problem_patch_test(1 if k is None else k)
    return PROBLEMS[name]()


# -- smooth manufactured interface ---------------------------------------------


def problem_smooth_interface(k1: float = 1.0, k2: float = INTERFACE_K2) -> ProblemSpec:
    """Non-polynomial solution on the quarter-disk inclusion geometry.

    Inside, ``p = g`` with ``g = cos(2x) sin(2y) + x``; outside,
    ``p = g + c (r^2 - R^2) (x g_x + y g_y) / R`` with
    ``c = (k2 - k1) / (2 R k1)``, which keeps both the pressure and the
    normal flux continuous across ``r = R``.
    """
    import sympy as sy

    R = INTERFACE_RADIUS
    x, y = sy.symbols("x y", real=True)
    g = sy.cos(2 * x) * sy.sin(2 * y) + x
    c = sy.Rational(1) * (k2 - k1) / (2 * R * k1)
    p_in = g
    p_out = g + c * (x**2 + y**2 - R**2) * (x * sy.diff(g, x) + y * sy.diff(g, y)) / R
    fields = {}
    for region, p, kk in ((2, p_in, k2), (1, p_out, k1)):
        qx, qy = -kk * sy.diff(p, x), -kk * sy.diff(p, y)
        f = -(sy.diff(qx, x) + sy.diff(qy, y))
        fields[region] = tuple(sy.lambdify((x, y), expr, "numpy") for expr in (p, qx, qy, f))

    def _eval(fun, pts):
        pts = np.atleast_2d(pts)
        return np.broadcast_to(fun(pts[:, 0], pts[:, 1]), (len(pts),)).astype(float)

    def exact_p(pts, region):
        return _eval(fields[region][0], pts)

    def exact_q(pts, region):
        return np.column_stack([_eval(fields[region][1], pts), _eval(fields[region][2], pts)])

    def source(pts, region):
        return _eval(fields[region][3], pts)

    base = problem_internal_interface()
    return replace(
        base,
        name="smooth-interface",
        permeabilities={1: k1 * np.eye(2), 2: k2 * np.eye(2)},
        source=source,
        pbar=exact_p,
        exact_p=exact_p,
        exact_q=exact_q,
    )


PROBLEMS["smooth-interface"] = problem_smooth_interface
