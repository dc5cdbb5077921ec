"""Exact parametrizations of the curves that bound or cross the domain.

Only a closed set of analytic kinds is supported. Every curve is a map
``t -> gamma(t)`` on a closed parameter interval; graphs are parametrized by
their abscissa (``t = x``) and circle arcs by the polar angle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

#: Default tolerance (domain units) for tangency and deduplication.
TANGENT_TOL = 1e-10


class CurveError(ValueError):
    """Invalid curve definition or degenerate parametrization."""


class CurveDomainError(CurveError):
    """Parameter outside the curve interval."""


class CurveKind(str, enum.Enum):
    SEGMENT = "SEGMENT"
    CIRCLE_ARC = "CIRCLE_ARC"
    GRAPH_SQRT = "GRAPH_SQRT"
    GRAPH_PARABOLA = "GRAPH_PARABOLA"


# number of flat parameters per kind (the interval is stored separately)
_NPARAMS = {
    CurveKind.SEGMENT: 4,  # x0, y0, x1, y1
    CurveKind.CIRCLE_ARC: 3,  # cx, cy, r
    CurveKind.GRAPH_SQRT: 3,  # a, b, c   y = a*sqrt(x+b)+c
    CurveKind.GRAPH_PARABOLA: 3,  # a, b, c   y = a*(x+b)**2+c
}


class Intersection(NamedTuple):
    t: float
    point: np.ndarray
    tangent: bool = False


@dataclass(frozen=True)
class CurveDef:
    """An exact curve ``gamma: [t0, t1] -> R^2``.

    Use the named constructors (:meth:`segment`, :meth:`circle_arc`,
    :meth:`graph_sqrt`, :meth:`graph_parabola`) rather than the raw
    initializer.
    """

    kind: CurveKind
    params: tuple[float, ...]
    interval: tuple[float, float]

    def __post_init__(self):
        kind = CurveKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "interval", tuple(float(t) for t in self.interval))
        if len(self.params) != _NPARAMS[kind]:
            raise CurveError(
                f"{kind.value} expects {_NPARAMS[kind]} parameters, got {len(self.params)}"
            )
        t0, t1 = self.interval
        if not t0 < t1:
            raise CurveError(f"empty parameter interval {self.interval}")
        if kind is CurveKind.SEGMENT:
            x0, y0, x1, y1 = self.params
            if math.hypot(x1 - x0, y1 - y0) < 1e-14:
                raise CurveError("degenerate segment")
        elif kind is CurveKind.CIRCLE_ARC:
            if not self.params[2] > 0:
                raise CurveError("circle radius must be positive")
            if t1 - t0 >= 2 * math.pi:
                raise CurveError("circle arc must not close on itself")
        elif kind is CurveKind.GRAPH_SQRT:
            if not t0 > -self.params[1]:
                raise CurveError("sqrt graph interval must satisfy x0 > -b")
            if self.params[0] == 0:
                raise CurveError("sqrt graph with a = 0 is a segment")

    # -- constructors -----------------------------------------------------
    @classmethod
    def segment(cls, p0, p1) -> CurveDef:
        return cls(CurveKind.SEGMENT, (*p0, *p1), (0.0, 1.0))

    @classmethod
    def circle_arc(cls, center, radius, theta0, theta1) -> CurveDef:
        return cls(CurveKind.CIRCLE_ARC, (*center, radius), (theta0, theta1))

    @classmethod
    def graph_sqrt(cls, a, b, c, x0, x1) -> CurveDef:
        return cls(CurveKind.GRAPH_SQRT, (a, b, c), (x0, x1))

    @classmethod
    def graph_parabola(cls, a, b, c, x0, x1) -> CurveDef:
        return cls(CurveKind.GRAPH_PARABOLA, (a, b, c), (x0, x1))

    def restrict(self, t0: float, t1: float) -> CurveDef:
        """Same curve on the sub-interval ``[t0, t1]``."""
        self._check(np.array([t0, t1]))
        return CurveDef(self.kind, self.params, (t0, t1))

    @property
    def is_graph(self) -> bool:
        return self.kind in (CurveKind.GRAPH_SQRT, CurveKind.GRAPH_PARABOLA)

    # -- evaluation -------------------------------------------------------
    def _check(self, t):
        t0, t1 = self.interval
        slack = 1e-12 * max(1.0, abs(t0), abs(t1))
        if np.any(t < t0 - slack) or np.any(t > t1 + slack):
            raise CurveDomainError(f"parameter outside [{t0}, {t1}]")

    def eval(self, t):
        """Point(s) ``gamma(t)``; shape ``(2,)`` for scalar t, else ``(n, 2)``."""
        t = np.asarray(t, dtype=float)
        self._check(t)
        return self._eval(t)

    def _eval(self, t):
        p = self.params
        if self.kind is CurveKind.SEGMENT:
            x = p[0] + t * (p[2] - p[0])
            y = p[1] + t * (p[3] - p[1])
        elif self.kind is CurveKind.CIRCLE_ARC:
            x = p[0] + p[2] * np.cos(t)
            y = p[1] + p[2] * np.sin(t)
        else:
            x = t
            y = self.graph_y(t)
        return np.stack([x * np.ones_like(t), y * np.ones_like(t)], axis=-1)

    def graph_y(self, x):
        """Ordinate of a graph curve; no interval check (used for side tests)."""
        a, b, c = self.params
        if self.kind is CurveKind.GRAPH_SQRT:
            return a * np.sqrt(np.asarray(x) + b) + c
        if self.kind is CurveKind.GRAPH_PARABOLA:
            return a * (np.asarray(x) + b) ** 2 + c
        raise CurveError(f"{self.kind.value} is not a graph")

    def deriv(self, t):
        """Tangent vector(s) ``gamma'(t)``."""
        t = np.asarray(t, dtype=float)
        self._check(t)
        p = self.params
        one = np.ones_like(t)
        if self.kind is CurveKind.SEGMENT:
            dx, dy = (p[2] - p[0]) * one, (p[3] - p[1]) * one
        elif self.kind is CurveKind.CIRCLE_ARC:
            dx, dy = -p[2] * np.sin(t), p[2] * np.cos(t)
        elif self.kind is CurveKind.GRAPH_SQRT:
            dx, dy = one, 0.5 * p[0] / np.sqrt(t + p[1])
        else:
            dx, dy = one, 2.0 * p[0] * (t + p[1])
        return np.stack([dx, dy], axis=-1)

    def speed(self, t):
        """``|gamma'(t)|``; raises on degenerate tangents."""
        d = self.deriv(t)
        s = np.hypot(d[..., 0], d[..., 1])
        if np.any(s < 1e-14):
            raise CurveError("degenerate parametrization: |gamma'| < 1e-14")
        return s

    def arc_length(self, t0: float | None = None, t1: float | None = None) -> float:
        """Length of ``gamma([t0, t1])`` (defaults to the whole interval)."""
        a = self.interval[0] if t0 is None else float(t0)
        b = self.interval[1] if t1 is None else float(t1)
        if b < a:
            raise CurveDomainError(f"inverted interval [{a}, {b}]")
        self._check(np.array([a, b]))
        if self.kind is CurveKind.SEGMENT:
            p = self.params
            return (b - a) * math.hypot(p[2] - p[0], p[3] - p[1])
        if self.kind is CurveKind.CIRCLE_ARC:
            return (b - a) * self.params[2]
        if b == a:
            return 0.0
        val, _ = integrate.quad(
            lambda t: float(self.speed(t)), a, b, epsabs=0.0, epsrel=1e-13, limit=200
        )
        return val

    # -- point location ---------------------------------------------------
    def locate(self, point, tol: float = TANGENT_TOL) -> float | None:
        """Parameter ``t`` with ``gamma(t) == point`` (within ``tol``), else None."""
        x, y = float(point[0]), float(point[1])
        t0, t1 = self.interval
        p = self.params
        if self.kind is CurveKind.SEGMENT:
            d = np.array([p[2] - p[0], p[3] - p[1]])
            t = float(np.dot([x - p[0], y - p[1]], d) / np.dot(d, d))
        elif self.kind is CurveKind.CIRCLE_ARC:
            t = math.atan2(y - p[1], x - p[0])
            t = _wrap_angle(t, t0, t1)
        else:
            t = x
        if t < t0 - tol or t > t1 + tol:
            return None
        t = min(max(t, t0), t1)
        if np.hypot(*(self._eval(np.asarray(t)) - (x, y))) > tol:
            return None
        return t

    # -- intersections ----------------------------------------------------
    def intersect_segment(self, p, q, tol: float = TANGENT_TOL) -> list[Intersection]:
        """Intersections with the axis-aligned segment ``[p, q]``.

        Results are sorted by parameter and deduplicated within ``tol``;
        grazing contacts are reported once with ``tangent=True``.
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if abs(p[0] - q[0]) <= tol:
            axis, c = 0, 0.5 * (p[0] + q[0])
            lo, hi = sorted((p[1], q[1]))
        elif abs(p[1] - q[1]) <= tol:
            axis, c = 1, 0.5 * (p[1] + q[1])
            lo, hi = sorted((p[0], q[0]))
        else:
            raise CurveError("segment must be parallel to a coordinate axis")

        cands = self._line_roots(axis, c, tol)
        t0, t1 = self.interval
        out: list[Intersection] = []
        for t, tangent in cands:
            if t < t0 - tol or t > t1 + tol:
                continue
            t = min(max(t, t0), t1)
            pt = self._eval(np.asarray(t))
            along = pt[1 - axis]
            if along < lo - tol or along > hi + tol:
                continue
            pt[axis] = c
            out.append(Intersection(t, pt, tangent))
        out.sort(key=lambda it: it.t)
        dedup: list[Intersection] = []
        for it in out:
            if dedup and np.hypot(*(it.point - dedup[-1].point)) <= tol:
                continue
            dedup.append(it)
        return dedup

    def _line_roots(self, axis: int, c: float, tol: float) -> list[tuple[float, bool]]:
        """Parameters where coordinate ``axis`` of gamma equals ``c``."""
        p = self.params
        if self.kind is CurveKind.SEGMENT:
            a0, a1 = p[axis], p[2 + axis]
            if abs(a1 - a0) < 1e-300:
                if abs(a0 - c) <= tol:
                    raise CurveError("segment overlaps the cutting line")
                return []
            return [((c - a0) / (a1 - a0), False)]
        if self.kind is CurveKind.CIRCLE_ARC:
            cx, cy, r = p
            center = cx if axis == 0 else cy
            u = (c - center) / r
            if abs(u) > 1.0 + tol / r:
                return []
            u = min(max(u, -1.0), 1.0)
            tangent = 1.0 - abs(u) <= tol / r
            if axis == 0:
                base = [math.acos(u), -math.acos(u)]
            else:
                base = [math.asin(u), math.pi - math.asin(u)]
            if tangent:
                base = base[:1]
            t0, t1 = self.interval
            return [(_wrap_angle(b, t0, t1), tangent) for b in base]
        a, b, c0 = p
        if axis == 0:
            return [(c, False)]
        if self.kind is CurveKind.GRAPH_SQRT:
            s = (c - c0) / a
            if s < -tol:
                return []
            return [(max(s, 0.0) ** 2 - b, False)]
        s = (c - c0) / a
        if s < -tol:
            return []
        if abs(s) <= tol:
            return [(-b, True)]
        return [(-b - math.sqrt(s), False), (-b + math.sqrt(s), False)]

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": list(self.params),
            "interval": list(self.interval),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CurveDef:
        try:
            return cls(CurveKind(d["kind"]), tuple(d["params"]), tuple(d["interval"]))
        except KeyError as exc:
            raise CurveError(f"curve record missing key {exc}") from None


def _wrap_angle(t: float, t0: float, t1: float) -> float:
    """Shift angle ``t`` by multiples of 2pi into (or nearest to) ``[t0, t1]``."""
    two_pi = 2.0 * math.pi
    best = t
    best_dist = math.inf
    for k in range(-3, 4):
        s = t + k * two_pi
        dist = max(t0 - s, s - t1, 0.0)
        if dist < best_dist:
            best, best_dist = s, dist
    return best


def graph_intersections(c1: CurveDef, c2: CurveDef, nsample: int = 2000) -> list[float]:
    """Abscissae where two graph curves cross on their common interval."""
    if not (c1.is_graph and c2.is_graph):
        raise CurveError("graph_intersections needs two graph curves")
    lo = max(c1.interval[0], c2.interval[0])
    hi = min(c1.interval[1], c2.interval[1])
    if lo >= hi:
        return []

    def gap(x):
        return c1.graph_y(x) - c2.graph_y(x)

    xs = np.linspace(lo, hi, nsample + 1)
    g = gap(xs)
    roots = []
    for i in range(nsample):
        if g[i] == 0.0:
            roots.append(float(xs[i]))
        elif g[i] * g[i + 1] < 0.0:
            roots.append(optimize.brentq(gap, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15))
    if g[-1] == 0.0:
        roots.append(float(xs[-1]))
    return roots
