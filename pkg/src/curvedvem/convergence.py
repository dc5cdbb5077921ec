"""Error indicators, refinement studies and CSV tables."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .problems import ProblemSpec
from .quadrature import element_rule_general
from .solver import Solution, solve_problem

log = logging.getLogger(__name__)

CSV_COLUMNS = ("level", "h", "NE", "ndof_v", "ndof_p", "e_p", "e_q", "rate_p", "rate_q", "seconds")

#: errors below this are reported as exact and get no rate
EXACT_TOL = 1e-11


class MissingExactSolution(ValueError):
    pass


@dataclass(frozen=True)
class ErrorReport:
    """Errors of one solve."""

    level: int
    h: float
    NE: int
    ndof_v: int
    ndof_p: int
    e_p: float
    e_q: float
    seconds: float


def compute_errors(solution: Solution, problem: ProblemSpec, level: int = 0, seconds: float | None = None) -> ErrorReport:
    """L2 errors of ``p_h`` and of the projected velocity.

    Integrals use the element fan rule at order ``2k + 4``; exact fields are
    evaluated with the region of each element.
    """
    if not problem.has_exact:
        raise MissingExactSolution(f"problem {problem.name!r} has no exact solution")
    mesh, k = solution.mesh, solution.k
    ep2 = eq2 = 0.0
    for i, el in enumerate(mesh.elements):
        rule = element_rule_general(mesh, i, 2 * k + 4)
        dp = problem.exact_p(rule.points, el.region) - solution.pressure_at(i, rule.points)
        dq = np.atleast_2d(problem.exact_q(rule.points, el.region)) - solution.velocity_at(i, rule.points)
        ep2 += float(rule.weights @ dp**2)
        eq2 += float(rule.weights @ np.sum(dq**2, axis=1))
    dm = solution.dofmap
    return ErrorReport(
        level, mesh.mesh_size, mesh.n_elements, dm.n_velocity, dm.n_pressure,
        math.sqrt(max(ep2, 0.0)), math.sqrt(max(eq2, 0.0)),
        solution.seconds if seconds is None else seconds,
    )


def pairwise_rates(h, e) -> list[float]:
    """``log(e_i/e_{i-1}) / log(h_i/h_{i-1})``; NaN for the first level or exact errors."""
    out = [math.nan]
    for i in range(1, len(h)):
        if min(e[i], e[i - 1]) < EXACT_TOL:
            out.append(math.nan)
        else:
            out.append(math.log(e[i] / e[i - 1]) / math.log(h[i] / h[i - 1]))
    return out


def fitted_slope(h, e) -> float:
    """Least-squares slope of ``log e`` against ``log h``."""
    h, e = np.asarray(h, dtype=float), np.asarray(e, dtype=float)
    if len(h) < 2 or np.any(e < EXACT_TOL):
        return math.nan
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


@dataclass
class ConvergenceTable:
    """Error reports over a refinement family and their rates."""

    reports: list[ErrorReport] = field(default_factory=list)
    complete: bool = True

    @property
    def h(self) -> list[float]:
        return [r.h for r in self.reports]

    def rates(self, which: str) -> list[float]:
        return pairwise_rates(self.h, [getattr(r, which) for r in self.reports])

    def slope(self, which: str, last: int | None = None) -> float:
        """Fitted slope of ``e_p``/``e_q``; ``last`` restricts to the finest levels."""
        reps = self.reports if last is None else self.reports[-last:]
        return fitted_slope([r.h for r in reps], [getattr(r, which) for r in reps])

    @property
    def exact(self) -> bool:
        """True when every level reproduces the solution to round-off."""
        return all(max(r.e_p, r.e_q) < EXACT_TOL * 1e3 for r in self.reports)

    def rows(self) -> list[dict]:
        rp, rq = self.rates("e_p"), self.rates("e_q")
        out = []
        for r, a, b in zip(self.reports, rp, rq):
            out.append({
                "level": r.level, "h": r.h, "NE": r.NE, "ndof_v": r.ndof_v, "ndof_p": r.ndof_p,
                "e_p": r.e_p, "e_q": r.e_q, "rate_p": a, "rate_q": b, "seconds": r.seconds,
            })
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            w.writeheader()
            for row in self.rows():
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in CSV_COLUMNS:
            row[k] = int(row[k]) if k in ("level", "NE", "ndof_v", "ndof_p") else float(row[k])
    return rows


def convergence_study(problem: ProblemSpec, k: int, family=(8, 16, 32, 64), geometry: str = "curved",
                      csv_path=None) -> ConvergenceTable:
    """Solve on each background resolution of ``family`` and tabulate errors.

    A failing level stops the study; the partial table (flagged incomplete)
    is still written when ``csv_path`` is given, then the error is raised.
    """
    family = list(family)
    if len(family) < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    table = ConvergenceTable()
    try:
        for level, n in enumerate(family):
            t0 = time.perf_counter()
            mesh = problem.build_mesh(n, geometry)
            sol = solve_problem(mesh, k, problem)
            rep = compute_errors(sol, problem, level, time.perf_counter() - t0)
            log.info("level %d n=%d NE=%d e_p=%.3e e_q=%.3e", level, n, rep.NE, rep.e_p, rep.e_q)
            table.reports.append(rep)
    except Exception:
        table.complete = False
        if csv_path is not None:
            table.write_csv(csv_path)
        raise
    if csv_path is not None:
        table.write_csv(csv_path)
    return table


def locate_points(mesh, points) -> np.ndarray:
    """Index of the element containing each point (-1 when outside)."""
    polys = [mesh.boundary_polyline(i, 33) for i in range(mesh.n_elements)]
    lo = np.array([p.min(axis=0) for p in polys])
    hi = np.array([p.max(axis=0) for p in polys])
    out = np.full(len(points), -1)
    for n, pt in enumerate(np.atleast_2d(points)):
        cand = np.nonzero(np.all((lo <= pt) & (pt <= hi), axis=1))[0]
        for i in cand:
            if mesh.contains(i, pt):
                out[n] = i
                break
    return out


def average_onto(coarse, fine, fine_values) -> np.ndarray:
    """Area-weighted average of per-element fine values over coarse elements.

    Every fine element is assigned to the coarse element containing one of
    its interior points, which is exact for nested cut meshes.
    """
    pts = np.array([fine.interior_point(i) for i in range(fine.n_elements)])
    owner = locate_points(coarse, pts)
    if np.any(owner < 0):
        raise ValueError(f"{int(np.sum(owner < 0))} fine elements lie outside the coarse mesh")
    areas = np.array([el.area for el in fine.elements])
    num = np.bincount(owner, weights=areas * np.asarray(fine_values), minlength=coarse.n_elements)
    den = np.bincount(owner, weights=areas, minlength=coarse.n_elements)
    return num / den
