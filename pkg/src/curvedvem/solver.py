"""Global assembly and solution of the mixed saddle-point system.

Unknown ordering: edge moments (``k+1`` per edge, edges by id, intrinsic
normal), then per element its divergence and interior moments, then the
pressure coefficients element by element.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .local import ElementError, LocalMatrices, local_matrices
from .mesh import ESSENTIAL, NATURAL, Mesh, MeshValidationError
from .poly import dim_poly, eval_edge
from .quadrature import edge_rule, gram_edge

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
MAX_REFINEMENT = 3


class SolverError(RuntimeError):
    pass


class SingularSystemError(SolverError):
    pass


@dataclass(frozen=True)
class GlobalDofMap:
    """Global numbering of velocity and pressure unknowns."""

    k: int
    n_edges: int
    n_elements: int
    loops: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def per_edge(self) -> int:
        return self.k + 1

    @property
    def per_element(self) -> int:
        return dim_poly(2, self.k) - 1 + dim_poly(2, self.k - 1)

    @property
    def n_pressure_local(self) -> int:
        return dim_poly(2, self.k)

    @property
    def n_velocity(self) -> int:
        return self.per_edge * self.n_edges + self.per_element * self.n_elements

    @property
    def n_pressure(self) -> int:
        return self.n_pressure_local * self.n_elements

    def edge_dofs(self, edge: int) -> np.ndarray:
        return edge * self.per_edge + np.arange(self.per_edge)

    def velocity_map(self, elem: int) -> tuple[np.ndarray, np.ndarray]:
        """Global ids and signs of the local velocity dofs of ``elem``."""
        ids, signs = [], []
        for e, sgn in self.loops[elem]:
            ids.append(self.edge_dofs(e))
            signs.append(np.full(self.per_edge, float(sgn)))
        start = self.per_edge * self.n_edges + elem * self.per_element
        ids.append(start + np.arange(self.per_element))
        signs.append(np.ones(self.per_element))
        return np.concatenate(ids), np.concatenate(signs)

    def pressure_map(self, elem: int) -> np.ndarray:
        n = self.n_pressure_local
        return self.n_velocity + elem * n + np.arange(n)


def number_dofs(mesh: Mesh, k: int) -> GlobalDofMap:
    """Deterministic numbering; checks that every edge is used consistently."""
    bad = []
    for e, users in enumerate(mesh.edge_elements):
        signs = sorted(s for _, s in users)
        interior = mesh.edges[e].marker not in (NATURAL, ESSENTIAL)
        if (interior and signs != [-1, 1]) or (not interior and len(signs) != 1):
            bad.append(e)
    if bad:
        raise MeshValidationError("inconsistent edge usage", bad)
    return GlobalDofMap(k, mesh.n_edges, mesh.n_elements, tuple(el.loop for el in mesh.elements))


@dataclass
class SaddleSystem:
    """Sparse ``[[A, B^T], [B, 0]]`` with right-hand side and constraints."""

    mesh: Mesh
    problem: object
    dofmap: GlobalDofMap
    matrix: sp.csr_matrix
    rhs: np.ndarray
    constraints: dict[int, float] = field(default_factory=dict)
    local: list[LocalMatrices] = field(default_factory=list, repr=False)
    rhs_f: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.dofmap.k

    def dump_triplets(self, path) -> None:
        """Write the matrix as ``i j value`` lines (debug aid)."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {v:.17g}\n")


def assemble(mesh: Mesh, k: int, problem) -> SaddleSystem:
    """Assemble the global system for ``problem`` on ``mesh``.

    ``problem`` provides ``mu``, ``permeability(region)``,
    ``source(points, region)`` and ``pbar(points, region)``.
    """
    dm = number_dofs(mesh, k)
    nv, n = dm.n_velocity, dm.n_velocity + dm.n_pressure
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    rhs_f = np.zeros(dm.n_pressure)
    cache: dict = {}
    locs = []
    for i, el in enumerate(mesh.elements):
        reg = el.region
        try:
            lm = local_matrices(
                mesh, i, k, problem.mu, problem.permeability(reg),
                f=lambda x, r=reg: problem.source(x, r),
                pbar=lambda x, r=reg: problem.pbar(x, r),
                cache=cache,
            )
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ElementError(i, str(exc)) from exc
        locs.append(lm)
        vid, sgn = dm.velocity_map(i)
        pid = dm.pressure_map(i)
        A = lm.A * np.outer(sgn, sgn)
        B = lm.B * sgn[None, :]
        rows.append(np.repeat(vid, len(vid)))
        cols.append(np.tile(vid, len(vid)))
        vals.append(A.ravel())
        for r_, c_, blk in ((pid, vid, B), (vid, pid, B.T)):
            rows.append(np.repeat(r_, len(c_)))
            cols.append(np.tile(c_, len(r_)))
            vals.append(blk.ravel())
        np.add.at(rhs, vid, sgn * lm.rhs_nbc)
        rhs[pid] += lm.rhs_f
        rhs_f[pid - nv] = lm.rhs_f
    M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    M.sum_duplicates()
    return SaddleSystem(mesh, problem, dm, M, rhs, {}, locs, rhs_f)


def essential_moments(mesh: Mesh, edge: int, k: int, qbar) -> np.ndarray:
    """Dofs ``(1/|e|) int_e qbar.n m~_j`` with the intrinsic normal."""
    rule = edge_rule(mesh, edge, 2 * k + 2)
    q = np.asarray(qbar(rule.points), dtype=float).reshape(-1, 2)
    qn = np.sum(q * rule.normals, axis=1)
    return eval_edge(k, rule.s).T @ (qn * rule.weights) / mesh.edge_length(edge)


def apply_essential_bc(system: SaddleSystem, qbar=None) -> SaddleSystem:
    """Fix the edge dofs of ESSENTIAL edges by symmetric elimination.

    ``qbar(points, region)`` returns boundary flux vectors; ``None`` means
    no-flow. Returns a new system; the input is left untouched.
    """
    mesh, dm = system.mesh, system.dofmap
    if qbar is None:
        qbar = getattr(system.problem, "qbar", None)
    cons: dict[int, float] = {}
    for e, ed in enumerate(mesh.edges):
        if ed.marker != ESSENTIAL:
            continue
        (elem, _), = mesh.edge_elements[e]
        if qbar is None:
            vals = np.zeros(dm.per_edge)
        else:
            reg = mesh.elements[elem].region
            vals = essential_moments(mesh, e, dm.k, lambda x, r=reg: qbar(x, r))
        cons.update(zip(dm.edge_dofs(e).tolist(), vals.tolist()))
    if not any(ed.marker == NATURAL for ed in mesh.edges):
        raise SingularSystemError(
            "no natural (pressure) boundary: the pressure is only defined up to a constant "
            "and a mean-pressure gauge is not supported"
        )
    M = system.matrix.tocsr()
    rhs = system.rhs.copy()
    if cons:
        idx = np.fromiter(cons.keys(), dtype=int)
        val = np.fromiter(cons.values(), dtype=float)
        fixed = np.zeros(M.shape[0])
        fixed[idx] = val
        rhs -= M @ fixed
        keep = np.ones(M.shape[0])
        keep[idx] = 0.0
        Dk = sp.diags(keep)
        M = (Dk @ M @ Dk + sp.diags(1.0 - keep)).tocsr()
        rhs[idx] = val
    return SaddleSystem(mesh, system.problem, dm, M, rhs, cons, system.local, system.rhs_f)


@dataclass
class Solution:
    """Velocity dofs, pressure coefficients and projected velocities."""

    mesh: Mesh
    dofmap: GlobalDofMap
    velocity: np.ndarray
    pressure: np.ndarray  # (N_E, pi_k)
    projected: np.ndarray  # (N_E, 2, pi_k)
    local: list[LocalMatrices] = field(repr=False)
    residual: float = 0.0
    rhs_f: np.ndarray | None = None
    seconds: float = 0.0

    @property
    def k(self) -> int:
        return self.dofmap.k

    def local_dofs(self, elem: int) -> np.ndarray:
        vid, sgn = self.dofmap.velocity_map(elem)
        return sgn * self.velocity[vid]

    def pressure_at(self, elem: int, points) -> np.ndarray:
        return self.local[elem].basis.eval(np.atleast_2d(points)) @ self.pressure[elem]

    def velocity_at(self, elem: int, points) -> np.ndarray:
        """Values of the projected velocity, shape ``(npts, 2)``."""
        vals = self.local[elem].basis.eval(np.atleast_2d(points))
        return vals @ self.projected[elem].T

    def pressure_means(self) -> np.ndarray:
        """Element averages of ``p_h`` (the constant coefficient is not the mean)."""
        from .quadrature import monomial_integrals

        out = np.empty(self.mesh.n_elements)
        for i, el in enumerate(self.mesh.elements):
            ints = monomial_integrals(self.mesh, i, self.k)
            out[i] = ints @ self.pressure[i] / el.area
        return out


def solve(system: SaddleSystem) -> Solution:
    """Factorize and solve; extract pressures and projected velocities."""
    t0 = time.perf_counter()
    M = system.matrix.tocsc()
    b = system.rhs
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        diag = _inertia_hint(M)
        raise SingularSystemError(f"factorization failed ({exc}); {diag}") from exc
    x = lu.solve(b)
    bnorm = max(np.linalg.norm(b), 1e-300)
    res = np.linalg.norm(M @ x - b) / bnorm
    steps = 0
    while res > RESIDUAL_TOL and steps < MAX_REFINEMENT:
        x += lu.solve(b - M @ x)
        res = np.linalg.norm(M @ x - b) / bnorm
        steps += 1
    if not np.all(np.isfinite(x)) or res > RESIDUAL_TOL:
        raise SingularSystemError(f"relative residual {res:.3e} after {steps} refinement steps")
    dm = system.dofmap
    nv = dm.n_velocity
    q = x[:nv]
    p = x[nv:].reshape(dm.n_elements, dm.n_pressure_local)
    proj = np.empty((dm.n_elements, 2, dm.n_pressure_local))
    for i, lm in enumerate(system.local):
        vid, sgn = dm.velocity_map(i)
        proj[i] = (lm.Pi @ (sgn * q[vid])).reshape(2, -1)
    log.debug("solved %d unknowns, residual %.2e, %d refinements", len(x), res, steps)
    return Solution(system.mesh, dm, q, p, proj, system.local, res, system.rhs_f, time.perf_counter() - t0)


def _inertia_hint(M) -> str:
    n = M.shape[0]
    if n > 2000:
        return f"system size {n}; check that a natural boundary exists"
    w = np.linalg.eigvalsh(0.5 * (M + M.T).toarray())
    small = int(np.sum(np.abs(w) < 1e-12 * max(1.0, np.abs(w).max())))
    return f"inertia (+{int(np.sum(w > 0))}, -{int(np.sum(w < 0))}, 0:{small})"


def solve_problem(mesh: Mesh, k: int, problem) -> Solution:
    """Assemble, constrain and solve in one call."""
    t0 = time.perf_counter()
    system = apply_essential_bc(assemble(mesh, k, problem))
    sol = solve(system)
    sol.seconds = time.perf_counter() - t0
    return sol


def local_mass_conservation(solution: Solution) -> np.ndarray:
    """Per element ``max_a |int div(q_h) m_a + int f m_a|``."""
    out = np.empty(solution.mesh.n_elements)
    for i, lm in enumerate(solution.local):
        out[i] = np.abs(-lm.B @ solution.local_dofs(i) + lm.rhs_f).max()
    return out


def boundary_fluxes(solution: Solution) -> dict[str, float]:
    """Outward flux ``int q_h.n`` through each labelled boundary side."""
    mesh, dm = solution.mesh, solution.dofmap
    out: dict[str, float] = {}
    for e, ed in enumerate(mesh.edges):
        if ed.side is None:
            continue
        (_, sgn), = mesh.edge_elements[e]
        flux = sgn * mesh.edge_length(e) * solution.velocity[dm.edge_dofs(e)[0]]
        out[ed.side] = out.get(ed.side, 0.0) + flux
    return out


def edge_trace_values(solution: Solution, elem: int, local_edge: int, s) -> np.ndarray:
    """Outward normal trace of ``q_h`` on one edge of ``elem`` at parameters ``s``."""
    mesh = solution.mesh
    e, _ = mesh.elements[elem].loop[local_edge]
    lay = solution.local[elem].layout
    dofs = solution.local_dofs(elem)[lay.edge_block(local_edge)]
    c = np.linalg.solve(gram_edge(mesh, e, solution.k), mesh.edge_length(e) * dofs)
    return eval_edge(solution.k, s) @ c
