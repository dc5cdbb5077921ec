"""Command-line driver: ``python -m curvedvem <command> [options]``.

Commands
--------
mesh gen      write the background grid as JSON
mesh cut      write the interface-conforming (cut) mesh as JSON
solve         solve one level and print a summary (JSON written to --out)
convergence   run a refinement study and write the CSV table
export        solve one level and write a legacy VTK file
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .convergence import compute_errors, convergence_study
from .mesh import build_quad_grid, save_mesh
from .problems import PROBLEMS, ProblemSpec, get_problem
from .solver import boundary_fluxes, local_mass_conservation, solve_problem
from .vtk import export_vtk

DEFAULTS = {"problem": "interface", "order": None, "geometry": "curved", "family": [8, 16, 32, 64], "out": "."}


def _family(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad family {text!r}; expected e.g. 8,16,32") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("family entries must be positive integers")
    return vals


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=sorted(PROBLEMS), default=None)
    p.add_argument("--order", type=int, default=None, help="polynomial order k (0..3)")
    p.add_argument("--geometry", choices=("curved", "straight"), default=None)
    p.add_argument("--family", type=_family, default=None, help="background resolutions, e.g. 8,16,32,64")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--config", default=None, help="JSON file with defaults and problem overrides")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvedvem", description="Mixed VEM for Darcy flow on curved meshes.")
    sub = parser.add_subparsers(dest="command", required=True)
    mesh = sub.add_parser("mesh", help="generate meshes")
    msub = mesh.add_subparsers(dest="mesh_command", required=True)
    for name in ("gen", "cut"):
        _common(msub.add_parser(name))
    for name in ("solve", "convergence", "export"):
        _common(sub.add_parser(name))
    return parser


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def resolve(args) -> tuple[dict, ProblemSpec]:
    """Merge defaults, config file and explicit flags; build the problem."""
    opts = dict(DEFAULTS)
    cfg = load_config(args.config) if args.config else {}
    opts.update({k: v for k, v in cfg.items() if k in DEFAULTS})
    if isinstance(opts["family"], str):
        opts["family"] = _family(opts["family"])
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    problem = get_problem(opts["problem"], opts["order"])
    if opts["order"] is None:
        opts["order"] = problem.default_order
    overrides = {}
    if "mu" in cfg:
        overrides["mu"] = float(cfg["mu"])
    if "permeabilities" in cfg:
        perms = dict(problem.permeabilities)
        for reg, K in cfg["permeabilities"].items():
            K = np.asarray(K, dtype=float)
            perms[int(reg)] = K * np.eye(2) if K.ndim == 0 else K
        overrides["permeabilities"] = perms
    if "boundary" in cfg:
        overrides["boundary"] = {**problem.boundary, **cfg["boundary"]}
    if overrides:
        from dataclasses import replace

        problem = replace(problem, **overrides)
    return opts, problem


def _summary(sol, problem) -> dict:
    out = {
        "NE": sol.mesh.n_elements,
        "ndof_v": sol.dofmap.n_velocity,
        "ndof_p": sol.dofmap.n_pressure,
        "h": sol.mesh.mesh_size,
        "residual": sol.residual,
        "mass_residual": float(local_mass_conservation(sol).max()),
        "boundary_flux": {k: float(v) for k, v in boundary_fluxes(sol).items()},
        "seconds": sol.seconds,
    }
    if problem.has_exact:
        rep = compute_errors(sol, problem)
        out.update(e_p=rep.e_p, e_q=rep.e_q)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        opts, problem = resolve(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    k, geo, fam = opts["order"], opts["geometry"], opts["family"]
    stem = f"{problem.name}_{geo}_n{fam[0]}"

    if args.command == "mesh":
        if args.mesh_command == "gen":
            nx, ny = fam[0] * problem.cells_per_unit[0], fam[0] * problem.cells_per_unit[1]
            mesh = build_quad_grid(nx, ny, problem.bbox)
            path = out / f"{problem.name}_grid_n{fam[0]}.json"
        else:
            mesh = problem.build_mesh(fam[0], geo)
            path = out / f"{stem}.json"
        save_mesh(mesh, path)
        print(f"{path}: {mesh.n_elements} elements, {mesh.n_edges} edges")
        return 0

    if args.command == "convergence":
        path = out / f"convergence_{problem.name}_{geo}_k{k}.csv"
        table = convergence_study(problem, k, fam, geo, csv_path=path)
        for row in table.rows():
            print(f"{row['level']:>2} NE={row['NE']:>6} h={row['h']:.4e} e_p={row['e_p']:.4e} "
                  f"e_q={row['e_q']:.4e} rate_p={row['rate_p']:.2f} rate_q={row['rate_q']:.2f}")
        print(path)
        return 0

    mesh = problem.build_mesh(fam[0], geo)
    sol = solve_problem(mesh, k, problem)
    if args.command == "solve":
        info = _summary(sol, problem)
        path = out / f"solve_{stem}_k{k}.json"
        path.write_text(json.dumps(info, indent=2))
        print(json.dumps(info, indent=2))
        return 0
    path = out / f"{stem}_k{k}.vtk"
    export_vtk(mesh, path, sol)
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
