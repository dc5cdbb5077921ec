"""Legacy ASCII VTK output for visual inspection.

Curved edges are drawn as polylines and the solution as cell data, so the
file is a lossy picture of the computation and is never read back.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh

#: segments used to draw one curved edge
CURVE_SEGMENTS = 8


def element_polygon(mesh: Mesh, elem: int, segments: int = CURVE_SEGMENTS) -> np.ndarray:
    """Counterclockwise outline of an element without the closing point."""
    pts = []
    for e, sgn in mesh.elements[elem].loop:
        n = segments + 1 if mesh.edges[e].curved else 2
        s = np.linspace(0.0, 1.0, n)
        if sgn < 0:
            s = s[::-1]
        pts.append(mesh.edge_map(e, s)[:-1])
    return np.concatenate(pts)


def export_vtk(mesh: Mesh, path, solution=None, cell_data: dict | None = None, title: str = "curvedvem") -> None:
    """Write polygons plus element-mean pressure and centroid velocity.

    Parameters
    ----------
    mesh : Mesh
    path : str or Path
    solution : Solution, optional
        Adds ``pressure`` (element mean) and ``velocity`` (projected velocity
        at the centroid) cell arrays; without it the region ids are written.
    cell_data : dict, optional
        Extra scalar cell arrays, name to sequence of length ``N_E``.
    """
    polys = [element_polygon(mesh, i) for i in range(mesh.n_elements)]
    npts = sum(len(p) for p in polys)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {npts} double"]
    for p in polys:
        lines.extend(f"{x:.17g} {y:.17g} 0" for x, y in p)
    size = sum(len(p) + 1 for p in polys)
    lines.append(f"CELLS {len(polys)} {size}")
    start = 0
    for p in polys:
        lines.append(" ".join(map(str, [len(p), *range(start, start + len(p))])))
        start += len(p)
    lines.append(f"CELL_TYPES {len(polys)}")
    lines.extend("7" for _ in polys)
    lines.append(f"CELL_DATA {len(polys)}")
    if solution is None:
        scalars = {"region": [el.region for el in mesh.elements]}
    else:
        scalars = {"pressure": solution.pressure_means()}
    scalars.update(cell_data or {})
    for name, vals in scalars.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines.extend(f"{float(v):.17g}" for v in vals)
    if solution is not None:
        lines.append("VECTORS velocity double")
        for i, el in enumerate(mesh.elements):
            vx, vy = solution.velocity_at(i, np.array([el.centroid]))[0]
            lines.append(f"{vx:.17g} {vy:.17g} 0")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
