import numpy as np

from conftest import quarter_disk_mesh
from curvedvem.mesh import build_quad_grid
from curvedvem.problems import get_problem
from curvedvem.solver import solve_problem
from curvedvem.vtk import element_polygon, export_vtk


def test_single_square_with_solution(tmp_path):
    prob = get_problem("patch", 1)
    m = build_quad_grid(1, 1)
    sol = solve_problem(m, 1, prob)
    path = tmp_path / "s.vtk"
    export_vtk(m, path, sol)
    text = path.read_text().splitlines()
    assert text[0] == "# vtk DataFile Version 3.0"
    assert "ASCII" in text and "DATASET UNSTRUCTURED_GRID" in text
    assert "POINTS 4 double" in text
    assert "CELL_TYPES 1" in text
    assert any(l.startswith("SCALARS pressure") for l in text)
    assert any(l.startswith("VECTORS velocity") for l in text)
    i = text.index("CELL_TYPES 1")
    assert text[i + 1] == "7"
    # pressure is the element mean of p = 1 + x + y
    j = [n for n, l in enumerate(text) if l.startswith("SCALARS pressure")][0]
    assert abs(float(text[j + 2]) - 2.0) < 1e-12


def test_quarter_disk_polygon_and_region(tmp_path):
    m = quarter_disk_mesh()
    poly = element_polygon(m, 0)
    assert len(poly) == 10
    np.testing.assert_allclose(np.hypot(*poly[1:10].T), 0.45, atol=1e-14)
    path = tmp_path / "q.vtk"
    export_vtk(m, path)
    text = path.read_text()
    assert "POINTS 10 double" in text
    assert "SCALARS region double 1" in text
