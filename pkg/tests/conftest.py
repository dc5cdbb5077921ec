import numpy as np
import pytest

from curvedvem.curves import CurveDef
from curvedvem.mesh import Mesh

R = 0.45

# acceptance verdict lines, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def quarter_disk_mesh(r=R):
    arc = CurveDef.circle_arc((0.0, 0.0), r, 0.0, np.pi / 2)
    return Mesh.from_polygon([(0, 0), (r, 0), (0, r)], curves=[arc], curved_edges={1: (0, (0.0, np.pi / 2))})


def star_polygon(rng, n=None, center=None, scale=None):
    """Random star-shaped polygon (counterclockwise)."""
    n = n or int(rng.integers(3, 9))
    th = np.sort(rng.uniform(0, 2 * np.pi, n))
    # keep angular gaps below pi so the centre stays inside
    th = np.linspace(0, 2 * np.pi, n, endpoint=False) + 0.3 * (th - th.mean()) / n
    rad = rng.uniform(0.5, 1.0, n)
    c = rng.uniform(-2, 2, 2) if center is None else np.asarray(center)
    s = rng.uniform(0.1, 3.0) if scale is None else scale
    return c + s * np.column_stack([rad * np.cos(th), rad * np.sin(th)])


@pytest.fixture
def quarter_disk():
    return quarter_disk_mesh()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
