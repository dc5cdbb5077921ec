import math

import numpy as np
import pytest

from curvedvem.mesh import ESSENTIAL, NATURAL
from curvedvem.problems import (
    PROBLEMS,
    ProblemError,
    ProblemSpec,
    get_problem,
    listric_curves,
    problem_smooth_interface,
)

R = 0.45


def on_circle(n=7):
    th = np.linspace(0.05, math.pi / 2 - 0.05, n)
    return R * np.column_stack([np.cos(th), np.sin(th)]), np.column_stack([np.cos(th), np.sin(th)])


@pytest.mark.parametrize("name", ["interface", "smooth-interface"])
def test_interface_continuity(name):
    prob = get_problem(name)
    pts, nrm = on_circle()
    np.testing.assert_allclose(prob.exact_p(pts, 1), prob.exact_p(pts, 2), atol=1e-13)
    qn1 = np.sum(prob.exact_q(pts, 1) * nrm, axis=1)
    qn2 = np.sum(prob.exact_q(pts, 2) * nrm, axis=1)
    np.testing.assert_allclose(qn1, qn2, atol=1e-13)


def test_interface_values():
    prob = get_problem("interface")
    assert prob.exact_p(np.array([[R, 0.0]]), 2)[0] == pytest.approx(0.2025)
    assert prob.exact_p(np.array([[0.0, R]]), 1)[0] == pytest.approx(0.2025)


@pytest.mark.parametrize("name", ["interface", "smooth-interface"])
def test_source_is_minus_divergence(name):
    prob = get_problem(name)
    h = 1e-5
    pts = np.array([[0.2, 0.1], [0.7, 0.6]])
    for region, x in zip((2, 1), pts):
        dqx = (prob.exact_q(x + [h, 0], region)[0, 0] - prob.exact_q(x - [h, 0], region)[0, 0]) / (2 * h)
        dqy = (prob.exact_q(x + [0, h], region)[0, 1] - prob.exact_q(x - [0, h], region)[0, 1]) / (2 * h)
        assert prob.source(x, region)[0] == pytest.approx(-(dqx + dqy), abs=1e-7)
        # Darcy: q = -K grad p
        K = prob.permeability(region)[0, 0]
        dpx = (prob.exact_p(x + [h, 0], region)[0] - prob.exact_p(x - [h, 0], region)[0]) / (2 * h)
        assert prob.exact_q(x, region)[0, 0] == pytest.approx(-K * dpx, abs=1e-7)
    if name == "interface":
        assert prob.source(pts, 1)[0] == pytest.approx(0.04)


def test_listric_geometry():
    c = listric_curves()
    assert c["h2"].graph_y(0.0) == pytest.approx(0.3125)
    prob = get_problem("fault")
    assert prob.boundary == {"left": ESSENTIAL, "right": ESSENTIAL, "bottom": NATURAL, "top": NATURAL}
    assert [prob.permeability(r)[0, 0] for r in range(1, 7)] == [1.0, 0.01, 1.0, 1.0, 0.01, 1.0]
    # footwall layers bottom to top, hanging wall top to bottom
    assert prob.region_rule((-0.9, -0.45)) == 1
    assert prob.region_rule((-0.5, 0.45)) == 4
    assert prob.region_rule((0.9, 0.45)) == 6


def test_fault_mesh_regions():
    prob = get_problem("fault")
    m = prob.build_mesh(4)
    assert {el.region for el in m.elements} == set(range(1, 7))
    # the steep fault near x = -1 limits the composite edge rule to ~1e-10
    assert m.total_area == pytest.approx(2.0, rel=1e-8)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_patch_problem_consistency(k):
    prob = get_problem("patch", k)
    x = np.array([[0.3, 0.7]])
    h = 1e-5
    dpx = (prob.exact_p(x + [h, 0])[0] - prob.exact_p(x - [h, 0])[0]) / (2 * h)
    assert prob.exact_q(x)[0, 0] == pytest.approx(-dpx, abs=1e-8)
    assert prob.default_order == k


def test_problem_validation():
    with pytest.raises(ProblemError):
        get_problem("nonexistent")
    with pytest.raises(ProblemError):
        ProblemSpec("x", (0, 1, 0, 1), {0: -np.eye(2)})
    with pytest.raises(ProblemError):
        ProblemSpec("x", (0, 1, 0, 1), {0: np.eye(2)}, mu=0.0)
    with pytest.raises(ProblemError):
        get_problem("interface").build_mesh(2, "wiggly")
    with pytest.raises(ProblemError):
        get_problem("interface").permeability(7)
    assert set(PROBLEMS) >= {"interface", "fault", "patch"}


def test_smooth_interface_is_not_polynomial():
    prob = problem_smooth_interface()
    pts = np.array([[0.1, 0.2]])
    assert prob.exact_p(pts, 2)[0] == pytest.approx(math.cos(0.2) * math.sin(0.4) + 0.1)
