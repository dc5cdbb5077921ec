import math

import numpy as np
import pytest

from curvedvem.curves import CurveDef
from curvedvem.cut import CutError, clip_to_box, cut_by_curves
from curvedvem.mesh import INTERNAL, build_quad_grid
from curvedvem.problems import listric_curves, problem_listric_fault

R = 0.45
ARC = CurveDef.circle_arc((0.0, 0.0), R, 0.0, math.pi / 2)


def inside(p):
    return 2 if math.hypot(*p) < R else 1


def cut_cells_oracle(n):
    """Background cells whose corner radii straddle the circle."""
    count = 0
    for i in range(n):
        for j in range(n):
            x = np.array([i, i + 1]) / n
            y = np.array([j, j + 1]) / n
            r = np.hypot(*np.meshgrid(x, y))
            count += r.min() < R < r.max()
    return count


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_quarter_circle_counts(n):
    m = cut_by_curves(build_quad_grid(n, n), [ARC], inside)
    cut = cut_cells_oracle(n)
    # each cut cell splits into exactly two pieces here
    assert m.n_elements == n * n + cut
    assert sum(m.element_curved(i) for i in range(m.n_elements)) == 2 * cut


def test_reference_examples():
    assert cut_by_curves(build_quad_grid(4, 4), [ARC], inside).n_elements == 19
    assert cut_cells_oracle(4) == 3
    m2 = cut_by_curves(build_quad_grid(2, 2), [ARC], inside)
    assert cut_cells_oracle(2) == 1
    assert m2.n_elements == 5


def test_area_preserved_and_inclusion_exact():
    m = cut_by_curves(build_quad_grid(8, 8), [ARC], inside)
    assert m.total_area == pytest.approx(1.0, rel=1e-12)
    a2 = sum(el.area for el in m.elements if el.region == 2)
    assert a2 == pytest.approx(math.pi * R**2 / 4, rel=1e-12)


def test_curve_outside_leaves_mesh_unchanged():
    g = build_quad_grid(1, 1)
    far = CurveDef.circle_arc((5.0, 5.0), 0.5, 0.0, 1.0)
    assert cut_by_curves(g, [far]).structurally_equal(g)


def test_curved_edges_reference_curve():
    m = cut_by_curves(build_quad_grid(4, 4), [ARC], inside)
    arcs = [ed for ed in m.edges if ed.curved]
    assert all(ed.curve == 0 and ed.marker == INTERNAL for ed in arcs)
    total = sum(ARC.arc_length(*sorted(ed.interval)) for ed in arcs)
    assert total == pytest.approx(ARC.arc_length(), rel=1e-13)


def test_no_element_straddles_the_curve(rng):
    m = cut_by_curves(build_quad_grid(8, 8), [ARC], inside)
    t = rng.uniform(0.01, math.pi / 2 - 0.01, 100)
    for side, eps in ((2, -1e-4), (1, 1e-4)):
        pts = (R + eps) * np.column_stack([np.cos(t), np.sin(t)])
        for p in pts:
            owners = [i for i in range(m.n_elements) if m.contains(i, p)]
            assert len(owners) == 1
            assert m.elements[owners[0]].region == side


def test_requires_straight_grid():
    g = build_quad_grid(2, 2)
    m = cut_by_curves(g, [ARC], inside)
    with pytest.raises(CutError):
        cut_by_curves(m, [ARC])


def test_clip_to_box():
    fault = listric_curves()["fault"]
    (a, b), = clip_to_box(fault, (-1, 1, -0.5, 0.5))
    # enters through the top (y = 0.5) and leaves through the bottom
    assert a == pytest.approx((0.51 / 1.25) ** 2 - 1.1, abs=1e-13)
    assert b == pytest.approx((1.51 / 1.25) ** 2 - 1.1, abs=1e-13)


def _components(mesh, region):
    elems = {i for i, el in enumerate(mesh.elements) if el.region == region}
    adj = {i: set() for i in elems}
    for uses in mesh.edge_elements:
        if len(uses) == 2 and uses[0][0] in elems and uses[1][0] in elems:
            adj[uses[0][0]].add(uses[1][0])
            adj[uses[1][0]].add(uses[0][0])
    seen, comps = set(), 0
    for s in elems:
        if s in seen:
            continue
        comps += 1
        stack = [s]
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(adj[v] - seen)
    return comps


def test_listric_fault_regions():
    prob = problem_listric_fault()
    m = prob.build_mesh(16)
    assert m.total_area == pytest.approx(2.0, rel=1e-12)
    assert sorted({el.region for el in m.elements}) == [1, 2, 3, 4, 5, 6]
    for r in range(1, 7):
        assert _components(m, r) == 1


def test_listric_t_junctions_are_shared_vertices():
    prob = problem_listric_fault()
    m = prob.build_mesh(16)
    fault_ends = set()
    for ed in m.edges:
        if ed.curved and ed.curve == 0:
            fault_ends.update((ed.v0, ed.v1))
    for ci in range(1, 5):
        ends = [v for ed in m.edges if ed.curved and ed.curve == ci for v in (ed.v0, ed.v1)]
        assert fault_ends.intersection(ends), f"horizon {ci} does not end on the fault"
