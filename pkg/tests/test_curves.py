import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from curvedvem.curves import CurveDef, CurveDomainError, CurveError, CurveKind, graph_intersections


def test_eval_examples():
    arc = CurveDef.circle_arc((0, 0), 0.45, 0, math.pi / 2)
    np.testing.assert_allclose(arc.eval(0.0), [0.45, 0.0], atol=1e-15)
    fault = CurveDef.graph_sqrt(-1.25, 1.1, 1.01, -1.0, 1.0)
    np.testing.assert_allclose(fault.eval(-1.0), [-1.0, -1.25 * math.sqrt(0.1) + 1.01], rtol=1e-15)
    assert fault.eval(-1.0)[1] == pytest.approx(0.6147152, abs=1e-7)
    seg = CurveDef.segment((0, 0), (1, 0))
    np.testing.assert_allclose(seg.eval(0.5), [0.5, 0.0])


def test_eval_vectorized_shape():
    arc = CurveDef.circle_arc((1, 2), 0.5, 0, 1)
    assert arc.eval(np.linspace(0, 1, 7)).shape == (7, 2)


def test_eval_outside_interval_raises():
    arc = CurveDef.circle_arc((0, 0), 1, 0, 1)
    with pytest.raises(CurveDomainError):
        arc.eval(1.5)
    with pytest.raises(CurveDomainError):
        arc.speed(-0.1)


def test_speed_examples():
    arc = CurveDef.circle_arc((0, 0), 0.45, 0, 2)
    np.testing.assert_allclose(arc.speed(np.linspace(0, 2, 5)), 0.45)
    seg = CurveDef.segment((0, 0), (3, 4))
    assert seg.speed(0.3) == pytest.approx(5.0)
    par = CurveDef.graph_parabola(0.25, 1.1, 0.01, -1.1, 0.0)
    assert par.speed(-1.1) == pytest.approx(1.0, abs=1e-15)


def test_invalid_definitions():
    with pytest.raises(CurveError):
        CurveDef.circle_arc((0, 0), -1, 0, 1)
    with pytest.raises(CurveError):
        CurveDef.segment((1, 1), (1, 1))
    with pytest.raises(CurveError):
        CurveDef.graph_sqrt(1, 1.1, 0, -1.2, 0)
    with pytest.raises(CurveError):
        CurveDef.circle_arc((0, 0), 1, 1, 0)


def test_arc_length_closed_forms():
    arc = CurveDef.circle_arc((0, 0), 0.45, 0, math.pi / 2)
    assert arc.arc_length() == pytest.approx(math.pi * 0.45 / 2, rel=1e-14)
    assert arc.arc_length() == pytest.approx(0.7068583, abs=1e-7)
    assert CurveDef.segment((0, 0), (3, 4)).arc_length() == pytest.approx(5.0)


def test_arc_length_sqrt_graph_against_simpson():
    g = CurveDef.graph_sqrt(0.5, 1.1, -0.41, -1.0, 0.0)
    x = np.linspace(-1.0, 0.0, 200001)
    dy = 0.25 / np.sqrt(x + 1.1)
    ref = simpson(np.sqrt(1 + dy**2), x=x)
    assert g.arc_length() == pytest.approx(ref, rel=1e-10)


def test_arc_length_inverted_interval():
    with pytest.raises(CurveError):
        CurveDef.segment((0, 0), (1, 0)).arc_length(0.8, 0.2)


def test_arc_length_additive():
    g = CurveDef.graph_parabola(0.25, 1.1, -0.21, -1.0, 1.0)
    assert g.arc_length(-1, 0.3) + g.arc_length(0.3, 1) == pytest.approx(g.arc_length(), rel=1e-12)


def test_intersections_circle_with_vertical_line():
    arc = CurveDef.circle_arc((0, 0), 0.45, 0, math.pi / 2)
    hits = arc.intersect_segment((0.25, 0.0), (0.25, 1.0))
    assert len(hits) == 1
    t, p, tangent = hits[0]
    assert not tangent
    np.testing.assert_allclose(p, [0.25, math.sqrt(0.45**2 - 0.25**2)], atol=1e-14)
    assert t == pytest.approx(math.acos(0.25 / 0.45))


def test_intersections_sorted_and_two_hits():
    arc = CurveDef.circle_arc((0, 0), 1.0, 0.1, math.pi - 0.1)
    hits = arc.intersect_segment((-1, 0.5), (1, 0.5))
    assert [round(h.point[0], 12) for h in hits] == [round(math.sqrt(0.75), 12), round(-math.sqrt(0.75), 12)]
    assert hits[0].t < hits[1].t


def test_intersections_tangent_reported_once():
    arc = CurveDef.circle_arc((0, 0), 0.45, 0, math.pi)
    hits = arc.intersect_segment((-1, 0.45), (1, 0.45))
    assert len(hits) == 1
    assert hits[0].tangent
    np.testing.assert_allclose(hits[0].point, [0.0, 0.45], atol=1e-10)


def test_intersections_graph_and_misses():
    g = CurveDef.graph_sqrt(-1.25, 1.1, 1.01, -1.0, 1.0)
    hits = g.intersect_segment((-1, 0.0), (1, 0.0))
    assert len(hits) == 1
    x = hits[0].point[0]
    assert -1.25 * math.sqrt(x + 1.1) + 1.01 == pytest.approx(0.0, abs=1e-13)
    assert g.intersect_segment((-1, 2.0), (1, 2.0)) == []


def test_non_axis_aligned_segment_rejected():
    with pytest.raises(CurveError):
        CurveDef.segment((0, 0), (1, 0)).intersect_segment((0, 0), (1, 1))


def test_segment_on_cutting_line_rejected():
    with pytest.raises(CurveError):
        CurveDef.segment((0, 0), (1, 0)).intersect_segment((-1, 0), (2, 0))


def test_graph_intersections_fault_and_horizon():
    fault = CurveDef.graph_sqrt(-1.25, 1.1, 1.01, -1.0, 1.0)
    h4 = CurveDef.graph_sqrt(0.5, 1.1, -0.41, -1.0, 1.0)
    (x,) = graph_intersections(fault, h4)
    # 1.75 sqrt(x + 1.1) = 1.42
    assert x == pytest.approx((1.42 / 1.75) ** 2 - 1.1, abs=1e-14)


def test_locate():
    arc = CurveDef.circle_arc((0, 0), 2.0, 0.0, 1.0)
    assert arc.locate(arc.eval(0.4)) == pytest.approx(0.4)
    assert arc.locate((5.0, 5.0)) is None


@st.composite
def curves(draw):
    kind = draw(st.sampled_from(list(CurveKind)))
    f = st.floats(-2, 2, allow_nan=False)
    if kind is CurveKind.SEGMENT:
        p0 = (draw(f), draw(f))
        p1 = (p0[0] + draw(st.floats(0.1, 1)), p0[1] + draw(f))
        return CurveDef.segment(p0, p1)
    if kind is CurveKind.CIRCLE_ARC:
        t0 = draw(st.floats(-3, 3))
        return CurveDef.circle_arc((draw(f), draw(f)), draw(st.floats(0.1, 2)), t0, t0 + draw(st.floats(0.1, 3)))
    a = draw(st.floats(0.1, 2)) * draw(st.sampled_from([-1, 1]))
    b = draw(f)
    x0 = -b + draw(st.floats(0.05, 1))
    if kind is CurveKind.GRAPH_SQRT:
        return CurveDef.graph_sqrt(a, b, draw(f), x0, x0 + draw(st.floats(0.1, 2)))
    return CurveDef.graph_parabola(a, b, draw(f), x0, x0 + draw(st.floats(0.1, 2)))


@given(curves())
@settings(max_examples=60, deadline=None)
def test_dict_roundtrip_and_derivative(c):
    assert CurveDef.from_dict(c.to_dict()) == c
    t0, t1 = c.interval
    t = np.linspace(t0, t1, 9)[1:-1]
    eps = 1e-6 * (t1 - t0)
    fd = (c.eval(t + eps) - c.eval(t - eps)) / (2 * eps)
    np.testing.assert_allclose(c.deriv(t), fd, rtol=1e-5, atol=1e-6)
    assert np.all(c.speed(t) > 0)


@given(curves(), st.floats(0.05, 0.95))
@settings(max_examples=60, deadline=None)
def test_horizontal_line_through_curve_point_is_found(c, frac):
    t0, t1 = c.interval
    t = t0 + frac * (t1 - t0)
    p = c.eval(t)
    assume(abs(c.deriv(t)[1]) > 1e-6 * c.speed(t))
    hits = c.intersect_segment((p[0] - 1.0, p[1]), (p[0] + 1.0, p[1]))
    assert any(np.hypot(*(h.point - p)) < 1e-8 for h in hits)
