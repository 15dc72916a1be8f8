import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinspec import geometry as g


def test_square_vertices():
    sq = g.unit_square()
    assert len(sq.vertices) == 4
    for v in sq.vertices:
        assert v.half_angle == pytest.approx(math.pi / 4)
        assert v.rho_v == pytest.approx(0.5)
    assert sq.perimeter == pytest.approx(4.0)
    assert sq.area() == pytest.approx(1.0)
    assert sq.is_straight


def test_hexagon_and_lshape_angles():
    hexa = g.regular_polygon(6)
    assert all(v.half_angle == pytest.approx(math.pi / 3) for v in hexa.vertices)
    ell = g.l_shape()
    halves = sorted(v.half_angle for v in ell.vertices)
    assert halves[:5] == pytest.approx([math.pi / 4] * 5)
    assert halves[5] == pytest.approx(3 * math.pi / 4)
    assert ell.has_reentrant_corner and len(ell.convex_vertices) == 5


def test_disk_has_no_vertices():
    d = g.disk()
    assert d.vertices == ()
    assert d.perimeter == pytest.approx(2 * math.pi)
    assert d.area() == pytest.approx(math.pi, rel=1e-5)


def test_arcsquare_corner_angles():
    a = g.arc_square(15.0)
    halves = sorted(v.half_angle for v in a.vertices)
    # the outward arc opens the top corners to 90 + 15 degrees
    assert halves == pytest.approx([math.pi / 4] * 2 + [math.radians(52.5)] * 2)
    assert not a.is_straight


def test_clockwise_input_is_reoriented():
    cw = g.polygon_from_points([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert cw.area() == pytest.approx(1.0)


@pytest.mark.parametrize("text, msg", [
    ("segment 0 0 1 0\nsegment 1 0 1 1\nsegment 1 1 0 0.5\n", "do not meet"),
    ("segment 0 0 1 0\nsegment 1 0 0 1\nsegment 0 1 1 1\nsegment 1 1 0 0\n", "self-intersect"),
    ("polyline 0 0 1 1\n", "unknown arc keyword"),
    ("segment 0 0 1\n", "segment expects"),
    ("segment 0 0 1 x\nsegment 1 0 0 0\n", "malformed number"),
    ("", "empty"),
])
def test_parse_errors(text, msg):
    with pytest.raises(g.GeometryError, match=msg):
        g.parse_polygon(text)


def test_format_parse_roundtrip(shipped):
    for poly in shipped.values():
        again = g.parse_polygon(g.format_polygon(poly))
        assert g.format_polygon(again) == g.format_polygon(poly)
        assert again.perimeter == pytest.approx(poly.perimeter, rel=1e-12)


def test_spline_arc_parses():
    text = "segment 0 0 1 0\nsegment 1 0 1 1\nspline\n1 1\n0.5 1.2\n0 1\nend\nsegment 0 1 0 0\n"
    p = g.parse_polygon(text)
    assert len(p.arcs) == 4 and not p.is_straight
    assert p.area() > 1.0


def test_curvature_integral_disk():
    # kappa = 1 on the unit circle
    assert g.curvature_integral(g.disk(), 2.0) == pytest.approx(2 * math.pi * math.sqrt(3))
    assert g.curvature_integral(g.unit_square(), 4.0) == pytest.approx(8.0)


def test_tangent_frame_maps_vertex_to_sector():
    sq = g.unit_square()
    for k in range(4):
        f = g.tangent_frame(sq, k)
        assert f.determinant == pytest.approx(1.0)
        c = np.array([[0.5, 0.5]])
        y = f(c)[0]
        # the centre lies on the bisector, at distance sqrt(2)/2
        assert y[0] == pytest.approx(math.sqrt(0.5)) and y[1] == pytest.approx(0.0, abs=1e-14)
        assert f.inverse(f(c)) == pytest.approx(c)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 12), st.floats(0.2, 5.0))
def test_regular_polygon_invariants(n, r):
    p = g.regular_polygon(n, r)
    assert len(p.vertices) == n
    assert sum(math.pi - 2 * v.half_angle for v in p.vertices) == pytest.approx(2 * math.pi)
    assert p.area() == pytest.approx(0.5 * n * r * r * math.sin(2 * math.pi / n), rel=1e-9)
