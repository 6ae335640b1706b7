from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geocanvas import geom3d as g
from geocanvas.errors import DegenerateInput, PreconditionFailed, TypeMismatch, UnsupportedTool

P = g.Point3


def unit_cube():
    return g.cube(P(0, 0, 0), P(1, 0, 0), P(1, 1, 0))


def scaled(s: g.Solid3, k: float) -> g.Solid3:
    if s.polyhedral:
        return g.Solid3(s.kind, tuple(P(v.x * k, v.y * k, v.z * k) for v in s.vertices), s.faces)
    c = s.center
    return g.Solid3(s.kind, center=P(c.x * k, c.y * k, c.z * k), radius=s.radius * k, axis=g.scale(s.axis, k))


class TestVectors:
    def test_basic_ops(self):
        assert g.cross((1, 0, 0), (0, 1, 0)) == (0, 0, 1)
        assert g.dot((1, 2, 3), (4, 5, 6)) == 32
        assert g.norm(g.unit((3, 4, 12))) == pytest.approx(1.0)
        assert g.lift(P(1, 2, 3)) == P(1, 2, 3)

    def test_lift_planar_point(self):
        from geocanvas.geom2d import Point2

        assert g.lift(Point2(1, 2)) == P(1, 2, 0)
        with pytest.raises(TypeMismatch):
            g.lift(5)


class TestPlanes:
    def test_normal_is_unit(self):
        pl = g.plane_from_points(P(0, 0, 0), P(3, 0, 0), P(0, 7, 0))
        assert g.norm(pl.normal) == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(DegenerateInput):
            g.plane_from_points(P(0, 0, 0), P(1, 1, 1), P(2, 2, 2))

    def test_bisector(self):
        pl = g.plane_bisector(P(0, 0, 0), P(2, 0, 0))
        assert g.distance3(P(1, 5, -3), pl) == pytest.approx(0.0, abs=1e-12)

    @given(st.tuples(*[st.floats(-10, 10)] * 3))
    def test_point_plane_distance(self, p):
        pl = g.plane_from_points(P(0, 0, 2), P(1, 0, 2), P(0, 1, 2))
        assert g.distance3(P(*p), pl) == pytest.approx(abs(p[2] - 2), abs=1e-12)


class TestSolids:
    def test_volumes(self):
        assert g.volume(unit_cube()) == pytest.approx(1.0)
        assert g.volume(g.cylinder(P(0, 0, 0), P(0, 0, 1), 1)) == pytest.approx(math.pi, abs=1e-12)
        base = [P(0, 0, 0), P(1, 0, 0), P(1, 1, 0), P(0, 1, 0)]
        assert g.volume(g.pyramid(base, P(0.5, 0.5, 3))) == pytest.approx(1.0)
        assert g.volume(g.sphere(P(0, 0, 0), 2)) == pytest.approx(32 * math.pi / 3)
        assert g.volume(g.cone(P(0, 0, 0), P(0, 0, 3), 1)) == pytest.approx(math.pi)

    def test_regular_tetrahedron(self):
        t = g.tetrahedron(P(0, 0, 0), P(2, 0, 0))
        assert g.volume(t) == pytest.approx(8 / (6 * math.sqrt(2)))
        for i in range(4):
            for j in range(i):
                assert g.norm(g.sub(t.vertices[i], t.vertices[j])) == pytest.approx(2.0)

    def test_surface_areas(self):
        assert g.surface_area(g.sphere(P(0, 0, 0), 1)) == pytest.approx(4 * math.pi)
        assert g.surface_area(unit_cube()) == pytest.approx(6.0)
        assert g.surface_area(g.cylinder(P(0, 0, 0), P(0, 0, 2), 1)) == pytest.approx(6 * math.pi)
        cone = g.cone(P(0, 0, 0), P(0, 0, 4), 3)
        assert g.surface_area(cone) == pytest.approx(math.pi * 3 * 5 + math.pi * 9)

    def test_not_a_solid(self):
        with pytest.raises(TypeMismatch):
            g.volume(P(0, 0, 0))
        with pytest.raises(TypeMismatch):
            g.surface_area("cube")

    def test_cube_seed_check(self):
        with pytest.raises(DegenerateInput):
            g.cube(P(0, 0, 0), P(1, 0, 0), P(1, 2, 0))
        with pytest.raises(DegenerateInput):
            g.cube(P(0, 0, 0), P(1, 0, 0), P(2, 1, 0))

    def test_nonplanar_base_rejected(self):
        with pytest.raises(DegenerateInput):
            g.pyramid([P(0, 0, 0), P(1, 0, 0), P(1, 1, 0.5), P(0, 1, 0)], P(0, 0, 3))

    @settings(max_examples=60)
    @given(st.floats(0.1, 10), st.sampled_from(["cube", "pyramid", "cone", "cylinder", "sphere", "tetra"]))
    def test_scaling_law(self, k, kind):
        solids = {
            "cube": unit_cube(),
            "pyramid": g.pyramid([P(0, 0, 0), P(2, 0, 0), P(0, 1, 0)], P(0.3, 0.3, 2)),
            "cone": g.cone(P(1, 0, 0), P(1, 2, 3), 0.7),
            "cylinder": g.cylinder(P(0, 0, 0), P(1, 1, 1), 0.5),
            "sphere": g.sphere(P(1, 2, 3), 1.5),
            "tetra": g.tetrahedron(P(0, 0, 0), P(1, 0, 0)),
        }
        s = solids[kind]
        big = scaled(s, k)
        assert g.volume(big) == pytest.approx(g.volume(s) * k**3, rel=1e-9)
        assert g.surface_area(big) == pytest.approx(g.surface_area(s) * k**2, rel=1e-9)

    def test_unsupported(self):
        with pytest.raises(UnsupportedTool, match="add_net"):
            g.unsupported("add_net")


class TestDistance:
    def test_caption_values(self):
        assert g.distance3(P(0, 0, 0), P(15, 11, 0)) == pytest.approx(math.sqrt(15**2 + 11**2))
        assert round(g.distance3(P(0, 0, 0), P(15, 11, 0)), 2) == 18.60
        assert round(g.distance3(P(0, 0, 0), P(15, 11, 11)), 2) == 21.61
        assert g.distance3(P(1, 2, 3), P(1, 2, 3)) == 0.0

    def test_symmetric(self):
        pl = g.plane_from_points(P(0, 0, 0), P(1, 0, 0), P(0, 1, 0))
        assert g.distance3(pl, P(0, 0, 5)) == g.distance3(P(0, 0, 5), pl) == pytest.approx(5.0)


class TestCrossSection:
    @given(st.floats(0.001, 0.999))
    def test_horizontal_slices(self, c):
        sec = g.cross_section(g.Plane3(P(0, 0, c), (0.0, 0.0, 1.0)), unit_cube())
        assert g.polygon3_area(sec.vertices) == pytest.approx(1.0, abs=1e-12)
        assert all(v.z == pytest.approx(c) for v in sec.vertices)

    def test_corner_triangle(self):
        n = g.unit((1.0, 1.0, 1.0))
        sec = g.cross_section(g.Plane3(P(0.5, 0, 0), n), unit_cube())
        got = sorted((round(v.x, 12), round(v.y, 12), round(v.z, 12)) for v in sec.vertices)
        assert got == [(0.0, 0.0, 0.5), (0.0, 0.5, 0.0), (0.5, 0.0, 0.0)]

    def test_ccw_about_normal(self):
        n = g.unit((1.0, 2.0, 3.0))
        sec = g.cross_section(g.Plane3(P(0.5, 0.5, 0.5), n), unit_cube())
        vs = sec.vertices
        total = (0.0, 0.0, 0.0)
        for a, b in zip(vs, vs[1:] + vs[:1]):
            total = g.add(total, g.cross(a, b))
        assert g.dot(total, n) > 0

    def test_misses(self):
        with pytest.raises(PreconditionFailed):
            g.cross_section(g.Plane3(P(0, 0, 2), (0.0, 0.0, 1.0)), unit_cube())

    def test_curved_solid(self):
        with pytest.raises(UnsupportedTool):
            g.cross_section(g.Plane3(P(0, 0, 0), (0.0, 0.0, 1.0)), g.sphere(P(0, 0, 0), 1))
