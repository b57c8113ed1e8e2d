import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from conjloc import evolute, planar
from conjloc.errors import CurvatureZeroError, NonGenericError, NotAnOvalError
from conjloc.evolute import DegenerateEvolute, evolute_of_curve, evolute_of_oval
from conjloc.planar import EllipseCurve, EllipseSupport, LimaconCurve, SupportFunction

from test_planar import ovals

H3 = SupportFunction(1.0, ((3, 0.05, 0.0),))
H4 = SupportFunction(1.0, ((4, 0.03, 0.0),))
SLOW = settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _generic(h):
    try:
        return evolute_of_oval(h, samples=2048)
    except NonGenericError:
        assume(False)


def test_ellipse_evolute_cusps_on_axes():
    e = evolute_of_oval(EllipseSupport(2.0, 1.0))
    assert (e.n, e.i) == (4, 1)
    pts = sorted(tuple(np.round(c.point, 9)) for c in e.curve.cusps)
    assert pts == sorted([(1.5, 0.0), (-1.5, 0.0), (0.0, 3.0), (0.0, -3.0)])


def test_cusps_are_centres_of_curvature():
    e = evolute_of_oval(H3)
    for c in e.curve.cusps:
        th = c.param
        d = H3.derivatives(th, 2)
        n = planar._unit_normal(th)
        centre = d[0] * n + d[1] * planar._rot90(n) - (d[2] + d[0]) * n
        assert np.array(c.point) == pytest.approx(centre, abs=1e-12)


@pytest.mark.parametrize("h, want", [(H3, (6, 2)), (H4, (8, 3))])
def test_harmonic_ovals(h, want):
    e = evolute_of_oval(h)
    assert (e.n, e.i) == want
    assert e.relation_ok


def test_circle_evolute_degenerates():
    e = evolute_of_oval(SupportFunction(1.0))
    assert isinstance(e, DegenerateEvolute)
    assert e.point == pytest.approx((0.0, 0.0), abs=1e-15)
    assert isinstance(evolute_of_curve(EllipseCurve(1.5, 1.5)), DegenerateEvolute)


def test_non_oval_rejected():
    with pytest.raises(NotAnOvalError):
        evolute_of_oval(SupportFunction(1.0, ((3, 0.2, 0.0),)))


def test_limacon_relation():
    e = evolute_of_curve(LimaconCurve(1.0, 2.0))
    assert (e.n, e.I, e.i) == (2, -2, -1)
    assert 2 * e.i == e.n + 2 * e.I


def test_parametric_ellipse_relation():
    e = evolute_of_curve(EllipseCurve(2.0, 1.0))
    assert (e.n, e.I, e.i) == (4, -1, 1)


def test_inflection_rejected_with_location():
    # limacon with a = b/2 ... r = a + b cos t has inflections when b < a < 2b
    with pytest.raises(CurvatureZeroError) as info:
        evolute_of_curve(LimaconCurve(1.5, 1.0))
    k, _ = LimaconCurve(1.5, 1.0).curvature(np.array(info.value.location))
    assert abs(float(k)) < 1e-8


def test_two_constructions_agree_on_ellipse():
    a, b = 2.0, 1.0
    e1 = evolute_of_oval(EllipseSupport(a, b), samples=4096)
    pts = np.vstack([arc.points for arc in e1.curve.arcs])
    t = np.linspace(0, 2 * math.pi, 4097)
    c = a * a - b * b

    def classical(tt):
        return np.stack([c / a * np.cos(tt) ** 3, -c / b * np.sin(tt) ** 3], axis=-1)

    assert evolute.hausdorff_to_curve(pts, classical, t) < 1e-6
    e2 = evolute_of_curve(EllipseCurve(a, b), samples=4096)
    pts2 = np.vstack([arc.points for arc in e2.curve.arcs])
    assert evolute.hausdorff_to_curve(pts2, classical, t) < 1e-6


def test_paired_curvature_ellipse_quarters():
    h = EllipseSupport(2.0, 1.0)
    for k in range(4):
        g, b = evolute.lemma1_check(h, k)
        assert g == pytest.approx(-math.pi / 2, abs=1e-9)
        assert b == pytest.approx(math.pi / 2, abs=1e-9)


def test_paired_curvature_third_harmonic_closure():
    pairs = [evolute.lemma1_check(H3, k) for k in range(6)]
    assert max(abs(a + b) for a, b in pairs) < 1e-4
    assert sum(a for a, _ in pairs) == pytest.approx(-2 * math.pi, abs=1e-6)


def test_paired_curvature_rejects_circle():
    with pytest.raises(NonGenericError):
        evolute.lemma1_check(SupportFunction(1.0), 0)


def test_arc_total_curvature_ellipse_quarters():
    e = evolute_of_oval(EllipseSupport(2.0, 1.0))
    tot = [evolute.arc_total_curvature(e, k) for k in range(4)]
    assert np.abs(tot) == pytest.approx(math.pi / 2, abs=1e-6)
    assert sum(tot) == pytest.approx(-2 * math.pi, abs=1e-6)


def test_arc_total_curvature_third_harmonic():
    e = evolute_of_oval(H3)
    tot = [evolute.arc_total_curvature(e, k) for k in range(e.n)]
    assert max(abs(x) for x in tot) < math.pi
    assert sum(tot) == pytest.approx(-2 * math.pi, abs=1e-6)


@pytest.mark.parametrize("theta, partner", [(0.0, math.pi), (math.pi / 3, 4 * math.pi / 3)])
def test_parallel_tangent_partner(theta, partner):
    assert evolute.parallel_tangent_partner(H3, theta) == pytest.approx(partner)


@given(st.floats(0, 2 * math.pi))
def test_partner_tangents_antiparallel(theta):
    q = evolute.parallel_tangent_partner(H3, theta)
    t1 = planar._rot90(planar._unit_normal(theta))
    t2 = planar._rot90(planar._unit_normal(q))
    assert t1 + t2 == pytest.approx([0.0, 0.0], abs=1e-10)


@SLOW
@given(ovals())
def test_rotation_index_formula_for_ovals(h):
    e = _generic(h)
    assert 2 * e.i == e.n - 2


@SLOW
@given(ovals())
def test_no_smooth_loops_and_short_arcs(h):
    e = _generic(h)
    assert planar.self_intersections(e.curve, same_arc_only=True) == []
    assert max(abs(evolute.arc_total_curvature(e, k)) for k in range(e.n)) < math.pi


@SLOW
@given(ovals())
def test_vertices_on_both_sides_of_every_normal(h):
    try:
        verts = planar.find_vertices(h)
    except NonGenericError:
        assume(False)
    for th in np.linspace(0, 2 * math.pi, 256, endpoint=False):
        left, right = evolute.vertex_sides_of_normal(h, th, verts)
        assert left > 0 and right > 0


@pytest.mark.parametrize("a, b", [(1.0, 2.0), (0.5, 2.0), (1.0, 3.0)])
def test_limacon_family_relation(a, b):
    e = evolute_of_curve(LimaconCurve(a, b))
    assert e.relation_ok
    assert e.I == -2
