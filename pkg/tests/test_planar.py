import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from conjloc import planar
from conjloc.errors import FinenessError, NonGenericError, NotAnOvalError
from conjloc.planar import (
    Arc,
    Cusp,
    CuspedCurve,
    EllipseCurve,
    EllipseSupport,
    LimaconCurve,
    SupportFunction,
    eval_support,
    find_vertices,
    oval_point,
    turning_number,
)

H3 = SupportFunction(1.0, ((3, 0.05, 0.0),))
SLOW = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def ovals(draw):
    """Random generic Fourier ovals with h'' + h bounded away from zero."""
    ks = draw(st.lists(st.integers(2, 6), min_size=1, max_size=3, unique=True))
    harm = []
    for k in ks:
        cap = 0.25 / (k * k - 1) / len(ks)
        harm.append((k, draw(st.floats(-cap, cap)), draw(st.floats(-cap, cap))))
    assume(max(abs(a) + abs(b) for _, a, b in harm) > 1e-3)
    return SupportFunction(1.0, tuple(harm))


def circle_curve(m, sign=1.0):
    t = np.linspace(0, 2 * math.pi, m, endpoint=False)
    pts = np.stack([np.cos(t), sign * np.sin(t)], axis=-1)
    tan = np.stack([-np.sin(t), sign * np.cos(t)], axis=-1)
    return planar.polyline_from_samples(t, pts, tan)


def figure_eight(m=400):
    t = np.linspace(0, 2 * math.pi, m, endpoint=False)
    pts = np.stack([np.sin(t), np.sin(t) * np.cos(t)], axis=-1)
    tan = np.stack([np.cos(t), np.cos(2 * t)], axis=-1)
    return planar.polyline_from_samples(t, pts, tan)


# eval_support ---------------------------------------------------------------


def test_eval_support_constant():
    assert eval_support(SupportFunction(1.0), 0.7) == (1.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize(
    "theta, expected",
    [(0.0, (1.05, 0.0, -0.45, 0.0)), (math.pi / 6, (1.0, -0.15, 0.0, 1.35))],
)
def test_eval_support_third_harmonic(theta, expected):
    assert eval_support(H3, theta) == pytest.approx(expected, abs=1e-14)


@given(st.floats(0, 2 * math.pi))
def test_ellipse_support_derivatives_match_finite_differences(theta):
    h = EllipseSupport(2.0, 1.0)
    d = h.derivatives(theta, 3)
    e = 1e-4
    for m in range(1, 4):
        fd = (h.derivatives(theta + e, m - 1)[m - 1] - h.derivatives(theta - e, m - 1)[m - 1]) / (2 * e)
        assert fd == pytest.approx(d[m], abs=1e-6)


# oval_point -----------------------------------------------------------------


def test_oval_point_examples():
    assert oval_point(SupportFunction(1.0), math.pi / 2) == pytest.approx([0.0, 1.0], abs=1e-15)
    p = oval_point(SupportFunction(2.5), np.linspace(0, 6, 7))
    assert np.linalg.norm(p, axis=-1) == pytest.approx(2.5)
    assert oval_point(EllipseSupport(2.0, 1.0), 0.0) == pytest.approx([2.0, 0.0])


def test_oval_point_lies_on_ellipse_with_outward_normal():
    h = EllipseSupport(2.0, 1.0)
    th = np.linspace(0, 2 * math.pi, 97)
    p = oval_point(h, th)
    assert (p[:, 0] / 2) ** 2 + p[:, 1] ** 2 == pytest.approx(1.0, abs=1e-12)
    # gradient of the implicit ellipse is parallel to (cos, sin)
    g = np.stack([p[:, 0] / 4, p[:, 1]], axis=-1)
    assert np.abs(planar._cross2(g, planar._unit_normal(th))) == pytest.approx(0.0, abs=1e-12)


def test_oval_point_rejects_non_oval():
    with pytest.raises(NotAnOvalError):
        oval_point(SupportFunction(1.0, ((2, 0.5, 0.0),)), 0.0)


def test_radius_of_curvature_from_three_points():
    h = SupportFunction(1.0, ((3, 0.05, 0.0), (2, 0.02, 0.01)))
    th = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
    p = oval_point(h, th)
    a, b, c = np.roll(p, 1, axis=0), p, np.roll(p, -1, axis=0)
    ab, bc, ca = (np.linalg.norm(x, axis=-1) for x in (b - a, c - b, a - c))
    area = 0.5 * np.abs(planar._cross2(b - a, c - a))
    circum = ab * bc * ca / (4 * area)
    rho = h.radius_of_curvature(th)
    assert np.max(np.abs(circum / rho - 1)) < 1e-4


# vertices -------------------------------------------------------------------


def test_vertices_third_harmonic():
    v = find_vertices(H3)
    assert len(v) == 6
    assert np.array(v) == pytest.approx(np.arange(6) * math.pi / 3, abs=1e-12)


def test_vertices_ellipse_on_axes():
    v = find_vertices(EllipseSupport(2.0, 1.0))
    assert np.array(v) == pytest.approx(np.arange(4) * math.pi / 2, abs=1e-12)


def test_circle_vertices_are_degenerate():
    with pytest.raises(NonGenericError):
        find_vertices(SupportFunction(1.0))


def test_double_root_is_non_generic():
    # h''' + h' = 6 a2 sin 2t + 24 a3 sin 3t; its zero at 0 is non-simple when 12 a2 + 72 a3 = 0
    h = SupportFunction(1.0, ((2, 0.03, 0.0), (3, -0.005, 0.0)))
    with pytest.raises(NonGenericError):
        find_vertices(h)


@SLOW
@given(ovals())
def test_vertex_count_even_and_at_least_four(h):
    try:
        v = find_vertices(h)
    except NonGenericError:
        assume(False)
    assert len(v) >= 4 and len(v) % 2 == 0
    assert np.max(np.abs(h.vertex_function(np.array(v)))) < 1e-10


@SLOW
@given(ovals(), st.floats(0, 2 * math.pi))
def test_vertex_on_each_half_turn(h, theta):
    try:
        v = np.array(find_vertices(h))
    except NonGenericError:
        assume(False)
    rel = (v - theta) % (2 * math.pi)
    assert np.any(rel < math.pi) and np.any(rel > math.pi)


# turning numbers ------------------------------------------------------------


def test_circle_turning_both_orientations():
    assert turning_number(circle_curve(64)).rotation_index == 1
    assert turning_number(circle_curve(64, -1.0)).rotation_index == -1


def test_turning_report_fields():
    rep = turning_number(circle_curve(64))
    assert rep.cusp_count == 0
    assert rep.total == pytest.approx(2 * math.pi)
    assert abs(rep.residual) < 1e-12


def test_fineness_violation_refused():
    with pytest.raises(FinenessError):
        turning_number(circle_curve(3))


def test_astroid_turning():
    # astroid (cos^3, sin^3): four cusps, standard orientation gives i = 1
    arcs, cusps = [], []
    for k in range(4):
        t = np.linspace(k * math.pi / 2, (k + 1) * math.pi / 2, 65)
        pts = np.stack([np.cos(t) ** 3, np.sin(t) ** 3], axis=-1)
        # velocity is 3 sin t cos t (-cos t, sin t); its sign flips on every arc
        s = 1.0 if k % 2 == 0 else -1.0
        tan = s * np.stack([-np.cos(t), np.sin(t)], axis=-1)
        arcs.append(Arc(t, pts, tan))
        cusps.append(Cusp(float(t[-1]), tuple(pts[-1])))
    rep = turning_number(CuspedCurve(arcs, cusps))
    assert (rep.cusp_count, rep.rotation_index) == (4, 1)


@st.composite
def closed_curves(draw):
    terms = draw(st.lists(st.tuples(st.integers(-3, 3), st.floats(0.05, 1.0), st.floats(0, 6.28)),
                          min_size=1, max_size=3))
    return terms


@SLOW
@given(closed_curves())
def test_turning_stable_under_refinement(terms):
    def curve(m):
        t = np.linspace(0, 2 * math.pi, m, endpoint=False)
        z = sum(a * np.exp(1j * (k * t + ph)) for k, a, ph in terms)
        dz = sum(1j * k * a * np.exp(1j * (k * t + ph)) for k, a, ph in terms)
        return t, z, dz

    _, _, dz = curve(4096)
    assume(np.min(np.abs(dz)) > 0.05)
    out = []
    for m in (1024, 2048):
        t, z, dz = curve(m)
        c = planar.polyline_from_samples(t, np.stack([z.real, z.imag], -1),
                                         np.stack([dz.real, dz.imag], -1))
        out.append(turning_number(c).rotation_index)
    assert out[0] == out[1]


def test_curve_rotation_index_examples():
    assert planar.curve_rotation_index(LimaconCurve(1.0, 2.0)) == -2
    assert planar.curve_rotation_index(EllipseCurve(1.0, 1.0)) == -1
    assert planar.curve_rotation_index(planar.OvalCurve(H3)) == -1


@SLOW
@given(ovals())
def test_any_oval_has_rotation_index_minus_one(h):
    assert planar.curve_rotation_index(planar.OvalCurve(h), samples=1024) == -1


# intersections and winding --------------------------------------------------


def test_figure_eight_single_crossing():
    hits = planar.self_intersections(figure_eight())
    assert len(hits) == 1
    assert hits[0].point == pytest.approx((0.0, 0.0), abs=1e-9)
    assert not hits[0].ambiguous


def test_simple_curve_has_no_crossings():
    assert planar.self_intersections(circle_curve(256)) == []


def test_winding_number_circle():
    poly = circle_curve(128).polyline()[1]
    w = planar.winding_number(poly, np.array([[0.0, 0.0], [2.0, 0.0], [0.3, -0.2]]))
    assert w == pytest.approx([1.0, 0.0, 1.0])
