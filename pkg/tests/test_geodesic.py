import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conjloc.errors import NonGenericPointWarning
from conjloc.geodesic import (
    conjugate_batch,
    conjugate_distance,
    distance_curve,
    shoot,
)
from conjloc.surface import Ellipsoid, Sphere, base_point, tangent_frame

E = Ellipsoid(1.0, 1.2, 1.5)
FR = tangent_frame(E, base_point(E, 0.7, 0.5))


@pytest.fixture(scope="module")
def curve():
    return distance_curve(E, FR, 1, 1024)


def sphere_frame(r=1.0):
    S = Sphere(r)
    return S, tangent_frame(S, base_point(S, 0.4, 0.3))


def test_sphere_jacobi_field_is_sine():
    S, fr = sphere_frame()
    g = shoot(S, fr, 0.3, math.pi)
    assert np.max(np.abs(g.xi - np.sin(g.s))) < 1e-8
    assert np.max(np.abs(g.xi_s - np.cos(g.s))) < 1e-8
    # the geodesic ends at the antipode
    assert g.x[-1] == pytest.approx(-fr.p, abs=1e-8)


def test_sphere_conjugate_point():
    S, fr = sphere_frame()
    R, xs = conjugate_distance(S, fr, 1.1)
    assert R == pytest.approx(math.pi, abs=1e-8)
    assert xs == pytest.approx(-1.0, abs=1e-8)
    R3, xs3 = conjugate_distance(S, fr, 1.1, j=3)
    assert R3 == pytest.approx(3 * math.pi, abs=1e-7)
    assert xs3 == pytest.approx(-1.0, abs=1e-7)


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_sphere_radius_scales_distance(r):
    S, fr = sphere_frame(r)
    R, _ = conjugate_batch(S, fr, np.linspace(0, 6, 5))
    assert R == pytest.approx(math.pi * r, rel=1e-8)


def test_constraints_preserved_along_path():
    g = shoot(E, FR, 2.0, 6.0)
    assert np.max(np.abs(E.value(g.x))) < 1e-9
    assert np.max(np.abs(np.linalg.norm(g.v, axis=-1) - 1)) < 1e-9
    assert np.max(np.abs(np.sum(g.v * E.grad(g.x), axis=-1))) < 1e-9


def test_principal_section_geodesic_stays_planar():
    # base point on the z = 0 section, launched along the section
    p = base_point(E, 0.9, 0.0)
    fr = tangent_frame(E, p, np.array([0.0, 0.0, 1.0]))
    assert abs(fr.e2[2]) < 1e-15
    g = shoot(E, fr, math.pi / 2, 8.0)
    assert np.max(np.abs(g.x[:, 2])) < 1e-12


def test_reflection_symmetry_on_principal_section():
    p = base_point(E, 0.9, 0.0)
    fr = tangent_frame(E, p, np.array([0.0, 0.0, 1.0]))
    d = distance_curve(E, fr, 1, 256)
    k = np.arange(256)
    assert d.R == pytest.approx(d.R[(128 - k) % 256], abs=1e-9)


def test_shoot_rejects_bad_arguments():
    with pytest.raises(ValueError):
        shoot(E, FR, 0.0, -1.0)
    with pytest.raises(ValueError):
        conjugate_distance(E, FR, 0.0, j=0)
    with pytest.raises(ValueError):
        distance_curve(E, FR, 1, 128)


def test_sphere_curve_is_degenerate():
    S, fr = sphere_frame()
    with pytest.warns(NonGenericPointWarning):
        d = distance_curve(S, fr, 1, 256)
    assert d.degenerate and not d.generic
    assert d.stationary == []


def test_ellipsoid_has_four_nondegenerate_stationary_points(curve):
    assert curve.generic
    assert len(curve.stationary) == 4
    kinds = [sp.kind for sp in curve.stationary]
    assert sorted(kinds) == ["max", "max", "min", "min"]
    # stationary points sit between grid samples: R' vanishes there
    psi = np.array([sp.psi for sp in curve.stationary])
    assert np.max(np.abs(curve.derivative(psi))) < 1e-6
    # maxima and minima alternate
    assert all(a != b for a, b in zip(kinds, kinds[1:] + kinds[:1]))


def test_spectral_derivative_matches_finite_difference(curve):
    step = curve.psi[1]
    fd = (np.roll(curve.R, -1) - np.roll(curve.R, 1)) / (2 * step)
    assert curve.derivative() == pytest.approx(fd, abs=1e-4)


def test_annulus(curve):
    kmin, kmax = E.curvature_bounds
    assert np.all(curve.R >= math.pi / math.sqrt(kmax))
    assert np.all(curve.R <= math.pi / math.sqrt(kmin))


@pytest.mark.parametrize("j", [1, 2, 3])
def test_xi_s_sign_alternates_with_order(j):
    psi = np.linspace(0, 2 * math.pi, 16, endpoint=False)
    R, end = conjugate_batch(E, FR, psi, j)
    assert np.all(np.sign(end[:, 7]) == (-1) ** j)
    assert np.max(np.abs(end[:, 6])) < 1e-12
    kmin, kmax = E.curvature_bounds
    assert np.all(R >= j * math.pi / math.sqrt(kmax))
    assert np.all(R <= j * math.pi / math.sqrt(kmin))


def test_stationary_points_stable_under_tolerance_halving(curve):
    d2 = distance_curve(E, FR, 1, 1024, rtol=curve.rtol / 2)
    assert np.max(np.abs(d2.R - curve.R)) < 1e-8
    for a, b in zip(curve.stationary, d2.stationary):
        assert abs(a.R - b.R) < 1e-8


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(-1.3, 1.3), st.floats(0, 2 * math.pi))
def test_conjugate_distance_in_annulus_anywhere(u, v, psi):
    fr = tangent_frame(E, base_point(E, u, v))
    R, xs = conjugate_distance(E, fr, psi)
    kmin, kmax = E.curvature_bounds
    assert math.pi / math.sqrt(kmax) <= R <= math.pi / math.sqrt(kmin)
    assert xs < 0


def test_warning_only_for_degenerate_points(curve):
    with warnings.catch_warnings():
        warnings.simplefilter("error", NonGenericPointWarning)
        distance_curve(E, FR, 1, 256)
