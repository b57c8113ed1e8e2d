"""Evolutes of plane curves and the checks on their cusps, arcs and turning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import brentq

from . import planar
from .errors import (
    CurvatureZeroError,
    FinenessError,
    NonGenericError,
    QuadratureError,
)
from .planar import (
    TWO_PI,
    Arc,
    Cusp,
    CuspedCurve,
    ParametricCurve,
    _cross2,
    _rot90,
    _unit_normal,
)

Source = Union[planar._SupportBase, ParametricCurve]


@dataclass
class Evolute:
    source: Source
    curve: CuspedCurve
    vertex_params: list
    i: int
    n: int
    I: int = -1  # rotation index of the source curve (clockwise orientation)
    turning: planar.TurningReport | None = None

    @property
    def relation_ok(self) -> bool:
        return 2 * self.i == self.n + 2 * self.I


@dataclass(frozen=True)
class DegenerateEvolute:
    """Evolute collapsed to a single point (the source is a circle)."""

    source: Source
    point: tuple

    n = 0
    i = None


def _arc_samples(lo, hi, total, samples):
    m = max(16, int(math.ceil(samples * (hi - lo) / total)))
    return np.linspace(lo, hi, m + 1)


def _assemble(vertices, period, samples, evaluate):
    """Build a standard-orientation cusped curve from ascending cusp params.

    ``evaluate(params)`` receives the params of one arc in decreasing order and
    returns ``(points, tangents)`` with tangents oriented along that traversal.
    """
    n = len(vertices)
    arcs_up = []
    for k in range(n):
        lo = vertices[k]
        hi = vertices[k + 1] if k + 1 < n else vertices[0] + period
        arcs_up.append(_arc_samples(lo, hi, period, samples))
    arcs, cusps = [], []
    for k in reversed(range(n)):
        t = arcs_up[k][::-1]
        pts, tan = evaluate(t)
        arcs.append(Arc(t, pts, tan))
        end = vertices[k]
        cusps.append(Cusp(float(end), tuple(float(x) for x in pts[-1])))
    # cusps[k] joins arcs[k] to arcs[k+1]; the last cusp closes onto the first arc
    return CuspedCurve(arcs, cusps)


def _with_refinement(build, samples):
    while True:
        try:
            curve = build(samples)
            return curve, planar.turning_number(curve)
        except FinenessError:
            samples *= 2
            if samples > 2**20:
                raise


def evolute_of_oval(h: planar._SupportBase, samples: int = 4096):
    """Evolute of an oval as the locus of its centres of curvature."""
    h.require_oval()
    try:
        vertices = planar.find_vertices(h)
    except NonGenericError as exc:
        if "identically" in str(exc):
            return DegenerateEvolute(h, tuple(float(x) for x in _centre_of_curvature(h, 0.0)))
        raise

    def evaluate(theta):
        d = h.derivatives(theta, 3)
        rho, drho = d[2] + d[0], d[3] + d[1]
        n = _unit_normal(theta)
        pts = d[0][..., None] * n + d[1][..., None] * _rot90(n) - rho[..., None] * n
        # beta'(theta) = -rho' n; traversal runs with decreasing theta
        sign = np.sign(np.median(drho[1:-1]))
        return pts, sign * n

    def build(m):
        return _assemble(vertices, TWO_PI, m, evaluate)

    curve, report = _with_refinement(build, samples)
    n = len(vertices)
    return Evolute(h, curve, list(vertices), report.rotation_index, n, -1, report)


def _centre_of_curvature(h, theta):
    d = h.derivatives(theta, 2)
    n = _unit_normal(theta)
    return d[0] * n + d[1] * _rot90(n) - (d[2] + d[0]) * n


def evolute_of_curve(curve: ParametricCurve, samples: int = 4096):
    """Evolute ``gamma + N / k`` of a closed curve with nowhere-zero curvature."""
    grid = np.linspace(0.0, TWO_PI, planar.SCAN_SAMPLES, endpoint=False)
    k, dk = curve.curvature(grid)
    if np.any(np.sign(k) != np.sign(k[0])) or np.any(k == 0):
        idx = int(np.nonzero(np.sign(k) != np.sign(k[0]))[0][0])
        a, b = grid[idx - 1], grid[idx]
        loc = brentq(lambda t: float(curve.curvature(np.array(t))[0]), a, b)
        raise CurvatureZeroError(f"curvature vanishes near t={loc:.9g}", location=loc)
    direction = -1 if k[0] > 0 else 1
    scale = float(np.max(np.abs(dk))) + 1.0
    if np.max(np.abs(dk)) <= 1e-12 * scale:
        pos, vel, _, _ = curve.derivatives(np.array(0.0))
        kk = float(k[0])
        centre = pos + _rot90(vel / np.linalg.norm(vel)) / kk
        return DegenerateEvolute(curve, tuple(float(x) for x in centre))

    def dk_fn(t):
        return curve.curvature(t)[1]

    def ddk_fn(t):
        eps = 1e-5
        return (dk_fn(t + eps) - dk_fn(t - eps)) / (2 * eps)

    cusps = planar._scan_roots(dk_fn, 0.0, TWO_PI, planar.SCAN_SAMPLES,
                               float(np.max(np.abs(dk))), "dk/dt", ddk_fn)

    def evaluate(t):
        pos, vel, _, _ = curve.derivatives(t)
        kk, dkk = curve.curvature(t)
        N = _rot90(vel / np.linalg.norm(vel, axis=-1, keepdims=True))
        pts = pos + N / kk[..., None]
        # beta' = -(k'/k^2) N per unit t; tangents are for decreasing parameter,
        # which is decreasing t when direction == -1 and increasing t otherwise
        sign = np.sign(np.median(dkk[1:-1]))
        return pts, (-direction * sign) * N

    if direction == 1:
        # increasing t already runs clockwise: assemble on -t
        def evaluate_rev(s):
            pts, tan = evaluate(-s)
            return pts, tan

        neg = sorted((-c) % TWO_PI for c in cusps)

        def build(m):
            return _assemble(neg, TWO_PI, m, evaluate_rev)
    else:
        def build(m):
            return _assemble(cusps, TWO_PI, m, evaluate)

    built, report = _with_refinement(build, samples)
    I = planar.curve_rotation_index(curve)
    return Evolute(curve, built, list(cusps), report.rotation_index, len(cusps), I, report)


# ---------------------------------------------------------------------------
# arc and vertex checks
# ---------------------------------------------------------------------------


def _gauss_composite(f, a, b, panels):
    x, w = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return float(np.sum(f(nodes) * w[None, :] * half[:, None]))


def _converged_quad(f, a, b):
    coarse = _gauss_composite(f, a, b, 32)
    fine = _gauss_composite(f, a, b, 64)
    if abs(fine - coarse) > 1e-9 * max(1.0, abs(fine)):
        raise QuadratureError(f"quadrature changed by {abs(fine - coarse):.3g} under refinement")
    return fine


def lemma1_check(h: planar._SupportBase, vertex_index: int) -> tuple[float, float]:
    """Total curvature of an oval segment and of the matching evolute arc.

    The oval segment runs between vertices ``vertex_index`` and the next one,
    traversed clockwise; the evolute arc is traversed the opposite way. The two
    totals have equal magnitude and opposite sign.
    """
    h.require_oval()
    vertices = planar.find_vertices(h)
    n = len(vertices)
    a = vertices[vertex_index % n]
    b = vertices[(vertex_index + 1) % n]
    if b <= a:
        b += TWO_PI
    oval = planar.OvalCurve(h)

    def k_gamma_ds(theta):
        # clockwise traversal flips the sign of curvature, not of ds
        _, v, acc, _ = oval.derivatives(theta)
        return -_cross2(v, acc) / np.sum(v * v, axis=-1)

    def k_beta_dsigma(theta):
        d = h.derivatives(theta, 4)
        rho, drho, ddrho = d[2] + d[0], d[3] + d[1], d[4] + d[2]
        n_ = _unit_normal(theta)
        t_ = _rot90(n_)
        db = -drho[..., None] * n_
        ddb = -ddrho[..., None] * n_ - drho[..., None] * t_
        return _cross2(db, ddb) / np.sum(db * db, axis=-1)

    return _converged_quad(k_gamma_ds, a, b), _converged_quad(k_beta_dsigma, a, b)


def arc_total_curvature(e: Evolute, arc_index: int) -> float:
    """Signed total curvature of an evolute arc in standard orientation."""
    arc = e.curve.arcs[arc_index]
    return float(np.sum(planar._turning_steps(arc.tangents)))


def parallel_tangent_partner(h: planar._SupportBase, theta: float) -> float:
    """Support angle of the unique other point with a parallel tangent."""
    h.require_oval()
    return math.fmod(theta + math.pi, TWO_PI)


def vertices_in_halves(h: planar._SupportBase, theta: float) -> tuple[int, int]:
    """Number of vertices on each of the two segments cut at theta and theta+pi."""
    lo = theta % TWO_PI
    count_a = 0
    verts = planar.find_vertices(h)
    for v in verts:
        if (v - lo) % TWO_PI < math.pi:
            count_a += 1
    return count_a, len(verts) - count_a


def vertex_sides_of_normal(h: planar._SupportBase, theta: float, vertices=None) -> tuple[int, int]:
    """Vertices strictly left/right of the normal line at the oval point ``theta``."""
    if vertices is None:
        vertices = planar.find_vertices(h)
    p = planar.oval_point(h, theta)
    n = _unit_normal(theta)
    q = planar.oval_point(h, np.asarray(vertices))
    side = _cross2(n[None, :], q - p[None, :])
    tol = 1e-12 * h.scale
    return int(np.sum(side > tol)), int(np.sum(side < -tol))


def hausdorff_to_curve(points, curve_fn, params, window: int = 2) -> float:
    """Max distance from ``points`` to a parametrized curve sampled at ``params``.

    Each nearest sample is refined by golden-section search on the parameter
    in the neighbouring ``window`` intervals.
    """
    points = np.asarray(points, dtype=float)
    params = np.asarray(params, dtype=float)
    samples = curve_fn(params)
    d2 = np.sum((points[:, None, :] - samples[None, :, :]) ** 2, axis=-1)
    nearest = np.argmin(d2, axis=1)
    lo = params[np.clip(nearest - window, 0, len(params) - 1)]
    hi = params[np.clip(nearest + window, 0, len(params) - 1)]
    g = (math.sqrt(5.0) - 1.0) / 2.0

    def dist(t):
        return np.linalg.norm(curve_fn(t) - points, axis=-1)

    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    fc, fd = dist(c), dist(d)
    for _ in range(80):
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c_new = hi - g * (hi - lo)
        d_new = lo + g * (hi - lo)
        c, d = c_new, d_new
        fc, fd = dist(c), dist(d)
    best = np.minimum(np.minimum(fc, fd), np.sqrt(np.min(d2, axis=1)))
    return float(np.max(best))
