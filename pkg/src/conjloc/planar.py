"""Plane curves: support functions, parametric families, cusped curves.

Ovals are described by their support function ``h(theta)``, the distance from
the origin to the tangent line whose outward normal is ``(cos theta, sin
theta)``. The oval point with that normal is ``h n + h' t`` and the radius of
curvature is ``h'' + h``.

Orientation convention: plane ovals (and generally curves with nowhere-zero
curvature) are traversed so that their signed curvature is negative, i.e.
clockwise for an oval. For a support-function oval this means *decreasing*
theta. Cusped curves are stored in their standard orientation, in which every
smooth arc turns clockwise and each cusp adds +pi to the tangent angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    FinenessError,
    NonGenericError,
    NotAnOvalError,
    RegularityError,
    TurningResidualError,
)

TWO_PI = 2.0 * math.pi

#: scan grid used to bracket roots in theta
SCAN_SAMPLES = 4096


def _rot90(v):
    """Rotate 2-vectors (last axis) by +90 degrees."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _unit_normal(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


# ---------------------------------------------------------------------------
# support functions
# ---------------------------------------------------------------------------


class _SupportBase:
    """Shared oval machinery; subclasses provide ``derivatives``."""

    family = "support"

    def derivatives(self, theta, order: int = 3) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, theta):
        return self.derivatives(theta, 0)[0]

    def radius_of_curvature(self, theta):
        d = self.derivatives(theta, 2)
        return d[2] + d[0]

    def vertex_function(self, theta):
        """``h''' + h'``; its zeros are the vertices of the oval."""
        d = self.derivatives(theta, 3)
        return d[3] + d[1]

    @cached_property
    def min_radius_of_curvature(self) -> float:
        theta = np.linspace(0.0, TWO_PI, SCAN_SAMPLES, endpoint=False)
        return float(np.min(self.radius_of_curvature(theta)))

    @property
    def is_oval(self) -> bool:
        return self.min_radius_of_curvature > 0.0

    def require_oval(self) -> None:
        if not self.is_oval:
            raise NotAnOvalError(
                f"h''+h has minimum {self.min_radius_of_curvature:.6g} <= 0; "
                "support function does not describe a strictly convex curve"
            )

    @property
    def scale(self) -> float:
        theta = np.linspace(0.0, TWO_PI, 256, endpoint=False)
        return float(np.max(np.abs(self(theta))))


@dataclass(frozen=True)
class SupportFunction(_SupportBase):
    """Finite Fourier support function ``a0 + sum a_k cos k t + b_k sin k t``.

    ``harmonics`` is a sequence of ``(k, a_k, b_k)`` with integer ``k >= 1``.
    """

    a0: float
    harmonics: tuple = ()
    family = "fourier"

    def __post_init__(self):
        hs = []
        for entry in self.harmonics:
            k, a, b = entry
            if int(k) != k or k < 1:
                raise ValueError(f"harmonic order must be an integer >= 1, got {k}")
            hs.append((int(k), float(a), float(b)))
        object.__setattr__(self, "harmonics", tuple(hs))
        object.__setattr__(self, "a0", float(self.a0))

    def derivatives(self, theta, order: int = 3) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros((order + 1,) + theta.shape)
        out[0] += self.a0
        for k, a, b in self.harmonics:
            for m in range(order + 1):
                phase = k * theta + m * math.pi / 2.0
                out[m] += k**m * (a * np.cos(phase) + b * np.sin(phase))
        return out

    def to_json(self) -> dict:
        return {"a0": self.a0, "harmonics": [list(h) for h in self.harmonics]}


@dataclass(frozen=True)
class EllipseSupport(_SupportBase):
    """Support function of the ellipse with semi-axes ``a`` (x) and ``b`` (y)."""

    a: float
    b: float
    family = "ellipse"

    def derivatives(self, theta, order: int = 3) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        # h^2 = g = A + B cos 2t
        A = 0.5 * (self.a**2 + self.b**2)
        B = 0.5 * (self.a**2 - self.b**2)
        g = [A + B * np.cos(2 * theta)]
        for m in range(1, order + 1):
            g.append(B * 2.0**m * np.cos(2 * theta + m * math.pi / 2.0))
        h = [np.sqrt(g[0])]
        for m in range(1, order + 1):
            acc = g[m].copy()
            for i in range(1, m):
                acc = acc - math.comb(m, i) * h[i] * h[m - i]
            h.append(acc / (2.0 * h[0]))
        return np.stack(h)

    def to_json(self) -> dict:
        return {"family": "ellipse", "a": self.a, "b": self.b}


def eval_support(h: _SupportBase, theta: float) -> tuple[float, float, float, float]:
    """Return ``(h, h', h'', h''')`` at ``theta`` by exact differentiation."""
    d = h.derivatives(theta, 3)
    return tuple(float(x) for x in d)


def oval_point(h: _SupportBase, theta):
    """Oval point whose outward normal is ``(cos theta, sin theta)``."""
    h.require_oval()
    d = h.derivatives(theta, 1)
    n = _unit_normal(theta)
    return d[0][..., None] * n + d[1][..., None] * _rot90(n)


def _scan_roots(f, lo, hi, samples, scale, what, deriv=None):
    """Bracket sign changes of ``f`` on a periodic grid and refine them."""
    grid = np.linspace(lo, hi, samples, endpoint=False)
    vals = f(grid)
    if np.max(np.abs(vals)) <= 1e-12 * scale:
        raise NonGenericError(f"degenerate: {what} vanishes identically")
    sgn = np.where(vals >= 0.0, 1, -1)
    nxt = np.roll(sgn, -1)
    roots = []
    period = hi - lo
    for k in np.nonzero(sgn != nxt)[0]:
        a = grid[k]
        b = grid[k + 1] if k + 1 < samples else hi
        fa = float(vals[k])
        fb = float(vals[(k + 1) % samples])
        if fa == 0.0:
            r = a
        elif fb == 0.0:
            r = b
        else:
            r = brentq(lambda x: float(f(np.array(x))), a, b, xtol=1e-15)
        roots.append(lo + math.fmod(r - lo, period))
    roots = sorted(roots)
    # a sign change straddling an exact grid zero can be reported twice
    dedup = []
    for r in roots:
        if not dedup or r - dedup[-1] > 1e-9:
            dedup.append(r)
    if len(dedup) > 1 and dedup[0] + period - dedup[-1] <= 1e-9:
        dedup.pop()
    if deriv is not None:
        for r in dedup:
            if abs(float(deriv(np.array(r)))) < 1e-6 * scale:
                raise NonGenericError(f"non-generic input: double zero of {what} at {r:.12g}")
    return dedup


def find_vertices(h: _SupportBase, samples: int = SCAN_SAMPLES) -> list[float]:
    """Sorted simple zeros of ``h''' + h'`` in ``[0, 2 pi)``."""
    h.require_oval()

    def deriv(t):
        d = h.derivatives(t, 4)
        return d[4] + d[2]

    return _scan_roots(h.vertex_function, 0.0, TWO_PI, samples, h.scale,
                       "h'''+h'", deriv)


# ---------------------------------------------------------------------------
# parametric curves
# ---------------------------------------------------------------------------


class ParametricCurve:
    """Closed curve on ``t in [0, 2 pi)`` with analytic derivatives.

    Subclasses implement ``derivatives(t)`` returning ``(pos, vel, acc,
    jerk)``, each of shape ``t.shape + (2,)``.
    """

    family = "curve"

    def derivatives(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.derivatives(t)[0]

    def curvature(self, t):
        """Signed curvature for increasing ``t`` and its ``t``-derivative."""
        _, v, a, j = self.derivatives(t)
        speed2 = np.sum(v * v, axis=-1)
        speed = np.sqrt(speed2)
        c = _cross2(v, a)
        k = c / speed**3
        dk = _cross2(v, j) / speed**3 - 3.0 * c * np.sum(v * a, axis=-1) / speed**5
        return k, dk

    @property
    def scale(self) -> float:
        t = np.linspace(0.0, TWO_PI, 256, endpoint=False)
        return float(np.max(np.linalg.norm(self(t), axis=-1)))


@dataclass(frozen=True)
class EllipseCurve(ParametricCurve):
    a: float
    b: float
    family = "ellipse"

    def derivatives(self, t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(t), np.sin(t)
        ax = np.array([self.a, self.b])
        pos = np.stack([c, s], -1) * ax
        vel = np.stack([-s, c], -1) * ax
        return pos, vel, -pos, -vel

    def to_json(self) -> dict:
        return {"family": "ellipse", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class LimaconCurve(ParametricCurve):
    """``r = a + b cos t`` in polar form; has an inner loop when ``b > a``."""

    a: float
    b: float
    family = "limacon"

    def derivatives(self, t):
        t = np.asarray(t, dtype=float)
        a, hb = self.a, 0.5 * self.b
        # x = a cos t + hb (1 + cos 2t), y = a sin t + hb sin 2t
        out = []
        for m in range(4):
            ph = m * math.pi / 2.0
            x = a * np.cos(t + ph) + hb * 2.0**m * np.cos(2 * t + ph)
            y = a * np.sin(t + ph) + hb * 2.0**m * np.sin(2 * t + ph)
            if m == 0:
                x = x + hb
            out.append(np.stack([x, y], -1))
        return tuple(out)

    def to_json(self) -> dict:
        return {"family": "limacon", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class OvalCurve(ParametricCurve):
    """An oval parametrized by its normal angle, built from a support function."""

    support: _SupportBase
    family = "oval"

    def derivatives(self, t):
        t = np.asarray(t, dtype=float)
        d = self.support.derivatives(t, 4)
        rho, drho, ddrho = d[2] + d[0], d[3] + d[1], d[4] + d[2]
        n = _unit_normal(t)
        tt = _rot90(n)
        pos = d[0][..., None] * n + d[1][..., None] * tt
        vel = rho[..., None] * tt
        acc = drho[..., None] * tt - rho[..., None] * n
        jerk = (ddrho - rho)[..., None] * tt - 2.0 * drho[..., None] * n
        return pos, vel, acc, jerk


# ---------------------------------------------------------------------------
# cusped curves and turning
# ---------------------------------------------------------------------------


@dataclass
class Arc:
    """Sampled smooth arc. ``tangents`` are unit vectors in traversal order."""

    params: np.ndarray
    points: np.ndarray
    tangents: np.ndarray

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        t = np.asarray(self.tangents, dtype=float)
        self.tangents = t / np.linalg.norm(t, axis=-1, keepdims=True)

    def __len__(self):
        return len(self.params)

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=-1)))


@dataclass(frozen=True)
class Cusp:
    param: float
    point: tuple
    ordinary: bool = True


@dataclass
class CuspedCurve:
    """Closed piecewise-smooth curve; ``cusps[k]`` joins ``arcs[k]`` to ``arcs[k+1]``.

    A curve without cusps has exactly one arc, which is closed on itself (its
    last sample is *not* a repeat of the first).
    """

    arcs: list
    cusps: list = field(default_factory=list)
    closed: bool = True

    def __post_init__(self):
        if self.cusps and len(self.cusps) != len(self.arcs):
            raise ValueError("a closed cusped curve needs as many arcs as cusps")
        if not self.cusps and len(self.arcs) != 1:
            raise ValueError("a cusp-free closed curve must be a single arc")

    @property
    def n_cusps(self) -> int:
        return len(self.cusps)

    def polyline(self):
        """Concatenated ``(params, points, arc_id)`` with shared cusp points once."""
        params, points, ids = [], [], []
        for k, arc in enumerate(self.arcs):
            sl = slice(0, len(arc) - 1) if self.cusps else slice(None)
            params.append(arc.params[sl])
            points.append(arc.points[sl])
            ids.append(np.full(len(arc.params[sl]), k))
        return np.concatenate(params), np.concatenate(points), np.concatenate(ids)


@dataclass(frozen=True)
class TurningReport:
    rotation_index: int
    arc_turning: tuple
    cusp_count: int
    total: float
    residual: float


def _turning_steps(tangents, closed=False):
    t0 = tangents
    t1 = np.roll(tangents, -1, axis=0) if closed else tangents[1:]
    if not closed:
        t0 = tangents[:-1]
    return np.arctan2(_cross2(t0, t1), np.sum(t0 * t1, axis=-1))


def turning_number(c: CuspedCurve) -> TurningReport:
    """Rotation index of a closed cusped curve (each cusp contributes +pi)."""
    if not c.closed:
        raise ValueError("turning number needs a closed curve")
    closed_arc = not c.cusps
    per_arc = []
    for k, arc in enumerate(c.arcs):
        steps = _turning_steps(arc.tangents, closed=closed_arc)
        bad = np.nonzero(np.abs(steps) >= math.pi / 2.0)[0]
        if bad.size:
            raise FinenessError(
                f"turning step of {steps[bad[0]]:.3f} rad on arc {k} at sample {bad[0]}; "
                "resample more finely",
                arc=k,
                index=int(bad[0]),
            )
        per_arc.append(float(np.sum(steps)))
    n = c.n_cusps
    total = sum(per_arc) + n * math.pi
    ratio = total / TWO_PI
    i = int(round(ratio))
    residual = abs(ratio - i) * TWO_PI
    if residual > 0.05 * TWO_PI:
        raise TurningResidualError(f"total turning {total:.6f} is not a multiple of 2 pi")
    return TurningReport(i, tuple(per_arc), n, total, residual)


def _clockwise_sign(curve: ParametricCurve, t) -> int:
    """+1 if increasing ``t`` already has negative curvature, else -1."""
    k, _ = curve.curvature(t)
    if np.all(k > 0):
        return -1
    return 1


def curve_rotation_index(curve: ParametricCurve, samples: int = SCAN_SAMPLES) -> int:
    """Rotation index under the negative-curvature orientation.

    Curves whose curvature changes sign keep their given parametrization.
    """
    while True:
        t = np.linspace(0.0, TWO_PI, samples, endpoint=False)
        _, v, _, _ = curve.derivatives(t)
        speed = np.linalg.norm(v, axis=-1)
        if np.min(speed) <= 1e-12 * max(curve.scale, 1.0):
            raise RegularityError("curve velocity vanishes")
        steps = _turning_steps(v / speed[:, None], closed=True)
        if np.max(np.abs(steps)) < math.pi / 2.0:
            break
        samples *= 2
        if samples > 2**20:
            raise FinenessError("cannot resolve curve turning with 2**20 samples")
    total = float(np.sum(steps)) * _clockwise_sign(curve, t)
    return int(round(total / TWO_PI))


# ---------------------------------------------------------------------------
# intersections and winding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Intersection:
    param1: float
    param2: float
    point: tuple
    arc1: int
    arc2: int
    ambiguous: bool = False


def _segment_intersections(P, closed=True, chunk=512):
    """All transversal crossings between non-adjacent segments of a polyline.

    Returns index pairs ``(i, j)`` with ``i < j`` and the fractional positions
    ``(u, v)`` along each segment, using half-open segments ``[0, 1)``.
    """
    A = P
    B = np.roll(P, -1, axis=0) if closed else P[1:]
    if not closed:
        A = P[:-1]
    m = len(A)
    lo = np.minimum(A, B)
    hi = np.maximum(A, B)
    D = B - A
    out_i, out_j, out_u, out_v = [], [], [], []
    for s in range(0, m, chunk):
        I = np.arange(s, min(s + chunk, m))
        ov = (
            (lo[I, None, 0] <= hi[None, :, 0])
            & (lo[None, :, 0] <= hi[I, None, 0])
            & (lo[I, None, 1] <= hi[None, :, 1])
            & (lo[None, :, 1] <= hi[I, None, 1])
        )
        ov &= np.arange(m)[None, :] > I[:, None] + 1
        if closed:
            ov[(I == 0), m - 1] = False
        ii, jj = np.nonzero(ov)
        if ii.size == 0:
            continue
        ii = I[ii]
        d1, d2 = D[ii], D[jj]
        den = _cross2(d1, d2)
        w = A[jj] - A[ii]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = _cross2(w, d2) / den
            v = _cross2(w, d1) / den
        ok = (den != 0) & (u >= 0) & (u < 1) & (v >= 0) & (v < 1)
        out_i.append(ii[ok])
        out_j.append(jj[ok])
        out_u.append(u[ok])
        out_v.append(v[ok])
    if not out_i:
        e = np.zeros(0)
        return e.astype(int), e.astype(int), e, e
    return (np.concatenate(out_i), np.concatenate(out_j),
            np.concatenate(out_u), np.concatenate(out_v))


def self_intersections(c: CuspedCurve, same_arc_only: bool = False,
                       angle_tol: float = 1e-4) -> list[Intersection]:
    """Crossings of the sampled curve with itself.

    With ``same_arc_only`` only crossings of an arc with itself (smooth loops)
    are returned. Crossings at an angle below ``angle_tol`` are returned with
    ``ambiguous=True``.
    """
    params, P, ids = c.polyline()
    m = len(P)
    ii, jj, uu, vv = _segment_intersections(P, closed=c.closed)
    nxt = np.roll(np.arange(m), -1)
    result = []
    seen = []
    tol = 1e-9 * max(1.0, float(np.max(np.abs(P))))
    for i, j, u, v in zip(ii, jj, uu, vv):
        a1, a2 = int(ids[i]), int(ids[j])
        if same_arc_only and a1 != a2:
            continue
        X = P[i] + u * (P[nxt[i]] - P[i])
        # a crossing through a shared vertex shows up on both neighbouring segments
        if any(_adjacent(i, j, k, l, m) and np.linalg.norm(X - Y) < tol for k, l, Y in seen):
            continue
        seen.append((i, j, X))
        # segment i runs from sample i to sample i+1 (possibly across an arc end)
        di = P[nxt[i]] - P[i]
        dj = P[nxt[j]] - P[j]
        ang = abs(math.atan2(_cross2(di, dj), float(np.dot(di, dj))))
        ang = min(ang, math.pi - ang)
        pi_end = _segment_end_param(c, params, ids, i)
        pj_end = _segment_end_param(c, params, ids, j)
        result.append(Intersection(
            param1=float(params[i] + u * (pi_end - params[i])),
            param2=float(params[j] + v * (pj_end - params[j])),
            point=tuple(float(x) for x in P[i] + u * di),
            arc1=a1,
            arc2=a2,
            ambiguous=bool(ang < angle_tol),
        ))
    return result


def _adjacent(i, j, k, l, m):
    def near(a, b):
        d = abs(a - b) % m
        return min(d, m - d) <= 1

    return (near(i, k) and near(j, l)) or (near(i, l) and near(j, k))


def _segment_end_param(c, params, ids, i):
    if i + 1 < len(params) and ids[i + 1] == ids[i]:
        return params[i + 1]
    arc = c.arcs[int(ids[i])]
    return arc.params[-1] if c.cusps else arc.params[0]


def winding_number(polygon, points) -> np.ndarray:
    """Winding number of the closed polygon around each query point."""
    poly = np.asarray(polygon, dtype=float)
    q = np.atleast_2d(np.asarray(points, dtype=float))
    total = np.zeros(len(q))
    nxt = np.roll(poly, -1, axis=0)
    for a, b in zip(poly, nxt):
        va = a[None, :] - q
        vb = b[None, :] - q
        total += np.arctan2(_cross2(va, vb), np.sum(va * vb, axis=-1))
    return np.rint(total / TWO_PI).astype(int)


def polyline_from_samples(params: Sequence[float], points, tangents) -> CuspedCurve:
    """Wrap a smooth closed sampled curve as a cusp-free ``CuspedCurve``."""
    return CuspedCurve([Arc(params, points, tangents)], [])
