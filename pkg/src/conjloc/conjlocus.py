"""Conjugate loci: assembly, projected rotation index, arc geometry, loops and necks.

The locus is ``beta(psi) = X(R(psi), psi)``; its cusps sit at the stationary
points of ``R``. With ``psi`` measured anticlockwise from ``e1`` (seen from
outside the surface), the standard orientation of the projected curve runs
with *decreasing* ``psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import planar
from .errors import CuspProximityError, FinenessError
from .geodesic import DEFAULT_RTOL, DistanceCurve, conjugate_batch, distance_curve
from .planar import Arc, Cusp, CuspedCurve
from .surface import ImplicitSurface, PlaneProjection, TangentFrame, plane_projection

TWO_PI = 2.0 * math.pi
DELTA_CUSP = 0.05


@dataclass(frozen=True)
class LocusCusp:
    psi: float
    R: float
    point: tuple
    A1: bool


@dataclass
class LocusArc:
    """Samples of one smooth arc in increasing ``psi`` (cusp to cusp)."""

    psi: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    R: np.ndarray
    xi_s: np.ndarray

    @property
    def sign(self) -> int:
        return 1 if self.R[-1] > self.R[0] else -1

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=-1)))

    def insert(self, k, psi, point, tangent, R, xi_s):
        self.psi = np.insert(self.psi, k, psi)
        self.points = np.insert(self.points, k, point, axis=0)
        self.tangents = np.insert(self.tangents, k, tangent, axis=0)
        self.R = np.insert(self.R, k, R)
        self.xi_s = np.insert(self.xi_s, k, xi_s)


@dataclass
class ConjugateLocus:
    j: int
    surface: ImplicitSurface
    frame: TangentFrame
    distance: DistanceCurve
    projection: PlaneProjection
    cusps: list
    arcs: list = field(default_factory=list)
    projected: CuspedCurve | None = None
    i: int | None = None
    turning: planar.TurningReport | None = None
    degenerate: bool = False

    @property
    def n(self) -> int:
        return len(self.cusps)

    @property
    def points(self) -> np.ndarray:
        return self.distance.points

    @property
    def arc_lengths(self) -> list:
        return [a.length for a in self.arcs]

    @property
    def relation_ok(self) -> bool:
        return self.i is not None and 2 * self.i == self.n - 2

    @property
    def rtol(self) -> float:
        return self.distance.rtol


def _project_arc(proj, arc):
    uv, duv = proj.project(arc.points, arc.tangents)
    # d(alpha)/d(-psi) = -R' dPi(T)
    return Arc(arc.psi[::-1], uv[::-1], (-arc.sign * duv)[::-1])


def build_locus(S: ImplicitSurface, frame: TangentFrame, j: int = 1, N: int = 1024,
                distance: DistanceCurve | None = None, rtol: float = DEFAULT_RTOL,
                max_refine: int = 200) -> ConjugateLocus:
    """Assemble the j-th conjugate locus of ``frame.p`` and its projected rotation index."""
    dist = distance if distance is not None else distance_curve(S, frame, j, N, rtol)
    proj = plane_projection(S, frame)
    if dist.degenerate or not dist.stationary:
        return ConjugateLocus(j, S, frame, dist, proj, [], degenerate=True)
    cusps = [LocusCusp(sp.psi, sp.R, sp.point, sp.A1) for sp in dist.stationary]
    n = len(cusps)
    psi = dist.psi
    arcs = []
    for k in range(n):
        sp0 = dist.stationary[k]
        sp1 = dist.stationary[(k + 1) % n]
        lo = sp0.psi
        hi = sp1.psi if k + 1 < n else sp1.psi + TWO_PI
        unwrapped = np.concatenate([psi, psi + TWO_PI])
        idx = np.nonzero((unwrapped > lo) & (unwrapped < hi))[0]
        src = idx % len(psi)
        arcs.append(LocusArc(
            psi=np.concatenate([[lo], unwrapped[idx], [hi]]),
            points=np.vstack([sp0.point, dist.points[src], sp1.point]),
            tangents=np.vstack([sp0.tangent, dist.tangents[src], sp1.tangent]),
            R=np.concatenate([[sp0.R], dist.R[src], [sp1.R]]),
            xi_s=np.concatenate([[sp0.xi_s], dist.xi_s[src], [sp1.xi_s]]),
        ))
    for _ in range(max_refine):
        order = list(reversed(range(n)))
        curve = CuspedCurve(
            [_project_arc(proj, arcs[k]) for k in order],
            [Cusp(float(cusps[k].psi), tuple(map(float, proj(np.array(cusps[k].point)))))
             for k in order],
        )
        try:
            report = planar.turning_number(curve)
            break
        except FinenessError as exc:
            arc = arcs[order[exc.arc]]
            m = len(arc.psi)
            # projected arc is reversed: sample index -> ascending index
            a = m - 2 - exc.index
            mid = 0.5 * (arc.psi[a] + arc.psi[a + 1])
            R, end = conjugate_batch(S, frame, [mid], j, dist.rtol)
            arc.insert(a + 1, mid, end[0, 0:3], end[0, 3:6], R[0], end[0, 7])
    else:
        raise FinenessError("projected locus still too coarse after refinement")
    return ConjugateLocus(j, S, frame, dist, proj, cusps, arcs, curve,
                          report.rotation_index, report)


# ---------------------------------------------------------------------------
# geodesic curvature
# ---------------------------------------------------------------------------


def _cusp_distance(L: ConjugateLocus, psi):
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    if not L.cusps:
        return np.full(psi.shape, np.inf)
    c = np.array([cp.psi for cp in L.cusps])
    d = np.abs((psi[:, None] - c[None, :] + math.pi) % TWO_PI - math.pi)
    return np.min(d, axis=1)


def geodesic_curvature(L: ConjugateLocus, psi, delta_cusp: float = DELTA_CUSP):
    """``xi_s(R(psi), psi) / R'(psi)``, with the sign of the alternating orientation."""
    scalar = np.ndim(psi) == 0
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    if L.degenerate:
        raise CuspProximityError("degenerate locus has no regular points")
    near = _cusp_distance(L, psi) < delta_cusp
    if np.any(near):
        raise CuspProximityError(
            f"psi={psi[near][0]:.6g} is within {delta_cusp} of a cusp; k_g diverges there"
        )
    dist = L.distance
    grid = np.rint(psi / (dist.psi[1] - dist.psi[0])).astype(int)
    on_grid = np.abs(grid * (dist.psi[1] - dist.psi[0]) - psi) < 1e-12
    xi_s = np.empty_like(psi)
    xi_s[on_grid] = dist.xi_s[grid[on_grid] % len(dist.psi)]
    if np.any(~on_grid):
        _, end = conjugate_batch(L.surface, L.frame, psi[~on_grid], L.j, dist.rtol)
        xi_s[~on_grid] = end[:, 7]
    kg = xi_s / dist.derivative(psi)
    return float(kg[0]) if scalar else kg


def geodesic_curvature_samples(L: ConjugateLocus, delta_cusp: float = DELTA_CUSP):
    """``(psi, k_g)`` at every grid sample farther than ``delta_cusp`` from a cusp."""
    dist = L.distance
    keep = _cusp_distance(L, dist.psi) >= delta_cusp
    return dist.psi[keep], dist.xi_s[keep] / dist.derivative()[keep]


def _tangent_turn(normal, a, b):
    """Signed angle from ``a`` to ``b`` after projection onto the tangent plane."""
    a = a - np.sum(a * normal, axis=-1, keepdims=True) * normal
    b = b - np.sum(b * normal, axis=-1, keepdims=True) * normal
    return np.arctan2(np.sum(normal * np.cross(a, b), axis=-1), np.sum(a * b, axis=-1))


def discrete_geodesic_curvature(L: ConjugateLocus, delta_cusp: float = DELTA_CUSP):
    """Geodesic curvature from the sampled 3-D locus polyline alone.

    Turning of consecutive chords in the tangent plane divided by the mean
    chord length, converted to the alternating orientation via the sign of
    the chord against the geodesic direction.
    """
    dist = L.distance
    P = dist.points
    prev, nxt = np.roll(P, 1, axis=0), np.roll(P, -1, axis=0)
    d1, d2 = P - prev, nxt - P
    nrm = L.surface.normal(P)
    turn = _tangent_turn(nrm, d1, d2)
    ell = 0.5 * (np.linalg.norm(d1, axis=-1) + np.linalg.norm(d2, axis=-1))
    eps = np.sign(np.sum((nxt - prev) * dist.tangents, axis=-1))
    keep = _cusp_distance(L, dist.psi) >= delta_cusp
    return dist.psi[keep], (eps * turn / ell)[keep]


def arc_total_geodesic_curvature(L: ConjugateLocus, arc_index: int) -> tuple[float, float]:
    """Total geodesic curvature of an arc two ways: polyline turning and integral of xi_s."""
    arc = L.arcs[arc_index]
    P = arc.points
    nrm = L.surface.normal(P)
    chords = np.diff(P, axis=0)
    t_start = arc.sign * arc.tangents[0]
    t_end = arc.sign * arc.tangents[-1]
    total = float(_tangent_turn(nrm[0], t_start, chords[0]))
    total += float(np.sum(_tangent_turn(nrm[1:-1], chords[:-1], chords[1:])))
    total += float(_tangent_turn(nrm[-1], chords[-1], t_end))
    integral = float(np.trapezoid(arc.xi_s, arc.psi))
    return total, integral


def alternating_length(L: ConjugateLocus) -> float:
    """Sum of arc lengths with alternating signs; vanishes for a closed locus."""
    if L.degenerate:
        return 0.0
    return float(sum((-1) ** k * length for k, length in enumerate(L.arc_lengths)))


# ---------------------------------------------------------------------------
# loops and necks
# ---------------------------------------------------------------------------


def smooth_loop_scan(L: ConjugateLocus):
    """Self-intersections of single arcs of the projected locus."""
    if L.degenerate:
        return []
    return planar.self_intersections(L.projected, same_arc_only=True)


def neck_check(c) -> bool:
    """True when no crossing splits the curve into two non-overlapping loops."""
    if isinstance(c, ConjugateLocus):
        if c.degenerate:
            return True
        c = c.projected
    _, P, _ = c.polyline()
    m = len(P)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(P))))
    hits = []
    for i, j, u in zip(*planar._segment_intersections(P, closed=True)[:3]):
        X = P[i] + u * (P[(i + 1) % m] - P[i])
        # a crossing on a sample vertex shows up in neighbouring segment pairs
        if not any(planar._adjacent(i, j, k, l, m) and np.linalg.norm(X - Y) < tol
                   for k, l, Y in hits):
            hits.append((i, j, X))
    ii = [h[0] for h in hits]
    jj = [h[1] for h in hits]
    for i, j, X in hits:
        loop_a = np.vstack([X, P[i + 1:j + 1]])
        loop_b = np.vstack([X, P[j + 1:], P[:i + 1]])
        in_a = np.zeros(m, dtype=bool)
        in_a[i + 1:j + 1] = True
        crosses = [
            (a, b) for a, b in zip(ii, jj)
            if (a, b) != (i, j) and (in_a[a] != in_a[b] or in_a[(a + 1) % m] != in_a[(b + 1) % m])
        ]
        if crosses:
            continue
        if len(loop_a) < 3 or len(loop_b) < 3:
            continue
        wa = planar.winding_number(loop_a, loop_b[len(loop_b) // 2])[0]
        wb = planar.winding_number(loop_b, loop_a[len(loop_a) // 2])[0]
        if wa == 0 and wb == 0:
            return False
    return True
