"""Geodesic-segment counts ``m(o)`` and the Euler characteristics of their super-level sets.

Two independent routes are provided:

* ``count_at`` counts, for one surface point, the radial segments
  ``Gamma_psi([0, R(psi)])`` through it by bisection on the signed transversal
  offset.
* ``count_field`` pushes the whole segment fan through the plane projection,
  triangulates it and counts triangle coverage per grid cell. Away from the
  locus this is exactly the number of preimages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import planar
from .conjlocus import ConjugateLocus
from .errors import AmbiguousCountError, ConfigError, GridTooCoarseError
from .geodesic import shoot_fan
from .surface import ImplicitSurface, TangentFrame

EIGHT = np.ones((3, 3), dtype=bool)
FOUR = ndimage.generate_binary_structure(2, 1)


# ---------------------------------------------------------------------------
# dense output of the stored fan
# ---------------------------------------------------------------------------


def _hermite(s_hist, y_hist, lanes, s_target):
    """Cubic Hermite position of each lane at arc lengths ``s_target`` (lanes, U)."""
    K = len(s_hist)
    idx = np.clip(np.searchsorted(s_hist, s_target, side="right") - 1, 0, K - 2)
    h = s_hist[idx + 1] - s_hist[idx]
    tau = (s_target - s_hist[idx]) / h
    ln = np.broadcast_to(lanes[:, None], idx.shape)
    y0 = y_hist[idx, ln]
    y1 = y_hist[idx + 1, ln]
    t2, t3 = tau * tau, tau * tau * tau
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + tau
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    x = (h00[..., None] * y0[..., 0:3] + (h10 * h)[..., None] * y0[..., 3:6]
         + h01[..., None] * y1[..., 0:3] + (h11 * h)[..., None] * y1[..., 3:6])
    return x


def _fan_points(L: ConjugateLocus, u):
    """Surface points at fractions ``u`` of ``R`` along every grid lane: (len(u), N, 3)."""
    dist = L.distance
    chunks = dist.chunks
    if not chunks or len(chunks[0].s) == 0:
        chunks = shoot_fan(L.surface, L.frame, dist.psi, L.j, dist.rtol, keep_history=True)
    u = np.asarray(u, dtype=float)
    out = np.empty((len(u), len(dist.psi), 3))
    for c in chunks:
        local = np.arange(len(c.lanes))
        st = c.R[:, None] * u[None, :]
        x = _hermite(c.s, c.y, local, st)
        out[:, c.lanes] = np.transpose(x, (1, 0, 2))
    return L.surface.project(out)


# ---------------------------------------------------------------------------
# rasterization
# ---------------------------------------------------------------------------


def _edge(A, B, Px, Py):
    """Edge function of ``A -> B`` at ``P``, bitwise antisymmetric in ``A, B``."""
    swap = (A[:, 0] > B[:, 0]) | ((A[:, 0] == B[:, 0]) & (A[:, 1] > B[:, 1]))
    U = np.where(swap[:, None], B, A)
    V = np.where(swap[:, None], A, B)
    E = ((V[:, 0, None] - U[:, 0, None]) * (Py - U[:, 1, None])
         - (V[:, 1, None] - U[:, 1, None]) * (Px - U[:, 0, None]))
    return np.where(swap[:, None], -E, E)


def _owns(A, B, E):
    """Top-left rule: a point on edge ``A -> B`` belongs to exactly one side."""
    dx = (B[:, 0] - A[:, 0])[:, None]
    dy = (B[:, 1] - A[:, 1])[:, None]
    return (E > 0) | ((E == 0) & ((dy > 0) | ((dy == 0) & (dx < 0))))


def _cover(tri, cx, cy, M):
    """Flat cell indices covered by each triangle at candidate cells (T, K)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    e0 = _edge(a, b, cx, cy)
    e1 = _edge(b, c, cx, cy)
    e2 = _edge(c, a, cx, cy)
    inside = _owns(a, b, e0) & _owns(b, c, e1) & _owns(c, a, e2)
    return (cy * M + cx)[inside]


def rasterize(tri, M: int, budget: int = 2_000_000) -> np.ndarray:
    """Coverage count of triangles (in grid units, cell centres at integers) on M x M cells."""
    tri = np.asarray(tri, dtype=float)
    area = ((tri[:, 1, 0] - tri[:, 0, 0]) * (tri[:, 2, 1] - tri[:, 0, 1])
            - (tri[:, 1, 1] - tri[:, 0, 1]) * (tri[:, 2, 0] - tri[:, 0, 0]))
    tri = tri[area != 0]
    flip = area[area != 0] < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    lo = np.clip(np.ceil(tri.min(axis=1)), 0, M).astype(int)
    hi = np.clip(np.floor(tri.max(axis=1)), -1, M - 1).astype(int)
    w = hi - lo + 1
    keep = np.all(w > 0, axis=1)
    tri, lo, hi, w = tri[keep], lo[keep], hi[keep], w[keep]
    size = w.max(axis=1) if len(w) else np.zeros(0, dtype=int)
    counts = np.zeros(M * M, dtype=np.int64)
    prev = 0
    B = 1
    while B <= 64:
        sel = np.nonzero((size > prev) & (size <= B))[0]
        oy, ox = np.divmod(np.arange(B * B), B)
        step = max(1, budget // (B * B))
        for k in range(0, len(sel), step):
            s = sel[k:k + step]
            cx = lo[s, 0, None] + ox[None, :]
            cy = lo[s, 1, None] + oy[None, :]
            valid = (cx <= hi[s, 0, None]) & (cy <= hi[s, 1, None])
            cx = np.where(valid, cx, -(10 ** 9))
            cy = np.where(valid, cy, 0)
            idx = _cover(tri[s], cx.astype(float), cy.astype(float), M)
            counts += np.bincount(idx.astype(np.int64), minlength=M * M)
        prev, B = B, 2 * B
    for t in np.nonzero(size > 64)[0]:
        gy, gx = np.mgrid[lo[t, 1]:hi[t, 1] + 1, lo[t, 0]:hi[t, 0] + 1]
        idx = _cover(tri[t:t + 1], gx.reshape(1, -1).astype(float),
                     gy.reshape(1, -1).astype(float), M)
        counts += np.bincount(idx.astype(np.int64), minlength=M * M)
    return counts.reshape(M, M)


# ---------------------------------------------------------------------------
# regions and Euler characteristics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Level:
    m: int
    components: int
    holes: int
    discs: int

    @property
    def chi(self) -> int:
        return self.components - self.holes


def topology(mask) -> tuple[int, int, int]:
    """``(components, holes, discs)`` of a binary image (8-connected set, 4-connected holes)."""
    comp, nc = ndimage.label(mask, structure=EIGHT)
    holes = _holes(mask)
    discs = 0
    for k in range(1, nc + 1):
        if _holes(comp == k) == 0:
            discs += 1
    return nc, holes, discs


def _holes(mask) -> int:
    lab, nl = ndimage.label(~mask, structure=FOUR)
    border = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
    return nl - int(np.count_nonzero(border))


@dataclass
class CountField:
    """Counts on an M x M grid over the projection plane (``-1`` marks locus cells)."""

    M: int
    x: np.ndarray
    y: np.ndarray
    m: np.ndarray
    excluded: np.ndarray
    closure: np.ndarray
    levels: list = field(default_factory=list)

    @property
    def i_mc(self) -> int:
        return int(sum(lv.chi for lv in self.levels if lv.m >= 2))

    @property
    def values(self) -> list:
        return sorted({int(v) for v in np.unique(self.m[~self.excluded])})

    def outer_counts(self) -> list:
        """Counts of the regions touching the grid border (the side containing ``p``)."""
        lab, _ = ndimage.label(~self.excluded, structure=FOUR)
        border = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
        border = border[border > 0]
        return sorted({int(v) for v in np.unique(self.m[np.isin(lab, border)])})

    def centres(self):
        X, Y = np.meshgrid(self.x, self.y)
        return np.stack([X, Y], axis=-1)


def _closure(m, excluded, radius=3):
    """Fill locus cells with the largest count among their neighbours."""
    filled = np.where(excluded, 0, m)
    out = filled.copy()
    todo = excluded.copy()
    r = radius
    while np.any(todo):
        grown = ndimage.maximum_filter(np.where(todo, 0, out), size=2 * r + 1)
        hit = todo & (grown > 0)
        if not np.any(hit):
            r += 1
            continue
        out[hit] = grown[hit]
        todo &= ~hit
    return out


def _inner_fraction(L, proj, half, centre, steps=200):
    """Largest ``u`` whose ring ``s = u R`` projects entirely outside the box and around it."""
    u_grid = np.linspace(1.0, 0.02, steps)
    for chunk in np.array_split(u_grid, 10):
        rings = _fan_points(L, chunk)
        for u, ring in zip(chunk, rings):
            uv = proj(ring) - centre
            outside = np.max(np.abs(uv), axis=-1) > half
            if np.all(outside):
                w = planar.winding_number(uv, np.zeros((1, 2)))[0]
                if abs(w) == 1:
                    return float(u)
    raise GridTooCoarseError("no geodesic circle around p clears the count window")


def count_field(S: ImplicitSurface, frame: TangentFrame, L: ConjugateLocus, M: int = 401,
                pad: float = 0.15, radial: int = 384, band: float = 1.5) -> CountField:
    """Grid of counts ``m`` around the projected locus, with the super-level topology."""
    if M < 16:
        raise ConfigError("count grid needs M >= 16")
    if L.degenerate:
        raise GridTooCoarseError("degenerate locus has no count regions")
    proj = L.projection
    _, poly, _ = L.projected.polyline()
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    centre = 0.5 * (lo + hi)
    half = 0.5 * float(np.max(hi - lo)) * (1.0 + 2.0 * pad)
    dx = 2.0 * half / M
    u0 = _inner_fraction(L, proj, half, centre)
    u = np.linspace(u0, 1.0, radial + 1)
    pts = proj(_fan_points(L, u))
    # cell centres at integer grid coordinates
    g = (pts - (centre - half)) / dx - 0.5
    a = g[:-1]
    b = np.roll(g[:-1], -1, axis=1)
    c = np.roll(g[1:], -1, axis=1)
    d = g[1:]
    tri = np.concatenate([
        np.stack([a, b, c], axis=-2).reshape(-1, 3, 2),
        np.stack([a, c, d], axis=-2).reshape(-1, 3, 2),
    ])
    m = rasterize(tri, M)
    x = centre[0] - half + dx * (np.arange(M) + 0.5)
    y = centre[1] - half + dx * (np.arange(M) + 0.5)
    excluded = _near_locus(poly, x, y, band * math.sqrt(2.0) * dx)
    m = np.where(excluded, -1, m)
    if np.any(m[~excluded] == 0):
        raise GridTooCoarseError("a cell off the locus received no geodesic segment")
    _check_thin(m, excluded)
    closure = _closure(m, excluded)
    levels = []
    for k in range(1, int(closure.max()) + 1):
        nc, nh, nd = topology(closure >= k)
        levels.append(Level(k, nc, nh, nd))
    return CountField(M, x, y, m, excluded, closure, levels)


def _near_locus(poly, x, y, radius):
    dx = x[1] - x[0]
    seg = np.diff(np.vstack([poly, poly[:1]]), axis=0)
    reps = np.maximum(1, np.ceil(np.linalg.norm(seg, axis=-1) / (0.25 * dx)).astype(int))
    start = np.repeat(poly, reps, axis=0)
    frac = np.concatenate([np.arange(r) / r for r in reps])
    dense = start + frac[:, None] * np.repeat(seg, reps, axis=0)
    X, Y = np.meshgrid(x, y)
    d, _ = cKDTree(dense).query(np.stack([X.ravel(), Y.ravel()], axis=-1))
    return (d < radius).reshape(X.shape)


def _check_thin(m, excluded):
    for v in np.unique(m[~excluded]):
        lab, nl = ndimage.label((m == v) & ~excluded, structure=EIGHT)
        eroded = ndimage.binary_erosion(lab > 0, structure=EIGHT)
        alive = np.unique(lab[eroded])
        if len(alive[alive > 0]) < nl:
            raise GridTooCoarseError(f"a region with m={v} is thinner than two cells; raise M")


def holes_have_discs_above(cf: CountField) -> bool:
    """Whenever some super-level set has a hole, a higher one contains a disc."""
    for k, lv in enumerate(cf.levels):
        if lv.holes > 0 and not any(hi.discs > 0 for hi in cf.levels[k + 1:]):
            return False
    return True


def winding_counts(cf: CountField, L: ConjugateLocus) -> np.ndarray:
    """Winding number of the projected locus around every cell centre."""
    _, poly, _ = L.projected.polyline()
    w = planar.winding_number(poly, cf.centres().reshape(-1, 2))
    return np.rint(w).astype(int).reshape(cf.M, cf.M)


def crossing_jumps(cf: CountField, L: ConjugateLocus, fractions=(0.25, 0.5, 0.75),
                   offset: float = 4.0) -> dict:
    """Observed count changes across each projected arc and the counts seen around each cusp.

    Across an arc the jump is ``m(left) - m(right)`` with respect to the arc's
    standard orientation, read ``offset`` cells to either side. Probes landing
    off the grid or on locus cells are skipped.
    """
    dx = float(cf.x[1] - cf.x[0])

    def read(P):
        ix = int(round((P[0] - cf.x[0]) / dx))
        iy = int(round((P[1] - cf.y[0]) / dx))
        if not (0 <= ix < cf.M and 0 <= iy < cf.M) or cf.excluded[iy, ix]:
            return None
        return int(cf.m[iy, ix])

    arcs = []
    for arc in L.projected.arcs:
        jumps = []
        for f in fractions:
            q = int(f * (len(arc.params) - 1))
            t = arc.tangents[q] / np.linalg.norm(arc.tangents[q])
            nrm = np.array([-t[1], t[0]])
            left = read(arc.points[q] + offset * dx * nrm)
            right = read(arc.points[q] - offset * dx * nrm)
            if left is not None and right is not None:
                jumps.append(left - right)
        arcs.append(jumps)
    cusps = []
    ang = np.linspace(0.0, 2 * math.pi, 16, endpoint=False)
    ring = np.stack([np.cos(ang), np.sin(ang)], axis=-1) * dx
    # the wedge inside a cusp is thin near its tip, so probe several radii
    radii = offset * np.array([1.0, 2.0, 4.0, 8.0])
    for c in L.projected.cusps:
        seen = {read(np.asarray(c.point) + r * w) for r in radii for w in ring}
        cusps.append(sorted(v for v in seen if v is not None))
    return {"arcs": arcs, "cusps": cusps}


# ---------------------------------------------------------------------------
# direct count at one point
# ---------------------------------------------------------------------------


def _closest(S, frame, chunks, o):
    """Per lane: closest point of the segment ``[0, R]`` to ``o`` and the signed offset."""
    res = []
    for c in chunks:
        n = len(c.lanes)
        lanes = np.arange(n)
        X = c.y[:, :, 0:3]
        d2 = np.sum((X - o) ** 2, axis=-1)
        d2 = np.where(c.s[:, None] <= c.R[None, :], d2, np.inf)
        k = np.argmin(d2, axis=0)
        lo = c.s[np.maximum(k - 1, 0)]
        hi = np.minimum(c.s[np.minimum(k + 1, len(c.s) - 1)], c.R)
        g = (math.sqrt(5.0) - 1.0) / 2.0

        def dist(s):
            return np.linalg.norm(_hermite(c.s, c.y, lanes, s[:, None])[:, 0] - o, axis=-1)

        a, b = lo.copy(), hi.copy()
        for _ in range(60):
            x1 = b - g * (b - a)
            x2 = a + g * (b - a)
            left = dist(x1) < dist(x2)
            b = np.where(left, x2, b)
            a = np.where(left, a, x1)
        s_c = 0.5 * (a + b)
        x_c = _hermite(c.s, c.y, lanes, s_c[:, None])[:, 0]
        # tangent from a centred difference of the dense output
        e = 1e-6
        v_c = (_hermite(c.s, c.y, lanes, np.minimum(s_c + e, c.s[-1])[:, None])[:, 0]
               - _hermite(c.s, c.y, lanes, np.maximum(s_c - e, 0.0)[:, None])[:, 0])
        v_c /= np.linalg.norm(v_c, axis=-1, keepdims=True)
        side = np.cross(S.normal(x_c), v_c)
        off = np.sum((o - x_c) * side, axis=-1)
        res.append((s_c, c.R, np.linalg.norm(o - x_c, axis=-1), off))
    return [np.concatenate(z) for z in zip(*res)]


def count_at(S: ImplicitSurface, frame: TangentFrame, L: ConjugateLocus, o,
             tol: float = 1e-7, iters: int = 48) -> int:
    """Number of radial segments ``Gamma_psi([0, R(psi)])`` passing through ``o``."""
    o = np.asarray(o, dtype=float)
    S.check_on_surface(o)
    if np.linalg.norm(o - frame.p) < 1e-9 * S.scale:
        raise ValueError("count is undefined at the base point")
    dist = L.distance
    chunks = dist.chunks
    if not chunks or len(chunks[0].s) == 0:
        chunks = shoot_fan(S, frame, dist.psi, L.j, dist.rtol, keep_history=True)
    s_c, R, d, off = _closest(S, frame, chunks, o)
    edge = 1e-6 * R
    interior = (s_c > edge) & (s_c < R - edge)
    psi = dist.psi
    nxt = np.roll(np.arange(len(psi)), -1)
    brackets = np.nonzero(interior & interior[nxt] & (np.sign(off) != np.sign(off[nxt])))[0]
    if len(brackets) == 0:
        return 0
    a = psi[brackets].copy()
    b = psi[brackets] + (psi[1] - psi[0])
    fa = np.sign(off[brackets])
    for _ in range(iters):
        mid = 0.5 * (a + b)
        chs = shoot_fan(S, frame, mid, L.j, dist.rtol, keep_history=True)
        _, _, _, om = _closest(S, frame, chs, o)
        same = np.sign(om) == fa
        a = np.where(same, mid, a)
        b = np.where(same, b, mid)
    mid = 0.5 * (a + b)
    chs = shoot_fan(S, frame, mid, L.j, dist.rtol, keep_history=True)
    sm, Rm, dm, _ = _closest(S, frame, chs, o)
    hit = dm < tol * S.scale
    if np.any(hit & (Rm - sm < 1e-6 * Rm)):
        raise AmbiguousCountError("a segment ends at the query point; it lies on the locus")
    return int(np.count_nonzero(hit & (sm < Rm)))
