"""Geodesic shooting with a co-integrated scalar Jacobi field.

A unit-speed geodesic on ``F = 0`` satisfies ``x'' = lam grad F`` with
``lam = -v^T Hess(F) v / |grad F|^2``. Along it the normal Jacobi component
obeys ``xi'' + K(x) xi = 0`` with ``xi(0) = 0, xi'(0) = 1``; the j-th zero of
``xi`` is the j-th conjugate distance ``R``.

Many launch angles are integrated at once: lanes share a step size picked by
the worst lane, which keeps the inner loop in numpy.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationError, NonGenericPointWarning
from .surface import ImplicitSurface, TangentFrame

TWO_PI = 2.0 * math.pi
DEFAULT_RTOL = 1e-10
CHUNK = 256
DRIFT_TOL = 1e-9

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("CONJLOC_THREADS", "1")))
    except ValueError:
        return 1


def _rhs(S: ImplicitSurface, y):
    x, v = y[:, 0:3], y[:, 3:6]
    g = S.grad(x)
    if hasattr(S, "hess_quadratic"):
        vhv = S.hess_quadratic(x, v)
    else:
        vhv = np.einsum("ni,nij,nj->n", v, S.hess(x), v)
    lam = -vhv / np.sum(g * g, axis=-1)
    K = S._gauss_curvature(x)
    out = np.empty_like(y)
    out[:, 0:3] = v
    out[:, 3:6] = lam[:, None] * g
    out[:, 6] = y[:, 7]
    out[:, 7] = -K * y[:, 6]
    return out


def _rk_step(S, y, h):
    """One Dormand-Prince step; ``h`` is a scalar or per-lane array."""
    h = np.asarray(h, dtype=float)
    hh = h[:, None] if h.ndim else h
    k = [_rhs(S, y)]
    for i in range(1, 7):
        acc = sum(a * kj for a, kj in zip(_A[i], k) if a != 0.0)
        k.append(_rhs(S, y + hh * acc))
    y_new = y + hh * sum(b * kj for b, kj in zip(_B, k) if b != 0.0)
    err = hh * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
    return y_new, err


def _constrain(S, y):
    """Project positions onto the surface and velocities onto unit tangents."""
    y = y.copy()
    x = S.project(y[:, 0:3])
    n = S.normal(x)
    v = y[:, 3:6]
    v = v - np.sum(v * n, axis=-1, keepdims=True) * n
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    y[:, 0:3] = x
    y[:, 3:6] = v
    return y


@dataclass
class _Chunk:
    """Integration history of a batch of lanes on a shared ``s`` grid."""

    lanes: np.ndarray
    s: np.ndarray  # (K,)
    y: np.ndarray  # (K, n, 8)
    R: np.ndarray | None = None
    end: np.ndarray | None = None  # (n, 8) state at R


def _integrate(S, p, dirs, j, s_max, rtol, h0=0.05):
    """Integrate lanes until each has its j-th zero of xi (or until s_max)."""
    n = len(dirs)
    y = np.zeros((n, 8))
    y[:, 0:3] = p
    y[:, 3:6] = dirs
    y[:, 7] = 1.0
    atol = rtol
    s = 0.0
    h = h0
    s_hist = [0.0]
    y_hist = [y]
    zeros = np.zeros(n, dtype=int)
    event_step = np.full(n, -1)
    while True:
        if j is not None and np.all(event_step >= 0):
            break
        if s >= s_max:
            if j is None:
                break
            raise IntegrationError(
                f"no conjugate point of order {j} before s = {s_max:.6g}"
            )
        h = min(h, s_max - s)
        y_new, err = _rk_step(S, y, h)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        enorm = float(np.max(np.sqrt(np.mean((err / sc) ** 2, axis=1))))
        if enorm <= 1.0:
            y_new = _constrain(S, y_new)
            drift = np.max(np.abs(S.value(y_new[:, 0:3])))
            if drift > DRIFT_TOL:
                raise IntegrationError(f"constraint drift {drift:.3g} after projection")
            if j is not None:
                a, b = y[:, 6], y_new[:, 6]
                cross = ((a * b < 0) | ((b == 0) & (a != 0))) & (len(s_hist) > 1)
                cross &= event_step < 0
                zeros = zeros + cross
                event_step = np.where(cross & (zeros == j), len(s_hist) - 1, event_step)
            s += h
            y = y_new
            s_hist.append(s)
            y_hist.append(y)
        fac = 5.0 if enorm == 0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
        h = h * fac
        if h < 1e-14:
            raise IntegrationError("step size underflow")
    return np.array(s_hist), np.stack(y_hist), event_step


def _refine_events(S, s_hist, y_hist, event_step, iters=60):
    """Bisect the zero of xi inside each lane's event step by re-integration."""
    lanes = np.arange(y_hist.shape[1])
    y0 = y_hist[event_step, lanes]
    h = s_hist[event_step + 1] - s_hist[event_step]
    lo = np.zeros_like(h)
    hi = h.copy()
    sign0 = np.sign(y0[:, 6])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ym, _ = _rk_step(S, y0, mid)
        same = np.sign(ym[:, 6]) == sign0
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
        if np.max(hi - lo) < 1e-13:
            break
    tau = 0.5 * (lo + hi)
    yend, _ = _rk_step(S, y0, tau)
    yend = _constrain(S, yend)
    return s_hist[event_step] + tau, yend


def s_cap(S: ImplicitSurface, j: int) -> float:
    kmin, _ = S.curvature_bounds
    return (j + 1) * math.pi / math.sqrt(kmin) + 0.5


def _shoot_chunk(S, frame, psi, lanes, j, rtol, s_max, keep_history):
    dirs = frame.direction(psi)
    s_hist, y_hist, ev = _integrate(S, frame.p, dirs, j, s_max, rtol)
    R = end = None
    if j is not None:
        R, end = _refine_events(S, s_hist, y_hist, ev)
    if not keep_history:
        s_hist, y_hist = s_hist[:0], y_hist[:0]
    return _Chunk(lanes, s_hist, y_hist, R, end)


def shoot_fan(S, frame, psi, j=1, rtol=DEFAULT_RTOL, keep_history=True, s_max=None):
    """Shoot all angles in ``psi`` in fixed-size chunks; returns the chunks in order."""
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    if s_max is None:
        s_max = s_cap(S, j if j is not None else 1)
    bounds = list(range(0, len(psi), CHUNK))
    jobs = [(psi[b:b + CHUNK], np.arange(b, min(b + CHUNK, len(psi)))) for b in bounds]

    def run(job):
        return _shoot_chunk(S, frame, job[0], job[1], j, rtol, s_max, keep_history)

    threads = worker_count()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def conjugate_batch(S, frame, psi, j=1, rtol=DEFAULT_RTOL):
    """``(R, end_states)`` for every angle in ``psi``."""
    chunks = shoot_fan(S, frame, psi, j, rtol, keep_history=False)
    R = np.concatenate([c.R for c in chunks])
    end = np.concatenate([c.end for c in chunks])
    return R, end


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


@dataclass
class GeodesicPath:
    psi: float
    s: np.ndarray
    x: np.ndarray
    v: np.ndarray
    xi: np.ndarray
    xi_s: np.ndarray


def shoot(S: ImplicitSurface, frame: TangentFrame, psi: float, s_max: float,
          rtol: float = DEFAULT_RTOL) -> GeodesicPath:
    """Integrate the geodesic at angle ``psi`` with its Jacobi field up to ``s_max``."""
    if s_max <= 0:
        raise ValueError("s_max must be positive")
    s, y, _ = _integrate(S, frame.p, frame.direction(np.array([psi])), None, s_max, rtol)
    y = y[:, 0]
    return GeodesicPath(float(psi), s, y[:, 0:3], y[:, 3:6], y[:, 6], y[:, 7])


def conjugate_distance(S: ImplicitSurface, frame: TangentFrame, psi: float, j: int = 1,
                       rtol: float = DEFAULT_RTOL) -> tuple[float, float]:
    """Distance to the j-th conjugate point along ``psi`` and ``xi_s`` there."""
    if j < 1:
        raise ValueError("conjugate order j must be >= 1")
    R, end = conjugate_batch(S, frame, [psi], j, rtol)
    return float(R[0]), float(end[0, 7])


@dataclass(frozen=True)
class StationaryPoint:
    psi: float
    R: float
    R2: float
    A1: bool
    kind: str
    point: tuple
    tangent: tuple
    xi_s: float


@dataclass
class DistanceCurve:
    j: int
    psi: np.ndarray
    R: np.ndarray
    xi_s: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    stationary: list
    degenerate: bool
    generic: bool
    rtol: float = DEFAULT_RTOL
    chunks: list = field(default_factory=list, repr=False)

    @property
    def R_mean(self) -> float:
        return float(np.mean(self.R))

    def derivative(self, psi=None, order: int = 1):
        """Spectral derivative of ``R``; on the grid or at arbitrary ``psi``."""
        N = len(self.R)
        coef = np.fft.rfft(self.R) / N
        k = np.arange(len(coef))
        weight = np.full(len(coef), 2.0)
        weight[0] = 1.0
        if N % 2 == 0:
            weight[-1] = 0.0 if order % 2 else 1.0
        dcoef = weight * coef * (1j * k) ** order
        if psi is None:
            psi = self.psi
        psi = np.asarray(psi, dtype=float)
        return np.real(np.exp(1j * np.multiply.outer(psi, k)) @ dcoef)


def _golden_section(f, lo, hi, tol=1e-7, max_iter=60):
    """Vectorized golden-section minimization of ``f`` on ``[lo, hi]``."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = np.array(lo, dtype=float), np.array(hi, dtype=float)
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if np.max(b - a) < tol:
            break
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        keep = np.where(left, c, d)
        fkeep = np.where(left, fc, fd)
        new = np.where(left, b - g * (b - a), a + g * (b - a))
        fnew = f(new)
        c = np.where(left, new, keep)
        d = np.where(left, keep, new)
        fc = np.where(left, fnew, fkeep)
        fd = np.where(left, fkeep, fnew)
    return 0.5 * (a + b)


def _quadratic_curvature(psi_grid, R, centre, window=2):
    N = len(R)
    step = psi_grid[1] - psi_grid[0]
    k0 = int(round(centre / step))
    idx = np.arange(k0 - window, k0 + window + 1)
    x = idx * step - centre
    coeff = np.polyfit(x, R[idx % N], 2)
    return 2.0 * coeff[0]


def find_stationary(psi, R, tol_flat):
    """Brackets ``(lo, hi, kind)`` around sign changes of the centred difference."""
    if np.ptp(R) < tol_flat:
        return []
    N = len(R)
    step = psi[1] - psi[0]
    dR = np.roll(R, -1) - np.roll(R, 1)
    out = []
    for k in range(N):
        a, b = dR[k], dR[(k + 1) % N]
        if a > 0 and b <= 0:
            kind = "max"
        elif a < 0 and b >= 0:
            kind = "min"
        else:
            continue
        out.append(((k - 1) * step + psi[0], (k + 2) * step + psi[0], kind))
    return out


def distance_curve(S: ImplicitSurface, frame: TangentFrame, j: int = 1, N: int = 1024,
                   rtol: float = DEFAULT_RTOL, tol_A1: float | None = None,
                   keep_history: bool = True) -> DistanceCurve:
    """Sample ``R(psi)`` on a uniform grid and locate its stationary points."""
    if N < 256:
        raise ValueError("distance curve needs N >= 256")
    if j < 1:
        raise ValueError("conjugate order j must be >= 1")
    psi = TWO_PI * np.arange(N) / N
    chunks = shoot_fan(S, frame, psi, j, rtol, keep_history=keep_history)
    R = np.concatenate([c.R for c in chunks])
    end = np.concatenate([c.end for c in chunks])
    R_mean = float(np.mean(R))
    if tol_A1 is None:
        tol_A1 = 1e-4 * R_mean
    brackets = find_stationary(psi, R, 1e-8 * R_mean)
    degenerate = np.ptp(R) < 1e-8 * R_mean
    stationary = []
    if brackets:
        lo = np.array([b[0] for b in brackets])
        hi = np.array([b[1] for b in brackets])
        sign = np.array([1.0 if b[2] == "min" else -1.0 for b in brackets])

        def f(x):
            return sign * conjugate_batch(S, frame, x, j, rtol)[0]

        star = _golden_section(f, lo, hi)
        Rs, ends = conjugate_batch(S, frame, star, j, rtol)
        for (_, _, kind), ps, r, e in zip(brackets, star, Rs, ends):
            r2 = _quadratic_curvature(psi, R, ps)
            stationary.append(StationaryPoint(
                psi=float(ps % TWO_PI), R=float(r), R2=float(r2), A1=bool(abs(r2) > tol_A1),
                kind=kind, point=tuple(map(float, e[0:3])), tangent=tuple(map(float, e[3:6])),
                xi_s=float(e[7]),
            ))
        stationary.sort(key=lambda sp: sp.psi)
    generic = (not degenerate) and all(sp.A1 for sp in stationary)
    if not generic:
        warnings.warn(
            "base point is not generic: "
            + ("distance function is constant" if degenerate else "degenerate stationary point"),
            NonGenericPointWarning,
            stacklevel=2,
        )
    return DistanceCurve(
        j=j, psi=psi, R=R, xi_s=end[:, 7], points=end[:, 0:3], tangents=end[:, 3:6],
        stationary=stationary, degenerate=bool(degenerate), generic=bool(generic),
        rtol=rtol, chunks=chunks,
    )
