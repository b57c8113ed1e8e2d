"""Executable acceptance criteria, grouped into suites.

Each criterion returns a :class:`Result`; heavy fixtures (distance curves,
loci, count fields) are cached so a full run shares them.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import conjlocus, count, evolute, planar
from .errors import NonGenericPointWarning
from .geodesic import DEFAULT_RTOL, distance_curve
from .surface import Ellipsoid, Sphere, base_point, sphere_direction, tangent_frame

ELLIPSOID = (1.0, 1.2, 1.5)
BASE = (0.7, 0.5)
LOOP_BASE = (0.3, 1.114)
N = 1024
M = 401


@dataclass
class Result:
    id: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] C{self.id} {self.name}: {self.detail} ({self.seconds:.1f}s)"

    def to_json(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed,
                "detail": self.detail, "seconds": round(self.seconds, 3)}


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def ellipsoid():
    return Ellipsoid(*ELLIPSOID)


@lru_cache(maxsize=None)
def frame_at(u: float, v: float):
    S = ellipsoid()
    return tangent_frame(S, base_point(S, u, v))


@lru_cache(maxsize=None)
def locus_at(u: float, v: float, j: int = 1, rtol: float = DEFAULT_RTOL):
    return conjlocus.build_locus(ellipsoid(), frame_at(u, v), j, N, rtol=rtol)


@lru_cache(maxsize=None)
def count_fixture():
    L = locus_at(*BASE)
    return count.count_field(ellipsoid(), L.frame, L, M)


def _umbilic_directions(a, b, c):
    x = a * math.sqrt((b * b - a * a) / (c * c - a * a))
    z = c * math.sqrt((c * c - b * b) / (c * c - a * a))
    out = []
    for sx in (1, -1):
        for sz in (1, -1):
            d = np.array([sx * x, 0.0, sz * z])
            out.append(d / np.linalg.norm(d))
    return out


def random_base_points(count_: int = 5, seed: int = 20240601, margin: float = 0.2):
    """Pseudo-random base points away from principal sections and umbilics."""
    rng = np.random.default_rng(seed)
    umb = _umbilic_directions(*ELLIPSOID)
    out = []
    while len(out) < count_:
        u = float(rng.uniform(0.0, 2 * math.pi))
        v = float(rng.uniform(-1.3, 1.3))
        d = sphere_direction(u, v)
        if np.min(np.abs(d)) < margin:
            continue
        if max(float(np.dot(d, w)) for w in umb) > math.cos(margin):
            continue
        out.append((round(u, 6), round(v, 6)))
    return out


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def c1_sphere():
    S = Sphere(1.0)
    fr = tangent_frame(S, base_point(S, 0.4, 0.3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonGenericPointWarning)
        d = distance_curve(S, fr, 1, N)
    eR = float(np.max(np.abs(d.R - math.pi)))
    ex = float(np.max(np.abs(d.xi_s + 1.0)))
    return eR < 1e-6 and ex < 1e-6, f"max|R-pi|={eR:.2e} max|xi_s+1|={ex:.2e}"


def c2_annulus():
    S = ellipsoid()
    kmin, kmax = S.curvature_bounds
    lo, hi = math.pi / math.sqrt(kmax), math.pi / math.sqrt(kmin)
    R = locus_at(*BASE).distance.R
    ok = bool(np.all(R >= lo) and np.all(R <= hi))
    return ok, f"R in [{R.min():.6f}, {R.max():.6f}] within [{lo:.6f}, {hi:.6f}]"


def c3_four_cusps():
    pairs = []
    ok = True
    for u, v in random_base_points():
        L = locus_at(u, v)
        good = L.distance.generic and L.n == 4 and L.i == 1 and L.relation_ok
        ok &= bool(good)
        pairs.append(f"({u:.3f},{v:.3f})->n={L.n},i={L.i}")
    return ok, "; ".join(pairs)


def c4_evolute_relations():
    cases = [
        ("ellipse", planar.EllipseSupport(2.0, 1.0), (4, 1)),
        ("h3", planar.SupportFunction(1.0, ((3, 0.05, 0.0),)), (6, 2)),
        ("h4", planar.SupportFunction(1.0, ((4, 0.03, 0.0),)), (8, 3)),
    ]
    ok = True
    parts = []
    for name, h, want in cases:
        e = evolute.evolute_of_oval(h)
        ok &= (e.n, e.i) == want and 2 * e.i == e.n - 2
        parts.append(f"{name}:(n,i)=({e.n},{e.i})")
    lim = evolute.evolute_of_curve(planar.LimaconCurve(1.0, 2.0))
    ok &= (lim.n, lim.I, lim.i) == (2, -2, -1) and lim.relation_ok
    parts.append(f"limacon:(n,I,i)=({lim.n},{lim.I},{lim.i})")
    return bool(ok), " ".join(parts)


def c5_paired_curvature():
    h = planar.SupportFunction(1.0, ((3, 0.05, 0.0),))
    n = len(planar.find_vertices(h))
    pairs = [evolute.lemma1_check(h, k) for k in range(n)]
    worst = max(abs(a + b) for a, b in pairs)
    closure = abs(sum(a for a, _ in pairs) + 2 * math.pi)
    return worst < 1e-4 and closure < 1e-6, f"max|pair sum|={worst:.2e} |sum_gamma+2pi|={closure:.2e}"


def c6_evolute_arcs():
    fixtures = [
        planar.EllipseSupport(2.0, 1.0),
        planar.SupportFunction(1.0, ((3, 0.05, 0.0),)),
        planar.SupportFunction(1.0, ((4, 0.03, 0.0),)),
        planar.SupportFunction(1.0, ((2, 0.05, 0.02), (3, 0.02, -0.01), (5, 0.004, 0.0))),
    ]
    ok = True
    worst = 0.0
    loops = 0
    one_sided = 0
    scan = np.linspace(0.0, 2 * math.pi, 256, endpoint=False)
    for h in fixtures:
        e = evolute.evolute_of_oval(h)
        tot = [abs(evolute.arc_total_curvature(e, k)) for k in range(e.n)]
        worst = max(worst, max(tot))
        loops += len(planar.self_intersections(e.curve, same_arc_only=True))
        verts = planar.find_vertices(h)
        for th in scan:
            left, right = evolute.vertex_sides_of_normal(h, th, verts)
            one_sided += int(left == 0 or right == 0)
    ok = worst < math.pi and loops == 0 and one_sided == 0
    return ok, f"max|arc curvature|={worst:.4f} same-arc loops={loops} one-sided normals={one_sided}"


def c7_arc_length():
    L = locus_at(*BASE)
    rel = []
    for a in L.arcs:
        dR = abs(a.R[-1] - a.R[0])
        rel.append(abs(a.length - dR) / dR)
    alt = abs(conjlocus.alternating_length(L))
    mean = float(np.mean(L.arc_lengths))
    ok = max(rel) < 1e-3 and alt < 1e-3 * mean
    return ok, f"max rel arc error={max(rel):.2e} |alternating|/mean={alt / mean:.2e}"


def c8_geodesic_curvature():
    L = locus_at(*BASE)
    psi, kg = conjlocus.geodesic_curvature_samples(L)
    psi2, kd = conjlocus.discrete_geodesic_curvature(L)
    assert np.array_equal(psi, psi2)
    rel = float(np.max(np.abs(kd - kg) / np.abs(kg)))
    kmin = float(np.min(np.abs(kg)))
    return rel < 0.02 and kmin > 1e-6, f"max rel deviation={rel:.2e} min|k_g|={kmin:.3e} ({len(psi)} samples)"


def c9_count():
    L = locus_at(*BASE)
    cf = count_fixture()
    values = cf.values
    outer = cf.outer_counts()
    ok = values == [1, 2] and outer == [1] and cf.i_mc == 1 == L.i
    chis = ",".join(f"chi_{lv.m}={lv.chi}" for lv in cf.levels)
    return ok, f"levels={values} outer={outer} {chis} i_mc={cf.i_mc} i={L.i}"


def c10_loops():
    L3 = locus_at(*LOOP_BASE, j=3)
    L1 = locus_at(*LOOP_BASE, j=1)
    L1b = locus_at(*BASE)
    loops3 = conjlocus.smooth_loop_scan(L3)
    loops1 = conjlocus.smooth_loop_scan(L1) + conjlocus.smooth_loop_scan(L1b)
    ok = len(loops3) >= 1 and len(loops1) == 0
    return ok, f"j=3 loops={len(loops3)} (n={L3.n}, i={L3.i}); j=1 loops={len(loops1)}"


def c11_robustness():
    worst = 0.0
    same = True
    for uv in (BASE, LOOP_BASE):
        a = locus_at(*uv)
        b = locus_at(*uv, rtol=DEFAULT_RTOL / 2)
        worst = max(worst, float(np.max(np.abs(a.distance.R - b.distance.R))))
        if a.n == b.n:
            worst = max(worst, max(abs(x.R - y.R) for x, y in zip(a.cusps, b.cusps)))
        same &= (a.n, a.i) == (b.n, b.i)
    return worst < 1e-8 and same, f"max|dR|={worst:.2e} (n,i) unchanged={same}"


CRITERIA = {
    1: ("sphere oracle", c1_sphere),
    2: ("annulus bound", c2_annulus),
    3: ("four cusps and rotation index", c3_four_cusps),
    4: ("evolute relations", c4_evolute_relations),
    5: ("total curvature pairs", c5_paired_curvature),
    6: ("evolute arcs and vertex distribution", c6_evolute_arcs),
    7: ("arc-length identity", c7_arc_length),
    8: ("geodesic curvature", c8_geodesic_curvature),
    9: ("count consistency", c9_count),
    10: ("higher locus loops", c10_loops),
    11: ("numerical robustness", c11_robustness),
}

SUITES = {
    "planar": [4, 5, 6],
    "surface": [1, 2],
    "conjugate": [3, 7, 8, 9, 10, 11],
}
SUITES["all"] = sorted(k for ids in SUITES.values() for k in ids)


def run_criterion(k: int) -> Result:
    name, fn = CRITERIA[k]
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonGenericPointWarning)
            ok, detail = fn()
    except Exception as exc:  # a crash is a failure of that criterion
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Result(k, name, bool(ok), detail, time.perf_counter() - t0)


def run_suite(name: str = "all") -> list[Result]:
    return [run_criterion(k) for k in SUITES[name]]
