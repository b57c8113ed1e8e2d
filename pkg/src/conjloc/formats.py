"""JSON and CSV readers/writers.

Every float is written with 12 significant digits and keys keep a fixed
order, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import planar
from .errors import ConfigError
from .evolute import DegenerateEvolute, Evolute
from .surface import Ellipsoid, ImplicitSurface, Sphere

SIG_DIGITS = 12


def fmt(x) -> float | None:
    """Round to 12 significant digits (``None`` for non-finite values)."""
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}")


def clean(obj):
    """Recursively convert numpy scalars/arrays and round floats."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=1) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def _csv_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(fmt(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------


def _number(d, key, positive=True):
    try:
        val = float(d[key])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"missing or invalid number {key!r}") from exc
    if positive and not val > 0:
        raise ConfigError(f"{key!r} must be positive")
    return val


def parse_source(d: dict):
    """Support function or parametric curve from its JSON description."""
    if not isinstance(d, dict):
        raise ConfigError("curve description must be an object")
    family = d.get("family", "fourier")
    if family == "ellipse":
        a, b = _number(d, "a"), _number(d, "b")
        return planar.EllipseCurve(a, b) if d.get("parametric") else planar.EllipseSupport(a, b)
    if family == "limacon":
        return planar.LimaconCurve(_number(d, "a"), _number(d, "b"))
    if family == "fourier":
        try:
            harmonics = tuple((int(k), float(a), float(b)) for k, a, b in d.get("harmonics", []))
        except (TypeError, ValueError) as exc:
            raise ConfigError("harmonics must be [k, a_k, b_k] triples") from exc
        if any(k < 1 for k, _, _ in harmonics):
            raise ConfigError("harmonic orders must be >= 1")
        return planar.SupportFunction(_number(d, "a0"), harmonics)
    raise ConfigError(f"unknown curve family {family!r}")


def parse_surface(d: dict) -> ImplicitSurface:
    if not isinstance(d, dict):
        raise ConfigError("surface description must be an object")
    family = d.get("family")
    if family == "sphere":
        return Sphere(_number(d, "r"))
    if family == "ellipsoid":
        return Ellipsoid(_number(d, "a"), _number(d, "b"), _number(d, "c"))
    raise ConfigError(f"unknown surface family {family!r}")


def parse_base_point(d: dict) -> tuple[float, float]:
    if not isinstance(d, dict):
        raise ConfigError("base point must be an object with 'u' and 'v'")
    return _number(d, "u", positive=False), _number(d, "v", positive=False)


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


# ---------------------------------------------------------------------------
# evolutes and curves
# ---------------------------------------------------------------------------


def _source_json(src):
    return src.to_json() if hasattr(src, "to_json") else {"family": src.family}


def evolute_to_json(e) -> dict:
    if isinstance(e, DegenerateEvolute):
        return {
            "source": _source_json(e.source), "degenerate": True, "n": 0, "i": None,
            "point": {"x": e.point[0], "y": e.point[1]},
        }
    out = {"source": _source_json(e.source), "n": e.n, "i": e.i}
    if isinstance(e.source, planar.ParametricCurve):
        out["I"] = e.I
    out["relation"] = e.relation_ok
    out["cusps"] = [{"theta": c.param, "x": c.point[0], "y": c.point[1]} for c in e.curve.cusps]
    out["arcs"] = [
        [{"theta": t, "x": p[0], "y": p[1]} for t, p in zip(a.params, a.points)]
        for a in e.curve.arcs
    ]
    return out


def write_curve_csv(arc: planar.Arc, path) -> None:
    """Columns ``param, x, y, tangent_angle``."""
    ang = np.arctan2(arc.tangents[:, 1], arc.tangents[:, 0])
    rows = zip(arc.params.tolist(), arc.points[:, 0].tolist(), arc.points[:, 1].tolist(),
               ang.tolist())
    _csv_rows(path, ["param", "x", "y", "tangent_angle"], rows)


def write_evolute_csv(e: Evolute, directory, stem="evolute") -> list[Path]:
    paths = []
    for k, arc in enumerate(e.curve.arcs):
        path = Path(directory) / f"{stem}_arc{k}.csv"
        write_curve_csv(arc, path)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# distance curves, loci, count fields
# ---------------------------------------------------------------------------


def distance_curve_to_json(d) -> dict:
    return {
        "j": d.j,
        "psi": d.psi,
        "R": d.R,
        "xi_s": d.xi_s,
        "stationary": [{"psi": s.psi, "R": s.R, "R2": s.R2, "A1": s.A1} for s in d.stationary],
    }


def locus_to_json(L, loops=None) -> dict:
    from .conjlocus import alternating_length, arc_total_geodesic_curvature

    if L.degenerate:
        pt = np.mean(L.distance.points, axis=0)
        return {
            "j": L.j, "n": 0, "i": None, "degenerate": True,
            "point": {"x": pt[0], "y": pt[1], "z": pt[2]},
            "cusps": [], "arcs": [], "projected": None, "alternating_length": 0.0,
        }
    out = {
        "j": L.j,
        "n": L.n,
        "i": L.i,
        "relation": L.relation_ok,
        "cusps": [
            {"psi": c.psi, "R": c.R, "x": c.point[0], "y": c.point[1], "z": c.point[2]}
            for c in L.cusps
        ],
        "arcs": [
            [{"psi": t, "R": r, "x": p[0], "y": p[1], "z": p[2]}
             for t, r, p in zip(a.psi, a.R, a.points)]
            for a in L.arcs
        ],
        "projected": {
            "i": L.i,
            "cusps": [{"psi": c.param, "x": c.point[0], "y": c.point[1]}
                      for c in L.projected.cusps],
            "arcs": [[{"psi": t, "x": p[0], "y": p[1]} for t, p in zip(a.params, a.points)]
                     for a in L.projected.arcs],
        },
        "arc_lengths": L.arc_lengths,
        "alternating_length": alternating_length(L),
        # logged only; no bound is asserted on it
        "total_geodesic_curvature": [arc_total_geodesic_curvature(L, k)[1] for k in range(L.n)],
    }
    if loops is not None:
        out["smooth_loops"] = [
            {"arc": lp.arc1, "psi1": lp.param1, "psi2": lp.param2, "x": lp.point[0],
             "y": lp.point[1], "ambiguous": lp.ambiguous}
            for lp in loops
        ]
    return out


def write_count_csv(cf, path) -> None:
    """Columns ``row, col, plane_x, plane_y, m`` (``m = -1`` on locus cells)."""
    def rows():
        for r in range(cf.M):
            y = cf.y[r]
            for c in range(cf.M):
                yield r, c, float(cf.x[c]), float(y), int(cf.m[r, c])

    _csv_rows(path, ["row", "col", "plane_x", "plane_y", "m"], rows())


def regions_to_json(cf, L=None) -> dict:
    out = {
        "levels": [
            {"m": lv.m, "components": lv.components, "holes": lv.holes, "chi": lv.chi}
            for lv in cf.levels
        ],
        "i_mc": cf.i_mc,
    }
    if L is not None:
        from .count import crossing_jumps

        out["crossings"] = crossing_jumps(cf, L)
    return out
