"""Command-line front end: ``conjloc {evolute,conjugate,count-map,verify}``."""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance, conjlocus, count, evolute, formats
from .errors import (
    ConfigError,
    ConjlocError,
    ConvergenceError,
    CurvatureZeroError,
    FinenessError,
    IntegrationError,
    NonGenericError,
    NonGenericPointWarning,
    NotAnOvalError,
)
from .geodesic import DEFAULT_RTOL, distance_curve
from .surface import base_point, tangent_frame

EXIT_OK, EXIT_IO, EXIT_GENERIC, EXIT_INTEGRATION = 0, 1, 2, 3
N_RANGE = (256, 65536)
M_RANGE = (16, 4001)
J_RANGE = (1, 10)
SAMPLES_RANGE = (64, 2**20)


@dataclass
class JobConfig:
    command: str
    raw: dict = field(default_factory=dict)
    out: Path = Path(".")
    samples: int | None = None
    grid: int | None = None
    order: int | None = None
    strict: bool = False
    suite: str = "all"
    tolerances: dict = field(default_factory=dict)

    def tol(self, key, default):
        return self.tolerances.get(key, default)


def _bounded(name, value, lo_hi):
    lo, hi = lo_hi
    if not isinstance(value, int) or isinstance(value, bool) or not lo <= value <= hi:
        raise ConfigError(f"{name} must be an integer in [{lo}, {hi}]")
    return value


def build_config(args) -> JobConfig:
    raw = formats.load_config(args.config) if getattr(args, "config", None) else {}
    tol = raw.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("tolerances must be an object")
    for key, val in tol.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
            raise ConfigError(f"tolerance {key!r} must be a positive number")
    cfg = JobConfig(args.command, raw, Path(args.out or "."), tolerances=dict(tol))
    cfg.strict = bool(getattr(args, "strict", False) or raw.get("strict", False))
    samples = getattr(args, "samples", None)
    if samples is None:
        samples = raw.get("N", raw.get("samples"))
    grid = getattr(args, "grid", None)
    if grid is None:
        grid = raw.get("M")
    order = getattr(args, "order", None)
    if order is None:
        order = raw.get("j")
    if args.command == "evolute":
        cfg.samples = _bounded("samples", samples if samples is not None else 4096, SAMPLES_RANGE)
    elif args.command in ("conjugate", "count-map"):
        cfg.samples = _bounded("N", samples if samples is not None else 1024, N_RANGE)
        cfg.order = _bounded("j", order if order is not None else 1, J_RANGE)
        cfg.grid = _bounded("M", grid if grid is not None else 401, M_RANGE)
    elif args.command == "verify":
        cfg.suite = args.suite_pos or args.suite or raw.get("suite", "all")
        if cfg.suite not in acceptance.SUITES:
            raise ConfigError(f"unknown suite {cfg.suite!r}")
    return cfg


def _outdir(cfg) -> Path:
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {cfg.out}: {exc}") from exc
    return cfg.out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def run_evolute(cfg: JobConfig) -> int:
    desc = cfg.raw.get("curve", cfg.raw.get("support"))
    if desc is None:
        raise ConfigError("evolute config needs a 'curve' (or 'support') object")
    src = formats.parse_source(desc)
    from .planar import ParametricCurve

    if isinstance(src, ParametricCurve):
        e = evolute.evolute_of_curve(src, cfg.samples)
    else:
        e = evolute.evolute_of_oval(src, cfg.samples)
    out = _outdir(cfg)
    formats.write_json(formats.evolute_to_json(e), out / "evolute.json")
    if isinstance(e, evolute.DegenerateEvolute):
        print(f"degenerate point=({formats.fmt(e.point[0])},{formats.fmt(e.point[1])})")
        return EXIT_OK
    formats.write_evolute_csv(e, out)
    rel = "ok" if e.relation_ok else "fail"
    if isinstance(src, ParametricCurve):
        print(f"n={e.n} I={e.I} i={e.i} relation={rel}")
    else:
        print(f"n={e.n} i={e.i} relation={rel}")
    return EXIT_OK


def _surface_job(cfg):
    if "surface" not in cfg.raw:
        raise ConfigError("config needs a 'surface' object")
    S = formats.parse_surface(cfg.raw["surface"])
    u, v = formats.parse_base_point(cfg.raw.get("base_point", {"u": 0.7, "v": 0.5}))
    fr = tangent_frame(S, base_point(S, u, v), cfg.raw.get("seed"))
    return S, fr


def _distance(cfg, S, fr):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonGenericPointWarning)
        d = distance_curve(S, fr, cfg.order, cfg.samples, cfg.tol("rtol", DEFAULT_RTOL),
                           cfg.tol("tol_A1", None))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return d


def run_conjugate(cfg: JobConfig) -> int:
    S, fr = _surface_job(cfg)
    d = _distance(cfg, S, fr)
    if not d.generic and cfg.strict and not d.degenerate:
        print("error: base point is not generic", file=sys.stderr)
        return EXIT_GENERIC
    kmin, kmax = S.curvature_bounds
    j = cfg.order
    slack = 1e-9 * S.scale
    annulus = bool(np.all(d.R >= j * math.pi / math.sqrt(kmax) - slack)
                   and np.all(d.R <= j * math.pi / math.sqrt(kmin) + slack))
    L = conjlocus.build_locus(S, fr, j, cfg.samples, distance=d)
    out = _outdir(cfg)
    formats.write_json(formats.distance_curve_to_json(d), out / "distance_curve.json")
    loops = conjlocus.smooth_loop_scan(L)
    formats.write_json(formats.locus_to_json(L, loops), out / "locus.json")
    ann = "ok" if annulus else "fail"
    if L.degenerate:
        print(f"j={j} degenerate annulus={ann}")
        return EXIT_OK
    rel = "ok" if L.relation_ok else "fail"
    print(f"j={j} n={L.n} i={L.i} relation={rel} annulus={ann} loops_found={len(loops)}")
    return EXIT_OK


def run_count_map(cfg: JobConfig) -> int:
    S, fr = _surface_job(cfg)
    d = _distance(cfg, S, fr)
    if cfg.strict and not d.generic:
        print("error: base point is not generic", file=sys.stderr)
        return EXIT_GENERIC
    L = conjlocus.build_locus(S, fr, cfg.order, cfg.samples, distance=d)
    cf = count.count_field(S, fr, L, cfg.grid)
    out = _outdir(cfg)
    formats.write_count_csv(cf, out / "count_field.csv")
    formats.write_json(formats.regions_to_json(cf, L), out / "regions.json")
    levels = ",".join(str(v) for v in cf.values)
    print(f"levels={levels} i_mc={cf.i_mc} i={L.i} nesting={'ok' if count.holes_have_discs_above(cf) else 'fail'}")
    return EXIT_OK


def run_verify(cfg: JobConfig) -> int:
    results = []
    for k in acceptance.SUITES[cfg.suite]:
        r = acceptance.run_criterion(k)
        results.append(r)
        print(r.line(), file=sys.stderr, flush=True)
    report = {"suite": cfg.suite, "passed": all(r.passed for r in results),
              "criteria": [r.to_json() for r in results]}
    print(json.dumps(report, indent=1))
    if cfg.raw or (cfg.out and str(cfg.out) != "."):
        formats.write_json(report, _outdir(cfg) / f"verify_{cfg.suite}.json")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"error: criterion C{failed[0].id} ({failed[0].name}) failed", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


COMMANDS = {
    "evolute": run_evolute,
    "conjugate": run_conjugate,
    "count-map": run_count_map,
    "verify": run_verify,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conjloc",
        description="Evolutes of plane curves and conjugate loci on convex surfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="job configuration JSON")
        p.add_argument("--out", default=None, help="output directory (default: .)")

    p = sub.add_parser("evolute", help="evolute of a plane curve")
    common(p)
    p.add_argument("--samples", type=int, help="samples per circuit (default 4096)")

    for name, text in (("conjugate", "conjugate locus of a base point"),
                       ("count-map", "count field and Euler characteristics")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--samples", type=int, help="psi samples N (default 1024)")
        p.add_argument("--order", type=int, help="conjugate order j (default 1)")
        p.add_argument("--strict", action="store_true", help="fail on non-generic base points")
        if name == "count-map":
            p.add_argument("--grid", type=int, help="count grid size M (default 401)")

    p = sub.add_parser("verify", help="run acceptance suites")
    common(p, config_required=False)
    p.add_argument("suite_pos", nargs="?", choices=sorted(acceptance.SUITES), metavar="SUITE")
    p.add_argument("--suite", choices=sorted(acceptance.SUITES))
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NonGenericError, NotAnOvalError, CurvatureZeroError) as exc:
        print(f"non-generic input: {exc}", file=sys.stderr)
        return EXIT_GENERIC
    except (IntegrationError, ConvergenceError, FinenessError) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except ConjlocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
