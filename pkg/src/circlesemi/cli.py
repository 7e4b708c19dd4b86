"""Command-line front end.

Every subcommand reads a map spec, runs one computation and writes CSV or
JSON.  Exit status: 0 on success (a missing fold is a result, not an error),
2 for a bad spec or bad arguments, 3 for a numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .analysis import (AnalysisConfig, analyze, entropy_from_variation, entropy_lower_bound, fiber_survey,
                       fiber_thetas, lift_nondecreasing, variation_profile_alpha)
from .circle import MapSpecError, degree_check, iterate_lift, load_map, standard_map
from .semiconj import DEFAULT_TOL, make_evaluator
from .structure import NumericalFailure, build_horseshoe, find_fold, leo_test, normalize

log = logging.getLogger("circlesemi")

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC = 0, 2, 3


def fmt(v) -> str:
    """CSV cell: 17 significant digits for reals, empty for absent values."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple)):
        return ";".join(fmt(x) for x in v)
    return str(v)


def write_table(out, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def write_json(out, obj):
    out.write(json.dumps(_plain(obj), indent=2, allow_nan=False))
    out.write("\n")


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _evaluator(m, args):
    if args.depth is not None:
        return make_evaluator(m, depth=args.depth)
    e = make_evaluator(m, tol=args.tol)
    if e.capped:
        log.warning("depth capped at %d; tail bound %.3g exceeds the requested tolerance", e.depth, e.tail_bound)
    return e


def _load(args):
    if not args.spec:
        raise MapSpecError("spec", "--spec FILE is required")
    m = load_map(args.spec)
    try:
        degree_check(m)
    except ValueError as exc:
        raise MapSpecError("D", str(exc)) from None
    return m


# ---------------------------------------------------------------------------
# subcommands


def cmd_alpha(args, out):
    m = _load(args)
    e = _evaluator(m, args)
    if args.x:
        xs = np.asarray(args.x, dtype=float)
    else:
        xs = np.arange(args.grid) / args.grid
    A = e(xs)
    if args.format == "json":
        write_json(out, {"depth": e.depth, "err_bound": e.tail_bound, "x": xs, "alpha": A})
    else:
        write_table(out, ["x", "alpha", "err_bound"], [(float(x), float(a), e.tail_bound) for x, a in zip(xs, A)])


def _fold(args):
    m = _load(args)
    mn = normalize(m)
    w = find_fold(_evaluator(mn, args), args.n_max)
    return m, mn, w


FOLD_HEADER = ["N", "K", "x_hat", "p_left", "p_right", "residual", "rotation", "entropy_lower_bound"]


def cmd_fold(args, out):
    _, mn, w = _fold(args)
    if w is None:
        msg = f"none up to N_max = {args.n_max}"
        log.info(msg)
        if args.format == "json":
            write_json(out, {"found": False, "n_max": args.n_max, "message": msg})
        else:
            write_table(out, FOLD_HEADER, [])
        return
    row = [w.N, w.K, w.x_hat, w.p_left, w.p_right, w.residual, mn.rotation_offset, entropy_lower_bound(w)]
    if args.format == "json":
        write_json(out, {"found": True, **dict(zip(FOLD_HEADER, row))})
    else:
        write_table(out, FOLD_HEADER, [row])


def cmd_horseshoe(args, out):
    _, mn, w = _fold(args)
    if w is None:
        msg = f"none up to N_max = {args.n_max}"
        if args.format == "json":
            write_json(out, {"found": False, "n_max": args.n_max, "message": msg})
        else:
            write_table(out, ["letter", "lo", "hi", "address", "image_lo", "image_hi"], [])
        return
    cover = build_horseshoe(mn, w)
    rows = []
    for eta, (lo, hi) in cover.intervals.items():
        ends = iterate_lift(mn, np.array([lo, hi]), cover.N)
        rows.append([eta, lo, hi, cover.address[eta], float(ends.min()), float(ends.max())])
    if args.format == "json":
        write_json(out, {"found": True, "witness": w.to_dict(), "rotation": mn.rotation_offset,
                         "cover": cover.to_dict(), "letters": len(cover.intervals),
                         "trivial_letters": sorted(map(str, cover.trivial_letters)),
                         "entropy_lower_bound": entropy_lower_bound(w)})
    else:
        write_table(out, ["letter", "lo", "hi", "address", "image_lo", "image_hi"], rows)


def _config(args) -> AnalysisConfig:
    kw = {"tol": args.tol, "depth": args.depth, "seed": args.seed}
    if args.n_range:
        kw["n_min"], kw["n_max"] = args.n_range
    if args.j_max is not None:
        kw["profile_j_max"] = args.j_max
    if args.fold_n_max is not None:
        kw["fold_n_max"] = args.fold_n_max
    if args.samples is not None:
        kw["fiber_thetas"] = args.samples
    if args.resolutions:
        kw["fiber_resolutions"] = tuple(args.resolutions)
    if args.depths:
        kw["box_depths"] = tuple(args.depths)
    if args.var_cap is not None:
        kw["var_cap"] = args.var_cap
    return AnalysisConfig(**kw)


def cmd_analyze(args, out):
    m = _load(args)
    cfg = _config(args)
    log.info("fiber angles drawn with seed %d", cfg.seed)
    rep = analyze(m, cfg).to_dict()
    if args.format == "json":
        write_json(out, {"entropy_var": rep["entropy"]["variation_rate"], **rep})
    else:
        flat = _flatten(rep)
        write_table(out, ["key", "value"], sorted(flat.items()))


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


@dataclass
class SweepRow:
    b: float
    omega: float
    lift_monotone: Optional[bool] = None
    fold_N: Optional[int] = None
    fold_K: Optional[int] = None
    entropy_hs_lb: Optional[float] = None
    entropy_var: Optional[float] = None
    var_alpha_at_depth_j: tuple = ()
    fiber_count_median: Optional[int] = None
    depth_used: Optional[int] = None
    tail_bound: Optional[float] = None
    error: str = ""


@dataclass(frozen=True)
class SweepConfig:
    degree: int = 2
    tol: float = DEFAULT_TOL
    depth: Optional[int] = None
    fold_n_max: int = 6
    n_min: int = 4
    n_max: int = 10
    profile_j_max: int = 4
    fiber_thetas: int = 20
    fiber_resolution: int = 2**12
    seed: int = 0


def sweep_row(b: float, omega: float, cfg: SweepConfig) -> SweepRow:
    row = SweepRow(b, omega)
    try:
        m = standard_map(b, omega, cfg.degree)
        row.lift_monotone = lift_nondecreasing(m)
        e = make_evaluator(m, cfg.depth, cfg.tol)
        row.depth_used, row.tail_bound = e.depth, e.tail_bound
        mn = normalize(m, e)
        w = find_fold(make_evaluator(mn, cfg.depth, cfg.tol), cfg.fold_n_max)
        if w is not None:
            row.fold_N, row.fold_K = w.N, w.K
            row.entropy_hs_lb = entropy_lower_bound(w)
        row.entropy_var = entropy_from_variation(m, cfg.n_min, cfg.n_max).variation_rate
        row.var_alpha_at_depth_j = variation_profile_alpha(e, cfg.profile_j_max, w).values
        reps = fiber_survey(e, fiber_thetas(cfg.seed, cfg.fiber_thetas), [cfg.fiber_resolution])
        row.fiber_count_median = int(np.median([r.component_counts[0] for r in reps]))
    except (NumericalFailure, OverflowError, ValueError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def sweep(b_values, omega_values, cfg: SweepConfig = SweepConfig()) -> list:
    """Rows in row-major order: ``b`` outer, ``omega`` inner."""
    return [sweep_row(float(b), float(w), cfg) for b in b_values for w in omega_values]


def _axis(rng, steps, name):
    lo, hi = rng
    if steps < 1:
        raise MapSpecError(name, "steps must be >= 1")
    if steps == 1:
        if lo != hi:
            raise MapSpecError(name, "a one-point range needs equal ends")
        return np.array([lo])
    if not hi > lo:
        raise MapSpecError(name, "range must satisfy lo < hi")
    return np.linspace(lo, hi, steps)


def cmd_sweep(args, out):
    b_steps = args.b_steps if args.b_steps is not None else args.steps
    w_steps = args.omega_steps if args.omega_steps is not None else args.steps
    bs = _axis(args.b_range, b_steps, "b-range")
    ws = _axis(args.omega_range, w_steps, "omega-range")
    cfg = SweepConfig(degree=args.degree, tol=args.tol, depth=args.depth, seed=args.seed)
    log.info("sweep %d x %d points, fiber seed %d", bs.size, ws.size, cfg.seed)
    rows = sweep(bs, ws, cfg)
    if args.format == "json":
        write_json(out, [asdict(r) for r in rows])
    else:
        names = [f.name for f in fields(SweepRow)]
        write_table(out, names, [[getattr(r, n) for n in names] for r in rows])


def cmd_leo(args, out):
    m = _load(args)
    if args.interval:
        intervals = [tuple(args.interval)]
    else:
        rng = np.random.default_rng(args.seed)
        lows = rng.uniform(0.0, 1.0 - args.width, args.samples)
        intervals = [(float(a), float(a + args.width)) for a in lows]
        log.info("%d random intervals drawn with seed %d", args.samples, args.seed)
    rows = [(lo, hi, leo_test(m, (lo, hi), args.n_max)) for lo, hi in intervals]
    if args.format == "json":
        write_json(out, {"seed": args.seed, "n_max": args.n_max,
                         "results": [{"lo": a, "hi": b, "n": n} for a, b, n in rows]})
    else:
        write_table(out, ["lo", "hi", "n"], rows)


def cmd_fibers(args, out):
    m = _load(args)
    e = _evaluator(m, args)
    thetas = np.asarray(args.theta, dtype=float) if args.theta else fiber_thetas(args.seed, args.samples)
    if np.any((thetas < 0) | (thetas >= 1)):
        raise MapSpecError("theta", "angles must lie in [0, 1)")
    resolutions = args.resolutions or [2**12, 2**15, 2**18]
    reps = fiber_survey(e, thetas, resolutions, args.phase)
    if args.format == "json":
        write_json(out, {"seed": args.seed, "gap_threshold": 10.0 * e.tail_bound,
                         "reports": [r.to_dict() for r in reps]})
    else:
        rows = [(r.theta, R, c) for r in reps for R, c in zip(r.resolutions, r.component_counts)]
        write_table(out, ["theta", "resolution", "components"], rows)


# ---------------------------------------------------------------------------
# argument parsing


def _common(p, fmt_default="csv"):
    p.add_argument("--spec", metavar="FILE", help="JSON map spec")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--depth", type=int, help="series depth for alpha")
    g.add_argument("--tol", type=float, default=DEFAULT_TOL, help="truncation tolerance for alpha")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=fmt_default)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="circlesemi", description="Semiconjugacy toolkit for degree-D circle maps.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("alpha", help="evaluate the semiconjugacy lift")
    _common(p)
    xg = p.add_mutually_exclusive_group()
    xg.add_argument("--x", type=float, nargs="+")
    xg.add_argument("--grid", type=int, default=16, help="evaluate at k/GRID, k < GRID")
    p.set_defaults(func=cmd_alpha)

    for name, func, what in (("fold", cmd_fold, "search for a fold"),
                             ("horseshoe", cmd_horseshoe, "build the horseshoe cover of the first fold")):
        p = sub.add_parser(name, help=what)
        _common(p, "json")
        p.add_argument("--n-max", type=int, default=10)
        p.set_defaults(func=func)

    p = sub.add_parser("analyze", help="entropy, variation profile, fibers and dimension")
    _common(p, "json")
    p.add_argument("--n-range", type=int, nargs=2, metavar=("N_MIN", "N_MAX"))
    p.add_argument("--j-max", type=int)
    p.add_argument("--fold-n-max", type=int)
    p.add_argument("--samples", type=int, help="number of fiber angles")
    p.add_argument("--resolutions", type=int, nargs="+")
    p.add_argument("--depths", type=int, nargs="+", help="box-counting depths")
    p.add_argument("--var-cap", type=int, help="monotone-piece cap for the variation of iterates")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="grid over the standard family b, omega")
    _common(p)
    p.add_argument("--b-range", type=float, nargs=2, default=(0.0, 0.5), metavar=("LO", "HI"))
    p.add_argument("--omega-range", type=float, nargs=2, default=(0.0, 0.0), metavar=("LO", "HI"))
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--b-steps", type=int)
    p.add_argument("--omega-steps", type=int)
    p.add_argument("--degree", type=int, default=2)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("leo", help="locally-eventually-onto test on subintervals")
    _common(p)
    p.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--width", type=float, default=1e-3)
    p.add_argument("--n-max", type=int, default=25)
    p.set_defaults(func=cmd_leo)

    p = sub.add_parser("fibers", help="fiber component counts")
    _common(p)
    p.add_argument("--theta", type=float, nargs="+")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--resolutions", type=int, nargs="+")
    p.add_argument("--phase", type=float, default=0.0)
    p.set_defaults(func=cmd_fibers)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    buf = io.StringIO()
    try:
        args.func(args, buf)
    except MapSpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (NumericalFailure, OverflowError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_SPEC
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
