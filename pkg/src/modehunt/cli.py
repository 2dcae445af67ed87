"""Command-line entry point: ``modehunt {estimate,sample,experiment}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 internal invariant violation. Every failure prints one line on stderr and
leaves no output files behind.
"""

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import load_config
from .densities import PerturbedDensity, PowerPeakDensity, TwoPointPair
from .errors import ConfigError, DataError, FitError, InvariantError
from .estimators import MonoParams, MultiParams, mono_mode, multi_mode, theoretical_bandwidth
from .experiments import (
    run_trials,
    runtime_scaling,
    sublinear_demo,
    two_point_sweep,
)
from .pointfile import format_point, read_point_file, write_points

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4

TABLE_COLUMNS = ("n", "rep", "error", "time")
TWO_POINT_COLUMNS = ("c", "n", "h", "n_chi2", "error")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _atomic_write(files):
    """Write ``{path: text}`` so that either every file appears or none does."""
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


def _table(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# estimate


def cmd_estimate(args):
    if args.algo == "mono":
        if args.b is not None or args.kappa is not None or args.rescale:
            raise UsageError("--b, --kappa and --rescale apply to --algo multi only")
        if args.h is not None and args.auto_h:
            raise UsageError("--h and --auto-h are mutually exclusive")
        if args.h is None and not args.auto_h:
            raise UsageError("--algo mono needs --h or --auto-h")
        if args.auto_h and args.beta is None:
            raise UsageError("--auto-h requires --beta")
        if not args.auto_h and (args.beta is not None or args.c is not None):
            raise UsageError("--beta and --c apply to --auto-h only")
    else:
        if args.h is not None or args.auto_h or args.beta is not None or args.c is not None:
            raise UsageError("--h, --auto-h, --beta and --c apply to --algo mono only")

    data = read_point_file(args.points)
    x = data.points
    params = {"algo": args.algo}
    t0 = time.perf_counter()
    try:
        if args.algo == "mono":
            if args.auto_h:
                c = 1.0 if args.c is None else args.c
                h = theoretical_bandwidth(data.n, data.d, args.beta, c)
                params.update(beta=args.beta, c=c)
            else:
                h = args.h
            params["h"] = MonoParams(h).h
            est = mono_mode(x, h)
        else:
            p = MultiParams(
                b=2.0 if args.b is None else args.b,
                kappa=2 if args.kappa is None else args.kappa,
                rescale=args.rescale,
            )
            params.update(b=p.b, kappa=p.kappa, rescale=p.rescale)
            est = multi_mode(x, p)
    except (DataError, InvariantError):
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    elapsed = time.perf_counter() - t0

    if len(est) != data.d:
        raise InvariantError(f"estimate has dimension {len(est)}, data has {data.d}")
    if args.out:
        result = {
            "estimate": [float(v) for v in est],
            "parameters": params,
            "n": data.n,
            "d": data.d,
            "wall_time": elapsed,
            "input": data.path,
            "version": __version__,
        }
        _atomic_write({args.out: _json(result)})
    print(format_point(est))
    return EXIT_OK


# sample


def _density_from_args(args):
    try:
        if args.family == "power-peak":
            if args.h is not None:
                raise UsageError("--h applies to --family f2 only")
            return PowerPeakDensity(
                args.d,
                args.beta,
                args.h0,
                mode=args.mode,
                peak_value=1.0 if args.peak_value is None else args.peak_value,
                c0=1.0 if args.c0 is None else args.c0,
                C0=1.0 if args.C0 is None else args.C0,
            )
        for flag in ("mode", "peak_value", "c0", "C0"):
            if getattr(args, flag) is not None:
                raise UsageError(f"--{flag.replace('_', '-')} applies to --family power-peak only")
        if args.family == "f1":
            if args.h is not None:
                raise UsageError("--h applies to --family f2 only")
            return TwoPointPair(args.d, args.beta, args.h0, args.h0).first
        if args.h is None:
            raise UsageError("--family f2 requires --h")
        return TwoPointPair(args.d, args.beta, args.h0, args.h).second
    except UsageError:
        raise
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid density ({args.family}): {exc}") from None


def cmd_sample(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    f = _density_from_args(args)
    x = f.sample(args.n, args.seed)
    buf = io.StringIO()
    write_points(buf, x)
    if args.out:
        _atomic_write({args.out: buf.getvalue()})
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# experiment


def _pair_shape(density):
    if isinstance(density, PerturbedDensity):
        return density.d, density.beta, density.pair.h0
    return density.d, density.beta, density.h0


def _fit_entry(fit_fn, report):
    try:
        fit = fit_fn(report)
    except FitError as exc:
        return {"error": str(exc)}
    return {"value": float(f"{fit.slope:.6g}"), "stderr": float(f"{fit.stderr:.6g}")}


def run_experiment(plan, workers=1):
    """Run a parsed plan; returns ``{filename: text}`` for the output directory."""
    cfg = plan.config
    if plan.kind == "rate":
        report = run_trials(cfg, workers)
        return {
            "report.json": _json({"kind": "rate", **report.to_dict()}),
            "table.csv": _table(TABLE_COLUMNS, report.rows()),
        }
    if plan.kind == "runtime":
        report = run_trials(cfg, workers)
        body = {"kind": "runtime", **report.to_dict()}
        body["timing"]["slope"] = _fit_entry(runtime_scaling, report)
        return {"report.json": _json(body), "table.csv": _table(TABLE_COLUMNS, report.rows())}
    if plan.kind == "sublinear":
        res = sublinear_demo(cfg, plan.gamma, workers)
        body = {
            "kind": "sublinear",
            "gamma": plan.gamma,
            "full": res.full.to_dict(),
            "subsampled": res.sub.to_dict(),
        }
        try:
            body["gap_z"] = float(f"{res.gap_z:.6g}")
        except FitError as exc:
            body["gap_z"] = {"error": str(exc)}
        return {
            "report.json": _json(body),
            "table_full.csv": _table(TABLE_COLUMNS, res.full.rows()),
            "table_sub.csv": _table(TABLE_COLUMNS, res.sub.rows()),
        }
    d, beta, h0 = _pair_shape(cfg.density)
    rows = two_point_sweep(d, beta, h0, cfg.sizes, plan.cs, cfg.reps, cfg.seed)
    body = {
        "kind": "two-point",
        "metadata": {"config": cfg.describe(), "version": __version__},
        "d": d,
        "beta": beta,
        "h0": h0,
        "rows": [{k: (float(f"{v:.6g}") if isinstance(v, float) else v) for k, v in r.items()} for r in rows],
    }
    return {
        "report.json": _json(body),
        "table.csv": _table(TWO_POINT_COLUMNS, ([r[c] for c in TWO_POINT_COLUMNS] for r in rows)),
    }


def cmd_experiment(args):
    plan = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be nonnegative")
        plan = replace(plan, config=replace(plan.config, seed=args.seed))
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    files = run_experiment(plan, workers)
    out = Path(args.out)
    _atomic_write({out / name: text for name, text in files.items()})
    print(out / "report.json")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="modehunt", description="Histogram estimators of the global mode of a density.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("estimate", help="estimate the mode of a point file")
    e.add_argument("points", help="point file (comma or whitespace separated, optional header)")
    e.add_argument("--algo", choices=("mono", "multi"), default="mono")
    e.add_argument("--h", type=float, help="bin width (mono)")
    e.add_argument("--auto-h", action="store_true", help="use c * n^(-1/(d+2 beta)) as the bin width (mono)")
    e.add_argument("--beta", type=float, help="smoothness exponent for --auto-h")
    e.add_argument("--c", type=float, help="constant for --auto-h (default 1)")
    e.add_argument("--b", type=float, help="scale multiplier, >= 2 (multi, default 2)")
    e.add_argument("--kappa", type=int, help="retention margin in bins, >= 0 (multi, default 2)")
    e.add_argument("--rescale", action="store_true", help="run the multi-scale search on min-max rescaled data")
    e.add_argument("--out", help="also write a JSON result file here")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sample", help="draw points from a synthetic density")
    s.add_argument("--family", choices=("power-peak", "f1", "f2"), default="power-peak")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--h0", type=float, required=True)
    s.add_argument("--peak-value", type=float)
    s.add_argument("--mode", type=float, nargs="+", help="mode location (power-peak)")
    s.add_argument("--c0", type=float)
    s.add_argument("--C0", type=float)
    s.add_argument("--h", type=float, help="perturbation width (f2)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="output point file (default: stdout)")
    s.set_defaults(func=cmd_sample)

    x = sub.add_parser("experiment", help="run a configured Monte Carlo experiment")
    x.add_argument("--config", required=True, help="TOML experiment file")
    x.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    x.add_argument("--seed", type=int, help="override the config seed")
    x.add_argument("--out", default="results", help="output directory (default: results)")
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        code, msg = EXIT_USAGE, str(exc)
    except DataError as exc:
        code, msg = EXIT_DATA, str(exc)
    except InvariantError as exc:
        code, msg = EXIT_INVARIANT, str(exc)
    except OSError as exc:
        code, msg = EXIT_DATA, f"{exc.filename or ''}: {exc.strerror}".lstrip(": ")
    print(f"modehunt: error: {' '.join(msg.split())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
