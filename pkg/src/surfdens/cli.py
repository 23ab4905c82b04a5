"""Command-line entry point: fit, sample, bench, verify-nodes, curve."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bench import rows_to_csv, run_bench
from .distributions import builtin_specs, get_spec, l1_error, sample
from .interp import MAX_FIT_DEGREE, NODE_TABLE, optimize_nodes, ratio_sup
from .io import atomic_write, read_samples, write_samples
from .merge import DEFAULT_ALPHA, THEORY_ALPHA, SurfConfig, surf
from .polynomial import PiecewiseEstimate
from .samples import subsample

MIN_SAMPLES = 7

VERIFY_FIELDS = ("degree", "nodes", "ratio", "published_ratio", "delta", "optimized_nodes", "optimized_ratio")


class CliError(Exception):
    pass


def _degree(text: str) -> int:
    d = int(text)
    if d < 0:
        raise argparse.ArgumentTypeError("degree must be non-negative")
    if d > MAX_FIT_DEGREE:
        raise argparse.ArgumentTypeError(f"degree must be ≤ {MAX_FIT_DEGREE}")
    return d


def _int_list(text: str) -> list[int]:
    """Comma-separated integers; ``a-b`` spans are inclusive."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _degrees(text: str) -> list[int]:
    values = _int_list(text)
    for d in values:
        _degree(str(d))
    return values


def _log_base(text: str) -> float:
    return float(np.e) if text == "e" else float(text)


def _seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SURF_SEED")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise CliError(f"SURF_SEED must be an integer, got {env!r}") from None


def _config(args, degree: int | None = None) -> SurfConfig:
    return SurfConfig(
        degree=args.degree if degree is None else degree,
        alpha=THEORY_ALPHA if args.theory_alpha else args.alpha,
        delta=args.delta,
        epsilon=args.eps,
        seed=_seed(args),
        jobs=args.jobs,
        halt_t=args.halt_t,
        raw_mass=args.raw_mass,
        log_base=args.log_base,
    )


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write(Path(out), text.encode())


def cmd_fit(args) -> int:
    raw = read_samples(args.samples)
    if raw.size < MIN_SAMPLES:
        raise CliError(f"need at least {MIN_SAMPLES} samples, got {raw.size}")
    cfg = _config(args)
    s = subsample(raw, cfg.seed)
    est = surf(s, cfg)
    _emit(est.dumps() + "\n", args.out)
    print(f"pieces={len(est.pieces)} n={s.n} used={s.n - 1} of {raw.size} "
          f"gamma={est.meta['gamma']:.6g} config={json.dumps(est.meta['config'], sort_keys=True)}",
          file=sys.stderr if args.out is None else sys.stdout)
    return 0


def cmd_sample(args) -> int:
    spec = get_spec(args.spec)
    values = sample(spec, args.count, seed=_seed(args))
    if args.out is None:
        sys.stdout.write("".join(f"{v!r}\n" for v in values.tolist()))
    else:
        write_samples(args.out, values)
    return 0


def cmd_bench(args) -> int:
    base = _config(args, degree=0)
    rows = run_bench(args.spec, args.degree, args.n, args.trials,
                     seed=_seed(args) or 0, base=base, jobs=args.jobs)
    _emit(rows_to_csv(rows, timing=args.timing), args.out)
    return 0


def verify_rows(degrees, optimize_max: int = 3, grid: float = 1e-3) -> list[dict]:
    rows = []
    for d in degrees:
        table = NODE_TABLE[d]
        r = ratio_sup(table)
        row = {
            "degree": d,
            "nodes": " ".join(f"{x:g}" for x in table.nodes),
            "ratio": r,
            "published_ratio": table.ratio,
            "delta": r - table.ratio,
            "optimized_nodes": "",
            "optimized_ratio": "",
        }
        if d <= optimize_max:
            best = optimize_nodes(d, grid=grid)
            row["optimized_nodes"] = " ".join(f"{x:.6f}" for x in best.nodes)
            row["optimized_ratio"] = best.ratio
        rows.append(row)
    return rows


def cmd_verify_nodes(args) -> int:
    rows = verify_rows(args.degree, args.optimize_max, args.grid)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, VERIFY_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.9f}" if isinstance(v, float) else v) for k, v in row.items()})
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_curve(args) -> int:
    est = PiecewiseEstimate.loads(Path(args.estimate).read_text())
    lo, hi = est.hull
    pad = args.pad * (hi - lo)
    x = np.linspace(lo - pad, hi + pad, args.points)
    columns = {"x": x, "estimate": est(x)}
    if args.spec:
        columns["density"] = get_spec(args.spec).pdf(x)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in zip(*columns.values()):
        writer.writerow([repr(float(v)) for v in row])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_error(args) -> int:
    est = PiecewiseEstimate.loads(Path(args.estimate).read_text())
    print(repr(l1_error(est, get_spec(args.spec))))
    return 0


def _fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="penalty multiplier (default 0.25)")
    p.add_argument("--theory-alpha", action="store_true", help=f"use the worst-case multiplier {THEORY_ALPHA}")
    p.add_argument("--delta", type=float, default=0.1, help="failure probability (default 0.1)")
    p.add_argument("--eps", type=float, default=None, help="override the accuracy parameter")
    p.add_argument("--log-base", type=_log_base, default=10.0, help="base of the log in eps (number or 'e')")
    p.add_argument("--raw-mass", action="store_true", help="use n_J/n instead of (n_J+1)/n")
    p.add_argument("--halt-t", type=int, default=None, help="stop merging while t groups (a power of two) remain")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (falls back to SURF_SEED)")
    common.add_argument("--jobs", type=int, default=1, help="worker count")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    parser = argparse.ArgumentParser(prog="surf", description="Piecewise-polynomial density estimation.")
    parser.add_argument("--config", default=None, help="JSON file of flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit an estimate to a sample file")
    p.add_argument("samples", help="text (one number per line) or .f64/.bin file")
    p.add_argument("--degree", "-d", type=_degree, default=1)
    _fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", parents=[common], help="draw samples from a mixture")
    p.add_argument("spec", help=f"builtin name ({', '.join(builtin_specs())}) or JSON file")
    p.add_argument("--count", "-c", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bench", parents=[common], help="Monte-Carlo l1 error table")
    p.add_argument("spec", nargs="+")
    p.add_argument("--degree", "-d", type=_degrees, default=[1], help="list, e.g. 1,2,3 or 1-3")
    p.add_argument("--n", type=_int_list, default=[512, 2048, 8192], help="sample budgets (powers of two)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--timing", action="store_true", help="add a wall_seconds column")
    _fit_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify-nodes", parents=[common], help="recompute node-partition ratios")
    p.add_argument("--degree", "-d", type=_degrees, default=list(range(MAX_FIT_DEGREE + 1)))
    p.add_argument("--grid", type=float, default=1e-3, help="optimizer grid step")
    p.add_argument("--optimize-max", type=int, default=3, help="optimize nodes up to this degree")
    p.set_defaults(func=cmd_verify_nodes)

    p = sub.add_parser("curve", parents=[common], help="plot-ready CSV of an estimate")
    p.add_argument("estimate")
    p.add_argument("--spec", default=None, help="add the true density column")
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--pad", type=float, default=0.0, help="extend the grid by this fraction of the hull")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("error", help="l1 distance between an estimate and a mixture")
    p.add_argument("estimate")
    p.add_argument("spec")
    p.set_defaults(func=cmd_error)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        doc = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise CliError("config must be a JSON object")
    defaults = {k.replace("-", "_"): v for k, v in doc.items()}
    for action in parser._subparsers._group_actions:
        for subparser in action.choices.values():
            subparser.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (CliError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"surf: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
