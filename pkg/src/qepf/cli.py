"""Command-line front end.

    qepf curve "weibull k=2" --with-mrq
    qepf estimate data.csv --u 0.5,0.8 --B 1000
    qepf test arms.csv [--scan]
    qepf simulate bias_mse|power_size

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings

import numpy as np

from . import __version__
from .empirical import SampleArm, bootstrap_pointwise_ci, empirical_qepf, rank_of, read_values_csv
from .distributions import parse_model_spec
from .eqtest import SCAN_INTERVALS, POOL_SCALINGS, TestConfig, run_test, scan_to_csv, sensitivity_scan
from .errors import ConvergenceError, DomainError
from .persistence import hazard_quantile, lorenz, mrq, qepf, ttt
from . import simulate as sim

DEFAULT_SEED = 20240611

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _intervals(text):
    out = []
    for tok in text.split(","):
        lo, sep, hi = tok.partition(":")
        try:
            if not sep:
                raise ValueError
            out.append((float(lo), float(hi)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad interval '{tok}': expected lo:hi") from None
    return out


def _grid(lo, hi, step):
    if step <= 0 or hi < lo:
        raise DomainError(f"bad grid: from {lo} to {hi} by {step}")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 12) for i in range(n + 1)]


def _u_values(args):
    if args.u is not None:
        return args.u
    return _grid(args.u_min, args.u_max, args.step)


def _warn_range(us):
    out = [u for u in us if u < 0.01 or u > 0.99]
    if out:
        warnings.warn(f"u values {out} lie outside [0.01, 0.99]; the extreme tails are unstable")


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _json_text(doc):
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def _table_output(args, header, rows, meta):
    if args.format == "json":
        return _json_text({"metadata": meta, "rows": [dict(zip(header, r)) for r in rows]}), None
    return _csv_text(header, rows), meta


def _emit(args, text, meta=None):
    """Write atomically: nothing appears at the target unless the command succeeded."""
    if args.output in (None, "-"):
        sys.stdout.write(text)
        return
    _atomic_write(args.output, text)
    if meta is not None:
        _atomic_write(args.output + ".meta.json", _json_text(meta))


def _atomic_write(path, text):
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".qepf-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _base_meta(args, command):
    return {"command": command, "version": __version__, "seed": args.seed, "format": args.format}


def _read_groups(path):
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, newline="") as fh:
                text = fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read '{path}': {exc.strerror}") from None
    return read_values_csv(text, source=path)


def cmd_curve(args):
    model = parse_model_spec(args.model)
    us = _u_values(args)
    _warn_range(us)
    extras = [("mrq", args.with_mrq, mrq), ("hazard", args.with_hazard, lambda m, u: hazard_quantile(m, u)),
              ("lorenz", args.with_lorenz, lorenz), ("ttt", args.with_ttt, ttt)]
    header = ["u", "qepf"] + [name for name, on, _ in extras if on]
    rows = []
    for u in us:
        row = [u, qepf(model, u)]
        row += [fn(model, u) for _, on, fn in extras if on]
        rows.append(row)
    meta = _base_meta(args, "curve")
    meta.update(model=model.describe(), u=us)
    text, side = _table_output(args, header, rows, meta)
    _emit(args, text, side)


def cmd_estimate(args):
    groups = _read_groups(args.input)
    us = _u_values(args)
    _warn_range(us)
    header = ["group", "u", "n", "k", "estimate", "ci_lo", "ci_hi"]
    rows = []
    for g, vals in groups.items():
        if vals.size < 2:
            raise DomainError(f"group '{g}' has {vals.size} value(s); need at least 2")
        arm = SampleArm(vals, g)
        if arm.n < 100 and any(u > 0.98 for u in us):
            warnings.warn(f"group '{g}': u > 0.98 with n = {arm.n} < 100 rests on very few observations")
        for u in us:
            est = empirical_qepf(arm, u)
            lo, hi = bootstrap_pointwise_ci(arm, u, B=args.B, level=args.level, seed=args.seed)
            rows.append([g, u, arm.n, rank_of(arm.n, u), est, lo, hi])
    meta = _base_meta(args, "estimate")
    meta.update(input=args.input, u=us, B=args.B, level=args.level)
    text, side = _table_output(args, header, rows, meta)
    _emit(args, text, side)


def _pick_arms(groups, ref, bio):
    names = list(groups)
    for who, g in (("reference", ref), ("biosimilar", bio)):
        if g is not None and g not in groups:
            raise DomainError(f"{who} group '{g}' not in input (found {names})")
    if ref is None or bio is None:
        rest = [g for g in names if g not in (ref, bio)]
        if len(rest) != 1 + (ref is None and bio is None):
            raise DomainError(f"cannot choose two groups from {names}; name them with --ref/--bio")
        if ref is None:
            ref = rest.pop(0)
        if bio is None:
            bio = rest.pop(0)
    for g in (ref, bio):
        if groups[g].size < 10:
            raise DomainError(f"group '{g}' has {groups[g].size} observations; need at least 10")
    return ref, bio


def cmd_test(args):
    groups = _read_groups(args.input)
    ref, bio = _pick_arms(groups, args.ref, args.bio)
    x, y = SampleArm(groups[ref], ref), SampleArm(groups[bio], bio)
    meta = _base_meta(args, "test")
    meta.update(input=args.input, ref=ref, bio=bio, grid_step=args.grid_step, B=args.B,
                alpha=args.alpha, pool_scaling=args.pool_scaling)
    if args.scan:
        intervals = args.intervals or list(SCAN_INTERVALS)
        base = TestConfig(grid_step=args.grid_step, B=args.B, alpha=args.alpha, seed=args.seed,
                          pool_scaling=args.pool_scaling)
        rows = sensitivity_scan(x, y, intervals, base)
        meta.update(intervals=intervals)
        if args.format == "json":
            _emit(args, _json_text({"metadata": meta, "rows": rows}))
        else:
            _emit(args, scan_to_csv(rows), meta)
        return
    cfg = TestConfig(args.u_lower, args.u_upper, args.grid_step, args.B, args.alpha, args.seed,
                     args.pool_scaling)
    res = run_test(x, y, cfg).to_dict()
    meta.update(u_lower=args.u_lower, u_upper=args.u_upper)
    if args.format == "json":
        _emit(args, _json_text({**res, "metadata": meta}))
    else:
        _emit(args, _csv_text(list(res), [list(res.values())]), meta)


def cmd_simulate(args):
    meta = _base_meta(args, "simulate")
    if args.study == "bias_mse":
        rep = sim.run_bias_mse(sim.BIAS_MSE_MODELS, args.u or sim.BIAS_MSE_U, args.n or sim.BIAS_MSE_N,
                               reps=args.reps, seed=args.seed)
    else:
        trials = args.trials or (2000 if args.full_scale else 500)
        B = args.B or (1000 if args.full_scale else 500)
        cfg = TestConfig(args.u_lower, args.u_upper, args.grid_step, B, args.alpha, args.seed,
                         args.pool_scaling)
        rep = sim.run_power_size_table(n_list=args.n or sim.POWER_N, mc_trials=trials,
                                       test_config=cfg)
    for msg in rep.skipped:
        warnings.warn(msg)
    meta.update(study=args.study, **rep.metadata, skipped=rep.skipped)
    if args.format == "json":
        _emit(args, _json_text({"metadata": meta, "rows": rep.to_records()}))
    else:
        _emit(args, rep.to_csv(), meta)


def _globals(parser, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(DEFAULT_SEED),
                        help=f"master seed (default {DEFAULT_SEED})")
    parser.add_argument("--format", choices=("csv", "json"), default=d(None),
                        help="output format (default csv; json for a single test result)")
    parser.add_argument("--output", "-o", default=d(None), help="output file (default stdout)")


def _u_grid_args(p, lo, hi, step):
    p.add_argument("--u", type=_float_list, default=None, help="explicit u values, comma-separated")
    p.add_argument("--u-min", type=float, default=lo)
    p.add_argument("--u-max", type=float, default=hi)
    p.add_argument("--step", type=float, default=step)


def _test_args(p, B):
    p.add_argument("--u-lower", type=float, default=0.60)
    p.add_argument("--u-upper", type=float, default=0.90)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--B", type=int, default=B)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--pool-scaling", choices=POOL_SCALINGS, default="tail_mean")


def build_parser():
    parser = _Parser(prog="qepf", description="Quantile-based persistence functions.")
    parser.add_argument("--version", action="version", version=f"qepf {__version__}")
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curve", help="evaluate a model's persistence curve")
    _globals(p, suppress=True)
    p.add_argument("model", help='model spec, e.g. "weibull k=2 lambda=1"')
    _u_grid_args(p, 0.05, 0.95, 0.05)
    for name in ("mrq", "hazard", "lorenz", "ttt"):
        p.add_argument(f"--with-{name}", action="store_true")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("estimate", help="empirical persistence with bootstrap intervals")
    _globals(p, suppress=True)
    p.add_argument("input", help="CSV file ('-' for stdin)")
    _u_grid_args(p, 0.50, 0.90, 0.10)
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", help="two-sample equality test of persistence curves")
    _globals(p, suppress=True)
    p.add_argument("input", help="two-column group,value CSV ('-' for stdin)")
    p.add_argument("--ref", default=None)
    p.add_argument("--bio", default=None)
    _test_args(p, 1000)
    p.add_argument("--scan", action="store_true", help="run the interval sensitivity scan")
    p.add_argument("--intervals", type=_intervals, default=None,
                   help="scan intervals as lo:hi,lo:hi (default: the 16 standard intervals)")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte Carlo bias/MSE or power/size study")
    _globals(p, suppress=True)
    p.add_argument("study", choices=("bias_mse", "power_size"))
    p.add_argument("--reps", type=int, default=1000, help="bias_mse replications")
    p.add_argument("--u", type=_float_list, default=None)
    p.add_argument("--n", type=_int_list, default=None)
    p.add_argument("--trials", type=int, default=None, help="power_size trials (default 500)")
    p.add_argument("--full-scale", action="store_true", help="2000 trials and B=1000")
    _test_args(p, None)
    p.set_defaults(func=cmd_simulate)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.format is None:
        single_result = args.command == "test" and not args.scan
        args.format = "json" if single_result else "csv"
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", UserWarning)
            warnings.showwarning = _show_warning
            args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ArithmeticError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
