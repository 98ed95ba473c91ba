"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from .batch import BatchConfig, HypothesisEntry, TestOptions, run_batch, run_hypothesis
from .dataio import bh_adjust, emit_rates, load_returns
from .engine import StatisticKind, TestConfig
from .errors import DataError, NumericalError
from .modelsel import cross_validate
from .panel import OffsetSpec, effective_times
from .simlab import FAMILIES, DgpSpec, ReplicationPlan, rate_rows, rejection_rates

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _z_term(text: str) -> tuple[str, int]:
    """``NAME`` or ``NAME:OFFSET``."""
    name, _, off = text.partition(":")
    try:
        return name, int(off) if off else 0
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad conditioning term {text!r}; use NAME or NAME:OFFSET") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--sims", type=int, help="Monte Carlo simulations")
    p.add_argument("--alpha", type=float, help="significance level")
    p.add_argument("--config", type=Path, help="JSON config file (see README)")


def _data_args(p: argparse.ArgumentParser, conditional: bool) -> None:
    p.add_argument("--data", type=Path, help="CSV with a date column and one column per series")
    p.add_argument("--values", choices=("prices", "returns"), default=None)
    p.add_argument("--date-column")
    p.add_argument("--x", required=True, help="series name for X")
    p.add_argument("--y", required=True, help="series name for Y")
    p.add_argument("--x-offset", type=int, default=0)
    p.add_argument("--y-offset", type=int, default=0)
    if conditional:
        p.add_argument("--z", type=_z_term, action="append", required=True,
                       help="conditioning series NAME[:OFFSET]; repeatable")


def _test_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lag-window", type=int)
    p.add_argument("--gamma", type=int)
    p.add_argument("--statistic", choices=("max-partial-sum", "full-sum"))
    p.add_argument("--norm", choices=("2", "inf"))
    p.add_argument("--no-center", action="store_true", help="use the uncentered lag-window covariance")
    p.add_argument("--json", action="store_true", help="print the report as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dgcm", description="Dynamic GCM tests for (conditional) independence of time series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="conditional independence test of one hypothesis")
    _common(p)
    _data_args(p, True)
    _test_args(p)
    p.add_argument("--basis", type=int, nargs=2, metavar=("TIME", "COV"), help="fixed sieve sizes (skip CV)")

    p = sub.add_parser("indep", help="unconditional independence test of one hypothesis")
    _common(p)
    _data_args(p, False)
    _test_args(p)
    p.add_argument("--time-basis", type=int, help="fixed time-basis size (skip CV)")

    p = sub.add_parser("batch", help="run a batch config and write the p-value table")
    _common(p)
    p.add_argument("batch_config", type=Path, nargs="?", help="batch config (alternative to --config)")
    p.add_argument("--jobs", type=int)
    p.add_argument("--csv", type=Path, help="CSV output path")
    p.add_argument("--json-out", type=Path, help="JSON output path")
    p.add_argument("--timings", action="store_true", help="record wall time in the JSON metadata")

    p = sub.add_parser("simulate", help="empirical rejection rates on synthetic data")
    _common(p)
    p.add_argument("--family", choices=FAMILIES, default="correlated-shocks")
    p.add_argument("--complexity", type=int, nargs="+", default=[1])
    p.add_argument("--strength", type=float, nargs="+", default=[0.0])
    p.add_argument("--n", type=int, nargs="+", default=[250, 500])
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--lag-window", type=int)
    p.add_argument("--out", type=Path, help="rate table (.csv or .json); printed when omitted")

    p = sub.add_parser("select-params", help="cross-validated sieve sizes for each regression")
    _common(p)
    _data_args(p, False)
    p.add_argument("--z", type=_z_term, action="append", default=[])
    p.add_argument("--gamma", type=int)

    p = sub.add_parser("bh", help="Benjamini-Hochberg adjustment")
    _common(p)
    p.add_argument("pvalues", nargs="*", type=float)
    p.add_argument("--input", type=Path, help="file with one p-value per line")
    return parser


def _load_config(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    try:
        return json.loads(args.config.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.config}: invalid JSON ({exc})") from None


def _options(args, doc: dict) -> TestOptions:
    opts = TestOptions.from_dict(doc.get("test") or {})
    kw = {}
    for name in ("alpha", "sims", "seed", "lag_window", "gamma"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if getattr(args, "statistic", None) or getattr(args, "norm", None):
        fam = args.statistic or opts.statistic.family
        p = (math.inf if args.norm == "inf" else 2) if args.norm else opts.statistic.p
        kw["statistic"] = StatisticKind(fam, p)
    if getattr(args, "no_center", False):
        kw["center"] = False
    if getattr(args, "basis", None):
        kw["sieve"] = tuple(args.basis)
    if getattr(args, "time_basis", None):
        kw["sieve"] = (args.time_basis, 1)
    opts = replace(opts, **kw)
    opts.config(opts.seed)
    return opts


def _returns(args, doc: dict, names):
    data = doc.get("data") or {}
    base = args.config.parent if args.config else Path(".")
    path = args.data or (base / data["path"] if "path" in data else None)
    if path is None:
        raise UsageError("no data file: pass --data or set data.path in --config")
    return load_returns(path, names, args.values or data.get("values", "prices"),
                        args.date_column or data.get("date_column"))


def _print_report(entry, rep, seed, as_json, out):
    doc = {"hypothesis": entry.name, "kind": entry.kind, "statistic": rep.statistic,
           "quantile": rep.quantile, "p_value": rep.p_value, "reject": rep.reject, "seed": seed,
           "diagnostics": rep.diagnostics}
    if as_json:
        out.write(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
        return
    out.write(f"{entry.name}\n")
    for k in ("statistic", "quantile", "p_value", "reject", "seed"):
        out.write(f"  {k:<10} {doc[k]}\n")
    d = rep.diagnostics
    out.write(f"  {'lag_window':<10} {d.get('lag_window')}\n  {'T_n':<10} {d.get('T_n')}\n")


def _cmd_test(args, out) -> int:
    doc = _load_config(args)
    z = tuple(getattr(args, "z", None) or ())
    entry = HypothesisEntry(args.x, args.y, args.x_offset, args.y_offset, z)
    opts = _options(args, doc)
    returns = _returns(args, doc, entry.series())
    rep = run_hypothesis(returns, entry, opts, opts.seed)
    _print_report(entry, rep, opts.seed, args.json, out)
    return EXIT_OK


def _cmd_batch(args, out) -> int:
    path = args.batch_config or args.config
    if path is None:
        raise UsageError("batch needs a config file")
    cfg = BatchConfig.load(path)
    over = {"alpha": args.alpha, "sims": args.sims, "seed": args.seed, "jobs": args.jobs,
            "csv_path": args.csv, "json_path": args.json_out}
    test_kw = {k: over.pop(k) for k in ("alpha", "sims", "seed") if over[k] is not None}
    cfg = replace(cfg, test=replace(cfg.test, **test_kw), timings=args.timings,
                  **{k: v for k, v in over.items() if k in ("jobs", "csv_path", "json_path") and v is not None})
    cfg.test.config(cfg.test.seed)
    table = run_batch(cfg)
    width = max(len(r.hypothesis) for r in table.rows)
    for r in table.rows:
        if r.error:
            out.write(f"{r.hypothesis:<{width}}  ERROR {r.error}\n")
        else:
            out.write(f"{r.hypothesis:<{width}}  p={r.p_raw:.4g}  p_bh={r.p_bh:.4g}  {'reject' if r.reject else 'retain'}\n")
    for p in (cfg.csv_path, cfg.json_path):
        if p is not None:
            out.write(f"wrote {p}\n")
    return EXIT_OK


def _cmd_simulate(args, out) -> int:
    doc = _load_config(args)
    opts = _options(args, doc)
    dgps = [DgpSpec(args.family, k, s) for k in args.complexity for s in args.strength]
    plan = ReplicationPlan(tuple(args.n), args.reps, opts.seed, opts.config(opts.seed), args.oracle,
                           args.workers, args.lag_window)
    rows = rate_rows(rejection_rates(plan, dgps))
    if args.out:
        meta = {"version": __version__, "burn_in": plan.burn_in, "sims": opts.sims, "alpha": opts.alpha,
                "seed": opts.seed}
        emit_rates(rows, args.out, metadata=meta)
        out.write(f"wrote {args.out}\n")
    else:
        out.write("family,complexity,strength,n,oracle,rate,se,failures\n")
        for r in rows:
            out.write(f"{r['family']},{r['complexity']},{r['strength']},{r['n']},{r['oracle']},"
                      f"{r['rate']:.4f},{r['se']:.4f},{r['failures']}\n")
    return EXIT_OK


def _cmd_select(args, out) -> int:
    doc = _load_config(args)
    z = tuple(args.z)
    entry = HypothesisEntry(args.x, args.y, args.x_offset, args.y_offset, z)
    gamma = args.gamma if args.gamma is not None else (doc.get("test") or {}).get("gamma", 1)
    returns = _returns(args, doc, entry.series())
    z_names = list(dict.fromkeys(s for s, _ in z))
    schema = {"X": [entry.x], "Y": [entry.y], **({"Z": z_names} if z_names else {})}
    panel = returns.panel(schema)
    cond = tuple((z_names.index(s), c) for s, c in z)
    offs = [entry.x_offset, entry.y_offset] + [c for _, c in cond]
    tr = effective_times(panel.n, OffsetSpec({0: offs}))
    for key, label in ((("X", 0, entry.x_offset), entry.x), (("Y", 0, entry.y_offset), entry.y)):
        cv = cross_validate(panel, key, cond, None, gamma, tr)
        c, d = cv.chosen
        out.write(f"{label}: time_basis={c} covariate_basis={d} cv_mse={cv.mse[cv.chosen]!r}"
                  f"{'  skipped=' + str(len(cv.skipped)) if cv.skipped else ''}\n")
    return EXIT_OK


def _cmd_bh(args, out) -> int:
    ps = list(args.pvalues)
    if args.input:
        for i, line in enumerate(args.input.read_text().splitlines(), start=1):
            if line.strip():
                try:
                    ps.append(float(line))
                except ValueError:
                    raise DataError(f"{args.input}: line {i} is not a number") from None
    if not ps:
        raise UsageError("no p-values given")
    alpha = args.alpha if args.alpha is not None else 0.05
    TestConfig(alpha=alpha)
    for p, a in zip(ps, bh_adjust(ps)):
        out.write(f"{p!r}\t{float(a)!r}\t{'reject' if a <= alpha else 'retain'}\n")
    return EXIT_OK


COMMANDS = {"test": _cmd_test, "indep": _cmd_test, "batch": _cmd_batch, "simulate": _cmd_simulate,
            "select-params": _cmd_select, "bh": _cmd_bh}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"dgcm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"dgcm: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"dgcm: data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
