"""Command-line entry point.

Subcommands::

    lsideficit compute --family scale --sigma 2 [--metric w2 ...] [--json out.json]
    lsideficit verify CONFIG.toml [--tolerance T] [--out-dir DIR]
    lsideficit sweep --family scale --parameter sigma --start 1.5 --stop 1.01 --count 20 --out s.csv
    lsideficit oracle prokhorov_subsets [--atoms 8 --trials 50 --seed 0]

Exit codes: 0 success, 1 usage, configuration or runtime error, 2 an
inequality was violated or an oracle failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from . import metrics
from .config import ConfigError, load_config
from .densities import FamilyError, gaussian, make_family
from .functionals import carlen_deficit, functional_report, rescale_to_dm
from .oracles import ORACLES
from .transport1d import w_to_gaussian
from .verify import run_suite, sequence_diagnostics, log_schedule, with_tolerance

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2

METRICS = ("w1", "w2", "tv", "hellinger", "kolmogorov", "levy", "prokhorov")
FAMILY_FLAGS = ("b", "sigma", "w", "sigma1", "sigma2", "eps", "center", "width", "alpha")
RECORD_COLUMNS = ("name", "anchor", "subject", "lhs", "rhs", "margin", "error_bound", "status",
                  "constant")
SWEEP_COLUMNS = ("parameter", "delta", "delta_c", "H", "I", "W1", "W2", "d_TV", "d_K", "l1")
SNAP = 1e-12


class UsageError(Exception):
    """Bad command-line input; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def fmt(value) -> str:
    """Locale-free 17-significant-digit rendering used in every CSV."""
    if value is None:
        return ""
    return format(float(value), ".17g")


def _origin(exc: BaseException) -> str:
    """Innermost ``lsideficit`` module on the traceback of ``exc``."""
    name = "lsideficit"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        mod = frame.f_globals.get("__name__", "")
        if mod.startswith("lsideficit.") and mod != __name__:
            name = mod
    return name


# ---------------------------------------------------------------------------
# compute


def _descriptor(args) -> dict:
    if args.spec is not None:
        try:
            desc = json.loads(args.spec)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--spec: {exc.msg} at line {exc.lineno} column {exc.colno}") from None
        if not isinstance(desc, dict):
            raise UsageError("--spec must be a JSON object")
        return desc
    if args.family is None:
        raise UsageError("compute needs --family or --spec")
    desc = {"family": args.family}
    for key in FAMILY_FLAGS:
        v = getattr(args, key)
        if v is not None:
            desc[key] = v
    return desc


def _metric(name: str, f, atoms: int) -> float:
    g = gaussian()
    if name == "w1":
        return w_to_gaussian(f, 1.0)
    if name == "w2":
        return w_to_gaussian(f, 2.0)
    if name == "tv":
        return metrics.total_variation(f, g)
    if name == "hellinger":
        return metrics.hellinger(f, g)
    mu, nu = metrics.as_cdf(f), metrics.as_cdf(g)
    if name == "kolmogorov":
        return metrics.kolmogorov(mu, nu)
    if name == "levy":
        return metrics.levy(mu, nu)
    return metrics.prokhorov_continuous(mu, nu, atoms)[0]


def compute_values(desc: dict, metric_names=(), atoms: int = metrics.DEFAULT_ATOMS) -> dict:
    """Functional report, Carlen deficit and requested metrics to the Gaussian."""
    f = make_family(desc)
    rep = functional_report(f)
    out = {"label": f.label, **rep.as_dict()}
    out["carlen_deficit"] = carlen_deficit(rescale_to_dm(f))
    for name in metric_names:
        out[name] = _metric(name, f, atoms)
    out["error_bounds"] = dict(rep.errors)
    return out


def cmd_compute(args) -> int:
    desc = _descriptor(args)
    values = compute_values(desc, args.metric or (), args.atoms)
    width = max(len(k) for k in values)
    for key, v in values.items():
        if key == "error_bounds":
            continue
        if isinstance(v, float):
            v = 0.0 if abs(v) < SNAP else v
            v = format(v, ".10g")
        print(f"{key:<{width}} = {v}")
    if args.json:
        Path(args.json).write_text(json.dumps({"descriptor": desc, **values}, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def write_records(path: Path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow((r.name, r.anchor, r.subject, fmt(r.lhs), fmt(r.rhs), fmt(r.margin),
                        fmt(r.numerical_error_bound), r.status, fmt(r.constant)))


def _finite_or_none(v):
    return v if v is None or math.isfinite(v) else None


def summarize(result, config_path: str) -> dict:
    return {
        "config": config_path,
        "counts": result.counts(),
        "violations": [{"name": r.name, "subject": r.subject, "margin": r.margin,
                        "error_bound": r.numerical_error_bound} for r in result.violations],
        "errors": [{"name": r.name, "subject": r.subject, "message": r.message}
                   for r in result.errors],
        "constants": [{"name": r.name, "subject": r.subject,
                       "constant": _finite_or_none(r.constant)}
                      for r in result.records if r.constant is not None],
    }


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    suite = cfg.suite if args.tolerance is None else with_tolerance(cfg.suite, args.tolerance)
    result = run_suite(cfg.catalog, suite, cfg.pairs, cfg.products)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records(out_dir / cfg.csv, result.records)
    summary = summarize(result, str(args.config))
    (out_dir / cfg.summary).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for spec in cfg.sweeps:
        write_sweep(out_dir / f"sweep_{spec.name}.csv", _run_sweep(
            spec.family, spec.parameter, spec.start, spec.stop, spec.count, spec.center,
            spec.spacing, suite.resolution))
    c = result.counts()
    print(" ".join(f"{k}={v}" for k, v in c.items()))
    for r in result.violations:
        print(f"VIOLATED {r.name} [{r.subject}] margin={r.margin:.3e} "
              f"bound={r.numerical_error_bound:.3e}", file=sys.stderr)
    for r in result.errors:
        print(f"ERROR {r.name} [{r.subject}] {r.message}", file=sys.stderr)
    if result.errors:
        return EXIT_ERROR
    return EXIT_VIOLATION if result.violations else EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _schedule(start, stop, count, center, spacing) -> np.ndarray:
    if count < 1:
        raise UsageError("--count must be positive")
    if spacing == "linear" or count == 1:
        return np.linspace(start, stop, count)
    try:
        return log_schedule(start, stop, count, center)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _run_sweep(family, parameter, start, stop, count, center, spacing, res=None):
    sched = _schedule(start, stop, count, center, spacing)
    kw = {} if res is None else {"res": res}
    return sequence_diagnostics(family, parameter, sched, **kw)


def write_sweep(path, report) -> None:
    fh = sys.stdout if path is None else open(path, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for p in report.points:
            w.writerow([fmt(v) for v in (p.parameter, p.deficit, p.carlen_deficit, p.entropy,
                                         p.fisher, p.w1, p.w2, p.tv, p.kolmogorov, p.l1)])
        if len(report.points) > 1:
            fh.write(f"# l1_exponent,{fmt(report.exponent)}\n")
            fh.write(f"# l2_exponent,{fmt(report.l2_exponent)}\n")
            fh.write(f"# deficit_monotone,{report.deficit_monotone}\n")
            fh.write(f"# l1_monotone,{report.l1_monotone}\n")
            fh.write(f"# converging,{report.converging}\n")
        for note in report.notes:
            fh.write(f"# note,{note}\n")
    finally:
        if path is not None:
            fh.close()


def cmd_sweep(args) -> int:
    family = json.loads(args.spec) if args.spec else {"family": args.family}
    if not isinstance(family, dict) or "family" not in family:
        raise UsageError("sweep needs --family or a --spec JSON object with a 'family' key")
    try:
        make_family({**family, args.parameter: args.start})
    except (FamilyError, ValueError) as exc:
        raise UsageError(f"invalid sweep family: {exc}") from None
    report = _run_sweep(family, args.parameter, args.start, args.stop, args.count, args.center,
                        args.spacing)
    write_sweep(Path(args.out) if args.out else None, report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args) -> int:
    fn = ORACLES[args.name]
    if args.name == "prokhorov_subsets":
        res = fn(atoms=args.atoms, trials=args.trials, seed=args.seed)
    else:
        res = fn()
    verdict = "pass" if res.passed else "FAIL"
    print(f"{res.name}: cases={res.cases} max_discrepancy={res.discrepancy:.3e} "
          f"threshold={res.threshold:g} {verdict}")
    return EXIT_OK if res.passed else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lsideficit", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", help="functionals of one density")
    p.add_argument("--family", help="tilt, gaussian, scale, mixture, bump, floor, symmetric_dual")
    p.add_argument("--spec", help="JSON descriptor, e.g. '{\"family\": \"scale\", \"sigma\": 2}'")
    for key in FAMILY_FLAGS:
        p.add_argument(f"--{key}", type=float)
    p.add_argument("--metric", action="append", choices=METRICS,
                   help="distance to the standard Gaussian (repeatable)")
    p.add_argument("--atoms", type=int, default=metrics.DEFAULT_ATOMS,
                   help="atoms per measure for the Prokhorov discretisation")
    p.add_argument("--json", help="also write the report to this JSON file")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("verify", help="run the inequality suite from a TOML config")
    p.add_argument("config")
    p.add_argument("--tolerance", type=float, help="replace every numerical error bound")
    p.add_argument("--out-dir", default=".", help="directory for the CSV and summary")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="evaluate a family along a parameter schedule")
    p.add_argument("--family")
    p.add_argument("--spec", help="JSON descriptor holding the fixed parameters")
    p.add_argument("--parameter", required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--center", type=float, default=1.0,
                   help="log spacing is applied to |value - center|")
    p.add_argument("--spacing", choices=("log", "linear"), default="log")
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force check of a fast path")
    p.add_argument("name", choices=sorted(ORACLES))
    p.add_argument("--atoms", type=int, default=8)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "tolerance", None) is not None and not args.tolerance > 0:
            raise UsageError("--tolerance must be positive")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FamilyError as exc:
        print(f"descriptor error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ArithmeticError, ValueError) as exc:
        print(f"numerical error in {_origin(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
