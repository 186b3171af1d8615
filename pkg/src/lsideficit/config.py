"""TOML run configuration for the command-line interface.

Recognised tables (all optional)::

    [grid]        nodes, cdf_nodes, lp_breakpoints, fourier_nodes   (odd ints >= 9)
    [tolerance]   override                                          (float > 0)
    [constants]   c_ce, growth_eps, moment_bound, power_bound, alpha
    [catalog]     default = true|false, densities = [ {family = ...}, ... ]
    [metrics]     default_pairs = true|false, atoms, pairs = [[{...}, {...}], ...]
    [products]    default = true|false, sets = [[{...}, ...], ...]
    [[sweep]]     name, family = {...}, parameter, start, stop, count, center, spacing
    [output]      csv, summary
    [run]         workers

Unknown keys are rejected so that typos do not silently fall back to
defaults.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .densities import FamilyError, make_family
from .verify import DEFAULT_CATALOG, DEFAULT_PAIRS, DEFAULT_PRODUCTS, Resolution, SuiteConfig


class ConfigError(ValueError):
    """Invalid configuration file or value."""


@dataclass(frozen=True)
class SweepSpec:
    name: str
    family: dict
    parameter: str
    start: float
    stop: float
    count: int
    center: float = 1.0
    spacing: str = "log"


@dataclass(frozen=True)
class RunConfig:
    suite: SuiteConfig = field(default_factory=SuiteConfig)
    catalog: tuple = DEFAULT_CATALOG
    pairs: tuple = DEFAULT_PAIRS
    products: tuple = DEFAULT_PRODUCTS
    sweeps: tuple[SweepSpec, ...] = ()
    csv: str = "verify_records.csv"
    summary: str = "verify_summary.json"


_TABLES = {
    "grid": {"nodes", "cdf_nodes", "lp_breakpoints", "fourier_nodes"},
    "tolerance": {"override"},
    "constants": {"c_ce", "growth_eps", "moment_bound", "power_bound", "alpha"},
    "catalog": {"default", "densities"},
    "metrics": {"default_pairs", "atoms", "pairs"},
    "products": {"default", "sets"},
    "sweep": {"name", "family", "parameter", "start", "stop", "count", "center", "spacing"},
    "output": {"csv", "summary"},
    "run": {"workers"},
}


def _check_keys(where: str, table: dict, allowed: set):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"[{where}] unknown keys: {sorted(extra)}")


def _number(where, value, lo=None, hi=None, integer=False, open_lo=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    if integer and not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where} must be finite")
    if lo is not None and (value <= lo if open_lo else value < lo):
        raise ConfigError(f"{where} must be {'>' if open_lo else '>='} {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"{where} must be <= {hi}, got {value}")
    return value


def _descriptor(where, d):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an inline table with a 'family' key")
    try:
        make_family(d)
    except (FamilyError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return d


def _grid(table) -> Resolution:
    base = Resolution()
    kw = {}
    for k, v in table.items():
        n = _number(f"grid.{k}", v, 9, 1 << 20, integer=True)
        if n % 2 == 0:
            raise ConfigError(f"grid.{k} must be odd so refinement nests, got {n}")
        kw[k] = n
    return Resolution(**{**base.__dict__, **kw})


def parse_config(data: dict, source: str = "<config>") -> RunConfig:
    """Validate a decoded TOML document."""
    _check_keys("top level", data, set(_TABLES))
    for name, table in data.items():
        if name == "sweep":
            if not isinstance(table, list):
                raise ConfigError("sweep must be an array of tables ([[sweep]])")
            for i, t in enumerate(table):
                _check_keys(f"sweep[{i}]", t, _TABLES["sweep"])
        else:
            _check_keys(name, table, _TABLES[name])

    res = _grid(data.get("grid", {}))
    tol = data.get("tolerance", {}).get("override")
    if tol is not None:
        tol = _number("tolerance.override", tol, 0.0, open_lo=True)
    const = data.get("constants", {})
    c_ce = _number("constants.c_ce", const.get("c_ce", 1.0), 0.0, open_lo=True)
    geps = _number("constants.growth_eps", const.get("growth_eps", 1.0), 0.0, 2 * math.pi,
                   open_lo=True)
    mb = const.get("moment_bound")
    if mb is not None:
        mb = _number("constants.moment_bound", mb, 1.0)
    pb = const.get("power_bound")
    if pb is not None:
        pb = _number("constants.power_bound", pb, 0.0, open_lo=True)
    alpha = const.get("alpha")
    if alpha is not None:
        alpha = _number("constants.alpha", alpha, 0.0, 1.0, open_lo=True)

    cat = data.get("catalog", {})
    catalog = list(DEFAULT_CATALOG) if cat.get("default", True) else []
    for i, d in enumerate(cat.get("densities", [])):
        catalog.append(_descriptor(f"catalog.densities[{i}]", d))
    if not catalog:
        raise ConfigError("the catalog is empty")

    met = data.get("metrics", {})
    atoms = _number("metrics.atoms", met.get("atoms", 64), 4, 2048, integer=True)
    pairs = list(DEFAULT_PAIRS) if met.get("default_pairs", True) else []
    for i, pr in enumerate(met.get("pairs", [])):
        if not isinstance(pr, list) or len(pr) != 2:
            raise ConfigError(f"metrics.pairs[{i}] must be a two-element array")
        pairs.append(tuple(_descriptor(f"metrics.pairs[{i}][{j}]", d) for j, d in enumerate(pr)))

    prod = data.get("products", {})
    products = list(DEFAULT_PRODUCTS) if prod.get("default", True) else []
    for i, st in enumerate(prod.get("sets", [])):
        if not isinstance(st, list) or not st:
            raise ConfigError(f"products.sets[{i}] must be a non-empty array")
        products.append(tuple(_descriptor(f"products.sets[{i}][{j}]", d) for j, d in enumerate(st)))

    sweeps = []
    for i, t in enumerate(data.get("sweep", [])):
        where = f"sweep[{i}]"
        for key in ("family", "parameter", "start", "stop", "count"):
            if key not in t:
                raise ConfigError(f"{where} is missing '{key}'")
        fam = t["family"]
        if not isinstance(fam, dict) or "family" not in fam:
            raise ConfigError(f"{where}.family must be an inline table with a 'family' key")
        spacing = t.get("spacing", "log")
        if spacing not in ("log", "linear"):
            raise ConfigError(f"{where}.spacing must be 'log' or 'linear'")
        sweeps.append(SweepSpec(str(t.get("name", f"sweep{i}")), dict(fam), str(t["parameter"]),
                                _number(f"{where}.start", t["start"]),
                                _number(f"{where}.stop", t["stop"]),
                                _number(f"{where}.count", t["count"], 1, integer=True),
                                _number(f"{where}.center", t.get("center", 1.0)), spacing))

    out = data.get("output", {})
    workers = _number("run.workers", data.get("run", {}).get("workers", 1), 1, 256, integer=True)
    suite = SuiteConfig(resolution=res, tolerance=tol, c_ce=c_ce, atoms=atoms, workers=workers,
                        moment_bound=mb, power_bound=pb, alpha=alpha, growth_eps=geps)
    return RunConfig(suite, tuple(catalog), tuple(pairs), tuple(products), tuple(sweeps),
                     str(out.get("csv", "verify_records.csv")),
                     str(out.get("summary", "verify_summary.json")))


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a TOML file; syntax errors carry line and column."""
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(text.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: not UTF-8 ({exc.reason})") from None
    return parse_config(data, str(path))
