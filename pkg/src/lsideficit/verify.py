"""Registry of inequalities evaluated over a catalog of densities.

Each rule turns a density into ``(lhs, rhs)`` with the convention
``lhs <= rhs``.  Rules are evaluated at a base resolution and at a refined one;
the numerical error bound of a record is four times the change of its two
sides under refinement, floored at ``1e-9``.  Rules whose constant is only
known to exist are reported with the implied empirical constant and never
asserted.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import cramer
from .densities import RelativeDensity, make_family, tensor
from .fourierwiener import aat_sides, growth_class_integral, wiener_entropy
from .functionals import (DivergenceError, carlen_deficit, entropy, fisher_information,
                          hellinger_to_one, lp_distance_to_one, lsi_deficit, power_integral,
                          rescale_to_dm, second_moment, tensor_deficit)
from .metrics import gaussian_kolmogorov, metric_comparison_report
from .transport1d import affine_fit, eigen_defect, transport_residual, w_to_gaussian

HOLDS = "holds"
WITHIN = "holds_within_error"
VIOLATED = "violated"
REPORTED = "reported_only"
ERROR = "error"
STATUSES = (HOLDS, WITHIN, VIOLATED, REPORTED, ERROR)

SAFETY = 4.0
ERROR_FLOOR = 1e-9
RESCALING_TOL = 1e-4
ADDITIVITY_TOL = 1e-12


def classify(margin: float, bound: float, asserted: bool = True) -> str:
    """Status of a record from its margin ``rhs - lhs`` and error bound."""
    if not asserted:
        return REPORTED
    if margin > bound:
        return HOLDS
    if margin >= -bound:
        return WITHIN
    return VIOLATED


@dataclass(frozen=True)
class InequalityRecord:
    """One inequality ``lhs <= rhs`` evaluated on one subject."""

    name: str
    anchor: str
    subject: str
    lhs: float
    rhs: float
    margin: float
    numerical_error_bound: float
    status: str
    constant: float | None = None
    message: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Resolution:
    """Grid sizes used by one evaluation pass."""

    nodes: int = 8193
    cdf_nodes: int = 1025
    lp_breakpoints: int = 2049
    fourier_nodes: int = 2049

    def refined(self) -> "Resolution":
        return Resolution(*(2 * v - 1 for v in asdict(self).values()))


@dataclass(frozen=True)
class SuiteConfig:
    """Settings for :func:`run_suite`.

    ``tolerance`` replaces every refinement-based error bound when set.
    ``c_ce`` is the constant used for the reported Talagrand stability bound.
    ``moment_bound`` (M), ``power_bound`` (N) and ``alpha`` fix the class
    parameters; when unset each density supplies its own (``max(m_2, 1)``,
    ``int f^{2p-1} dgamma`` and its floor).  Densities outside a fixed class
    skip the rules that need it.  ``growth_eps`` sets the weight
    ``e^{-(2 pi - eps) x^2}`` of the reported growth-class integral.
    """

    resolution: Resolution = field(default_factory=Resolution)
    tolerance: float | None = None
    c_ce: float = 1.0
    young_ts: tuple[float, ...] = (1.1, 2.0, 10.0)
    interpolation_ps: tuple[float, ...] = (1.5, 2.0)
    atoms: int = 64
    workers: int = 1
    moment_bound: float | None = None
    power_bound: float | None = None
    alpha: float | None = None
    growth_eps: float = 1.0


# ---------------------------------------------------------------------------
# lazily evaluated quantities


class Quantities:
    """Memoised functionals of one density at one resolution."""

    def __init__(self, f: RelativeDensity, res: Resolution, alpha: float | None = None,
                 growth_eps: float = 1.0):
        self.f = f
        self.res = res
        self.alpha = f.floor if alpha is None else alpha
        self.growth_eps = growth_eps
        self._cache: dict = {}

    def __getitem__(self, key):
        if key not in self._cache:
            try:
                self._cache[key] = self._compute(key)
            except Exception as exc:  # recorded per entry
                self._cache[key] = exc
        val = self._cache[key]
        if isinstance(val, Exception):
            raise val
        return val

    def _compute(self, key):
        f, r = self.f, self.res
        if key == "H":
            return entropy(f, r.nodes)
        if key == "I":
            return fisher_information(f, r.nodes)
        if key == "delta":
            return 0.5 * self["I"] - self["H"]
        if key == "m2":
            return second_moment(f, r.nodes)
        if key == "l1":
            return lp_distance_to_one(f, 1.0, r.lp_breakpoints)
        if key == "hellinger":
            return hellinger_to_one(f, r.nodes)
        if key == "w1":
            return w_to_gaussian(f, 1.0, r.cdf_nodes)
        if key == "w2":
            return w_to_gaussian(f, 2.0, r.cdf_nodes)
        if key == "residual":
            return transport_residual(f, r.cdf_nodes)
        if key == "eigen":
            return eigen_defect(f, r.cdf_nodes)
        if key == "u":
            return rescale_to_dm(f)
        if key == "delta_c":
            return carlen_deficit(self["u"], r.nodes)
        if key == "wiener":
            return wiener_entropy(self["u"], r.fourier_nodes)
        if key == "aat":
            return aat_sides(self["u"], r.nodes)
        if key == "grad_l1":
            g = f.grid(r.nodes)
            return float(g.weights @ (np.abs(f.score(g.nodes)) * f.nu(g.nodes)))
        if key == "affine":
            return affine_fit(f, self.alpha, r.cdf_nodes)
        if key == "growth":
            return growth_class_integral(self["u"], self.growth_eps, r.nodes)
        if isinstance(key, tuple) and key[0] == "lp":
            return lp_distance_to_one(f, key[1], r.lp_breakpoints) ** key[1]
        if isinstance(key, tuple) and key[0] == "power":
            return power_integral(f, key[1], r.nodes)
        raise KeyError(key)


class Skip(Exception):
    """The rule does not apply to this density."""


@dataclass(frozen=True)
class Rule:
    name: str
    anchor: str
    sides: Callable[[Quantities], tuple[float, float]]
    asserted: bool = True
    constant: Callable[[float, float], float] | None = None
    fixed_bound: float | None = None


RATIO_FLOOR = 1e-12


def _ratio(num: float, den: float) -> float | None:
    """``num / den``, or ``None`` when the denominator is at rounding level."""
    if den > RATIO_FLOOR:
        return num / den
    return None


def _requires_centered(q: Quantities):
    if not q.f.centered:
        raise Skip


def density_rules(cfg: SuiteConfig) -> list[Rule]:
    """Rules evaluated on every density of the catalog."""
    rules = [
        Rule("lsi", "log-Sobolev: H(f) <= I(f)/2",
             lambda q: (q["H"], 0.5 * q["I"])),
        Rule("carlen", "entropic uncertainty: int |Wu|^2 log |Wu|^2 dm <= delta_c(u), u = u_f",
             lambda q: (q["wiener"], q["delta_c"])),
        Rule("talagrand", "transport-entropy: W2^2 <= 2H",
             lambda q: (q["w2"] ** 2, 2.0 * q["H"])),
        Rule("hwi", "HWI: H <= W2 sqrt(I) - W2^2/2",
             lambda q: (q["H"], q["w2"] * math.sqrt(q["I"]) - 0.5 * q["w2"] ** 2)),
        Rule("hellinger_l1_lower", "||sqrt f - 1||_2^2 <= ||f - 1||_1",
             lambda q: (q["hellinger"] ** 2, q["l1"])),
        Rule("hellinger_l1_upper", "||f - 1||_1 <= 2 ||sqrt f - 1||_2",
             lambda q: (q["l1"], 2.0 * q["hellinger"])),
        Rule("pinsker", "Pinsker: ||f - 1||_1^2 <= 2H",
             lambda q: (q["l1"] ** 2, 2.0 * q["H"])),
        Rule("pinsker_stated_constant", "2 ||f - 1||_1^2 <= H",
             lambda q: (2.0 * q["l1"] ** 2, q["H"]), asserted=False,
             constant=lambda lhs, rhs: _ratio(rhs, 0.5 * lhs)),
        Rule("residual_bound", "int |T - x + (log f)'|^2 f dgamma <= 2 delta",
             lambda q: (q["residual"], 2.0 * q["delta"])),
        Rule("eigen_bound", "int (lambda - log(1 + lambda)) f dgamma <= delta",
             lambda q: (q["eigen"], q["delta"])),
        Rule("l1_w1_chain", "||f - 1||_1 - sqrt(2) delta^{1/2} <= W1",
             lambda q: (q["l1"] - math.sqrt(2.0 * max(q["delta"], 0.0)), q["w1"])),
        Rule("l1_poincare_step", "||f - 1||_1 <= int |f'| dgamma",
             lambda q: (q["l1"], q["grad_l1"]), asserted=False,
             constant=lambda lhs, rhs: _ratio(lhs, rhs)),
        Rule("young_relaxation_tal", "delta >= delta_Tal^2 / (16 H)",
             lambda q: (_tal_sq_over_16h(q), q["delta"])),
        Rule("w2_moment_bound", "W2^2 <= 2 (n + M)",
             lambda q: (q["w2"] ** 2, 2.0 * (1.0 + _moment(q, cfg)))),
        Rule("aat", "moment/gradient bound: lhs <= 2 sqrt(pi n) delta_c^{1/2} + delta_c",
             lambda q: (q["aat"].lhs, q["aat"].rhs)),
        Rule("rescaling_identity", "|delta_c(u_f) - delta(f)| <= 1e-4",
             lambda q: (abs(q["delta_c"] - q["delta"]), RESCALING_TOL)),
        Rule("scaling_display", "2 delta >= (2H + m2(gamma) - m2(nu))^2",
             lambda q: ((2.0 * q["H"] + 1.0 - q["m2"]) ** 2, 2.0 * q["delta"]),
             asserted=False, constant=lambda lhs, rhs: _ratio(rhs, lhs)),
        Rule("scaling_talagrand_display", "2 delta >= W2^4 + (m2(gamma) - m2(nu))^2 if m2(nu) <= 1",
             _scaling_talagrand, asserted=False, constant=lambda lhs, rhs: _ratio(rhs, lhs)),
        Rule("w1_stability_constant", "delta >= C min(W1, W1^4)",
             lambda q: (min(q["w1"], q["w1"] ** 4), q["delta"]), asserted=False,
             constant=lambda lhs, rhs: _ratio(rhs, lhs)),
        Rule("l1_rate_constant", "||f - 1||_1 <= C delta^{1/4}",
             _centered(lambda q: (q["l1"], max(q["delta"], 0.0) ** 0.25)), asserted=False,
             constant=lambda lhs, rhs: _ratio(lhs, rhs)),
        Rule("talagrand_stability_constant",
             f"delta_Tal >= C_CE min(W1^2, W1), C_CE = {cfg.c_ce:g}",
             _centered(lambda q: (cfg.c_ce * min(q["w1"] ** 2, q["w1"]),
                                  2.0 * q["H"] - q["w2"] ** 2)),
             asserted=False, constant=lambda lhs, rhs: _scaled(cfg.c_ce, _ratio(rhs, lhs))),
        Rule("affine_fit_constant", "||log f - L||_1 <= C(alpha) delta^{1/2}, f >= alpha",
             _affine_sides, asserted=False, constant=lambda lhs, rhs: _ratio(lhs, rhs)),
        Rule("growth_class", f"int |u_f|^2 e^(-(2 pi - eps) x^2) dx, eps = {cfg.growth_eps:g}",
             lambda q: (q["growth"], math.inf), asserted=False),
        Rule("entropy_lp_upper_2", "H <= 2 ||f - 1||_2^2 + 2 ||f - 1||_2",
             lambda q: (q["H"], _entropy_upper(q, 2.0))),
        Rule("entropy_lp_upper_1.5", "H <= 4 ||f - 1||_1.5^1.5 + 2 ||f - 1||_1.5",
             lambda q: (q["H"], _entropy_upper(q, 1.5)), asserted=False,
             constant=lambda lhs, rhs: _ratio(lhs, rhs)),
    ]
    for t in cfg.young_ts:
        rules.append(Rule(f"young_entropy_t{t:g}", f"(1 - 1/t) H <= (t - 1)(n + M) + delta, t = {t:g}",
                          _young(t, cfg)))
    for p in cfg.interpolation_ps:
        rules.append(Rule(f"lp_interpolation_p{p:g}",
                          f"||f - 1||_p^p <= (2^(2p-2) (N + 1))^(1/2) ||f - 1||_1^(1/2), p = {p:g}",
                          _interpolation(p, cfg)))
    return rules


def _scaled(c, r):
    return None if r is None else c * r


def _centered(fn):
    def sides(q):
        _requires_centered(q)
        return fn(q)
    return sides


def _tal_sq_over_16h(q):
    h = q["H"]
    tal = 2.0 * h - q["w2"] ** 2
    return tal * tal / (16.0 * h) if h > 0 else 0.0


def _scaling_talagrand(q):
    if q["m2"] > 1.0:
        raise Skip
    return q["w2"] ** 4 + (1.0 - q["m2"]) ** 2, 2.0 * q["delta"]


def _moment(q, cfg) -> float:
    if cfg.moment_bound is None:
        return max(q["m2"], 1.0)
    if q["m2"] > cfg.moment_bound:
        raise Skip
    return cfg.moment_bound


def _affine_sides(q):
    if q.alpha is None:
        raise Skip
    fit = q["affine"]
    return fit.residual, math.sqrt(max(q["delta"], 0.0))


def _entropy_upper(q, p):
    try:
        lp = q[("lp", p)]
    except DivergenceError:
        raise Skip from None
    return 2.0 / (p - 1.0) * lp + 2.0 * lp ** (1.0 / p)


def _young(t, cfg):
    def sides(q):
        m = _moment(q, cfg)
        return (1.0 - 1.0 / t) * q["H"], (t - 1.0) * (1.0 + m) + q["delta"]
    return sides


def _interpolation(p, cfg):
    def sides(q):
        try:
            n = q[("power", 2.0 * p - 1.0)]
            lhs = q[("lp", p)]
        except DivergenceError:
            raise Skip from None
        if cfg.power_bound is not None:
            if n > cfg.power_bound:
                raise Skip
            n = cfg.power_bound
        return lhs, math.sqrt(2.0 ** (2.0 * p - 2.0) * (n + 1.0)) * math.sqrt(q["l1"])
    return sides


# ---------------------------------------------------------------------------
# evaluation


def _record(rule: Rule, subject: str, coarse: Quantities, fine: Quantities,
            cfg: SuiteConfig) -> InequalityRecord | None:
    try:
        l0, r0 = rule.sides(coarse)
        l1, r1 = rule.sides(fine)
    except Skip:
        return None
    except Exception as exc:
        return InequalityRecord(rule.name, rule.anchor, subject, math.nan, math.nan, math.nan,
                                math.nan, ERROR, None, f"{type(exc).__name__}: {exc}")
    if rule.fixed_bound is not None:
        bound = rule.fixed_bound
    elif cfg.tolerance is not None:
        bound = cfg.tolerance
    else:
        bound = max(SAFETY * (abs(l1 - l0) + abs(r1 - r0)), ERROR_FLOOR)
    margin = r1 - l1
    const = rule.constant(l1, r1) if rule.constant else None
    return InequalityRecord(rule.name, rule.anchor, subject, float(l1), float(r1),
                            float(margin), float(bound), classify(margin, bound, rule.asserted),
                            const)


def density_records(f: RelativeDensity, cfg: SuiteConfig = SuiteConfig()) -> list[InequalityRecord]:
    """All registry rules on one density."""
    coarse = Quantities(f, cfg.resolution, cfg.alpha, cfg.growth_eps)
    fine = Quantities(f, cfg.resolution.refined(), cfg.alpha, cfg.growth_eps)
    out = []
    for rule in density_rules(cfg):
        rec = _record(rule, f.label, coarse, fine, cfg)
        if rec is not None:
            out.append(rec)
    if f.symmetric:
        out.extend(cramer_records(f, cfg))
    return out


def _direct(name, anchor, subject, lhs, rhs, bound, asserted=True, constant=None):
    margin = rhs - lhs
    return InequalityRecord(name, anchor, subject, float(lhs), float(rhs), float(margin),
                            float(bound), classify(margin, bound, asserted), constant)


def cramer_records(f: RelativeDensity, cfg: SuiteConfig = SuiteConfig()) -> list[InequalityRecord]:
    """Convolution-side records for an even density."""
    out = []
    label = f.label
    tol = cfg.tolerance if cfg.tolerance is not None else ERROR_FLOOR
    try:
        u = cramer.tilde(f)
        step = cramer.LEBESGUE_STEP
        half = step * math.ceil(max(-u.extent[0], u.extent[1]) / step)
        h = cramer.LebesgueDensity.sample(lambda x: u(x) * cramer.g_function(x), -half, half, step)
        g = cramer.LebesgueDensity.sample(cramer.g_function, -half, half, step)
        diff = cramer.convolve(h, h) - cramer.convolve(g, g)
        if diff.norm(1.0) > 1e-12:
            b = cramer.l1l2_bound(diff)
            out.append(_direct("l1_l2_lemma", "||u||_1 <= e^{(k+1)/2} ||u||_2, u = h*h - g*g",
                               label, b.l1, b.bound, tol))
            out.append(_direct("log_convexity", "log ||u||_p^p convex in p on {1, 1.5, 2}",
                               label, 0.0, cramer.log_convexity(diff), tol))
        p = cramer.p_density(f)
        ent, floor_ = cramer.entropy_bound(p)
        out.append(_direct("entropy_moment_floor", "int p log p >= -(k + 1)", label,
                           floor_, ent, tol))
    except Exception as exc:
        out.append(InequalityRecord("l1_l2_lemma", "convolution pipeline", label, math.nan,
                                    math.nan, math.nan, math.nan, ERROR, None,
                                    f"{type(exc).__name__}: {exc}"))
    try:
        v = cramer.v_density(f)
    except Exception:
        return out
    try:
        s = cramer.mainthm4_sides(f)
        out.append(_direct("convolution_kolmogorov_rate", "d_K(F*F, Phi) <= C delta(v)^{1/8}",
                           label, s.dk_convolution, max(s.deficit_v, 0.0) ** 0.125, tol,
                           asserted=False, constant=s.convolution_ratio))
        if s.eps < 1.0 and not s.out_of_regime:
            out.append(_direct("kolmogorov_log_rate", "d_K(mu, gamma_eps) <= C_k / sqrt(log 1/eps)",
                               label, s.dk_mu, 1.0 / math.sqrt(math.log(1.0 / s.eps)), tol,
                               asserted=False, constant=s.implied_constant))
        fq = cramer.feo_quantities(f)
        out.append(_direct("convolution_deficit_constant",
                           "int |h*h - g*g|^2 <= C delta_c^{1/4} (||h-g||_{6/5}^2 + ||h-g||_2)^{3/2}",
                           label, fq.lhs, fq.rhs_factor * fq.deficit_quarter, tol,
                           asserted=False, constant=fq.implied_constant))
        dv = lsi_deficit(v)
        out.append(_direct("v_lsi", "delta(v) >= 0", label, 0.0, dv, max(tol, 1e-12)))
        # below 1e-10 delta(v) is quadrature noise and c2 would be meaningless
        if abs(s.variance - 0.5) <= 1e-6 and dv > 1e-10:
            pb = cramer.psi_bound(f, 1.0)
            # log form: Psi underflows long before delta(v) does
            c2 = 1.0 / (pb.dk * math.sqrt(math.log(1.0 / dv))) if 0 < dv < 1 and pb.dk > 0 else None
            out.append(_direct("psi_deficit_bound", "log Psi(c2 d_K(mu, gamma)) <= log delta(v), c2 = 1",
                               label, -1.0 / pb.dk ** 2 if pb.dk > 0 else -math.inf,
                               math.log(dv), tol, asserted=False, constant=c2))
    except Exception as exc:
        out.append(InequalityRecord("convolution_kolmogorov_rate", "Kolmogorov pipeline", label,
                                    math.nan, math.nan, math.nan, math.nan, ERROR, None,
                                    f"{type(exc).__name__}: {exc}"))
    return out


def metric_records(f: RelativeDensity, g: RelativeDensity,
                   cfg: SuiteConfig = SuiteConfig()) -> list[InequalityRecord]:
    """Comparison inequalities between probability metrics for one pair."""
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-8
    rep = metric_comparison_report(f, g, cfg.atoms, tol)
    subject = f"{f.label} | {g.label}"
    return [_direct(c.name.replace(" ", "_"), c.name, subject, c.lhs, c.rhs, c.tolerance,
                    c.asserted) for c in rep.checks]


def product_records(factors: Sequence[RelativeDensity], node_count: int = 513,
                    cfg: SuiteConfig = SuiteConfig()) -> list[InequalityRecord]:
    """Additivity of the deficit over a tensor product."""
    p = tensor(factors)
    total = tensor_deficit(p, node_count)
    parts = sum(lsi_deficit(f, node_count) for f in factors)
    bound = cfg.tolerance if cfg.tolerance is not None else ADDITIVITY_TOL
    return [_direct("product_additivity", "|delta(prod f_i) - sum delta(f_i)| <= 1e-12", p.label,
                    abs(total - parts), 0.0, bound)]


# ---------------------------------------------------------------------------
# catalog


DEFAULT_CATALOG: tuple[dict, ...] = (
    {"family": "gaussian"},
    *({"family": "tilt", "b": b} for b in (-1.5, -0.5, 0.5, 1.0, 2.0)),
    *({"family": "scale", "sigma": s} for s in (0.5, 0.8, 0.9, 1.1, 1.25, 1.4, 2.0)),
    {"family": "mixture", "w": 0.5, "sigma1": 0.8, "sigma2": 1.2},
    {"family": "mixture", "w": 0.3, "sigma1": 0.7, "sigma2": 1.5},
    {"family": "mixture", "w": 0.9, "sigma1": 1.0, "sigma2": 3.0},
    {"family": "mixture", "w": 0.5, "sigma1": 0.5, "sigma2": 1.3},
    {"family": "bump", "eps": 0.5},
    {"family": "bump", "eps": -1.0},
    {"family": "bump", "eps": -2.5},
    {"family": "bump", "eps": 2.0, "center": 1.0, "width": 0.3},
    {"family": "bump", "eps": 1.0, "center": -2.0, "width": 1.5},
    {"family": "bump", "eps": 0.8, "base": {"family": "scale", "sigma": 1.2}},
    {"family": "floor", "alpha": 0.2},
    {"family": "floor", "alpha": 0.5},
    {"family": "floor", "alpha": 0.8, "shape": {"family": "scale", "sigma": 1.3}},
    {"family": "floor", "alpha": 0.3, "shape": {"family": "bump", "eps": 1.5, "width": 0.7}},
    {"family": "center", "of": {"family": "bump", "eps": 1.5, "center": 1.0, "width": 0.5}},
    {"family": "center", "of": {"family": "mixture", "w": 0.4, "sigma1": 0.6, "sigma2": 1.4}},
    {"family": "symmetric_dual", "eps": 0.2},
    {"family": "symmetric_dual", "eps": -0.3},
    {"family": "symmetric_dual", "eps": 0.2, "unit_second_moment": True},
)


def default_catalog() -> list[RelativeDensity]:
    return [make_family(d) for d in DEFAULT_CATALOG]


DEFAULT_PAIRS: tuple[tuple[dict, dict], ...] = tuple(
    (a, {"family": "gaussian"}) for a in DEFAULT_CATALOG[1:16]
) + (
    ({"family": "scale", "sigma": 0.8}, {"family": "scale", "sigma": 1.25}),
    ({"family": "tilt", "b": -0.5}, {"family": "tilt", "b": 0.5}),
    ({"family": "bump", "eps": 0.5}, {"family": "mixture", "w": 0.3, "sigma1": 0.7, "sigma2": 1.5}),
    ({"family": "floor", "alpha": 0.2}, {"family": "scale", "sigma": 1.4}),
    ({"family": "tilt", "b": 1.0}, {"family": "scale", "sigma": 2.0}),
)

DEFAULT_PRODUCTS: tuple[tuple[dict, ...], ...] = (
    ({"family": "scale", "sigma": 2.0}, {"family": "tilt", "b": 0.5}),
    ({"family": "mixture", "w": 0.3, "sigma1": 0.7, "sigma2": 1.5}, {"family": "scale", "sigma": 0.8},
     {"family": "tilt", "b": -1.0}),
)


# ---------------------------------------------------------------------------
# suite


@dataclass(frozen=True)
class SuiteResult:
    records: tuple[InequalityRecord, ...]

    def counts(self) -> dict:
        out = {s: 0 for s in STATUSES}
        for r in self.records:
            out[r.status] += 1
        out["total"] = len(self.records)
        return out

    @property
    def violations(self) -> list[InequalityRecord]:
        return [r for r in self.records if r.status == VIOLATED]

    @property
    def errors(self) -> list[InequalityRecord]:
        return [r for r in self.records if r.status == ERROR]


def _density_task(args):
    desc, cfg = args
    try:
        f = make_family(desc) if isinstance(desc, dict) else desc
    except Exception as exc:
        return [InequalityRecord("construction", "descriptor", str(desc), math.nan, math.nan,
                                 math.nan, math.nan, ERROR, None, f"{type(exc).__name__}: {exc}")]
    return density_records(f, cfg)


def _pair_task(args):
    (a, b), cfg = args
    try:
        return metric_records(_as_density(a), _as_density(b), cfg)
    except Exception as exc:
        return [InequalityRecord("metric_chain", "pair", f"{a} | {b}", math.nan, math.nan,
                                 math.nan, math.nan, ERROR, None, f"{type(exc).__name__}: {exc}")]


def _product_task(args):
    factors, cfg = args
    try:
        return product_records([_as_density(d) for d in factors], cfg=cfg)
    except Exception as exc:
        return [InequalityRecord("product_additivity", "product", str(factors), math.nan,
                                 math.nan, math.nan, math.nan, ERROR, None,
                                 f"{type(exc).__name__}: {exc}")]


def _as_density(d) -> RelativeDensity:
    return d if isinstance(d, RelativeDensity) else make_family(d)


def run_suite(catalog: Iterable = DEFAULT_CATALOG, cfg: SuiteConfig = SuiteConfig(),
              pairs: Iterable = (), products: Iterable = ()) -> SuiteResult:
    """Evaluate the registry over a catalog, metric pairs and tensor products.

    Catalog entries are descriptors or densities.  With ``cfg.workers > 1``
    descriptor entries are evaluated in worker processes; records keep the
    catalog order either way.
    """
    catalog = list(catalog)
    if not catalog:
        raise ValueError("catalog must not be empty")
    jobs = [(_density_task, (d, cfg)) for d in catalog]
    jobs += [(_pair_task, (p, cfg)) for p in pairs]
    jobs += [(_product_task, (p, cfg)) for p in products]
    picklable = all(isinstance(a[0], dict) or isinstance(a[0], tuple) for _, a in jobs)
    if cfg.workers > 1 and picklable:
        with ProcessPoolExecutor(cfg.workers) as pool:
            chunks = list(pool.map(_run_job, jobs))
    else:
        chunks = [_run_job(j) for j in jobs]
    return SuiteResult(tuple(r for chunk in chunks for r in chunk))


def _run_job(job):
    fn, args = job
    return fn(args)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepPoint:
    parameter: float
    deficit: float
    carlen_deficit: float
    entropy: float
    fisher: float
    w1: float
    w2: float
    tv: float
    kolmogorov: float
    l1: float
    l2: float | None


@dataclass(frozen=True)
class SweepReport:
    """Per-point values along a parameter schedule and their trend statistics.

    ``exponent`` is the least-squares slope of ``log ||f - 1||_1`` against
    ``log delta`` over points with ``delta > 1e-12``; ``converging`` is false
    when the schedule does not drive the deficit down.
    """

    family: dict
    parameter: str
    points: tuple[SweepPoint, ...]
    exponent: float | None
    l2_exponent: float | None
    deficit_monotone: bool
    l1_monotone: bool
    converging: bool
    notes: tuple[str, ...] = ()


def _slope(x, y) -> float | None:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 1e-12) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if keep.sum() < 2 or np.ptp(np.log(x[keep])) < 1e-9:
        return None
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def _monotone_down(vals, band: float) -> bool:
    v = np.asarray(vals, dtype=float)
    return bool(np.all(np.diff(v) <= band * np.maximum(np.abs(v[:-1]), 1.0)))


def sweep_point(f: RelativeDensity, parameter: float, res: Resolution = Resolution()) -> SweepPoint:
    q = Quantities(f, res)
    try:
        l2 = math.sqrt(q[("lp", 2.0)])
    except DivergenceError:
        l2 = None
    return SweepPoint(float(parameter), q["delta"], q["delta_c"], q["H"], q["I"], q["w1"],
                      q["w2"], 0.5 * q["l1"], gaussian_kolmogorov(f), q["l1"], l2)


def sequence_diagnostics(family: dict, parameter: str, schedule: Sequence[float],
                         res: Resolution = Resolution(), band: float = 1e-9) -> SweepReport:
    """Evaluate a family along a schedule and fit the rate of ``||f - 1||_1`` in ``delta``.

    The schedule must be monotone (constant schedules are accepted and flagged
    as not converging).
    """
    sched = np.asarray(list(schedule), dtype=float)
    if sched.size == 0:
        raise ValueError("schedule must not be empty")
    d = np.diff(sched)
    if not (np.all(d > 0) or np.all(d < 0) or np.all(d == 0)):
        raise ValueError("schedule must be strictly monotone or constant")
    points = []
    for v in sched:
        desc = dict(family)
        desc[parameter] = float(v)
        points.append(sweep_point(make_family(desc), v, res))
    deficits = [p.deficit for p in points]
    l1s = [p.l1 for p in points]
    notes = []
    converging = len(points) > 1 and deficits[-1] < deficits[0] * (1.0 - 1e-6) - 1e-15
    if not converging:
        notes.append("no convergence: the schedule does not reduce the deficit")
    exponent = _slope(deficits, l1s) if converging else None
    l2s = [p.l2 for p in points]
    l2_exp = (_slope(deficits, l2s) if converging and all(v is not None for v in l2s) else None)
    return SweepReport(dict(family), parameter, tuple(points), exponent, l2_exp,
                       _monotone_down(deficits, band), _monotone_down(l1s, band), converging,
                       tuple(notes))


def log_schedule(start: float, stop: float, count: int, center: float = 1.0) -> np.ndarray:
    """``count`` values from ``start`` to ``stop`` with ``|value - center|`` log-spaced."""
    if count < 1:
        raise ValueError("count must be positive")
    a, b = start - center, stop - center
    if a == 0 or b == 0 or (a > 0) != (b > 0):
        raise ValueError("start and stop must lie on the same side of center")
    s = math.copysign(1.0, a)
    return center + s * np.geomspace(abs(a), abs(b), count)


def with_tolerance(cfg: SuiteConfig, tolerance: float | None) -> SuiteConfig:
    return replace(cfg, tolerance=tolerance)
