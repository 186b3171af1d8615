"""Optimal transport on the line.

Measures are represented by :class:`CdfRep`, which carries the distribution
function and survival function both on a node grid and as callables.  For a
density ``f dgamma`` the CDF is assembled from 8-point Gauss-Legendre panels
between uniform nodes, with Mills-ratio tail corrections beyond the end nodes;
working with the survival function on the right keeps tail quantiles accurate.

The Brenier map pushing ``mu`` to ``nu`` is ``T = G^{-1} o F``.  For the map
from ``f dgamma`` to ``dgamma`` the derivative follows from the 1-D
Monge-Ampere relation ``T'(x) = q(x) / phi(T(x))`` with ``q = f phi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .densities import LOG_SQRT_2PI, RelativeDensity, log_gauss
from .functionals import entropy
from .grid import _PANEL_T, _PANEL_W, abs_power_integral, panel_integrate

CDF_NODES = 1025
MASS_TOL = 1e-6
PUSHFORWARD_TOL = 1e-5
QUANTILE_CELLS = 4096


class TransportError(ValueError):
    """Invalid measure representation or failed transport check."""


@dataclass(frozen=True, eq=False)
class CdfRep:
    """CDF of a probability measure on the line.

    ``kind`` is ``"continuous"`` (callables for cdf, sf, pdf, ppf, isf) or
    ``"step"`` (finitely many ``atoms`` with ``masses``).
    """

    grid: np.ndarray
    cdf_values: np.ndarray
    label: str
    kind: str = "continuous"
    cdf_fn: Callable | None = None
    sf_fn: Callable | None = None
    pdf_fn: Callable | None = None
    ppf_fn: Callable | None = None
    isf_fn: Callable | None = None
    atoms: np.ndarray | None = None
    masses: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = self.cdf_values
        if np.any(np.diff(c) < -1e-15):
            raise TransportError("cdf values must be non-decreasing")
        if self.kind == "continuous" and (c[0] > 1e-10 or c[-1] < 1 - 1e-10):
            raise TransportError("grid does not carry the whole measure")

    @property
    def continuous(self) -> bool:
        return self.kind == "continuous"

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.continuous:
            return self.cdf_fn(x)
        idx = np.searchsorted(self.atoms, x, side="right")
        return np.concatenate([[0.0], np.cumsum(self.masses)])[idx]

    def cdf_left(self, x):
        """Left limits ``F(x-)``."""
        if self.continuous:
            return self.cdf(x)
        idx = np.searchsorted(self.atoms, np.asarray(x, dtype=float), side="left")
        return np.concatenate([[0.0], np.cumsum(self.masses)])[idx]

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        if self.continuous:
            return self.sf_fn(x)
        idx = np.searchsorted(self.atoms, x, side="right")
        tail = np.concatenate([np.cumsum(self.masses[::-1])[::-1], [0.0]])
        return tail[idx]

    def pdf(self, x):
        if not self.continuous:
            raise TransportError("step measures have no density")
        return self.pdf_fn(np.asarray(x, dtype=float))

    def ppf(self, u):
        """Generalised inverse ``inf{x : F(x) >= u}``."""
        u = np.asarray(u, dtype=float)
        if self.continuous:
            return self.ppf_fn(u)
        cum = np.cumsum(self.masses)
        idx = np.searchsorted(cum, u - 1e-15, side="left")
        return self.atoms[np.minimum(idx, len(self.atoms) - 1)]

    def isf(self, s):
        """Quantile at upper-tail probability ``s``, i.e. ``ppf(1 - s)``."""
        s = np.asarray(s, dtype=float)
        if self.continuous:
            return self.isf_fn(s)
        return self.ppf(1.0 - s)

    def moment(self, p: float) -> float:
        """``int |x|^p dmu``."""
        if not self.continuous:
            return float(self.masses @ np.abs(self.atoms) ** p)
        vals = panel_integrate(lambda t: np.abs(t) ** p * self.pdf(t), self.grid)
        return float(vals.sum())

    def mean(self) -> float:
        if not self.continuous:
            return float(self.masses @ self.atoms)
        return float(panel_integrate(lambda t: t * self.pdf(t), self.grid).sum())


def _newton_inverse(target, fn, pdf, lo, hi, x0, decreasing=False, iterations=60):
    """Solve ``fn(x) = target`` on brackets ``[lo, hi]`` (vectorised)."""
    x = np.clip(x0, lo, hi)
    sign = -1.0 if decreasing else 1.0
    for _ in range(iterations):
        r = fn(x) - target
        d = sign * pdf(x)
        step = np.where(d > 0, r / np.where(d > 0, d, 1.0), 0.0)
        xn = x - step
        # tighten the bracket, fall back to bisection when Newton leaves it
        below = sign * r < 0
        lo = np.where(below, x, lo)
        hi = np.where(below, hi, x)
        bad = (xn <= lo) | (xn >= hi) | (d <= 0)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = np.abs(xn - x) <= 1e-15 * np.maximum(1.0, np.abs(x))
        x = xn
        if np.all(done):
            break
    return x


def cdf_of(f: RelativeDensity, node_count: int = CDF_NODES) -> CdfRep:
    """CDF of ``f dgamma`` on a uniform grid spanning the density's range."""
    lo, hi = f.extent
    x = np.linspace(lo, hi, node_count)

    def q(t):
        return np.exp(f.log_nu(t))

    pieces = panel_integrate(q, x)
    dl = float(f.score(x[:1])[0] - x[0])
    dr = float(x[-1] - f.score(x[-1:])[0])
    if dl <= 0 or dr <= 0:
        raise TransportError(f"density {f.label} does not decay at the ends of its range")
    left = float(q(x[:1])[0]) / dl
    right = float(q(x[-1:])[0]) / dr
    total = left + float(pieces.sum()) + right
    if abs(total - 1.0) > MASS_TOL:
        raise TransportError(f"mass of {f.label} on its grid is {total:.9g}")
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    rcum = np.concatenate([[0.0], np.cumsum(pieces[::-1])])[::-1]
    fv = (left + cum) / total
    sv = (right + rcum) / total
    n = len(x)

    def partial(a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        pts = mid[..., None] + half[..., None] * _PANEL_T
        return half * (q(pts) @ _PANEL_W) / total

    def tail(t):
        s = f.score(t) - t
        return q(t) / np.abs(np.where(s == 0, 1.0, s)) / total

    def cdf(t):
        t = np.asarray(t, dtype=float)
        j = np.clip(np.searchsorted(x, t, side="right") - 1, 0, n - 2)
        out = fv[j] + partial(x[j], np.clip(t, x[0], x[-1]))
        out = np.where(t < x[0], tail(np.minimum(t, x[0])), out)
        return np.clip(np.where(t > x[-1], 1.0 - tail(np.maximum(t, x[-1])), out), 0.0, 1.0)

    def sf(t):
        t = np.asarray(t, dtype=float)
        j = np.clip(np.searchsorted(x, t, side="left"), 1, n - 1)
        out = sv[j] + partial(np.clip(t, x[0], x[-1]), x[j])
        out = np.where(t > x[-1], tail(np.maximum(t, x[-1])), out)
        return np.clip(np.where(t < x[0], 1.0 - tail(np.minimum(t, x[0])), out), 0.0, 1.0)

    def pdf(t):
        return q(t) / total

    def ppf(u):
        u = np.asarray(u, dtype=float)
        j = np.clip(np.searchsorted(fv, u, side="left") - 1, 0, n - 2)
        w = (u - fv[j]) / np.maximum(fv[j + 1] - fv[j], 1e-300)
        x0 = x[j] + np.clip(w, 0, 1) * (x[j + 1] - x[j])
        return _newton_inverse(u, cdf, pdf, x[j], x[j + 1], x0)

    def isf(s):
        s = np.asarray(s, dtype=float)
        j = np.clip(np.searchsorted(-sv, -s, side="right"), 1, n - 1)
        w = (sv[j - 1] - s) / np.maximum(sv[j - 1] - sv[j], 1e-300)
        x0 = x[j - 1] + np.clip(w, 0, 1) * (x[j] - x[j - 1])
        return _newton_inverse(s, sf, pdf, x[j - 1], x[j], x0, decreasing=True)

    return CdfRep(x, fv, f.label, "continuous", cdf, sf, pdf, ppf, isf,
                  meta={"density": f, "survival": sv})


def gaussian_cdf(mean: float = 0.0, sd: float = 1.0, node_count: int = CDF_NODES) -> CdfRep:
    """Exact CDF of N(mean, sd^2)."""
    if sd <= 0:
        raise TransportError("sd must be positive")
    x = mean + sd * np.linspace(-12.0, 12.0, node_count)
    lz = -LOG_SQRT_2PI - math.log(sd)
    return CdfRep(
        x, ndtr((x - mean) / sd), f"N({mean:g},{sd:g}^2)", "continuous",
        cdf_fn=lambda t: ndtr((t - mean) / sd),
        sf_fn=lambda t: ndtr((mean - t) / sd),
        pdf_fn=lambda t: np.exp(lz - 0.5 * np.square((t - mean) / sd)),
        ppf_fn=lambda u: mean + sd * ndtri(u),
        isf_fn=lambda s: mean - sd * ndtri(s),
        meta={"gaussian": (float(mean), float(sd))})


def discrete_cdf(atoms, masses, label: str = "discrete") -> CdfRep:
    """Step CDF of a finitely supported measure."""
    atoms = np.asarray(atoms, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if atoms.shape != masses.shape or atoms.ndim != 1 or atoms.size == 0:
        raise TransportError("atoms and masses must be matching 1-D arrays")
    if np.any(masses < 0) or abs(masses.sum() - 1.0) > 1e-12:
        raise TransportError("masses must be non-negative and sum to 1")
    order = np.argsort(atoms, kind="stable")
    atoms, masses = atoms[order], masses[order]
    keep = masses > 0
    atoms, masses = atoms[keep], masses[keep]
    uniq, inv = np.unique(atoms, return_inverse=True)
    masses = np.bincount(inv, weights=masses)
    return CdfRep(uniq, np.cumsum(masses), label, "step", atoms=uniq, masses=masses)


def as_cdf(obj) -> CdfRep:
    if isinstance(obj, CdfRep):
        return obj
    if isinstance(obj, RelativeDensity):
        return cdf_of(obj)
    raise TypeError(f"cannot build a CDF from {type(obj).__name__}")


def quantile(F: CdfRep, u):
    """Generalised inverse ``F^{-1}(u)`` for ``u`` in ``(0, 1)``."""
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0) | (u_arr >= 1)) or not np.all(np.isfinite(u_arr)):
        raise TransportError("quantile levels must lie in the open interval (0, 1)")
    out = F.ppf(u_arr)
    return float(out) if np.ndim(u) == 0 else out


# ---------------------------------------------------------------------------
# Brenier maps


@dataclass(frozen=True, eq=False)
class TransportMap:
    """Monotone map ``T`` pushing ``source`` onto ``target``."""

    T: Callable[[np.ndarray], np.ndarray]
    source: CdfRep
    target: CdfRep
    log_derivative: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x):
        return self.T(np.asarray(x, dtype=float))

    def derivative(self, x):
        if self.log_derivative is None:
            raise TransportError("map derivative not available")
        return np.exp(self.log_derivative(np.asarray(x, dtype=float)))


def _compose(mu: CdfRep, nu: CdfRep):
    def T(x):
        x = np.asarray(x, dtype=float)
        F = mu.cdf(x)
        S = mu.sf(x)
        lower = F <= 0.5
        a = nu.ppf(np.where(lower, np.clip(F, 1e-300, 0.5), 0.5))
        b = nu.isf(np.where(lower, 0.5, np.clip(S, 1e-300, 0.5)))
        return np.where(lower, a, b)
    return T


def _integrate_against(mu: CdfRep, fn) -> float:
    if mu.continuous:
        return float(panel_integrate(lambda t: fn(t) * mu.pdf(t), mu.grid).sum())
    return float(mu.masses @ fn(mu.atoms))


_TEST_FUNCTIONS = (("x", lambda t: t), ("x^2", lambda t: t * t), ("cos x", np.cos))


def pushforward_error(T: Callable, mu: CdfRep, nu: CdfRep) -> float:
    """Largest ``|int phi(T) dmu - int phi dnu|`` over ``phi in {x, x^2, cos x}``."""
    return max(abs(_integrate_against(mu, lambda t: phi(T(t))) - _integrate_against(nu, phi))
               for _, phi in _TEST_FUNCTIONS)


def brenier_map(mu, nu, check: bool = True) -> TransportMap:
    """Monotone rearrangement ``T = G^{-1} o F`` from ``mu`` to ``nu``."""
    mu, nu = as_cdf(mu), as_cdf(nu)
    if not mu.continuous:
        raise TransportError("the source measure must be atomless")
    T = _compose(mu, nu)
    log_d = None
    if nu.continuous:
        def log_d(x):
            return np.log(mu.pdf(x)) - np.log(nu.pdf(T(x)))
    tm = TransportMap(T, mu, nu, log_d)
    if check:
        err = pushforward_error(T, mu, nu)
        if err > PUSHFORWARD_TOL:
            raise TransportError(f"pushforward check failed ({err:.3e}); refine the grid")
    return tm


def brenier_to_gaussian(f: RelativeDensity, node_count: int = CDF_NODES) -> TransportMap:
    """Map from ``f dgamma`` to ``dgamma`` with analytic ``log T'``."""
    mu = cdf_of(f, node_count)

    def T(x):
        x = np.asarray(x, dtype=float)
        F = mu.cdf(x)
        S = mu.sf(x)
        with np.errstate(divide="ignore"):
            return np.where(F <= 0.5, ndtri(np.minimum(F, 0.5)), -ndtri(np.minimum(S, 0.5)))

    def log_d(x):
        x = np.asarray(x, dtype=float)
        return f.log_nu(x) - log_gauss(T(x))

    return TransportMap(T, mu, gaussian_cdf(), log_d)


# ---------------------------------------------------------------------------
# Wasserstein distances


def _step_wasserstein(mu: CdfRep, nu: CdfRep, p: float) -> float:
    cu = np.cumsum(mu.masses)
    cv = np.cumsum(nu.masses)
    levels = np.union1d(cu, cv)
    levels = levels[levels > 0]
    prev = np.concatenate([[0.0], levels[:-1]])
    du = levels - prev
    mid = 0.5 * (levels + prev)
    a = mu.atoms[np.minimum(np.searchsorted(cu, mid), len(cu) - 1)]
    b = nu.atoms[np.minimum(np.searchsorted(cv, mid), len(cv) - 1)]
    return float(du @ np.abs(a - b) ** p)


def _midpoint_wasserstein(mu: CdfRep, nu: CdfRep, p: float, cells: int) -> float:
    u = (np.arange(cells) + 0.5) / cells
    lower = u <= 0.5
    s = 1.0 - u
    a = np.where(lower, mu.ppf(np.where(lower, u, 0.5)), mu.isf(np.where(lower, 0.5, s)))
    b = np.where(lower, nu.ppf(np.where(lower, u, 0.5)), nu.isf(np.where(lower, 0.5, s)))
    return float(np.mean(np.abs(a - b) ** p))


def _quantile_wasserstein(mu: CdfRep, nu: CdfRep, p: float) -> float:
    T = _compose(mu, nu)
    return abs_power_integral(lambda t: T(t) - t, mu.pdf, mu.grid, p)


def _cdf_w1(mu: CdfRep, nu: CdfRep) -> float:
    x = np.union1d(mu.grid, nu.grid)

    def diff(t):
        F, G = mu.cdf(t), nu.cdf(t)
        upper = np.minimum(F, G) > 0.5
        return np.where(upper, nu.sf(t) - mu.sf(t), F - G)

    return abs_power_integral(diff, lambda t: np.ones_like(t), x, 1.0)


def wasserstein(mu, nu, p: float = 2.0, method: str = "auto",
                cells: int = QUANTILE_CELLS) -> float:
    """``W_p(mu, nu)`` on the line.

    Methods
    -------
    ``"quantile"``
        ``(int |x - T(x)|^p dmu)^{1/p}`` with ``T`` the monotone map, i.e. the
        quantile coupling after substituting ``u = F(x)``.
    ``"cdf"``
        ``int |F - G| dx`` (``p = 1`` only).
    ``"midpoint"``
        midpoint rule for ``int_0^1 |F^{-1} - G^{-1}|^p du`` on ``cells``
        cells.
    ``"auto"`` uses the exact merge for two step measures, ``quantile`` for
    two continuous ones, and ``midpoint`` otherwise.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    mu, nu = as_cdf(mu), as_cdf(nu)
    for m in (mu, nu):
        mom = m.moment(p)
        if not np.isfinite(mom):
            raise ArithmeticError(f"moment of order {p} diverges for {m.label}")
    if method == "auto":
        if not mu.continuous and not nu.continuous:
            return _step_wasserstein(mu, nu, p) ** (1.0 / p)
        method = "quantile" if mu.continuous and nu.continuous else "midpoint"
    if method == "quantile":
        if not mu.continuous:
            mu, nu = nu, mu
        if not mu.continuous:
            raise TransportError("quantile route needs a continuous measure")
        val = _quantile_wasserstein(mu, nu, p)
    elif method == "cdf":
        if p != 1:
            raise ValueError("the cdf route computes W_1 only")
        val = _cdf_w1(mu, nu)
    elif method == "midpoint":
        val = _midpoint_wasserstein(mu, nu, p, cells)
    else:
        raise ValueError(f"unknown method {method!r}")
    return val ** (1.0 / p)


def w_to_gaussian(f: RelativeDensity, p: float = 2.0, node_count: int = CDF_NODES) -> float:
    """``W_p(f dgamma, dgamma)``."""
    tm = brenier_to_gaussian(f, node_count)
    val = abs_power_integral(lambda t: tm(t) - t, tm.source.pdf, tm.source.grid, p)
    return val ** (1.0 / p)


def talagrand_deficit(f: RelativeDensity, node_count: int = CDF_NODES) -> float:
    """``2 H(f) - W_2^2(f dgamma, dgamma)``."""
    return 2.0 * entropy(f) - w_to_gaussian(f, 2.0, node_count) ** 2


def transport_residual(f: RelativeDensity, node_count: int = CDF_NODES) -> float:
    """``int |T(x) - x + (log f)'(x)|^2 f dgamma`` for the map onto ``dgamma``."""
    tm = brenier_to_gaussian(f, node_count)
    mu = tm.source

    def integrand(t):
        return np.square(tm(t) - t + f.score(t)) * mu.pdf(t)

    return float(panel_integrate(integrand, mu.grid).sum())


def eigen_defect(f: RelativeDensity, node_count: int = CDF_NODES) -> float:
    """``int (lambda - log(1 + lambda)) f dgamma`` with ``lambda = T' - 1``."""
    tm = brenier_to_gaussian(f, node_count)
    mu = tm.source

    def integrand(t):
        lt = tm.log_derivative(t)
        if not np.all(np.isfinite(lt)):
            raise TransportError(f"map derivative degenerate for {f.label}")
        return (np.expm1(lt) - lt) * mu.pdf(t)

    return float(panel_integrate(integrand, mu.grid).sum())


@dataclass(frozen=True)
class AffineFit:
    """``L(x) = a_f x + b_f`` fitted to ``log f`` from the transport map."""

    a_f: float
    b_f: float
    residual: float
    a: float
    sign: int
    alternative_residual: float


class FloorError(ValueError):
    """Density dips below the requested floor."""


def affine_fit(f: RelativeDensity, alpha: float | None = None,
               node_count: int = CDF_NODES) -> AffineFit:
    """Affine approximation of ``log f`` built from ``a = int T dgamma``.

    ``b_f = int log f dgamma`` and ``a_f`` is whichever of ``+a``, ``-a``
    gives the smaller ``int |log f - L| dgamma``; the choice is recorded in
    ``sign``.  When ``alpha`` is given, ``f >= alpha`` is checked on the grid.
    """
    tm = brenier_to_gaussian(f, node_count)
    x = tm.source.grid
    if alpha is not None:
        fmin = float(np.min(f(np.linspace(x[0], x[-1], 4 * len(x)))))
        if fmin < alpha * (1 - 1e-12):
            raise FloorError(f"min f = {fmin:.6g} < alpha = {alpha:g} for {f.label}")
    phi = lambda t: np.exp(log_gauss(t))  # noqa: E731
    a = float(panel_integrate(lambda t: tm(t) * phi(t), x).sum())
    b = float(panel_integrate(lambda t: f.log_f(t) * phi(t), x).sum())
    res = {}
    for sign in (-1, 1):
        res[sign] = abs_power_integral(lambda t: f.log_f(t) - (sign * a * t + b), phi, x, 1.0)
    best = min(res, key=lambda s: (res[s], s))
    return AffineFit(best * a, b, res[best], a, best, res[-best])
