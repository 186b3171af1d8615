"""Convolutions and the Cramer-type stability quantities on the line.

For a symmetric density ``f`` relative to ``dgamma`` with ``m_2(f dgamma) = k``:

* ``f~(x) = f(sqrt(2 pi) x)`` and ``h = f~ g`` with ``g = 2^{1/4} e^{-pi x^2}``;
* ``p(x) = 2^{-1/4} pi^{-1/2} h(x / sqrt pi) = f(sqrt 2 x) e^{-x^2} / sqrt pi``,
  the law of ``Z / sqrt 2`` for ``Z ~ f dgamma``, so ``Var = k / 2``;
* ``v(x) = f(x / sqrt 2)^2``, for which ``delta_c(f~) = delta(v)``.

Empirical constants are ratios reported next to their ingredients; nothing
here asserts a value for a constant that is only known to exist.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .densities import DmFunction, RelativeDensity, make_family, moment, symmetric_dual
from .functionals import NormalizationError, carlen_deficit, lsi_deficit
from .grid import uniform_grid
from .metrics import gaussian_kolmogorov

SQRT_2PI = math.sqrt(2.0 * math.pi)
TWO_Q = 2.0 ** 0.25
LEBESGUE_STEP = 2.5e-3
SYMMETRY_TOL = 1e-8
IDENTITY_TOL = 1e-6
MASS_TOL = 1e-6
VARIANCE_AGREEMENT = 1e-10
MIN_EPS = 1e-300


class GridMismatchError(ValueError):
    """Two sampled densities do not share a grid step."""


class SymmetryError(ValueError):
    """A density required to be even is not."""


@dataclass(frozen=True)
class LebesgueDensity:
    """Samples of a function on the uniform grid ``x0 + step * arange(n)``."""

    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or x.size < 2:
            raise ValueError("nodes and values must be matching 1-D arrays")
        d = np.diff(x)
        if np.any(d <= 0) or np.ptp(d) > 1e-9 * d[0]:
            raise ValueError("nodes must be uniform and increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, fn, lo: float, hi: float, step: float = LEBESGUE_STEP) -> "LebesgueDensity":
        n = int(round((hi - lo) / step)) + 1
        x = lo + step * np.arange(n)
        return cls(x, fn(x))

    @property
    def step(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def weights(self) -> np.ndarray:
        return uniform_grid(self.x[0], self.x[-1], self.x.size).weights

    @property
    def mass(self) -> float:
        return float(self.weights @ self.values)

    def norm(self, p: float = 1.0) -> float:
        return float(self.weights @ np.abs(self.values) ** p) ** (1.0 / p)

    def moment(self, p: float = 2.0, absolute: bool = True) -> float:
        v = np.abs(self.values) if absolute else self.values
        return float(self.weights @ (np.abs(self.x) ** p * v))

    def cdf(self) -> np.ndarray:
        return integrate.cumulative_trapezoid(self.values, self.x, initial=0.0)

    def __sub__(self, other: "LebesgueDensity") -> "LebesgueDensity":
        if self.x.shape != other.x.shape or not np.allclose(self.x, other.x, atol=1e-12):
            raise GridMismatchError("densities live on different grids")
        return LebesgueDensity(self.x, self.values - other.values)


def gaussian_density(sd: float, lo: float | None = None, hi: float | None = None,
                     step: float = LEBESGUE_STEP) -> LebesgueDensity:
    """``gamma_{0, sd}`` sampled on ``[lo, hi]`` (default ``+-12 sd``)."""
    half = 12.0 * sd
    lo = -half if lo is None else lo
    hi = half if hi is None else hi
    return LebesgueDensity.sample(lambda x: np.exp(-0.5 * (x / sd) ** 2) / (sd * SQRT_2PI),
                                  lo, hi, step)


def convolve(p: LebesgueDensity, q: LebesgueDensity) -> LebesgueDensity:
    """``p * q`` on the grid starting at ``p.x[0] + q.x[0]`` with the common step."""
    h = p.step
    if abs(q.step - h) > 1e-9 * h:
        raise GridMismatchError(f"grid steps differ: {h:.6g} vs {q.step:.6g}")
    out = np.convolve(p.values, q.values) * h
    x = p.x[0] + q.x[0] + h * np.arange(out.size)
    res = LebesgueDensity(x, out)
    expected = p.mass * q.mass
    if abs(res.mass - expected) > MASS_TOL * max(1.0, abs(expected)):
        raise ArithmeticError(f"convolution mass {res.mass:.9g} != {expected:.9g}")
    return res


def g_function(x):
    """``g(x) = 2^{1/4} e^{-pi x^2}``, with ``dm = g^2 dx``."""
    x = np.asarray(x, dtype=float)
    return TWO_Q * np.exp(-math.pi * x * x)


# ---------------------------------------------------------------------------
# the rescaled objects


def _require_symmetric(f: RelativeDensity):
    lo, hi = f.extent
    t = np.linspace(0.0, min(-lo, hi), 2001)
    a, b = f(t), f(-t)
    gap = float(np.max(np.abs(a - b) / np.maximum(np.maximum(a, b), 1e-300)))
    if gap > SYMMETRY_TOL:
        raise SymmetryError(f"{f.label} is not even (relative gap {gap:.2e})")


def _h_grid(f: RelativeDensity, step: float) -> LebesgueDensity:
    half = max(-f.extent[0], f.extent[1]) / SQRT_2PI
    half = step * math.ceil(half / step)
    return LebesgueDensity.sample(lambda x: f(SQRT_2PI * x) * g_function(x), -half, half, step)


def tilde(f: RelativeDensity) -> DmFunction:
    """``x -> f(sqrt(2 pi) x)`` as an element of ``L^2(dm)``."""
    def value(x):
        return f(SQRT_2PI * np.asarray(x, dtype=float))

    def grad(x):
        y = SQRT_2PI * np.asarray(x, dtype=float)
        return SQRT_2PI * f(y) * f.score(y)

    lo, hi = f.extent
    return DmFunction(value, grad, (lo / SQRT_2PI, hi / SQRT_2PI), label=f"tilde[{f.label}]",
                      symmetric=f.symmetric, centered=f.centered)


def v_density(f: RelativeDensity, check: bool = True) -> RelativeDensity:
    """``v(x) = f(x / sqrt 2)^2`` relative to ``dgamma``; must already be normalised."""
    r = math.sqrt(2.0)

    def log_raw(x):
        return 2.0 * f.log_f(np.asarray(x, dtype=float) / r)

    def score(x):
        return r * f.score(np.asarray(x, dtype=float) / r)

    lo, hi = f.extent
    v = RelativeDensity(log_raw, score, 0.0, (r * lo, r * hi), label=f"v[{f.label}]",
                        family="v", params={"of": f.label}, symmetric=f.symmetric,
                        centered=f.centered)
    if check:
        g = v.grid(16385)
        z = float(g.weights @ v.nu(g.nodes))
        if abs(z - 1.0) > MASS_TOL:
            raise NormalizationError(f"v dgamma has mass {z:.9g} for {f.label}")
    return v


def p_density(f: RelativeDensity, step: float = LEBESGUE_STEP) -> LebesgueDensity:
    """Lebesgue density of ``Z / sqrt 2`` for ``Z ~ f dgamma``."""
    r = math.sqrt(2.0)
    half = max(-f.extent[0], f.extent[1]) / r
    half = step * math.ceil(half / step)
    return LebesgueDensity.sample(lambda x: r * np.exp(f.log_nu(r * x)), -half, half, step)


@dataclass(frozen=True)
class HNormalization:
    """The three integrals of ``h`` against their closed forms."""

    l2_squared: float
    integral: float
    second_moment: float
    k: float

    @property
    def expected(self) -> tuple[float, float, float]:
        return 1.0, TWO_Q, 2.0 ** -0.75 * self.k / math.pi

    @property
    def errors(self) -> tuple[float, float, float]:
        got = (self.l2_squared, self.integral, self.second_moment)
        return tuple(abs(a - b) for a, b in zip(got, self.expected))

    def holds(self, tol: float = IDENTITY_TOL) -> tuple[bool, bool, bool]:
        return tuple(e <= tol for e in self.errors)


def h_normalization_check(f: RelativeDensity, k: float | None = None,
                          step: float = LEBESGUE_STEP) -> HNormalization:
    """``int h^2``, ``int h`` and ``int x^2 h`` for ``h = f~ g``.

    The first equals 1 exactly when ``v dgamma`` is a probability measure, the
    second is ``2^{1/4}`` and the third ``2^{-3/4} k / pi``.
    """
    _require_symmetric(f)
    if k is None:
        k = moment(f, 2)
    h = _h_grid(f, step)
    w = h.weights
    return HNormalization(float(w @ h.values ** 2), h.mass, h.moment(2.0), float(k))


@dataclass(frozen=True)
class FeoQuantities:
    lhs: float
    rhs_factor: float
    deficit_quarter: float
    l65: float
    l2: float

    @property
    def implied_constant(self) -> float:
        den = self.rhs_factor * self.deficit_quarter
        return self.lhs / den if den > 0 else (0.0 if self.lhs == 0 else math.inf)


def feo_quantities(f: RelativeDensity | DmFunction, step: float = LEBESGUE_STEP,
                   node_count: int = 8193) -> FeoQuantities:
    """``int |h*h - g*g|^2``, ``(||h-g||_{6/5}^2 + ||h-g||_2)^{3/2}`` and ``delta_c^{1/4}``.

    ``f`` is either a symmetric density relative to ``dgamma`` (turned into
    ``f~``) or an even, normalised element of ``L^2(dm)``.
    """
    if isinstance(f, RelativeDensity):
        _require_symmetric(f)
        u = tilde(f)
    else:
        u = f
    lo, hi = u.extent
    half = step * math.ceil(max(-lo, hi) / step)
    h = LebesgueDensity.sample(lambda x: u(x) * g_function(x), -half, half, step)
    g = LebesgueDensity.sample(g_function, -half, half, step)
    diff = convolve(h, h) - convolve(g, g)
    lhs = diff.norm(2.0) ** 2
    hg = h - g
    l65, l2 = hg.norm(1.2), hg.norm(2.0)
    dc = carlen_deficit(u, node_count)
    return FeoQuantities(lhs, (l65 ** 2 + l2) ** 1.5, max(dc, 0.0) ** 0.25, l65, l2)


@dataclass(frozen=True)
class L1L2Bound:
    l1: float
    l2: float
    k: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.l1 <= self.bound * (1.0 + 1e-12)


def l1l2_bound(u: LebesgueDensity) -> L1L2Bound:
    """``||u||_1 <= e^{(k+1)/2} ||u||_2`` with ``k = int x^2 |u| / ||u||_1``."""
    l1 = u.norm(1.0)
    if not np.isfinite(l1) or l1 <= 0:
        raise ValueError("u must be a non-zero integrable function")
    edge = max(abs(u.values[0]), abs(u.values[-1]))
    if edge * (u.x[-1] - u.x[0]) > 1e-10 * l1:
        raise ValueError("u has not decayed at the ends of its grid")
    k = u.moment(2.0) / l1
    l2 = u.norm(2.0)
    return L1L2Bound(l1, l2, k, math.exp(0.5 * (k + 1.0)) * l2)


def log_convexity(u: LebesgueDensity, ps=(1.0, 1.5, 2.0)) -> float:
    """Gap ``(1-t) J(p0) + t J(p2) - J(p1)`` of ``J(p) = log ||u||_p^p`` at the middle order."""
    p0, p1, p2 = ps
    if not p0 < p1 < p2:
        raise ValueError("orders must increase")
    t = (p1 - p0) / (p2 - p0)
    w = u.weights
    a = np.abs(u.values)

    def J(p):
        return math.log(float(w @ a ** p))

    return (1.0 - t) * J(p0) + t * J(p2) - J(p1)


def entropy_bound(p: LebesgueDensity) -> tuple[float, float]:
    """``(int p log p, -(k + 1))`` for a probability density with ``int x^2 p = k``."""
    vals = p.values
    if np.any(vals < -1e-300):
        raise ValueError("entropy bound needs a non-negative density")
    w = p.weights
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = float(w @ np.where(vals > 0, vals * np.log(vals), 0.0))
    k = p.moment(2.0) / p.mass
    return ent, -(k + 1.0)


# ---------------------------------------------------------------------------
# the two Kolmogorov stability statements


def psi(t):
    """``Psi(t) = exp(-1/t^2)`` with ``Psi(0) = 0``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", under="ignore"):
        out = np.where(t > 0, np.exp(-1.0 / np.square(np.where(t > 0, t, 1.0))), 0.0)
    return out if out.ndim else float(out)


PSI_POWER_CONSTANT = 256.0 * math.exp(-4.0)
"""``sup_{0 < t} Psi(t) / t^8``, attained at ``t = 1/2``."""


def bobkov_rhs(sigma: float, eps: float, constant: float = 1.0) -> float:
    """``C / (sigma sqrt(log 1/eps)) * min(1/sqrt(sigma), log log(e^e / eps))``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    lead = constant / (sigma * math.sqrt(math.log(1.0 / eps)))
    return lead * min(1.0 / math.sqrt(sigma), math.log(math.e - math.log(eps)))


bobkov2_rhs = bobkov_rhs


def truncation_level(eta: float) -> float:
    """``N(eta) = 1 + sqrt(2 log(1/eta))``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    return 1.0 + math.sqrt(2.0 * math.log(1.0 / eta))


def truncated_moments(p: LebesgueDensity, level: float) -> tuple[float, float]:
    """``(int_{-N}^{N} x p, int_{-N}^{N} x^2 p)`` with exact clipping at ``+-N``."""
    lo = max(-level, p.x[0])
    hi = min(level, p.x[-1])
    inside = (p.x > lo) & (p.x < hi)
    x = np.concatenate(([lo], p.x[inside], [hi]))
    v = np.interp(x, p.x, p.values)
    return (float(integrate.trapezoid(x * v, x)), float(integrate.trapezoid(x * x * v, x)))


def convolution_kolmogorov(p: LebesgueDensity) -> float:
    """``d_K(F * F, Phi)`` where ``F`` has Lebesgue density ``p``."""
    pp = convolve(p, p)
    phi = np.exp(-0.5 * pp.x ** 2) / SQRT_2PI
    # integrating the difference cancels the leading trapezoid error
    gap = integrate.cumulative_trapezoid(pp.values - phi, pp.x, initial=0.0)
    return float(np.max(np.abs(gap + special.ndtr(pp.x[0]))))


@dataclass(frozen=True)
class KolmogorovSides:
    """Intermediates of the Kolmogorov stability bound for one density.

    ``c_k`` is the constant used for ``eta = c_k eps^{1/8}``;
    ``implied_constant`` is ``d_K(mu, gamma_eps) sqrt(log 1/eps)``.
    """

    deficit_v: float
    eps: float
    dk_convolution: float
    convolution_ratio: float
    c_k: float
    eta: float
    level: float
    sigma2: float
    sigma2_centered: float
    variance: float
    dk_mu: float
    implied_constant: float
    out_of_regime: bool


def mainthm4_sides(f: RelativeDensity, eps: float | None = None, c_k: float | None = None,
                   step: float = LEBESGUE_STEP) -> KolmogorovSides:
    """Both sides of ``d_K(mu, gamma_eps) <= C_k / sqrt(log 1/eps)``.

    ``d_K(F*F, Phi)`` comes from convolving ``p`` with itself.  ``eps``
    defaults to ``delta(v)``; ``c_k`` defaults to the observed ratio
    ``d_K(F*F, Phi) / delta(v)^{1/8}``.  ``gamma_eps`` is ``N(0, 2 sigma(eta)^2)``.
    """
    _require_symmetric(f)
    v = v_density(f)
    dv = lsi_deficit(v)
    p = p_density(f, step)
    dk_conv = convolution_kolmogorov(p)
    ratio = dk_conv / dv ** 0.125 if dv > 0 else 0.0
    if eps is None:
        eps = max(dv, MIN_EPS)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if c_k is None:
        c_k = ratio if ratio > 0 else 1.0
    eta = c_k * eps ** 0.125
    out = not eta < 1.0
    level = truncation_level(eta) if not out else 1.0
    a, s2 = truncated_moments(p, level)
    s2c = s2 - a * a
    if abs(s2 - s2c) > VARIANCE_AGREEMENT:
        raise SymmetryError(f"truncated mean {a:.3e} is not zero for {f.label}")
    variance = p.moment(2.0) / p.mass
    dk_mu = gaussian_kolmogorov(f, math.sqrt(2.0 * s2))
    return KolmogorovSides(dv, eps, dk_conv, ratio, c_k, eta, level, s2, s2c, variance,
                           dk_mu, dk_mu * math.sqrt(math.log(1.0 / eps)), out)


@dataclass(frozen=True)
class PsiBound:
    deficit_v: float
    dk: float
    c2: float
    psi_value: float

    @property
    def ratio(self) -> float:
        if self.psi_value > 0:
            return self.deficit_v / self.psi_value
        return math.inf if self.deficit_v > 0 else math.nan

    @property
    def log_ratio(self) -> float:
        """``log delta(v) + 1/(c2 d_K)^2``, finite where ``Psi`` underflows."""
        if self.deficit_v <= 0 or self.dk <= 0:
            return math.nan
        return math.log(self.deficit_v) + 1.0 / (self.c2 * self.dk) ** 2


def psi_bound(f: RelativeDensity, c2: float = 1.0) -> PsiBound:
    """``delta(v)`` against ``Psi(c2 d_K(mu, gamma))`` for ``m_2(mu) = 1``."""
    _require_symmetric(f)
    m2 = moment(f, 2)
    if abs(m2 - 1.0) > 1e-6:
        raise NormalizationError(f"m_2 = {m2:.9g} for {f.label}, expected 1")
    dv = lsi_deficit(v_density(f))
    dk = gaussian_kolmogorov(f, 1.0)
    return PsiBound(dv, dk, c2, float(psi(c2 * dk)))


def dual_for_deficit(target: float, unit_second_moment: bool = True,
                     bracket: tuple[float, float] = (1e-6, 0.6)) -> RelativeDensity:
    """Member of the doubly normalised symmetric family with ``delta(v) = target``."""
    def gap(e):
        return math.log(lsi_deficit(v_density(symmetric_dual(e, unit_second_moment)))) - \
            math.log(target)

    e = optimize.brentq(gap, *bracket, xtol=1e-12, rtol=1e-10)
    return symmetric_dual(e, unit_second_moment)


def catalog_symmetric() -> list[RelativeDensity]:
    """Symmetric catalog members used by the Cramer checks."""
    return [make_family(d) for d in (
        {"family": "gaussian"},
        {"family": "scale", "sigma": 2.0},
        {"family": "scale", "sigma": 0.8},
        {"family": "mixture", "w": 0.3, "sigma1": 0.7, "sigma2": 1.5},
        {"family": "bump", "eps": 0.5},
        {"family": "symmetric_dual", "eps": 0.2},
    )]

