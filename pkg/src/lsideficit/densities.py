"""Density families relative to the standard Gaussian measure.

A :class:`RelativeDensity` is a function ``f >= 0`` with ``int f dgamma = 1``;
the probability measure it describes is ``nu = f dgamma``.  Every family is
stored through ``log f`` and its derivative (the score), which keeps the Fisher
information and the transport quantities free of numerical differentiation.

Descriptors are plain dicts, e.g. ``{"family": "scale", "sigma": 2.0}``;
``bump`` and ``floor`` accept nested descriptors for their base shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import uniform_grid

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
LOG_SQRT_2 = 0.5 * math.log(2.0)
DEFAULT_NODES = 8193
NORMALIZE_NODES = 16385
TAIL_SDS = 10.0
MASS_TOL = 1e-8


class FamilyError(ValueError):
    """Invalid family descriptor or parameters."""


def log_gauss(x):
    """Log of the standard normal density."""
    return -0.5 * np.square(x) - LOG_SQRT_2PI


def log_m_weight(x):
    """Log density of ``dm = 2^{1/2} exp(-2 pi x^2) dx``."""
    return LOG_SQRT_2 - 2.0 * math.pi * np.square(x)


@dataclass(frozen=True, eq=False)
class RelativeDensity:
    """A probability density ``f`` with respect to ``dgamma``.

    ``log_raw`` and ``score`` are vectorised callables giving the log of the
    unnormalised density and ``d/dx log f``.  ``extent`` is an interval that
    carries all but a negligible part of both ``f dgamma`` and ``dgamma``.
    """

    log_raw: Callable[[np.ndarray], np.ndarray]
    score: Callable[[np.ndarray], np.ndarray]
    log_norm: float
    extent: tuple[float, float]
    label: str
    family: str
    params: dict = field(default_factory=dict)
    analytic: dict | None = None
    reference: str = "gamma"
    centered: bool = False
    symmetric: bool = False
    floor: float | None = None
    dimension: int = 1

    def log_f(self, x):
        return self.log_raw(np.asarray(x, dtype=float)) - self.log_norm

    def __call__(self, x):
        return np.exp(self.log_f(x))

    evaluate = __call__

    def log_nu(self, x):
        """Log of the Lebesgue density of ``f dgamma``."""
        x = np.asarray(x, dtype=float)
        return self.log_f(x) + log_gauss(x)

    def nu(self, x):
        return np.exp(self.log_nu(x))

    def grid(self, node_count: int = DEFAULT_NODES):
        lo, hi = self.extent
        return uniform_grid(lo, hi, node_count)

    def mean(self, node_count: int = DEFAULT_NODES) -> float:
        g = self.grid(node_count)
        return float(g.weights @ (g.nodes * self.nu(g.nodes)))

    def __repr__(self):
        return f"RelativeDensity({self.label})"


@dataclass(frozen=True, eq=False)
class ProductDensity:
    """Tensor product ``f(x_1, ..., x_n) = prod f_i(x_i)`` of 1-D densities."""

    factors: tuple[RelativeDensity, ...]

    @property
    def dimension(self) -> int:
        return len(self.factors)

    @property
    def label(self) -> str:
        return " x ".join(f.label for f in self.factors)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.dimension:
            raise ValueError(f"points must have trailing dimension {self.dimension}")
        out = np.ones(pts.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out * f(pts[..., i])
        return out

    evaluate = __call__


@dataclass(frozen=True, eq=False)
class DmFunction:
    """A real function in ``L^2(dm)`` given by value and (optional) gradient."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None
    extent: tuple[float, float]
    label: str = "u"
    symmetric: bool = False
    centered: bool = False

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def grid(self, node_count: int = DEFAULT_NODES):
        lo, hi = self.extent
        return uniform_grid(lo, hi, node_count)

    def norm2(self, node_count: int = DEFAULT_NODES) -> float:
        """``int |u|^2 dm``."""
        g = self.grid(node_count)
        x = g.nodes
        with np.errstate(over="ignore", invalid="ignore"):
            return float(g.weights @ (np.square(self.value(x)) * np.exp(log_m_weight(x))))


# ---------------------------------------------------------------------------
# construction helpers


def _extent(loc: float, sd: float) -> tuple[float, float]:
    lo = min(loc - TAIL_SDS * sd, -TAIL_SDS)
    hi = max(loc + TAIL_SDS * sd, TAIL_SDS)
    return float(lo), float(hi)


def _union(*extents) -> tuple[float, float]:
    return float(min(e[0] for e in extents)), float(max(e[1] for e in extents))


def _lognorm(log_raw, extent) -> float:
    g = uniform_grid(extent[0], extent[1], NORMALIZE_NODES)
    with np.errstate(under="ignore"):
        vals = np.exp(log_raw(g.nodes) + log_gauss(g.nodes))
    z = float(g.weights @ vals)
    if not np.isfinite(z) or z <= 0:
        raise FamilyError(f"normalisation integral is not finite and positive: {z}")
    return math.log(z)


def _fmt(params: dict) -> str:
    return ", ".join(f"{k}={v:g}" if isinstance(v, (int, float)) else f"{k}={v}"
                     for k, v in params.items())


def _finite(**kw):
    for name, v in kw.items():
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise FamilyError(f"parameter {name} must be a finite number, got {v!r}")


def _build(log_raw, score, extent, family, params, label=None, **kw) -> RelativeDensity:
    log_norm = _lognorm(log_raw, extent)
    return RelativeDensity(log_raw=log_raw, score=score, log_norm=log_norm,
                           extent=extent, label=label or f"{family}({_fmt(params)})",
                           family=family, params=dict(params), **kw)


# ---------------------------------------------------------------------------
# families


def tilt(b: float) -> RelativeDensity:
    """``f(x) = exp(b x - b^2/2)``: the law N(b, 1), an LSI optimiser."""
    _finite(b=b)
    b = float(b)
    analytic = {"entropy": 0.5 * b * b, "fisher": b * b, "deficit": 0.0,
                "m2": 1.0 + b * b, "mean": b}
    return _build(lambda x: b * x - 0.5 * b * b, lambda x: np.full(np.shape(x), b),
                  _extent(b, 1.0), "tilt", {"b": b}, analytic=analytic,
                  centered=(b == 0.0), symmetric=(b == 0.0))


def gaussian() -> RelativeDensity:
    """The constant density ``f = 1``."""
    return tilt(0.0)


def scale(sigma: float) -> RelativeDensity:
    """Density of N(0, sigma^2) relative to N(0, 1)."""
    _finite(sigma=sigma)
    if sigma <= 0:
        raise FamilyError(f"sigma must be positive, got {sigma}")
    s2 = float(sigma) ** 2
    c = 0.5 * (1.0 - 1.0 / s2)
    ls = math.log(sigma)
    h = 0.5 * (s2 - 1.0 - 2.0 * ls)
    i = s2 * (1.0 - 1.0 / s2) ** 2
    analytic = {"entropy": h, "fisher": i, "deficit": 0.5 * i - h, "m2": s2, "mean": 0.0}
    return _build(lambda x: c * np.square(x) - ls, lambda x: 2.0 * c * np.asarray(x),
                  _extent(0.0, max(sigma, 1.0)), "scale", {"sigma": float(sigma)},
                  analytic=analytic, centered=True, symmetric=True)


def mixture(w: float, sigma1: float, sigma2: float) -> RelativeDensity:
    """Centred two-component scale mixture ``w N(0,s1^2) + (1-w) N(0,s2^2)``."""
    _finite(w=w, sigma1=sigma1, sigma2=sigma2)
    if not 0.0 <= w <= 1.0:
        raise FamilyError(f"weight must lie in [0, 1], got {w}")
    if sigma1 <= 0 or sigma2 <= 0:
        raise FamilyError("mixture scales must be positive")
    lw = np.array([math.log(w) if w > 0 else -np.inf,
                   math.log1p(-w) if w < 1 else -np.inf])
    inv = np.array([1.0 / sigma1 ** 2, 1.0 / sigma2 ** 2])
    lsig = np.log([sigma1, sigma2])

    def comps(x):
        x = np.asarray(x, dtype=float)[..., None]
        return lw - lsig - 0.5 * inv * np.square(x)

    def log_raw(x):
        x = np.asarray(x, dtype=float)
        return np.logaddexp.reduce(comps(x), axis=-1) + 0.5 * np.square(x)

    def score(x):
        x = np.asarray(x, dtype=float)
        c = comps(x)
        r = np.exp(c - np.logaddexp.reduce(c, axis=-1)[..., None])
        return x * (1.0 - (r * inv).sum(axis=-1))

    params = {"w": float(w), "sigma1": float(sigma1), "sigma2": float(sigma2)}
    m2 = w * sigma1 ** 2 + (1 - w) * sigma2 ** 2
    return _build(log_raw, score, _extent(0.0, max(sigma1, sigma2, 1.0)), "mixture",
                  params, analytic={"m2": m2, "mean": 0.0}, centered=True, symmetric=True)


def bump_profile(t):
    """Smooth compactly supported profile ``exp(-1/(1-t^2))`` on ``|t| < 1``."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    s = np.where(inside, 1.0 - np.square(t), 1.0)
    with np.errstate(under="ignore"):
        return np.where(inside, np.exp(-1.0 / s), 0.0)


def bump_profile_derivative(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    s = np.where(inside, 1.0 - np.square(t), 1.0)
    with np.errstate(under="ignore"):
        return np.where(inside, np.exp(-1.0 / s) * (-2.0 * t / np.square(s)), 0.0)


def bump(eps: float, center: float = 0.0, width: float = 1.0,
         base: RelativeDensity | dict | None = None) -> RelativeDensity:
    """Multiplicative perturbation ``base * (1 + eps * psi((x - center)/width))``.

    ``psi`` is :func:`bump_profile` (maximum ``e^{-1}``), so positivity needs
    ``eps > -e``.  The result is renormalised.
    """
    _finite(eps=eps, center=center, width=width)
    if width <= 0:
        raise FamilyError(f"bump width must be positive, got {width}")
    if eps <= -math.e:
        raise FamilyError(f"bump amplitude must exceed -e to keep f > 0, got {eps}")
    base = gaussian() if base is None else _as_density(base)
    eps, center, width = float(eps), float(center), float(width)

    def log_raw(x):
        x = np.asarray(x, dtype=float)
        return base.log_f(x) + np.log1p(eps * bump_profile((x - center) / width))

    def score(x):
        x = np.asarray(x, dtype=float)
        t = (x - center) / width
        return base.score(x) + eps * bump_profile_derivative(t) / width / (
            1.0 + eps * bump_profile(t))

    params = {"eps": eps, "center": center, "width": width}
    label = f"bump({_fmt(params)})"
    if base.label != "tilt(b=0)":
        label = f"bump({_fmt(params)}, base={base.label})"
        params["base"] = base.label
    extent = _union(base.extent, (center - width - 1.0, center + width + 1.0))
    sym = base.symmetric and center == 0.0
    return _build(log_raw, score, extent, "bump", params, label=label,
                  symmetric=sym, centered=sym)


def floor(alpha: float, shape: RelativeDensity | dict | None = None) -> RelativeDensity:
    """``f = alpha + (1 - alpha) g`` for a catalog density ``g``; ``f >= alpha``."""
    _finite(alpha=alpha)
    if not 0.0 < alpha <= 1.0:
        raise FamilyError(f"alpha must lie in (0, 1], got {alpha}")
    g = scale(0.7) if shape is None else _as_density(shape)
    la = math.log(alpha)
    lb = math.log1p(-alpha) if alpha < 1 else -np.inf

    def log_raw(x):
        x = np.asarray(x, dtype=float)
        return np.logaddexp(la, lb + g.log_f(x))

    def score(x):
        x = np.asarray(x, dtype=float)
        return g.score(x) * np.exp(lb + g.log_f(x) - log_raw(x))

    params = {"alpha": float(alpha), "shape": g.label}
    return _build(log_raw, score, _union(_extent(0.0, 1.0), g.extent), "floor", params,
                  label=f"floor(alpha={alpha:g}, shape={g.label})", floor=float(alpha),
                  centered=g.centered, symmetric=g.symmetric)


# Shapes used by the doubly normalised symmetric family: (center, width) pairs,
# each shape being symmetric about 0.
_DUAL_SHAPES = (((0.0, 1.0),), ((-1.6, 0.8), (1.6, 0.8)), ((-3.0, 1.0), (3.0, 1.0)))


def _dual_shape(i, x):
    return sum(bump_profile((x - c) / w) for c, w in _DUAL_SHAPES[i])


def _dual_shape_derivative(i, x):
    return sum(bump_profile_derivative((x - c) / w) / w for c, w in _DUAL_SHAPES[i])


def _dual_coefficients(eps: float, unit_second_moment: bool) -> np.ndarray:
    g = uniform_grid(-8.0, 8.0, NORMALIZE_NODES)
    x = g.nodes
    psi = np.array([_dual_shape(i, x) for i in range(3)])
    wg = g.weights * np.exp(log_gauss(x))
    wh = g.weights * np.exp(-np.square(x)) / math.sqrt(math.pi)
    a = psi @ wg
    b = psi @ wh
    big = (psi * wh) @ psi.T
    mom = psi @ (wg * x * x)
    quad = big - np.outer(a, a)
    lin = b - a
    if unit_second_moment:
        k = mom - a
        c0 = np.array([eps, 0.0, -k[0] * eps / k[2]])
        d = np.array([0.0, 1.0, -k[1] / k[2]])
    else:
        c0 = np.array([eps, 0.0, 0.0])
        d = np.array([0.0, 1.0, 0.0])
    a2 = d @ quad @ d
    a1 = 2.0 * lin @ d + 2.0 * c0 @ quad @ d
    a0 = 2.0 * lin @ c0 + c0 @ quad @ c0
    roots = np.roots([a2, a1, a0])
    roots = roots[np.abs(roots.imag) < 1e-12].real
    if roots.size == 0:
        raise FamilyError(f"no doubly normalised member for eps={eps}")
    t = roots[np.argmin(np.abs(roots))]
    return c0 + t * d


def symmetric_dual(eps: float, unit_second_moment: bool = False) -> RelativeDensity:
    """Symmetric ``f`` with both ``f dgamma`` and ``v dgamma`` probability measures.

    Here ``v(x) = f(x / sqrt 2)^2``.  The family is ``f = A (1 + sum c_i psi_i)``
    over three symmetric bump shapes; ``c_1 = eps`` and the remaining
    coefficients are solved for so that both normalisations (and, optionally,
    ``m_2(f dgamma) = 1``) hold.  ``eps = 0`` gives ``f = 1``.
    """
    _finite(eps=eps)
    c = _dual_coefficients(float(eps), bool(unit_second_moment))

    def inner(x):
        return 1.0 + sum(ci * _dual_shape(i, x) for i, ci in enumerate(c))

    probe = np.linspace(-6.0, 6.0, 4001)
    if np.min(inner(probe)) <= 0:
        raise FamilyError(f"eps={eps} makes the doubly normalised density negative")

    def log_raw(x):
        return np.log(inner(np.asarray(x, dtype=float)))

    def score(x):
        x = np.asarray(x, dtype=float)
        return sum(ci * _dual_shape_derivative(i, x) for i, ci in enumerate(c)) / inner(x)

    params = {"eps": float(eps), "unit_m2": int(bool(unit_second_moment))}
    return _build(log_raw, score, _extent(0.0, 1.0), "symmetric_dual", params,
                  analytic={"coefficients": tuple(float(v) for v in c)},
                  centered=True, symmetric=True)


_FAMILIES = {
    "tilt": (tilt, ("b",)),
    "gaussian": (gaussian, ()),
    "scale": (scale, ("sigma",)),
    "mixture": (mixture, ("w", "sigma1", "sigma2")),
    "bump": (bump, ("eps", "center", "width", "base")),
    "floor": (floor, ("alpha", "shape")),
    "symmetric_dual": (symmetric_dual, ("eps", "unit_second_moment")),
    "center": (None, ("of",)),
}


def _as_density(obj) -> RelativeDensity:
    if isinstance(obj, RelativeDensity):
        return obj
    return make_family(obj)


def make_family(spec: dict) -> RelativeDensity:
    """Build a density from a descriptor such as ``{"family": "tilt", "b": 1}``.

    ``{"family": "center", "of": {...}}`` translates the nested density to
    mean zero.
    """
    if not isinstance(spec, dict) or "family" not in spec:
        raise FamilyError(f"descriptor must be a table with a 'family' key: {spec!r}")
    name = spec["family"]
    if name not in _FAMILIES:
        raise FamilyError(f"unknown family {name!r}; known: {sorted(_FAMILIES)}")
    ctor, allowed = _FAMILIES[name]
    kwargs = {k: v for k, v in spec.items() if k != "family"}
    unknown = set(kwargs) - set(allowed)
    if unknown:
        raise FamilyError(f"unknown parameters for {name}: {sorted(unknown)}")
    if name == "center":
        if "of" not in kwargs:
            raise FamilyError("center needs an 'of' descriptor")
        return center(_as_density(kwargs["of"]))
    try:
        return ctor(**kwargs)
    except TypeError as exc:
        raise FamilyError(f"bad parameters for {name}: {exc}") from None


# ---------------------------------------------------------------------------
# operations


def moment(f: RelativeDensity, p: float, node_count: int = DEFAULT_NODES) -> float:
    """``int |x|^p f dgamma``."""
    if p <= 0:
        raise ValueError("moment order must be positive")
    g = f.grid(node_count)
    x = g.nodes
    vals = np.abs(x) ** p * f.nu(x)
    tail = max(vals[0], vals[-1])
    out = float(g.weights @ vals)
    if not np.isfinite(out) or out > 1e300 or tail > 1e-12 * max(out, 1e-300):
        raise OverflowError(f"moment of order {p} does not converge for {f.label}")
    return out


def center(f: RelativeDensity, node_count: int = DEFAULT_NODES) -> RelativeDensity:
    """Translate ``f dgamma`` to mean zero and re-express it relative to ``dgamma``.

    With ``m`` the mean, the translated density is
    ``f(x + m) exp(-m x - m^2/2)``.
    """
    m = f.mean(node_count)
    if m == 0.0:
        return f

    def log_raw(x):
        x = np.asarray(x, dtype=float)
        return f.log_f(x + m) - m * x - 0.5 * m * m

    def score(x):
        return f.score(np.asarray(x, dtype=float) + m) - m

    lo, hi = f.extent
    extent = _union((lo - m, hi - m), _extent(0.0, 1.0))
    out = _build(log_raw, score, extent, "center", {"shift": -m},
                 label=f"centered({f.label})", centered=True,
                 floor=None)
    residual = out.mean(node_count)
    if abs(residual) > 1e-10:
        raise FamilyError(f"centering left mean {residual:.3e} for {f.label}")
    return out


def tensor(factors: Sequence[RelativeDensity]) -> ProductDensity:
    """Product density of one-dimensional factors."""
    factors = tuple(factors)
    if not factors:
        raise ValueError("tensor needs at least one factor")
    for f in factors:
        if not isinstance(f, RelativeDensity) or f.dimension != 1:
            raise ValueError("tensor factors must be one-dimensional RelativeDensity objects")
    return ProductDensity(factors)


def product_moment2(p: ProductDensity) -> float:
    """Second moment ``int |x|^2`` of the product measure."""
    return float(sum(moment(f, 2) for f in p.factors))


def mass(f: RelativeDensity, node_count: int = DEFAULT_NODES) -> float:
    g = f.grid(node_count)
    return float(g.weights @ f.nu(g.nodes))
