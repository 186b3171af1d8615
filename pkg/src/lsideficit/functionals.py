"""Entropy, Fisher information and the log-Sobolev deficits.

For a density ``f`` relative to ``dgamma``:

* ``H(f) = int f log f dgamma``;
* ``I(f) = int |f'|^2 / f dgamma = int (log f)'^2 f dgamma``;
* ``delta(f) = I(f)/2 - H(f)``.

For ``u`` in ``L^2(dm)`` the Carlen deficit is
``delta_c(u) = (1/2pi) int |u'|^2 dm - int u^2 log u^2 dm``.

All integrals use the trapezoid rule on the uniform grid of the density; an
error estimate is the change between ``n`` and ``2n - 1`` nodes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .densities import (DEFAULT_NODES, DmFunction, ProductDensity, RelativeDensity,
                        log_gauss, log_m_weight)
from .grid import abs_power_integral, differentiate

SQRT_PI = math.sqrt(math.pi)
NORM_TOL = 1e-8
LP_BREAKPOINTS = 2049


class DivergenceError(ArithmeticError):
    """An integral does not converge on the range the density lives on."""


class NormalizationError(ValueError):
    """A function is not normalised in the required sense."""


def _discrete_log_mass(g, lf, x) -> float:
    with np.errstate(under="ignore"):
        mass = float(g.weights @ np.exp(lf + log_gauss(x)))
    return math.log(mass) if mass > 0 and math.isfinite(mass) else 0.0


def _samples(f: RelativeDensity, node_count: int):
    # Rescale to unit mass under this grid's weights, so functionals of a
    # product are exactly the sum over factors at any node count.
    g = f.grid(node_count)
    x = g.nodes
    lf = f.log_f(x)
    lf = lf - _discrete_log_mass(g, lf, x)
    with np.errstate(under="ignore"):
        nu = np.exp(lf + log_gauss(x))
    return g, x, lf, nu


def entropy(f: RelativeDensity, node_count: int = DEFAULT_NODES) -> float:
    """Relative entropy ``int f log f dgamma`` (nats), with ``0 log 0 = 0``."""
    g, _, lf, nu = _samples(f, node_count)
    vals = np.where(nu > 0, nu * np.where(np.isfinite(lf), lf, 0.0), 0.0)
    if not np.all(np.isfinite(vals)):
        raise ArithmeticError(f"non-finite entropy integrand for {f.label}")
    return float(g.weights @ vals)


def fisher_information(f: RelativeDensity, node_count: int = DEFAULT_NODES,
                       method: str = "score") -> float:
    """Fisher information ``int |f'|^2 / f dgamma``.

    ``method="score"`` integrates ``(log f)'^2 f`` using the analytic score,
    which stays well defined where ``f`` is tiny.  ``method="sqrt"`` uses
    ``4 int ((sqrt f)')^2 dgamma`` with numerical differentiation.
    """
    g, x, lf, nu = _samples(f, node_count)
    if method == "score":
        s = f.score(x)
        vals = nu * np.square(s)
    elif method == "sqrt":
        root = np.exp(0.5 * lf)
        vals = 4.0 * np.square(differentiate(g, root)) * np.exp(log_gauss(x))
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(vals)):
        raise ArithmeticError(f"non-finite Fisher integrand for {f.label}")
    out = float(g.weights @ vals)
    if out < -1e-12:
        raise ArithmeticError(f"negative Fisher information {out} for {f.label}")
    return max(out, 0.0)


def lsi_deficit(f: RelativeDensity, node_count: int = DEFAULT_NODES) -> float:
    """``I(f)/2 - H(f)``."""
    return 0.5 * fisher_information(f, node_count) - entropy(f, node_count)


def second_moment(f: RelativeDensity, node_count: int = DEFAULT_NODES) -> float:
    g, x, _, nu = _samples(f, node_count)
    return float(g.weights @ (x * x * nu))


def _tail_guard(vals, total, label, what):
    edge = max(abs(vals[0]), abs(vals[-1]))
    if not np.isfinite(total) or edge > 1e-12 * max(abs(total), 1e-300) + 1e-300:
        raise DivergenceError(f"{what} does not converge for {label}")


def lp_distance_to_one(f: RelativeDensity, p: float = 1.0,
                       breakpoints: int = LP_BREAKPOINTS) -> float:
    """``(int |f - 1|^p dgamma)^{1/p}``.

    Sign changes of ``f - 1`` become quadrature breakpoints.  Raises
    :class:`DivergenceError` when the integrand has not decayed at the ends of
    the density's range.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    lo, hi = f.extent
    x = np.linspace(lo, hi, breakpoints)

    # (f - 1) gamma^{1/p} in log space, so large f never meets a tiny weight
    def diff(t):
        lf = f.log_f(t)
        big = lf > 30.0
        with np.errstate(divide="ignore"):
            la = np.where(big, lf, np.log(np.abs(np.expm1(np.where(big, 0.0, lf)))))
        return np.sign(lf) * np.exp(la + log_gauss(t) / p)

    weight = np.ones_like

    # slowly decaying integrands get a wider range before being called divergent
    for widen in (1.0, 1.5, 2.0, 3.0):
        xs = x * widen if widen > 1.0 else x
        with np.errstate(over="ignore", under="ignore"):
            ends = np.abs(diff(xs[[0, -1]])) ** p
            total = abs_power_integral(diff, weight, xs, p)
        try:
            _tail_guard(ends, total, f.label, f"the L^{p:g} distance")
        except DivergenceError:
            continue
        return total ** (1.0 / p)
    raise DivergenceError(f"the L^{p:g} distance does not converge for {f.label}")


def power_integral(f: RelativeDensity, q: float, node_count: int = DEFAULT_NODES) -> float:
    """``int f^q dgamma`` with a divergence guard."""
    g = f.grid(node_count)
    x = g.nodes
    with np.errstate(over="ignore", under="ignore"):
        vals = np.exp(q * f.log_f(x) + log_gauss(x))
    total = float(g.weights @ vals)
    _tail_guard(vals, total, f.label, f"int f^{q:g} dgamma")
    return total


def hellinger_to_one(f: RelativeDensity, node_count: int = DEFAULT_NODES) -> float:
    """``||sqrt f - 1||_{L^2(dgamma)}``."""
    g, x, lf, _ = _samples(f, node_count)
    vals = np.square(np.expm1(0.5 * lf)) * np.exp(log_gauss(x))
    return math.sqrt(float(g.weights @ vals))


# ---------------------------------------------------------------------------
# L^2(dm)


def dm_norm2(u: DmFunction, node_count: int = DEFAULT_NODES) -> float:
    return u.norm2(node_count)


def carlen_deficit(u: DmFunction, node_count: int = DEFAULT_NODES,
                   check: bool = True) -> float:
    """``(1/2pi) int |u'|^2 dm - int u^2 log u^2 dm`` for ``u`` normalised in ``L^2(dm)``."""
    g = u.grid(node_count)
    x = g.nodes
    m = np.exp(log_m_weight(x))
    val = u(x)
    sq = np.square(val)
    norm = float(g.weights @ (sq * m))
    if check and not abs(norm - 1.0) <= NORM_TOL:
        raise NormalizationError(f"int |u|^2 dm = {norm:.12g} for {u.label}, expected 1")
    grad = u.grad(x) if u.grad is not None else differentiate(g, val)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(sq > 0, sq * np.log(sq), 0.0)
    kinetic = float(g.weights @ (np.square(grad) * m)) / (2.0 * math.pi)
    return kinetic - float(g.weights @ (ent * m))


def rescale_to_dm(f: RelativeDensity, check: bool = True) -> DmFunction:
    """``u_f(x) = f(2 sqrt(pi) x)^{1/2}``, normalised in ``L^2(dm)``.

    The change of variables ``y = 2 sqrt(pi) x`` maps ``dm`` onto ``dgamma``,
    so ``delta_c(u_f) = delta(f)``.
    """
    c = 2.0 * SQRT_PI

    def value(x):
        with np.errstate(over="ignore"):
            return np.exp(0.5 * f.log_f(c * np.asarray(x, dtype=float)))

    def grad(x):
        x = np.asarray(x, dtype=float)
        return value(x) * SQRT_PI * f.score(c * x)

    lo, hi = f.extent
    u = DmFunction(value, grad, (lo / c, hi / c), label=f"u[{f.label}]",
                   symmetric=f.symmetric, centered=f.centered)
    if check:
        norm = u.norm2()
        if not abs(norm - 1.0) <= NORM_TOL:
            raise NormalizationError(f"rescaled {f.label} has norm {norm:.12g}")
    return u


def dm_distance_to_one(u: DmFunction, node_count: int = DEFAULT_NODES) -> float:
    """``||u - 1||_{L^2(dm)}``."""
    g = u.grid(node_count)
    x = g.nodes
    vals = np.square(u(x) - 1.0) * np.exp(log_m_weight(x))
    return math.sqrt(float(g.weights @ vals))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class FunctionalReport:
    """Entropy, Fisher information, deficit and companions for one density.

    ``errors`` maps each field to the change observed when the grid is
    refined from ``n`` to ``2n - 1`` nodes.
    """

    entropy: float
    fisher: float
    deficit: float
    m2: float
    l1_to_one: float
    errors: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"entropy": self.entropy, "fisher": self.fisher, "deficit": self.deficit,
                "m2": self.m2, "l1_to_one": self.l1_to_one}


def functional_report(f: RelativeDensity, node_count: int = DEFAULT_NODES) -> FunctionalReport:
    fine = 2 * node_count - 1
    h0, h1 = entropy(f, node_count), entropy(f, fine)
    i0, i1 = fisher_information(f, node_count), fisher_information(f, fine)
    m0, m1 = second_moment(f, node_count), second_moment(f, fine)
    l1 = lp_distance_to_one(f, 1.0)
    l1b = lp_distance_to_one(f, 1.0, 2 * LP_BREAKPOINTS - 1)
    d1 = 0.5 * i1 - h1
    errors = {"entropy": abs(h1 - h0), "fisher": abs(i1 - i0),
              "deficit": abs(d1 - (0.5 * i0 - h0)), "m2": abs(m1 - m0),
              "l1_to_one": abs(l1b - l1)}
    return FunctionalReport(h1, i1, d1, m1, l1b, errors)


@dataclass(frozen=True)
class ProductDeficit:
    total: float
    parts: tuple[float, ...]


def product_deficit(p: ProductDensity, node_count: int = DEFAULT_NODES) -> ProductDeficit:
    """Deficit of a tensor product as the sum of its factor deficits."""
    parts = tuple(lsi_deficit(f, node_count) for f in p.factors)
    return ProductDeficit(float(sum(parts)), parts)


def tensor_deficit(p: ProductDensity, node_count: int = 513) -> float:
    """Deficit of a product density by direct quadrature on the tensor grid.

    ``H`` integrates ``F log F`` and ``I`` integrates ``F |grad log F|^2`` with
    ``F`` the product density, using the product of the factors' grids.  Each
    factor is rescaled to unit mass on its grid, matching :func:`lsi_deficit`
    at the same node count.  The leading axes are looped over so memory stays at two axes.
    """
    grids = [f.grid(node_count) for f in p.factors]
    lf = [f.log_f(g.nodes) for f, g in zip(p.factors, grids)]
    lf = [v - _discrete_log_mass(g, v, g.nodes) for v, g in zip(lf, grids)]
    lnu = [v + log_gauss(g.nodes) for v, g in zip(lf, grids)]
    s2 = [np.square(f.score(g.nodes)) for f, g in zip(p.factors, grids)]
    w = [g.weights for g in grids]
    d = p.dimension
    if d == 1:
        nu = np.exp(lnu[0])
        return float(w[0] @ (nu * (0.5 * s2[0] - lf[0])))
    a, b = d - 2, d - 1
    tail_w = np.outer(w[a], w[b])
    tail_lnu = lnu[a][:, None] + lnu[b][None, :]
    tail_lf = lf[a][:, None] + lf[b][None, :]
    tail_s2 = s2[a][:, None] + s2[b][None, :]
    h = 0.0
    fi = 0.0
    for idx in itertools.product(*(range(node_count) for _ in range(d - 2))):
        head_w = math.prod(w[k][i] for k, i in enumerate(idx))
        head_lnu = sum(lnu[k][i] for k, i in enumerate(idx))
        head_lf = sum(lf[k][i] for k, i in enumerate(idx))
        head_s2 = sum(s2[k][i] for k, i in enumerate(idx))
        dens = np.exp(head_lnu + tail_lnu) * (head_w * tail_w)
        h += float(np.sum(dens * (head_lf + tail_lf)))
        fi += float(np.sum(dens * (head_s2 + tail_s2)))
    return 0.5 * fi - h
