"""Quadrature grids on the line.

Three reference measures are supported:

``gamma``
    the standard Gaussian measure ``(2 pi)^{-1/2} exp(-x^2/2) dx``;
``m``
    the measure ``2^{1/2} exp(-2 pi x^2) dx``, i.e. the law of N(0, 1/(4 pi));
``lebesgue``
    plain ``dx`` truncated to ``[center - span, center + span]``.

Gauss-Hermite rules are used for ``gamma`` and ``m``.  Lebesgue grids come in
two flavours: a Gauss-Legendre rule (``rule="gauss"``, exact for polynomials of
degree ``2n - 1``) and the uniform trapezoid rule (``rule="trapezoid"``), which
converges exponentially for smooth integrands with Gaussian tails and is what
the rest of the package uses for densities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import roots_legendre

REFERENCES = ("gamma", "m", "lebesgue")
RULES = ("gauss", "trapezoid")
MIN_NODES = 8

# Gauss-Legendre panel used for piecewise integration between breakpoints.
_PANEL_T, _PANEL_W = roots_legendre(8)


class GridError(ValueError):
    """Invalid grid construction or grid/value mismatch."""


@dataclass(frozen=True, eq=False)
class GaussianGrid:
    """Immutable quadrature rule: ``integrate(g) = sum(weights * g(nodes))``."""

    nodes: np.ndarray
    weights: np.ndarray
    reference: str
    span: float
    center: float = 0.0
    rule: str = "gauss"

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.nodes)

    @property
    def uniform(self) -> bool:
        return self.rule == "trapezoid"

    @property
    def step(self) -> float:
        if not self.uniform:
            raise GridError("step is only defined for uniform grids")
        return float(self.nodes[1] - self.nodes[0])

    def refine(self) -> "GaussianGrid":
        """Grid of the same kind with (roughly) twice the nodes.

        Uniform grids are refined by halving the step so that the coarse
        nodes are kept.
        """
        n = len(self.nodes)
        if self.uniform:
            return uniform_grid(self.nodes[0], self.nodes[-1], 2 * n - 1)
        return build_grid(self.reference, 2 * n, self.span, rule=self.rule,
                          center=self.center)


def build_grid(reference: str, node_count: int, span: float = 10.0, *,
               rule: str | None = None, center: float = 0.0) -> GaussianGrid:
    """Build a quadrature grid for one of the reference measures.

    Parameters
    ----------
    reference : {"gamma", "m", "lebesgue"}
        Measure integrated against.
    node_count : int
        Number of nodes, at least 8.
    span : float
        Half-width of the truncation interval.  Only used by Lebesgue grids
        but validated for all references.
    rule : {"gauss", "trapezoid"}, optional
        Lebesgue rule; defaults to Gauss-Legendre.  Gaussian references
        always use Gauss-Hermite.
    center : float
        Midpoint of the Lebesgue interval.

    Returns
    -------
    GaussianGrid
    """
    if reference not in REFERENCES:
        raise GridError(f"unknown reference {reference!r}; expected one of {REFERENCES}")
    if int(node_count) != node_count or node_count < MIN_NODES:
        raise GridError(f"node_count must be an integer >= {MIN_NODES}, got {node_count}")
    if not np.isfinite(span) or span <= 0:
        raise GridError(f"span must be positive, got {span}")
    node_count = int(node_count)

    if reference in ("gamma", "m"):
        if rule not in (None, "gauss"):
            raise GridError("Gaussian references only support the gauss rule")
        t, w = hermegauss(node_count)
        w = w / np.sqrt(2.0 * np.pi)
        if not np.all(w > 0):
            raise GridError(f"Gauss-Hermite weights underflow at {node_count} nodes")
        if reference == "m":
            t = t / (2.0 * np.sqrt(np.pi))
        return GaussianGrid(np.asarray(t, float), np.asarray(w, float), reference,
                            float(span), 0.0, "gauss")

    rule = rule or "gauss"
    if rule not in RULES:
        raise GridError(f"unknown rule {rule!r}")
    if rule == "trapezoid":
        return uniform_grid(center - span, center + span, node_count)
    t, w = roots_legendre(node_count)
    return GaussianGrid(center + span * t, span * w, "lebesgue", float(span),
                        float(center), "gauss")


def uniform_grid(lo: float, hi: float, node_count: int) -> GaussianGrid:
    """Trapezoid rule on ``node_count`` equispaced nodes spanning ``[lo, hi]``."""
    if node_count < MIN_NODES:
        raise GridError(f"node_count must be >= {MIN_NODES}")
    if not hi > lo:
        raise GridError("empty interval")
    x = np.linspace(lo, hi, int(node_count))
    h = x[1] - x[0]
    w = np.full(x.shape, h)
    w[0] = w[-1] = 0.5 * h
    return GaussianGrid(x, w, "lebesgue", 0.5 * (hi - lo), 0.5 * (hi + lo), "trapezoid")


def integrate(grid: GaussianGrid, values) -> float:
    """Weighted sum of ``values`` sampled on the grid nodes."""
    values = np.asarray(values)
    if values.shape != grid.nodes.shape:
        raise GridError(f"expected {len(grid)} values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise GridError("non-finite value passed to integrate")
    return float(np.dot(grid.weights, values))


def _fd_weights(z: float, x: np.ndarray) -> np.ndarray:
    """First-derivative weights at ``z`` for the stencil ``x``."""
    scale = np.max(np.abs(x - z))
    d = (x - z) / scale
    k = np.arange(len(x))
    vander = d[None, :] ** k[:, None]
    rhs = np.zeros(len(x))
    rhs[1] = 1.0
    return np.linalg.solve(vander, rhs) / scale


def differentiate(grid: GaussianGrid, values) -> np.ndarray:
    """Derivative estimates at the grid nodes.

    Five-point stencils (fourth order) are used whenever the grid has at least
    five nodes: centred in the interior and one-sided over the two nodes at
    each end.  Grids of three or four nodes fall back to three-point stencils
    (second order).
    """
    values = np.asarray(values, dtype=float)
    x = grid.nodes
    n = len(x)
    if values.shape != x.shape:
        raise GridError(f"expected {n} values, got shape {values.shape}")
    if n < 3:
        raise GridError("differentiation needs at least 3 nodes")
    width = 5 if n >= 5 else 3
    half = width // 2

    out = np.empty(n)
    if grid.uniform and width == 5:
        h = x[1] - x[0]
        out[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * h)
        edge = range(0, 2)
        tail = range(n - 2, n)
        nodes = list(edge) + list(tail)
    else:
        nodes = range(n)
    for i in nodes:
        lo = min(max(i - half, 0), n - width)
        idx = slice(lo, lo + width)
        out[i] = _fd_weights(x[i], x[idx]) @ values[idx]
    return out


def panel_integrate(func: Callable[[np.ndarray], np.ndarray], breakpoints) -> np.ndarray:
    """Integrals of ``func`` over each interval between consecutive breakpoints.

    Each interval is integrated with an 8-point Gauss-Legendre rule, so the
    result is accurate whenever ``func`` is smooth inside every interval (kinks
    and sign changes should sit on breakpoints).
    """
    b = np.asarray(breakpoints, dtype=float)
    a, c = b[:-1], b[1:]
    half = 0.5 * (c - a)
    mid = 0.5 * (c + a)
    pts = mid[:, None] + half[:, None] * _PANEL_T[None, :]
    vals = func(pts.ravel()).reshape(pts.shape)
    return half * (vals @ _PANEL_W)


def sign_change_roots(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                      values: np.ndarray | None = None, iterations: int = 60) -> np.ndarray:
    """Roots of ``func`` bracketed by sign changes between consecutive nodes."""
    if values is None:
        values = func(x)
    s = np.sign(values)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if idx.size == 0:
        return np.empty(0)
    lo, hi = x[idx].copy(), x[idx + 1].copy()
    flo = values[idx].copy()
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(lo))):
            break
    return 0.5 * (lo + hi)


def abs_power_integral(diff: Callable[[np.ndarray], np.ndarray],
                       weight: Callable[[np.ndarray], np.ndarray],
                       x: np.ndarray, p: float = 1.0) -> float:
    """``int |diff(x)|^p weight(x) dx`` over ``[x[0], x[-1]]``.

    Sign changes of ``diff`` are located and used as extra breakpoints so the
    kink of ``|.|`` never falls inside a quadrature panel.
    """
    vals = diff(x)
    roots = sign_change_roots(diff, x, vals)
    bps = np.union1d(x, roots)
    parts = panel_integrate(lambda t: np.abs(diff(t)) ** p * weight(t), bps)
    return float(parts.sum())
