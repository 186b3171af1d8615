"""The Fourier-Wiener transform on ``L^2(dm)``.

``U h(x) = 2^{-1/4} e^{pi x^2} h(x)`` maps ``L^2(dx)`` onto ``L^2(dm)`` and
``U* f = 2^{1/4} e^{-pi x^2} f`` is its inverse.  The transform is
``W = U F U*`` with ``F h(xi) = int e^{-2 pi i xi x} h(x) dx``.

Multiplying by ``e^{pi xi^2}`` amplifies quadrature error without bound, so
the entropy of ``|W f|^2 dm`` is never formed pointwise.  With ``h = U* f``,
``|W f|^2 dm = |h^|^2 dxi`` and

    int |Wf|^2 log |Wf|^2 dm
        = int |h^|^2 log |h^|^2 dxi + (1/2pi) int |h'|^2 dx - (1/2) log 2,

where the middle term is ``2 pi int xi^2 |h^|^2 dxi`` evaluated in ``x`` space
by Plancherel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .densities import DmFunction, log_m_weight
from .functionals import NORM_TOL, NormalizationError, carlen_deficit
from .grid import differentiate, uniform_grid

TWO_Q = 2.0 ** 0.25
PLANCHEREL_TOL = 1e-6
UNITARY_TOL = 1e-6
RELIABLE = 1e-8
MAX_XI = 64.0
CHUNK = 1 << 22


class FourierError(ArithmeticError):
    """Quadrature of the Fourier integral is not trustworthy."""


def u_star(u: DmFunction | Callable) -> Callable[[np.ndarray], np.ndarray]:
    """``x -> 2^{1/4} e^{-pi x^2} u(x)``, an isometry ``L^2(dm) -> L^2(dx)``."""
    def h(x):
        x = np.asarray(x, dtype=float)
        return TWO_Q * np.exp(-math.pi * x * x) * u(x)
    return h


def u_map(h: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """``x -> 2^{-1/4} e^{pi x^2} h(x)``, the inverse of :func:`u_star`."""
    def f(x):
        x = np.asarray(x, dtype=float)
        return np.exp(math.pi * x * x) * h(x) / TWO_Q
    return f


def _is_uniform(xi: np.ndarray) -> bool:
    if xi.ndim != 1 or xi.size < 8:
        return False
    d = np.diff(xi)
    return bool(np.all(d > 0) and np.ptp(d) <= 1e-9 * d[0])


def fourier_quadrature(h, xi, x, weights=None, check: bool = True,
                       tol: float = PLANCHEREL_TOL) -> np.ndarray:
    """``h^(xi) = int e^{-2 pi i xi x} h(x) dx`` by direct quadrature.

    ``h`` is a callable or an array of samples at the uniform nodes ``x``
    (trapezoid weights unless ``weights`` is given).  When ``xi`` is a uniform
    grid the Plancherel identity ``||h^||_2 = ||h||_2`` is checked and a
    :class:`FourierError` raised if the relative drift exceeds ``tol``.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    vals = h(x) if callable(h) else np.asarray(h)
    if vals.shape != x.shape:
        raise ValueError("samples and nodes differ in shape")
    if weights is None:
        weights = uniform_grid(x[0], x[-1], len(x)).weights
    wv = weights * vals
    out = np.empty(xi.shape, dtype=complex)
    step = max(1, CHUNK // max(len(x), 1))
    for s in range(0, xi.size, step):
        out[s:s + step] = np.exp(-2j * math.pi * np.outer(xi[s:s + step], x)) @ wv
    if check and _is_uniform(xi):
        dxi = xi[1] - xi[0]
        lhs = dxi * (np.sum(np.abs(out) ** 2) - 0.5 * (abs(out[0]) ** 2 + abs(out[-1]) ** 2))
        rhs = float(weights @ np.abs(vals) ** 2)
        drift = abs(math.sqrt(lhs) - math.sqrt(rhs)) / max(math.sqrt(rhs), 1e-300)
        if drift > tol:
            raise FourierError(f"Plancherel drift {drift:.3e} exceeds {tol:g}")
    return out


@dataclass(frozen=True)
class WienerTransform:
    """Samples of ``W f`` and the underlying Fourier data.

    ``xi`` and ``values`` cover ``|xi| <= truncation``, where the amplified
    quadrature error stays below ``1e-8``; ``outside_mass`` is the part of
    ``int |W f|^2 dm`` lying beyond it.  ``hat`` holds ``F U* f`` on the full
    frequency grid ``xi_full``.
    """

    xi: np.ndarray
    values: np.ndarray
    xi_full: np.ndarray
    hat: np.ndarray
    norm: float
    truncation: float
    outside_mass: float
    kinetic: float


def _h_and_derivative(u: DmFunction, node_count: int):
    grid = u.grid(node_count)
    x = grid.nodes
    val = u(x)
    grad = u.grad(x) if u.grad is not None else differentiate(grid, val)
    g = TWO_Q * np.exp(-math.pi * x * x)
    return grid, g * val, g * (grad - 2.0 * math.pi * x * val)


def _frequency_grid(u: DmFunction, node_count: int):
    grid, h, dh = _h_and_derivative(u, node_count)
    mass = float(grid.weights @ np.square(h))
    spread = math.sqrt(float(grid.weights @ np.square(dh)) / mass) / (2.0 * math.pi)
    return grid, h, dh, mass, spread


def wiener_transform(u: DmFunction, node_count: int = 4097, xi_span: float | None = None,
                     check: bool = True) -> WienerTransform:
    """``W u`` for ``u`` normalised in ``L^2(dm)``.

    The frequency window is twelve spectral standard deviations, grown until
    it holds all but ``1e-12`` of ``|h^|^2``; the node spacing in ``x`` is at
    most a quarter of the inverse window so the trapezoid rule does not alias.
    """
    grid, h, dh, mass, spread = _frequency_grid(u, node_count)
    if check and not abs(mass - 1.0) <= NORM_TOL:
        raise NormalizationError(f"int |u|^2 dm = {mass:.12g} for {u.label}")
    span = xi_span or max(12.0 * spread, 4.0)
    lo, hi = u.extent
    half = 0.5 * (hi - lo)
    while True:
        n = max(node_count, int(math.ceil((hi - lo) * 4.0 * span)) + 1)
        xg = uniform_grid(lo, hi, n)
        hv = u_star(u)(xg.nodes)
        dxi = 1.0 / (4.0 * half)
        m = int(math.ceil(span / dxi))
        xi = dxi * np.arange(-m, m + 1)
        hat = fourier_quadrature(hv, xi, xg.nodes, xg.weights, check=False)
        dens = np.abs(hat) ** 2
        norm = float(dxi * (dens.sum() - 0.5 * (dens[0] + dens[-1])))
        edge = float(dxi * dens[np.abs(xi) > 0.8 * span].sum())
        if edge <= 1e-12 or xi_span is not None or span >= MAX_XI:
            break
        span *= 1.5
    if check and abs(norm - 1.0) > UNITARY_TOL:
        raise FourierError(f"||W u|| = {math.sqrt(norm):.9g} drifted from 1 for {u.label}")
    floor = 1e-16 * float(xg.weights @ np.abs(hv)) * 4.0
    trunc = math.sqrt(max(math.log(RELIABLE / floor), 0.0) / math.pi)
    keep = np.abs(xi) <= trunc
    values = np.exp(math.pi * xi[keep] ** 2) * hat[keep] / TWO_Q
    outside = float(dxi * dens[~keep].sum())
    kinetic = float(grid.weights @ np.square(dh)) / (2.0 * math.pi)
    return WienerTransform(xi[keep], values, xi, hat, norm, trunc, outside, kinetic)


def wiener_entropy(u: DmFunction, node_count: int = 4097, check: bool = True) -> float:
    """``int |W u|^2 log |W u|^2 dm``, the relative entropy of ``|W u|^2 dm``."""
    wt = wiener_transform(u, node_count, check=check)
    dens = np.abs(wt.hat) ** 2
    dxi = wt.xi_full[1] - wt.xi_full[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(dens > 0, dens * np.log(dens), 0.0)
    spectral = float(dxi * (ent.sum() - 0.5 * (ent[0] + ent[-1])))
    return spectral + wt.kinetic - 0.5 * math.log(2.0) * wt.norm


@dataclass(frozen=True)
class AatSides:
    lhs: float
    rhs: float
    deficit: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def aat_sides(u: DmFunction, node_count: int = 8193, dimension: int = 1) -> AatSides:
    """Both sides of the moment/gradient bound in terms of the Carlen deficit.

    ``lhs = 2 pi int x^2 dm - 2 pi int x^2 u^2 dm + (1/2pi) int u'^2 dm`` and
    ``rhs = 2 sqrt(pi n) delta_c^{1/2} + delta_c``.
    """
    grid = u.grid(node_count)
    x = grid.nodes
    m = np.exp(log_m_weight(x))
    val = u(x)
    grad = u.grad(x) if u.grad is not None else differentiate(grid, val)
    lhs = (2.0 * math.pi * dimension / (4.0 * math.pi)
           - 2.0 * math.pi * float(grid.weights @ (x * x * val * val * m))
           + float(grid.weights @ (grad * grad * m)) / (2.0 * math.pi))
    dc = carlen_deficit(u, node_count)
    rhs = 2.0 * math.sqrt(math.pi * dimension) * math.sqrt(max(dc, 0.0)) + dc
    return AatSides(lhs, rhs, dc)


def growth_class_integral(u: DmFunction, eps: float, node_count: int = 8193) -> float:
    """``int |u|^2 e^{-(2 pi - eps) x^2} dx``; ``inf`` if it does not converge."""
    if not 0 < eps < 2 * math.pi:
        raise ValueError("eps must lie in (0, 2 pi)")
    lo, hi = u.extent
    for widen in (1.0, 2.0, 4.0, 8.0):
        grid = uniform_grid(widen * lo, widen * hi, node_count)
        x = grid.nodes
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            vals = np.square(u(x)) * np.exp(-(2.0 * math.pi - eps) * x * x)
        total = float(grid.weights @ vals)
        if not np.isfinite(total):
            return math.inf
        if max(vals[0], vals[-1]) <= 1e-12 * max(total, 1e-300):
            return total
    return math.inf


def tilt_dm(a: float) -> DmFunction:
    """``f_a(x) = e^{2 pi (a x - a^2/2)}``, normalised in ``L^2(dm)``; ``W f_a = e^{-2 pi i a xi}``."""
    c = 2.0 * math.pi

    def value(x):
        return np.exp(c * (a * np.asarray(x, dtype=float) - 0.5 * a * a))

    def grad(x):
        return c * a * value(x)

    return DmFunction(value, grad, (a - 4.0, a + 4.0), label=f"f_a(a={a:g})")
