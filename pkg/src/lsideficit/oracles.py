"""Brute-force and closed-form oracles checked against the fast paths."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cramer import convolve, gaussian_density
from .densities import make_family, scale
from .fourierwiener import tilt_dm, wiener_transform
from .functionals import entropy, fisher_information, lsi_deficit, rescale_to_dm
from .metrics import DiscreteMeasure, prokhorov, prokhorov_bruteforce
from .transport1d import w_to_gaussian

SCALE_GRID = (0.5, 0.8, 1.25, 2.0)


@dataclass(frozen=True)
class OracleResult:
    name: str
    discrepancy: float
    threshold: float
    cases: int

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.threshold


def random_discrete(rng: np.random.Generator, atoms: int) -> DiscreteMeasure:
    n = int(rng.integers(1, atoms + 1))
    pts = np.round(rng.normal(size=n) * 2.0, 3)
    return DiscreteMeasure.from_points(pts, rng.dirichlet(np.ones(n)))


def prokhorov_subsets(atoms: int = 8, trials: int = 50, seed: int = 0) -> OracleResult:
    """Matching-based Prokhorov distance against exhaustive subset enumeration."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        mu, nu = random_discrete(rng, atoms), random_discrete(rng, atoms)
        worst = max(worst, abs(prokhorov(mu, nu) - prokhorov_bruteforce(mu, nu)))
    return OracleResult("prokhorov_subsets", worst, 1e-6, trials)


def gaussian_closedforms(sigmas=SCALE_GRID) -> OracleResult:
    """Quadrature against the closed forms of the scale family."""
    worst = 0.0
    for s in sigmas:
        f = scale(s)
        a = f.analytic
        got = (entropy(f), fisher_information(f), lsi_deficit(f),
               w_to_gaussian(f, 1.0), w_to_gaussian(f, 2.0))
        want = (a["entropy"], a["fisher"], a["deficit"],
                abs(s - 1.0) * math.sqrt(2.0 / math.pi), abs(s - 1.0))
        worst = max(worst, max(abs(g - w) for g, w in zip(got, want)))
    return OracleResult("gaussian_closedforms", worst, 1e-6, len(sigmas))


FOURIER_CASES = (
    {"family": "gaussian"},
    {"family": "scale", "sigma": 0.8},
    {"family": "scale", "sigma": 1.25},
    {"family": "bump", "eps": 0.5},
    {"family": "mixture", "w": 0.3, "sigma1": 0.7, "sigma2": 1.5},
)


def fourier_planche() -> OracleResult:
    """Plancherel drift ``| ||W u||^2 - 1 |`` over rescaled catalog members and tilts."""
    worst = 0.0
    cases = [rescale_to_dm(make_family(d)) for d in FOURIER_CASES]
    cases += [tilt_dm(a) for a in (0.2, 0.5)]
    for u in cases:
        worst = max(worst, abs(wiener_transform(u).norm - 1.0))
    return OracleResult("fourier_planche", worst, 1e-6, len(cases))


def convolution_closure(pairs=((1.0, 1.0), (0.5, 1.5), (2.0, 0.7))) -> OracleResult:
    """``gamma_{s1} * gamma_{s2} = gamma_{sqrt(s1^2 + s2^2)}`` in sup norm."""
    worst = 0.0
    for s1, s2 in pairs:
        out = convolve(gaussian_density(s1), gaussian_density(s2))
        s = math.hypot(s1, s2)
        exact = np.exp(-0.5 * (out.x / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
        worst = max(worst, float(np.max(np.abs(out.values - exact))))
    return OracleResult("convolution_closure", worst, 1e-6, len(pairs))


ORACLES = {
    "prokhorov_subsets": prokhorov_subsets,
    "gaussian_closedforms": gaussian_closedforms,
    "fourier_planche": fourier_planche,
    "convolution_closure": convolution_closure,
}
