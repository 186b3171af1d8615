"""Probability metrics on the line.

Total variation uses ``d_TV = sup_A |mu(A) - nu(A)| = (1/2) ||f - g||_1``.
The Prokhorov metric on finite supports is computed from Strassen's coupling
characterisation: ``d_P <= eps`` iff a coupling moves at most ``eps`` of the
mass by more than ``eps``, which is a maximum-flow question on the bipartite
graph joining atoms at distance ``<= eps``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .densities import RelativeDensity
from .grid import abs_power_integral, uniform_grid
from .transport1d import CdfRep, as_cdf, discrete_cdf, gaussian_cdf, wasserstein

FLOW_SCALE = 2 ** 30
DEFAULT_ATOMS = 64
MAX_ATOMS = 2048
BREAKPOINTS = 2049
HELLINGER_NODES = 8193


class MetricError(ValueError):
    """Invalid metric inputs."""


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure with distinct sorted atoms."""

    atoms: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        if a.ndim != 1 or a.shape != m.shape or a.size == 0:
            raise MetricError("atoms and masses must be matching non-empty 1-D arrays")
        if np.any(m <= 0) or abs(m.sum() - 1.0) > 1e-12:
            raise MetricError("masses must be positive and sum to 1")
        order = np.argsort(a)
        a, m = a[order], m[order]
        if np.any(np.diff(a) == 0):
            raise MetricError("atoms must be distinct")
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_points(cls, atoms, masses=None) -> "DiscreteMeasure":
        """Merge repeated atoms; uniform masses when none are given."""
        atoms = np.asarray(atoms, dtype=float)
        masses = (np.full(atoms.shape, 1.0 / atoms.size) if masses is None
                  else np.asarray(masses, dtype=float))
        uniq, inv = np.unique(atoms, return_inverse=True)
        merged = np.bincount(inv, weights=masses)
        keep = merged > 0
        return cls(uniq[keep], merged[keep] / merged[keep].sum())

    def __len__(self):
        return len(self.atoms)

    def cdf(self) -> CdfRep:
        return discrete_cdf(self.atoms, self.masses)


# ---------------------------------------------------------------------------
# density-based metrics


def _common_range(f: RelativeDensity, g: RelativeDensity):
    if f.reference != g.reference:
        raise MetricError(f"reference mismatch: {f.reference} vs {g.reference}")
    return min(f.extent[0], g.extent[0]), max(f.extent[1], g.extent[1])


def total_variation(f: RelativeDensity, g: RelativeDensity) -> float:
    """``(1/2) int |f - g| dgamma``."""
    lo, hi = _common_range(f, g)
    x = np.linspace(lo, hi, BREAKPOINTS)
    val = abs_power_integral(lambda t: f.nu(t) - g.nu(t), np.ones_like, x, 1.0)
    return min(0.5 * val, 1.0)


def hellinger(f: RelativeDensity, g: RelativeDensity) -> float:
    """``(int |sqrt f - sqrt g|^2 dgamma)^{1/2}``, in ``[0, sqrt 2]``."""
    lo, hi = _common_range(f, g)
    grid = uniform_grid(lo, hi, HELLINGER_NODES)
    x = grid.nodes
    vals = np.square(np.exp(0.5 * f.log_nu(x)) - np.exp(0.5 * g.log_nu(x)))
    return min(math.sqrt(float(grid.weights @ vals)), math.sqrt(2.0))


# ---------------------------------------------------------------------------
# CDF-based metrics


def _points(*reps: CdfRep) -> np.ndarray:
    pts = [r.grid if r.continuous else r.atoms for r in reps]
    return np.unique(np.concatenate(pts))


def _diff(mu: CdfRep, nu: CdfRep, x):
    F, G = mu.cdf(x), nu.cdf(x)
    upper = np.minimum(F, G) > 0.5
    return np.where(upper, nu.sf(x) - mu.sf(x), F - G)


def _refined_sup(fn, x, candidates: int = 4) -> float:
    """Max of ``fn`` over the sorted points ``x`` refined by bounded Brent steps."""
    v = fn(x)
    best = float(np.max(v))
    order = np.argsort(v)[::-1][:candidates]
    for i in order:
        a, b = x[max(i - 1, 0)], x[min(i + 1, len(x) - 1)]
        if b <= a:
            continue
        r = minimize_scalar(lambda t: -float(fn(np.array([t]))[0]), bounds=(a, b),
                            method="bounded", options={"xatol": 1e-13})
        best = max(best, -float(r.fun))
    return best


def kolmogorov(mu, nu) -> float:
    """``sup_x |F(x) - G(x)|``, scanned on the union grid and refined."""
    mu, nu = as_cdf(mu), as_cdf(nu)
    x = _points(mu, nu)
    best = float(np.max(np.abs(_diff(mu, nu, x))))
    if not (mu.continuous and nu.continuous):
        left = np.abs(mu.cdf_left(x) - nu.cdf_left(x))
        return min(max(best, float(np.max(left))), 1.0)
    best = max(best, _refined_sup(lambda t: np.abs(_diff(mu, nu, t)), x))
    return min(best, 1.0)


def _levy_feasible(mu: CdfRep, nu: CdfRep, eps: float, base: np.ndarray) -> bool:
    shifted_lo = base - eps
    shifted_hi = base + eps
    x1 = np.union1d(base, shifted_hi)
    x2 = np.union1d(base, shifted_lo)

    def h1(t):
        return nu.cdf(t - eps) - eps - mu.cdf(t)

    def h2(t):
        return mu.cdf(t) - nu.cdf(t + eps) - eps

    tol = 1e-14
    if mu.continuous and nu.continuous:
        return _refined_sup(h1, x1) <= tol and _refined_sup(h2, x2) <= tol
    return float(np.max(h1(x1))) <= tol and float(np.max(h2(x2))) <= tol


def levy(mu, nu, tol: float = 1e-10) -> float:
    """Levy metric by bisection on ``eps``.

    The envelope condition is checked on the union of both grids (or atoms)
    and their ``eps`` shifts, where step CDFs change value.
    """
    mu, nu = as_cdf(mu), as_cdf(nu)
    base = _points(mu, nu)
    if _levy_feasible(mu, nu, 0.0, base):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _levy_feasible(mu, nu, mid, base):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Prokhorov


def _as_discrete(obj) -> DiscreteMeasure:
    if isinstance(obj, DiscreteMeasure):
        return obj
    if isinstance(obj, CdfRep) and not obj.continuous:
        return DiscreteMeasure(obj.atoms, obj.masses)
    raise MetricError("Prokhorov needs discrete measures; use discretize() first")


def _flow(mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float) -> float:
    """Largest mass a coupling can keep within distance ``eps``."""
    n, m = len(mu), len(nu)
    src, sink = n + m, n + m + 1
    cu = np.floor(mu.masses * FLOW_SCALE).astype(np.int64)
    cv = np.floor(nu.masses * FLOW_SCALE).astype(np.int64)
    ii, jj = np.nonzero(np.abs(mu.atoms[:, None] - nu.atoms[None, :]) <= eps)
    rows = np.concatenate([np.full(n, src), ii, n + np.arange(m)])
    cols = np.concatenate([np.arange(n), n + jj, np.full(m, sink)])
    caps = np.concatenate([cu, np.full(ii.size, FLOW_SCALE), cv]).astype(np.int32)
    graph = csr_matrix((caps, (rows, cols)), shape=(n + m + 2, n + m + 2))
    return maximum_flow(graph, src, sink).flow_value / FLOW_SCALE


def _distances(mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    d = np.abs(mu.atoms[:, None] - nu.atoms[None, :]).ravel()
    return np.unique(np.concatenate([[0.0], d]))


def _first_feasible_piece(dist, excess) -> float:
    """``inf{eps : excess(eps) <= eps}`` for ``excess`` constant on ``[D_k, D_{k+1})``.

    ``excess(k)`` is evaluated lazily; feasibility is monotone in ``k`` so the
    first feasible piece is found by bisection over the sorted breakpoints.
    """
    nxt = np.append(dist[1:], np.inf)
    lo, hi = 0, len(dist) - 1
    cache = {}

    def ok(k):
        if k not in cache:
            cache[k] = excess(k)
        return cache[k] < nxt[k]

    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    ok(lo)
    return float(max(dist[lo], cache[lo]))


def prokhorov(mu, nu, max_atoms: int = MAX_ATOMS) -> float:
    """Prokhorov distance between finitely supported measures.

    The coupling excess ``1 - maxflow(eps)`` only changes at pairwise atom
    distances, so bisection runs over those breakpoints and the answer inside
    the first feasible piece is exact up to the flow's integer scaling
    (``2^-30`` per atom).
    """
    mu, nu = _as_discrete(mu), _as_discrete(nu)
    if len(mu) > max_atoms or len(nu) > max_atoms:
        raise MetricError(f"support larger than the configured cap of {max_atoms} atoms")
    dist = _distances(mu, nu)
    slack = (len(mu) + len(nu)) / FLOW_SCALE
    return _first_feasible_piece(dist, lambda k: max(0.0, 1.0 - _flow(mu, nu, dist[k]) - slack))


def prokhorov_bruteforce(mu, nu, max_atoms: int = 16) -> float:
    """Prokhorov distance by enumerating every subset of ``mu``'s support.

    ``d_P = inf{eps : max_S mu(S) - nu(S^eps) <= eps}``; only subsets of the
    atoms of ``mu`` matter and the maximum is piecewise constant between
    pairwise distances.
    """
    mu, nu = _as_discrete(mu), _as_discrete(nu)
    n = len(mu)
    if n > max_atoms:
        raise MetricError(f"exhaustive search limited to {max_atoms} atoms")
    subsets = np.array(list(itertools.product((0, 1), repeat=n)), dtype=bool)
    mass_s = subsets @ mu.masses
    gaps = np.abs(mu.atoms[:, None] - nu.atoms[None, :])
    dist = _distances(mu, nu)

    def excess(k):
        near = (subsets.astype(np.int64) @ (gaps <= dist[k]).astype(np.int64)) > 0
        return float(max(0.0, np.max(mass_s - near @ nu.masses)))

    nxt = np.append(dist[1:], np.inf)
    for k in range(len(dist)):
        g = excess(k)
        if g < nxt[k]:
            return float(max(dist[k], g))
    raise AssertionError("the last piece is always feasible")


@dataclass(frozen=True)
class Discretization:
    measure: DiscreteMeasure
    error_bound: float


def _quantile(rep: CdfRep, u):
    u = np.asarray(u, dtype=float)
    return np.where(u <= 0.5, rep.ppf(np.minimum(u, 0.5)), rep.isf(np.minimum(1 - u, 0.5)))


def displaced_mass(rep: CdfRep, edges: np.ndarray, centers: np.ndarray, eps: float) -> float:
    """Mass of ``rep`` farther than ``eps`` from the atom of its bin.

    Bin ``k`` is ``(edges[k], edges[k+1]]``; the outer edges must lie beyond
    the support carried by ``rep``.
    """
    lo = np.maximum(edges[:-1], centers - eps)
    hi = np.minimum(edges[1:], centers + eps)
    inside = np.where(hi > lo, rep.cdf(hi) - rep.cdf(np.where(hi > lo, lo, hi)), 0.0)
    return max(0.0, 1.0 - float(inside.sum()))


def _coupling_bound(rep: CdfRep, edges, centers) -> float:
    """``inf{eps : displaced_mass(eps) <= eps}`` by bisection."""
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if displaced_mass(rep, edges, centers, mid) <= mid:
            hi = mid
        else:
            lo = mid
    return hi


def discretize(obj, atoms: int = DEFAULT_ATOMS) -> Discretization:
    """Bin a continuous measure onto at most ``atoms`` points.

    The central interval between the ``t/2`` and ``1 - t/2`` quantiles is cut
    into equal-width bins whose atoms sit at the bin midpoints; the two outer
    bins also absorb the tails.  The trim ``t`` is chosen so that the bin
    radius matches the trimmed mass, which balances the two sources of
    displacement.  Every bin's mass is kept on its atom, so the Prokhorov
    distance to the original measure is at most the smallest ``eps`` for
    which the mass displaced by more than ``eps`` is at most ``eps``; that
    bound is returned with the measure.
    """
    rep = as_cdf(obj)
    if not rep.continuous:
        return Discretization(DiscreteMeasure(rep.atoms, rep.masses), 0.0)
    if atoms < 2:
        raise MetricError("need at least two atoms")

    def layout(t):
        a, b = _quantile(rep, np.array([0.5 * t, 1.0 - 0.5 * t]))
        inner = np.linspace(a, b, atoms + 1)
        return inner, 0.5 * (inner[:-1] + inner[1:]), 0.5 * (b - a) / atoms

    lo, hi = 1e-12, 0.5
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if layout(mid)[2] > mid:
            lo = mid
        else:
            hi = mid
    inner, centers, _ = layout(hi)
    masses = np.diff(np.concatenate([[0.0], rep.cdf(inner[1:-1]), [1.0]]))
    # outer bins reach past the whole grid, which carries all the mass
    far = max(abs(rep.grid[0]), abs(rep.grid[-1]), abs(inner[0]), abs(inner[-1])) + 1.0
    edges = np.concatenate([[-far], inner[1:-1], [far]])
    err = _coupling_bound(rep, edges, centers)
    keep = masses > 0
    measure = DiscreteMeasure.from_points(centers[keep], masses[keep] / masses[keep].sum())
    return Discretization(measure, float(err))


def prokhorov_continuous(mu, nu, atoms: int = DEFAULT_ATOMS) -> tuple[float, float]:
    """Prokhorov distance via discretisation; returns ``(value, error_bound)``."""
    a, b = discretize(mu, atoms), discretize(nu, atoms)
    return prokhorov(a.measure, b.measure), a.error_bound + b.error_bound


# ---------------------------------------------------------------------------
# comparison report


@dataclass(frozen=True)
class MetricCheck:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    asserted: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.margin >= -self.tolerance


@dataclass(frozen=True)
class MetricComparison:
    tv: float
    hellinger: float
    kolmogorov: float
    levy: float
    prokhorov: float
    prokhorov_error: float
    w1: float
    m2: float
    checks: tuple[MetricCheck, ...] = field(default_factory=tuple)

    def failed(self) -> list[MetricCheck]:
        return [c for c in self.checks if c.asserted and not c.holds]


def metric_comparison_report(f: RelativeDensity, g: RelativeDensity,
                             atoms: int = DEFAULT_ATOMS, tol: float = 1e-8) -> MetricComparison:
    """All metrics between ``f dgamma`` and ``g dgamma`` and the comparison inequalities.

    ``d_TV`` is the half-L1 distance.  Prokhorov values carry the
    discretisation error, which is added to the tolerance of every check that
    involves them.
    """
    mu, nu = as_cdf(f), as_cdf(g)
    tv = total_variation(f, g)
    dh = hellinger(f, g)
    dk = kolmogorov(mu, nu)
    dl = levy(mu, nu)
    dp, perr = prokhorov_continuous(mu, nu, atoms)
    w1 = wasserstein(mu, nu, 1.0)
    m2 = max(mu.moment(2), nu.moment(2))
    l1 = 2.0 * tv
    pt = tol + perr
    checks = [
        MetricCheck("levy <= kolmogorov", dl, dk, tol, True),
        MetricCheck("levy <= prokhorov", dl, dp, pt, True),
        MetricCheck("kolmogorov <= total variation", dk, tv, tol, True),
        MetricCheck("kolmogorov <= sqrt W1", dk, math.sqrt(w1), tol, True),
        MetricCheck("prokhorov <= total variation", dp, tv, pt, True),
        MetricCheck("prokhorov <= sqrt W1", dp, math.sqrt(w1), pt, True),
        MetricCheck("W1 <= 4 sqrt(M) kolmogorov^1/2", w1, 4 * math.sqrt(m2) * math.sqrt(dk), tol, True),
        MetricCheck("W1 <= 2 levy + 2 sqrt(M) levy^1/2", w1,
                    2 * dl + 2 * math.sqrt(m2) * math.sqrt(dl), tol, True),
        MetricCheck("hellinger^2 <= L1", dh * dh, l1, tol, True),
        MetricCheck("L1 <= 2 hellinger", l1, 2 * dh, tol, True),
        MetricCheck("hellinger^2 <= 2 tv", dh * dh, 2 * tv, tol, True),
        MetricCheck("tv <= sqrt(2) hellinger", tv, math.sqrt(2) * dh, tol, True),
        MetricCheck("hellinger^2 <= tv (half-L1 convention)", dh * dh, tv, tol, False),
        MetricCheck("tv <= 2 hellinger (half-L1 convention)", tv, 2 * dh, tol, False),
    ]
    if getattr(g, "family", None) == "tilt" and g.params.get("b") == 0.0:
        checks.append(MetricCheck("kolmogorov <= 2 prokhorov (Gaussian)", dk, 2 * dp, 2 * perr + tol, True))
    return MetricComparison(tv, dh, dk, dl, dp, perr, w1, m2, tuple(checks))


def gaussian_kolmogorov(f: RelativeDensity, sd: float = 1.0) -> float:
    """``d_K(f dgamma, N(0, sd^2))``."""
    return kolmogorov(as_cdf(f), gaussian_cdf(0.0, sd))
