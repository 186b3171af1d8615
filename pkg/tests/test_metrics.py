import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsideficit.densities import bump, gaussian, mixture, scale, tilt
from lsideficit.metrics import (DiscreteMeasure, MetricError, discretize, gaussian_kolmogorov,
                                hellinger, kolmogorov, levy, metric_comparison_report,
                                prokhorov, prokhorov_bruteforce, prokhorov_continuous,
                                total_variation)
from lsideficit.oracles import random_discrete
from lsideficit.transport1d import as_cdf, discrete_cdf, wasserstein

# Reference values: d_K and d_TV of N(1, 1) against N(0, 1) equal 2 Phi(1/2) - 1;
# the Levy distance solves Phi((1 - e)/2) - Phi(-(1 - e)/2) = e (scipy brentq).
TILT1_DK = 0.382924922548
TILT1_LEVY = 0.280839095896
# (int (sqrt p - sqrt q)^2)^{1/2} for N(0, 4) against N(0, 1), scipy quad.
SCALE2_HELLINGER = 0.4595058411


def point_mass(x):
    return DiscreteMeasure.from_points([x])


class TestDensityMetrics:
    def test_tilt_one(self):
        f, g = tilt(1.0), gaussian()
        assert total_variation(f, g) == pytest.approx(TILT1_DK, abs=1e-9)
        assert gaussian_kolmogorov(f) == pytest.approx(TILT1_DK, abs=1e-9)
        assert levy(as_cdf(f), as_cdf(g)) == pytest.approx(TILT1_LEVY, abs=1e-8)

    def test_scale_two_hellinger(self):
        assert hellinger(scale(2.0), gaussian()) == pytest.approx(SCALE2_HELLINGER, abs=1e-9)

    def test_identical_measures(self):
        f = mixture(0.3, 0.7, 1.5)
        assert total_variation(f, f) == 0.0
        assert hellinger(f, f) == 0.0
        assert kolmogorov(as_cdf(f), as_cdf(f)) == 0.0

    @given(st.floats(-1.5, 1.5), st.floats(0.6, 1.6))
    def test_symmetry(self, b, s):
        f, g = tilt(b), scale(s)
        assert total_variation(f, g) == pytest.approx(total_variation(g, f), abs=1e-12)
        assert hellinger(f, g) == pytest.approx(hellinger(g, f), abs=1e-12)


class TestLevyKolmogorov:
    @settings(max_examples=8)
    @given(st.floats(-2, 2), st.floats(0.5, 2.0))
    def test_levy_below_kolmogorov(self, b, s):
        mu, nu = as_cdf(tilt(b)), as_cdf(scale(s))
        assert levy(mu, nu) <= kolmogorov(mu, nu) + 1e-9

    def test_point_masses(self):
        mu, nu = discrete_cdf([0.0], [1.0]), discrete_cdf([0.3], [1.0])
        assert kolmogorov(mu, nu) == pytest.approx(1.0)
        assert levy(mu, nu) == pytest.approx(0.3, abs=1e-9)

    def test_kolmogorov_exceeds_sqrt_w1_for_atoms(self):
        mu, nu = discrete_cdf([0.0], [1.0]), discrete_cdf([0.01], [1.0])
        assert kolmogorov(mu, nu) > math.sqrt(wasserstein(mu, nu, 1.0))


class TestProkhorov:
    @pytest.mark.parametrize("d, expected", [(0.3, 0.3), (2.5, 1.0)])
    def test_point_masses(self, d, expected):
        assert prokhorov(point_mass(0.0), point_mass(d)) == pytest.approx(expected, abs=1e-8)

    def test_split_mass(self):
        mu = DiscreteMeasure.from_points([0.0, 5.0], [0.5, 0.5])
        nu = DiscreteMeasure.from_points([0.0, 5.0], [0.8, 0.2])
        assert prokhorov(mu, nu) == pytest.approx(0.3, abs=1e-8)

    @given(st.integers(0, 10 ** 6))
    def test_matches_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        mu, nu = random_discrete(rng, 6), random_discrete(rng, 6)
        assert prokhorov(mu, nu) == pytest.approx(prokhorov_bruteforce(mu, nu), abs=1e-6)

    @given(st.integers(0, 10 ** 6))
    def test_symmetric_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        mu, nu = random_discrete(rng, 8), random_discrete(rng, 8)
        d = prokhorov(mu, nu)
        assert 0.0 <= d <= 1.0
        assert d == pytest.approx(prokhorov(nu, mu), abs=1e-7)

    def test_caps(self):
        big = DiscreteMeasure.from_points(np.arange(20.0))
        with pytest.raises(MetricError):
            prokhorov_bruteforce(big, big)
        with pytest.raises(MetricError):
            prokhorov(big, big, max_atoms=10)

    def test_invalid_measures(self):
        with pytest.raises(MetricError):
            DiscreteMeasure(np.array([0.0, 0.0]), np.array([0.5, 0.5]))
        with pytest.raises(MetricError):
            DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.6]))
        with pytest.raises(MetricError):
            prokhorov(as_cdf(gaussian()), point_mass(0.0))


class TestDiscretization:
    def test_error_bound_covers_shift(self):
        disc = discretize(as_cdf(gaussian()), 64)
        assert len(disc.measure) <= 64
        assert 0 < disc.error_bound < 0.1

    def test_continuous_prokhorov_brackets_levy(self):
        mu, nu = as_cdf(tilt(1.0)), as_cdf(gaussian())
        dp, err = prokhorov_continuous(mu, nu, 128)
        assert levy(mu, nu) <= dp + err + 1e-9
        assert dp - err <= total_variation(tilt(1.0), gaussian()) + 1e-9


class TestComparisonReport:
    @pytest.mark.parametrize("f", [scale(1.25), tilt(-0.5), bump(2.0, 1.0, 0.3),
                                   mixture(0.3, 0.7, 1.5)])
    def test_asserted_checks_hold(self, f):
        rep = metric_comparison_report(f, gaussian())
        assert rep.failed() == []
        names = {c.name for c in rep.checks}
        assert "kolmogorov <= 2 prokhorov (Gaussian)" in names
        assert "levy <= kolmogorov" in names
