import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsideficit.grid import (GridError, abs_power_integral, build_grid, differentiate,
                             integrate, panel_integrate, sign_change_roots, uniform_grid)


class TestBuildGrid:
    @pytest.mark.parametrize("reference", ["gamma", "m"])
    def test_total_mass_is_one(self, reference):
        g = build_grid(reference, 64)
        assert integrate(g, np.ones(len(g))) == pytest.approx(1.0, abs=1e-13)

    def test_gamma_moments(self):
        g = build_grid("gamma", 40)
        assert integrate(g, g.nodes ** 2) == pytest.approx(1.0, abs=1e-12)
        assert integrate(g, g.nodes ** 4) == pytest.approx(3.0, abs=1e-11)

    def test_m_variance(self):
        g = build_grid("m", 40)
        assert integrate(g, g.nodes ** 2) == pytest.approx(1 / (4 * math.pi), abs=1e-13)

    def test_lebesgue_gauss_is_exact_on_polynomials(self):
        g = build_grid("lebesgue", 10, span=2.0, rule="gauss")
        assert integrate(g, g.nodes ** 6) == pytest.approx(2 * 2 ** 7 / 7, rel=1e-13)

    @pytest.mark.parametrize("kwargs", [
        {"reference": "nope", "node_count": 16},
        {"reference": "gamma", "node_count": 3},
        {"reference": "lebesgue", "node_count": 16, "span": -1.0},
        {"reference": "gamma", "node_count": 16, "rule": "trapezoid"},
    ])
    def test_rejects_bad_input(self, kwargs):
        with pytest.raises(GridError):
            build_grid(**kwargs)


class TestUniformGrid:
    def test_trapezoid_weights(self):
        g = uniform_grid(0.0, 1.0, 11)
        assert g.weights[0] == pytest.approx(0.05)
        assert g.weights.sum() == pytest.approx(1.0)

    def test_gaussian_integral_is_spectrally_accurate(self):
        g = uniform_grid(-10, 10, 201)
        vals = np.exp(-0.5 * g.nodes ** 2) / math.sqrt(2 * math.pi)
        assert integrate(g, vals) == pytest.approx(1.0, abs=1e-14)

    def test_empty_interval(self):
        with pytest.raises(GridError):
            uniform_grid(1.0, 1.0, 16)

    def test_integrate_rejects_nonfinite(self):
        g = uniform_grid(0, 1, 16)
        with pytest.raises(GridError):
            integrate(g, np.full(16, np.nan))
        with pytest.raises(GridError):
            integrate(g, np.ones(5))


class TestDifferentiate:
    @given(st.floats(0.2, 3.0))
    def test_sine_derivative(self, k):
        g = uniform_grid(-3, 3, 601)
        d = differentiate(g, np.sin(k * g.nodes))
        assert np.max(np.abs(d - k * np.cos(k * g.nodes))) < 1e-6


class TestPanels:
    def test_panel_integrate_sums_to_total(self):
        bp = np.linspace(0, math.pi, 9)
        parts = panel_integrate(np.sin, bp)
        assert parts.sum() == pytest.approx(2.0, abs=1e-13)

    def test_sign_change_roots(self):
        x = np.linspace(0.1, 10, 50)
        roots = sign_change_roots(np.sin, x)
        np.testing.assert_allclose(roots, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)

    def test_abs_power_integral_resolves_kinks(self):
        x = np.linspace(-math.pi, math.pi, 7)
        val = abs_power_integral(np.sin, np.ones_like, x, 1.0)
        assert val == pytest.approx(4.0, abs=1e-12)
