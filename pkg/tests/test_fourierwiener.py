import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsideficit.densities import DmFunction, bump, mixture, scale
from lsideficit.fourierwiener import (FourierError, aat_sides, fourier_quadrature,
                                      growth_class_integral, tilt_dm, u_map, u_star,
                                      wiener_entropy, wiener_transform)
from lsideficit.functionals import NormalizationError, carlen_deficit, rescale_to_dm
from lsideficit.grid import uniform_grid


class TestQuadrature:
    def test_gaussian_is_self_dual(self):
        x = uniform_grid(-8, 8, 801).nodes
        xi = np.linspace(-3, 3, 61)
        hat = fourier_quadrature(lambda t: np.exp(-math.pi * t * t), xi, x)
        np.testing.assert_allclose(hat, np.exp(-math.pi * xi * xi), atol=1e-13)

    def test_plancherel_failure_is_detected(self):
        x = uniform_grid(-8, 8, 801).nodes
        xi = np.linspace(-0.05, 0.05, 11)
        with pytest.raises(FourierError):
            fourier_quadrature(lambda t: np.exp(-math.pi * t * t), xi, x)

    def test_u_maps_are_inverse(self):
        u = lambda x: np.cos(x)  # noqa: E731
        x = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(u_map(u_star(u))(x), u(x), rtol=1e-13)


class TestTransform:
    @pytest.mark.parametrize("a", [-0.5, 0.2, 0.5])
    def test_tilts_have_unimodular_transform(self, a):
        wt = wiener_transform(tilt_dm(a))
        np.testing.assert_allclose(np.abs(wt.values), 1.0, atol=1e-8)
        np.testing.assert_allclose(wt.values, np.exp(-2j * math.pi * a * wt.xi), atol=1e-8)

    @pytest.mark.parametrize("f", [scale(0.8), scale(1.25), bump(0.5),
                                   mixture(0.3, 0.7, 1.5)])
    def test_unitarity(self, f):
        wt = wiener_transform(rescale_to_dm(f))
        assert wt.norm == pytest.approx(1.0, abs=1e-9)
        assert wt.truncation > 2.0

    def test_requires_normalization(self):
        u = DmFunction(lambda x: 2 * np.ones_like(x), lambda x: np.zeros_like(x), (-3, 3))
        with pytest.raises(NormalizationError):
            wiener_transform(u)


class TestEntropicUncertainty:
    @settings(max_examples=8)
    @given(st.floats(-1.0, 1.0))
    def test_tilts_are_extremal(self, a):
        assert abs(wiener_entropy(tilt_dm(a))) <= 1e-8

    @pytest.mark.parametrize("s", [0.8, 1.25])
    def test_gaussian_scales_attain_equality(self, s):
        u = rescale_to_dm(scale(s))
        assert wiener_entropy(u) == pytest.approx(carlen_deficit(u), abs=1e-8)

    @pytest.mark.parametrize("f", [bump(0.5), bump(-1.0), mixture(0.3, 0.7, 1.5)])
    def test_entropy_below_carlen_deficit(self, f):
        u = rescale_to_dm(f)
        assert wiener_entropy(u) <= carlen_deficit(u) + 1e-9


class TestAat:
    @pytest.mark.parametrize("f", [scale(0.8), scale(1.25), bump(0.5), bump(-1.0),
                                   mixture(0.3, 0.7, 1.5)])
    def test_bound_holds(self, f):
        s = aat_sides(rescale_to_dm(f))
        assert s.margin >= -1e-9

    def test_tilt_sides_vanish_together(self):
        s = aat_sides(tilt_dm(0.3))
        assert abs(s.deficit) <= 1e-10
        assert s.lhs <= s.rhs + 1e-9


class TestGrowthClass:
    def test_scale_closed_form(self):
        # u^2 = sigma^{-1} e^{2 pi x^2 (1 - 1/sigma^2)} after rescaling; the integral
        # with weight e^{-(2 pi - 1) x^2} is sqrt(pi / (2 pi / sigma^2 - 1)) / sigma
        s = 2.0
        want = math.sqrt(math.pi / (2 * math.pi / s ** 2 - 1.0)) / s
        got = growth_class_integral(rescale_to_dm(scale(s)), 1.0)
        assert got == pytest.approx(want, rel=1e-8)

    def test_divergent_member(self):
        assert growth_class_integral(rescale_to_dm(scale(3.0)), 1.0) == math.inf

    def test_eps_range(self):
        with pytest.raises(ValueError):
            growth_class_integral(tilt_dm(0.0), 7.0)
