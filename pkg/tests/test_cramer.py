import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsideficit.cramer import (PSI_POWER_CONSTANT, GridMismatchError, LebesgueDensity,
                               SymmetryError, bobkov_rhs, convolution_kolmogorov, convolve,
                               dual_for_deficit, entropy_bound, feo_quantities,
                               gaussian_density, h_normalization_check, l1l2_bound,
                               log_convexity, mainthm4_sides, p_density, psi, psi_bound,
                               tilde, truncated_moments, truncation_level, v_density)
from lsideficit.densities import gaussian, moment, scale, symmetric_dual, tilt
from lsideficit.functionals import NormalizationError, carlen_deficit, lsi_deficit

# ||gamma||_2 = (2 sqrt(pi))^{-1/2}, quad-confirmed
GAUSS_L2 = 0.5311259660


class TestConvolution:
    @given(st.floats(0.4, 2.0), st.floats(0.4, 2.0))
    def test_gaussian_closure(self, s1, s2):
        out = convolve(gaussian_density(s1), gaussian_density(s2))
        s = math.hypot(s1, s2)
        exact = np.exp(-0.5 * (out.x / s) ** 2) / (s * math.sqrt(2 * math.pi))
        assert np.max(np.abs(out.values - exact)) <= 1e-6

    def test_step_mismatch(self):
        with pytest.raises(GridMismatchError):
            convolve(gaussian_density(1.0), gaussian_density(1.0, step=5e-3))

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            LebesgueDensity(np.array([0.0, 1.0, 3.0]), np.ones(3))


class TestHNormalization:
    def test_constant_density(self):
        chk = h_normalization_check(gaussian(), k=1.0)
        assert all(chk.holds())
        assert max(chk.errors) <= 1e-6

    @pytest.mark.parametrize("eps", [-0.3, 0.2])
    def test_doubly_normalized_family(self, eps):
        assert all(h_normalization_check(symmetric_dual(eps)).holds())

    def test_scale_breaks_only_the_l2_identity(self):
        chk = h_normalization_check(scale(2.0))
        assert chk.holds() == (False, True, True)

    def test_requires_symmetry(self):
        with pytest.raises(SymmetryError):
            h_normalization_check(tilt(1.0))


class TestTransforms:
    @pytest.mark.parametrize("eps", [-0.3, 0.2, 0.5])
    def test_tilde_carlen_equals_v_deficit(self, eps):
        f = symmetric_dual(eps)
        assert carlen_deficit(tilde(f)) == pytest.approx(lsi_deficit(v_density(f)), abs=1e-9)

    @given(st.floats(0.6, 1.4))
    def test_p_density_variance(self, s):
        p = p_density(scale(s))
        assert p.mass == pytest.approx(1.0, abs=1e-9)
        assert p.moment(2.0) == pytest.approx(0.5 * s * s, abs=1e-9)

    def test_v_must_be_normalized(self):
        with pytest.raises(NormalizationError):
            v_density(scale(2.0))


class TestL1L2:
    def test_gaussian(self):
        b = l1l2_bound(gaussian_density(1.0))
        assert b.l1 == pytest.approx(1.0, abs=1e-9)
        assert b.k == pytest.approx(1.0, abs=1e-9)
        assert b.l2 == pytest.approx(GAUSS_L2, abs=1e-9)
        assert b.bound == pytest.approx(math.e * GAUSS_L2, abs=1e-8)
        assert b.holds

    @given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
    def test_homogeneity(self, c):
        u = gaussian_density(0.8)
        base = l1l2_bound(u)
        scaled = l1l2_bound(LebesgueDensity(u.x, c * u.values))
        assert scaled.l1 == pytest.approx(abs(c) * base.l1, rel=1e-12)
        assert scaled.bound == pytest.approx(abs(c) * base.bound, rel=1e-12)

    @pytest.mark.parametrize("eps", [-0.3, 0.2, 0.5])
    def test_signed_convolution_differences(self, eps):
        f = symmetric_dual(eps)
        u = tilde(f)
        from lsideficit.cramer import g_function
        h = LebesgueDensity.sample(lambda x: u(x) * g_function(x), -6, 6)
        g = LebesgueDensity.sample(g_function, -6, 6)
        assert l1l2_bound(convolve(h, h) - convolve(g, g)).holds

    def test_rejects_zero(self):
        u = gaussian_density(1.0)
        with pytest.raises(ValueError):
            l1l2_bound(LebesgueDensity(u.x, 0 * u.values))

    @given(st.floats(0.3, 3.0), st.floats(1.1, 1.9))
    def test_log_convexity(self, s, mid):
        assert log_convexity(gaussian_density(s), (1.0, mid, 2.0)) >= -1e-12

    @given(st.floats(0.3, 3.0))
    def test_entropy_floor(self, s):
        ent, floor = entropy_bound(gaussian_density(s))
        assert ent == pytest.approx(-0.5 * math.log(2 * math.pi * math.e * s * s), abs=1e-8)
        assert ent >= floor


class TestKolmogorovBounds:
    def test_psi_power_bound(self):
        t = np.linspace(1e-3, 5, 2000)
        assert np.all(psi(t) <= PSI_POWER_CONSTANT * t ** 8 * (1 + 1e-12))
        assert psi(0.0) == 0.0

    def test_bobkov_and_truncation(self):
        assert truncation_level(math.exp(-2.0)) == pytest.approx(3.0)
        with pytest.raises(ValueError):
            bobkov_rhs(1.0, 1.5)
        assert bobkov_rhs(0.5, 1e-4) > bobkov_rhs(0.5, 1e-8)

    def test_truncated_moments_clip_exactly(self):
        p = gaussian_density(1.0)
        m1, m2 = truncated_moments(p, 1.0)
        # int_{-1}^{1} x^2 phi = (2 Phi(1) - 1) - 2 phi(1)
        assert m1 == pytest.approx(0.0, abs=1e-14)
        assert m2 == pytest.approx(0.6826894921 - 2 * 0.2419707245, abs=1e-6)

    def test_constant_density(self):
        assert convolution_kolmogorov(p_density(gaussian())) <= 1e-10
        sides = mainthm4_sides(gaussian())
        assert sides.deficit_v == pytest.approx(0.0, abs=1e-12)
        assert sides.dk_mu <= 1e-6
        assert sides.sigma2 == pytest.approx(0.5, abs=1e-9)

    def test_dual_target(self):
        f = dual_for_deficit(1e-4)
        assert lsi_deficit(v_density(f)) == pytest.approx(1e-4, rel=1e-6)
        assert moment(f, 2) == pytest.approx(1.0, abs=1e-8)
        sides = mainthm4_sides(f)
        assert sides.sigma2 == pytest.approx(sides.sigma2_centered, abs=1e-10)
        assert 0 < sides.dk_convolution < 1e-3
        pb = psi_bound(f)
        assert math.isfinite(pb.log_ratio)

    def test_psi_bound_needs_unit_moment(self):
        with pytest.raises(NormalizationError):
            psi_bound(symmetric_dual(0.2, unit_second_moment=False))

    def test_feo_quantities_vanish_on_constant(self):
        q = feo_quantities(gaussian())
        assert q.lhs <= 1e-20
        assert q.implied_constant == 0.0 or q.implied_constant < 1e-6
