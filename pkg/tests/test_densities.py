import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsideficit.densities import (FamilyError, bump, center, floor, gaussian, make_family, mass,
                                  mixture, moment, product_moment2, scale, symmetric_dual,
                                  tensor, tilt)
from lsideficit.cramer import v_density

finite_b = st.floats(-2.5, 2.5)
sigmas = st.floats(0.4, 2.5)


class TestNormalization:
    @given(finite_b)
    def test_tilt_is_normalized(self, b):
        assert mass(tilt(b)) == pytest.approx(1.0, abs=1e-10)

    @given(sigmas)
    def test_scale_is_normalized(self, s):
        assert mass(scale(s)) == pytest.approx(1.0, abs=1e-10)

    @given(st.floats(0.0, 1.0), sigmas, sigmas)
    def test_mixture_is_normalized(self, w, s1, s2):
        assert mass(mixture(w, s1, s2)) == pytest.approx(1.0, abs=1e-10)

    @given(st.floats(-2.5, 5.0), st.floats(-2, 2), st.floats(0.3, 2.0))
    def test_bump_is_normalized_and_positive(self, eps, c, w):
        f = bump(eps, c, w)
        assert mass(f) == pytest.approx(1.0, abs=1e-10)
        assert np.all(f(np.linspace(-6, 6, 101)) > 0)

    @given(st.floats(0.05, 1.0))
    def test_floor_is_bounded_below(self, alpha):
        f = floor(alpha)
        assert mass(f) == pytest.approx(1.0, abs=1e-10)
        assert np.min(f(np.linspace(-15, 15, 2001))) >= alpha * (1 - 1e-12)

    @pytest.mark.parametrize("eps", [-0.3, 0.0, 0.2])
    @pytest.mark.parametrize("unit", [False, True])
    def test_symmetric_dual_is_doubly_normalized(self, eps, unit):
        f = symmetric_dual(eps, unit)
        assert mass(f) == pytest.approx(1.0, abs=1e-9)
        assert mass(v_density(f)) == pytest.approx(1.0, abs=1e-8)
        if unit:
            assert moment(f, 2) == pytest.approx(1.0, abs=1e-8)


class TestClosedForms:
    def test_tilt_is_shifted_gaussian(self):
        f = tilt(1.3)
        x = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(f.nu(x), np.exp(-0.5 * (x - 1.3) ** 2) / math.sqrt(2 * math.pi))
        assert f.mean() == pytest.approx(1.3, abs=1e-12)
        assert moment(f, 2) == pytest.approx(1 + 1.3 ** 2, abs=1e-10)

    def test_scale_second_moment(self):
        assert moment(scale(1.7), 2) == pytest.approx(1.7 ** 2, abs=1e-10)

    def test_mixture_second_moment(self):
        assert moment(mixture(0.3, 0.7, 1.5), 2) == pytest.approx(1.722, abs=1e-10)

    def test_gaussian_is_one(self):
        np.testing.assert_allclose(gaussian()(np.linspace(-5, 5, 11)), 1.0)

    @given(finite_b)
    def test_score_matches_log_derivative(self, b):
        f = bump(0.7, 0.3, 1.2, base=tilt(b))
        x = np.linspace(-2, 2, 41)
        h = 1e-6
        fd = (f.log_f(x + h) - f.log_f(x - h)) / (2 * h)
        np.testing.assert_allclose(f.score(x), fd, atol=1e-6)


class TestCenter:
    def test_center_removes_mean(self):
        f = center(bump(1.5, 1.0, 0.5))
        assert f.mean() == pytest.approx(0.0, abs=1e-10)
        assert f.centered

    def test_center_of_symmetric_leaves_values(self):
        x = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(center(scale(1.2))(x), scale(1.2)(x), rtol=1e-12)

    def test_centered_tilt_is_gaussian(self):
        f = center(tilt(0.8))
        np.testing.assert_allclose(f(np.linspace(-3, 3, 13)), 1.0, atol=1e-9)


class TestMakeFamily:
    def test_descriptor_roundtrip(self):
        f = make_family({"family": "mixture", "w": 0.3, "sigma1": 0.7, "sigma2": 1.5})
        assert f.label == "mixture(w=0.3, sigma1=0.7, sigma2=1.5)"

    def test_nested_descriptors(self):
        f = make_family({"family": "floor", "alpha": 0.3,
                         "shape": {"family": "bump", "eps": 1.5, "width": 0.7}})
        assert f.floor == 0.3

    @pytest.mark.parametrize("desc", [
        {"family": "nope"},
        {"b": 1},
        {"family": "tilt", "b": 1, "extra": 2},
        {"family": "scale", "sigma": -1},
        {"family": "scale", "sigma": math.inf},
        {"family": "mixture", "w": 1.5, "sigma1": 1, "sigma2": 2},
        {"family": "bump", "eps": -3.0},
        {"family": "floor", "alpha": 0.0},
        {"family": "center"},
        {"family": "symmetric_dual", "eps": -5.0},
    ])
    def test_invalid_descriptors(self, desc):
        with pytest.raises(FamilyError):
            make_family(desc)


class TestTensor:
    def test_product_evaluation(self):
        p = tensor([tilt(0.5), scale(1.2)])
        pts = np.array([[0.1, -0.4], [1.0, 2.0]])
        np.testing.assert_allclose(p(pts), tilt(0.5)(pts[:, 0]) * scale(1.2)(pts[:, 1]))
        assert p.dimension == 2

    def test_product_second_moment_adds(self):
        assert product_moment2(tensor([tilt(1.0), scale(2.0)])) == pytest.approx(6.0, abs=1e-9)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            tensor([])

    def test_moment_rejects_nonpositive_order(self):
        with pytest.raises(ValueError):
            moment(scale(1.0), 0.0)
