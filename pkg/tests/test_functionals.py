import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsideficit.densities import bump, floor, gaussian, mixture, scale, tensor, tilt
from lsideficit.functionals import (DivergenceError, NormalizationError, carlen_deficit,
                                    entropy, fisher_information, functional_report,
                                    hellinger_to_one, lp_distance_to_one, lsi_deficit,
                                    power_integral, product_deficit, rescale_to_dm,
                                    second_moment, tensor_deficit)
from lsideficit.densities import DmFunction

# Reference values from adaptive scipy.integrate.quad on the raw Lebesgue densities.
MIXTURE_037_15 = {"entropy": 0.100229743225, "fisher": 0.367061228064,
                  "deficit": 0.083300870807, "l1": 0.196292000117}
MIXTURE_05_08_12 = {"entropy": 0.003729582393, "fisher": 0.025971475369,
                    "deficit": 0.009256155292, "l1": 0.044159877935}
BUMP_05 = {"entropy": 0.002480018322, "fisher": 0.027885637987, "deficit": 0.011462800671}


class TestClosedForms:
    @pytest.mark.parametrize("sigma", [0.5, 0.8, 1.25, 2.0])
    def test_scale_family(self, sigma):
        f = scale(sigma)
        a = f.analytic
        assert entropy(f) == pytest.approx(a["entropy"], abs=1e-10)
        assert fisher_information(f) == pytest.approx(a["fisher"], abs=1e-10)
        assert lsi_deficit(f) == pytest.approx(a["deficit"], abs=1e-10)

    def test_scale_two_deficit(self):
        assert lsi_deficit(scale(2.0)) == pytest.approx(0.318147, abs=1e-6)

    @given(st.floats(-2.0, 2.0))
    def test_tilt_equality(self, b):
        f = tilt(b)
        assert entropy(f) == pytest.approx(0.5 * b * b, abs=1e-10)
        assert fisher_information(f) == pytest.approx(b * b, abs=1e-10)
        assert abs(lsi_deficit(f)) <= 1e-10

    def test_tilt_one_l1(self):
        # 2 (2 Phi(1/2) - 1)
        assert lp_distance_to_one(tilt(1.0), 1.0) == pytest.approx(0.7658498451, abs=1e-9)

    @pytest.mark.parametrize("sigma", [0.7, 1.2, 1.35])
    def test_scale_l2_closed_form(self, sigma):
        # int f^2 dgamma = 1 / (sigma sqrt(2 - sigma^2)); the range widens near sqrt 2
        want = 1.0 / (sigma * math.sqrt(2.0 - sigma ** 2)) - 1.0
        assert lp_distance_to_one(scale(sigma), 2.0) ** 2 == pytest.approx(want, rel=1e-9)

    def test_scale_two_hellinger(self):
        assert hellinger_to_one(scale(2.0)) == pytest.approx(0.4595058411, abs=1e-9)


class TestQuadOracle:
    @pytest.mark.parametrize("f, ref", [
        (mixture(0.3, 0.7, 1.5), MIXTURE_037_15),
        (mixture(0.5, 0.8, 1.2), MIXTURE_05_08_12),
    ])
    def test_mixtures(self, f, ref):
        assert entropy(f) == pytest.approx(ref["entropy"], abs=1e-9)
        assert fisher_information(f) == pytest.approx(ref["fisher"], abs=1e-9)
        assert lsi_deficit(f) == pytest.approx(ref["deficit"], abs=1e-9)
        assert lp_distance_to_one(f, 1.0) == pytest.approx(ref["l1"], abs=1e-9)

    def test_bump(self):
        f = bump(0.5)
        assert entropy(f) == pytest.approx(BUMP_05["entropy"], abs=1e-9)
        assert fisher_information(f) == pytest.approx(BUMP_05["fisher"], abs=1e-9)
        assert lsi_deficit(f) == pytest.approx(BUMP_05["deficit"], abs=1e-9)

    def test_fisher_methods_agree(self):
        f = floor(0.3)
        assert fisher_information(f, method="sqrt") == pytest.approx(
            fisher_information(f, method="score"), abs=1e-8)


class TestProperties:
    @given(st.floats(0.4, 2.5))
    def test_deficit_nonnegative(self, s):
        assert lsi_deficit(scale(s)) >= -1e-10

    @given(st.floats(0.0, 1.0), st.floats(0.5, 2.0), st.floats(0.5, 2.0))
    def test_pinsker(self, w, s1, s2):
        f = mixture(w, s1, s2)
        assert lp_distance_to_one(f, 1.0) ** 2 <= 2 * entropy(f) + 1e-10

    @given(st.floats(-1.5, 1.5), st.floats(0.6, 1.3))
    def test_entropy_below_chi_square(self, b, s):
        f = bump(0.8, b, s)
        assert entropy(f) <= power_integral(f, 2.0) - 1.0 + 1e-10

    def test_report_identity(self):
        r = functional_report(mixture(0.3, 0.7, 1.5))
        assert r.deficit == 0.5 * r.fisher - r.entropy
        assert r.m2 == pytest.approx(1.722, abs=1e-10)
        assert max(r.errors.values()) < 1e-9

    def test_second_moment(self):
        assert second_moment(tilt(2.0)) == pytest.approx(5.0, abs=1e-10)


class TestErrors:
    def test_l2_divergence(self):
        with pytest.raises(DivergenceError):
            lp_distance_to_one(scale(1.5), 2.0)

    def test_lp_order(self):
        with pytest.raises(ValueError):
            lp_distance_to_one(scale(1.1), 0.5)

    def test_unknown_fisher_method(self):
        with pytest.raises(ValueError):
            fisher_information(gaussian(), method="nope")

    def test_carlen_requires_normalization(self):
        u = DmFunction(lambda x: 2.0 * np.ones_like(x), lambda x: np.zeros_like(x), (-3, 3))
        with pytest.raises(NormalizationError):
            carlen_deficit(u)


class TestCarlen:
    @pytest.mark.parametrize("f", [scale(0.8), scale(1.25), mixture(0.3, 0.7, 1.5),
                                   bump(0.5), floor(0.5), tilt(0.7)])
    def test_rescaling_identity(self, f):
        assert carlen_deficit(rescale_to_dm(f)) == pytest.approx(lsi_deficit(f), abs=1e-8)


class TestProducts:
    def test_gaussian_product_is_zero(self):
        assert tensor_deficit(tensor([tilt(0.0), tilt(0.0)])) == pytest.approx(0.0, abs=1e-14)

    def test_additivity(self):
        p = tensor([tilt(0.5), scale(0.8), mixture(0.5, 0.8, 1.2)])
        parts = product_deficit(p, 513)
        assert parts.total == pytest.approx(sum(lsi_deficit(f, 513) for f in p.factors))
        assert abs(tensor_deficit(p, 513) - parts.total) <= 1e-12
