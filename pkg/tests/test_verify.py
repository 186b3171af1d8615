import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsideficit.densities import RelativeDensity, gaussian, scale, symmetric_dual, tilt
from lsideficit.verify import (ERROR, HOLDS, REPORTED, VIOLATED, WITHIN, Resolution,
                               SuiteConfig, classify, density_records, log_schedule,
                               metric_records, product_records, run_suite,
                               sequence_diagnostics, with_tolerance)

FAST = SuiteConfig(resolution=Resolution(nodes=4097, cdf_nodes=513, lp_breakpoints=1025,
                                         fourier_nodes=1025))


def by_name(records):
    return {r.name: r for r in records}


def odd_tanh(a: float, k: float) -> RelativeDensity:
    """``1 + a tanh(k x)``: normalised because the perturbation is odd."""
    return RelativeDensity(
        log_raw=lambda x: np.log1p(a * np.tanh(k * np.asarray(x, dtype=float))),
        score=lambda x: a * k / np.cosh(k * np.asarray(x)) ** 2 / (1 + a * np.tanh(k * np.asarray(x))),
        log_norm=0.0, extent=(-10.0, 10.0), label=f"odd_tanh(a={a:g}, k={k:g})",
        family="custom")


class TestClassify:
    @given(st.floats(1e-12, 1.0), st.floats(1e-12, 1.0))
    def test_statuses(self, m, b):
        if m > b:
            assert classify(m, b) == HOLDS
            assert classify(-m, b) == VIOLATED
        elif m < b:
            assert classify(m, b) == WITHIN
            assert classify(-m, b) == WITHIN
        assert classify(-m, b, asserted=False) == REPORTED


class TestDensityRecords:
    def test_constant_density_has_no_violations(self):
        recs = density_records(gaussian(), FAST)
        assert not [r for r in recs if r.status in (VIOLATED, ERROR)]
        for r in recs:
            if r.status in (HOLDS, WITHIN) and r.name != "w2_moment_bound":
                assert abs(r.margin) <= 1e-6 or r.margin >= 0

    def test_scale_two_margins(self):
        recs = by_name(density_records(scale(2.0), FAST))
        assert recs["lsi"].margin == pytest.approx(0.318147, abs=1e-6)
        assert recs["talagrand"].margin == pytest.approx(3 - 2 * math.log(2) - 1, abs=1e-6)
        assert recs["scaling_display"].status == REPORTED
        assert recs["scaling_display"].margin < 0

    def test_reported_constants_are_persisted(self):
        recs = by_name(density_records(scale(1.25), FAST))
        for name in ("w1_stability_constant", "l1_rate_constant",
                     "talagrand_stability_constant"):
            assert recs[name].status == REPORTED
            assert recs[name].constant is not None and recs[name].constant > 0

    def test_psi_constant_needs_a_resolvable_deficit(self):
        assert "psi_deficit_bound" not in by_name(density_records(gaussian(), FAST))
        rec = by_name(density_records(symmetric_dual(0.2, True), FAST))["psi_deficit_bound"]
        assert rec.status == REPORTED
        assert 1.0 < rec.constant < 1e4

    def test_poincare_step_fails_but_chain_holds(self):
        recs = by_name(density_records(odd_tanh(0.9, 3.0), FAST))
        step = recs["l1_poincare_step"]
        assert step.status == REPORTED
        assert step.margin < 0
        assert recs["l1_w1_chain"].status in (HOLDS, WITHIN)

    def test_errors_are_recorded_per_entry(self):
        cfg = SuiteConfig(resolution=FAST.resolution, alpha=0.9)
        recs = by_name(density_records(scale(0.5), cfg))
        assert recs["affine_fit_constant"].status == ERROR
        assert "FloorError" in recs["affine_fit_constant"].message

    def test_tolerance_override(self):
        recs = density_records(tilt(0.0), with_tolerance(FAST, 1e-30))
        assert {r.numerical_error_bound for r in recs if r.name == "lsi"} == {1e-30}


class TestOtherRecords:
    def test_metric_records(self):
        recs = metric_records(scale(1.25), gaussian(), FAST)
        assert recs and all(r.status in (HOLDS, WITHIN, REPORTED) for r in recs)

    def test_product_additivity(self):
        (rec,) = product_records([tilt(0.5), scale(0.8)])
        assert rec.lhs <= 1e-12
        assert rec.status in (HOLDS, WITHIN)


class TestRunSuite:
    def test_bad_descriptor_is_an_error_record(self):
        res = run_suite([{"family": "scale", "sigma": -1.0}], FAST)
        assert res.counts()[ERROR] == 1
        assert res.errors[0].name == "construction"

    def test_empty_catalog(self):
        with pytest.raises(ValueError):
            run_suite([], FAST)

    def test_order_and_counts(self):
        res = run_suite([{"family": "gaussian"}, {"family": "scale", "sigma": 1.1}], FAST)
        subjects = [r.subject for r in res.records]
        assert subjects.index("tilt(b=0)") < subjects.index("scale(sigma=1.1)")
        assert res.counts()["total"] == len(res.records)
        assert res.violations == []


class TestSweeps:
    def test_log_schedule(self):
        s = log_schedule(1.5, 1.01, 20)
        assert len(s) == 20 and s[0] == pytest.approx(1.5) and s[-1] == pytest.approx(1.01)
        assert np.all(np.diff(s) < 0)
        with pytest.raises(ValueError):
            log_schedule(0.5, 1.5, 4)

    def test_scale_sweep(self):
        rep = sequence_diagnostics({"family": "scale"}, "sigma", log_schedule(1.5, 1.01, 8))
        assert rep.deficit_monotone and rep.l1_monotone and rep.converging
        assert rep.exponent == pytest.approx(0.5, abs=0.03)

    def test_constant_schedule_flags_no_convergence(self):
        rep = sequence_diagnostics({"family": "scale"}, "sigma", [1.2, 1.2, 1.2])
        assert not rep.converging
        assert rep.exponent is None
        assert rep.notes

    def test_non_monotone_schedule(self):
        with pytest.raises(ValueError):
            sequence_diagnostics({"family": "scale"}, "sigma", [1.2, 1.1, 1.3])
