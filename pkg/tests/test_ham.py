import math

import numpy as np
import pytest

from finitebath import (
    NonMarkovianError,
    ba_equilibrium,
    integrate_rate_equation,
    predict_rho01,
    predict_rho11,
    prediction,
    rates,
)

from conftest import make_params, paper_params


PAPER_R = 2 * math.pi * (5e-4) ** 2 * 500 / 0.5  # downward = upward at n1 = n2


class TestRates:
    def test_paper_values(self):
        r = rates(paper_params())
        assert r.r01 == pytest.approx(PAPER_R, rel=1e-14)
        assert r.r10 == pytest.approx(PAPER_R, rel=1e-14)
        assert r.r01 == pytest.approx(1.5707963267948966e-3, rel=1e-12)

    def test_relaxation_timescale(self):
        r = rates(paper_params())
        assert 1.0 / r.r01 == pytest.approx(636.6197723675814, rel=1e-12)

    def test_zero_coupling(self):
        r = rates(make_params(lam=0.0))
        assert r.r01 == 0.0 and r.r10 == 0.0

    def test_ratio_tracks_band_sizes(self):
        r = rates(make_params(n1=30, n2=90))
        assert r.r01 / r.r10 == pytest.approx(3.0, rel=1e-12)

    def test_doubling_coupling_quadruples_rates(self):
        base = rates(make_params(lam=2e-4))
        doubled = rates(make_params(lam=4e-4))
        assert doubled.r01 == pytest.approx(4 * base.r01, rel=1e-14)

    def test_doubling_upper_band_doubles_downward_only(self):
        base = rates(make_params(n1=20, n2=20))
        bigger = rates(make_params(n1=20, n2=40))
        assert bigger.r01 == pytest.approx(2 * base.r01, rel=1e-14)
        assert bigger.r10 == pytest.approx(base.r10, rel=1e-14)

    def test_degenerate_band_raises_typed_error(self):
        with pytest.raises(NonMarkovianError, match="non-Markovian") as err:
            rates(make_params(band_width=0.0, lam=1e-4))
        assert err.value.conditions.criterion_two == np.inf
        assert not err.value.conditions.passed


class TestPredictRho11:
    def test_initial_value_exact(self):
        r = rates(paper_params())
        series = predict_rho11(r, 0.8, None, [0.0])
        assert series[0] == pytest.approx(0.8, abs=1e-15)

    def test_symmetric_equilibrium_is_half(self):
        r = rates(paper_params())
        series = predict_rho11(r, 1.0, 1.0, [1e7])
        assert series[0] == pytest.approx(0.5, abs=1e-12)

    def test_value_after_one_relaxation_time(self):
        r = rates(paper_params())
        t_star = 1.0 / r.total
        assert t_star == pytest.approx(318.3098861837907, rel=1e-12)
        series = predict_rho11(r, 1.0, 1.0, [t_star])
        assert series[0] == pytest.approx(0.5 * (1 + math.exp(-1)), abs=1e-12)
        assert series[0] == pytest.approx(0.6839397205857212, abs=1e-12)

    def test_equilibrium_scales_with_block_weight(self):
        r = rates(paper_params())
        series = predict_rho11(r, 0.5, 0.5, [1e7])
        assert series[0] == pytest.approx(0.25, abs=1e-12)

    def test_monotone_between_endpoints(self):
        r = rates(paper_params())
        t = np.linspace(0.0, 5000.0, 400)
        series = predict_rho11(r, 1.0, 1.0, t)
        assert np.all(np.diff(series) < 0)
        assert np.all(series >= 0.5 - 1e-12)

    def test_satisfies_rate_equation_pointwise(self):
        # central finite difference of the closed form against the scheme
        r = rates(paper_params())
        rho0, p_c0 = 0.75, 1.0
        t = np.linspace(0.0, 2000.0, 23) + 1.0
        h = 0.01
        up = predict_rho11(r, rho0, p_c0, t + h)
        dn = predict_rho11(r, rho0, p_c0, t - h)
        mid = predict_rho11(r, rho0, p_c0, t)
        residual = (up - dn) / (2 * h) + r.total * mid - r.r10 * p_c0
        assert np.max(np.abs(residual)) <= 1e-12

    def test_zero_rates_constant(self):
        r = rates(make_params(lam=0.0))
        series = predict_rho11(r, 0.3, 1.0, np.linspace(0, 100, 7))
        assert np.all(series == 0.3)

    def test_rejects_inconsistent_populations(self):
        r = rates(paper_params())
        with pytest.raises(ValueError, match="p_c0"):
            predict_rho11(r, 0.9, 0.5, [0.0])
        with pytest.raises(ValueError, match="p_c0"):
            predict_rho11(r, -0.1, 0.5, [0.0])


class TestPredictRho01:
    def test_initial_value(self):
        r = rates(paper_params())
        series = predict_rho01(r, 0.5 + 0.0j, 25.0, [0.0])
        assert series[0] == pytest.approx(0.5 + 0.0j, abs=1e-15)

    def test_squared_modulus_after_two_decay_times(self):
        r = rates(paper_params())
        t = 2.0 / r.r01
        assert t == pytest.approx(1273.2395447351628, rel=1e-12)
        series = predict_rho01(r, 0.5, 25.0, [t])
        assert abs(series[0]) ** 2 == pytest.approx(0.25 * math.exp(-2), abs=1e-12)
        assert abs(series[0]) ** 2 == pytest.approx(0.03383382080915318, abs=1e-12)

    def test_modulus_independent_of_splitting(self):
        r = rates(paper_params())
        t = np.linspace(0, 500, 11)
        a = np.abs(predict_rho01(r, 0.5, 25.0, t))
        b = np.abs(predict_rho01(r, 0.5, 7.0, t))
        assert np.allclose(a, b, atol=1e-14)

    def test_modulus_monotone_decreasing(self):
        r = rates(paper_params())
        series = np.abs(predict_rho01(r, 0.5, 25.0, np.linspace(0, 4000, 100)))
        assert np.all(np.diff(series) < 0)

    def test_phase_advances_at_splitting_rate(self):
        r = rates(paper_params())
        dt = 1e-3
        series = predict_rho01(r, 0.5, 25.0, [0.0, dt])
        dphi = np.angle(series[1]) - np.angle(series[0])
        assert dphi == pytest.approx(25.0 * dt, rel=1e-6)

    def test_rejects_oversized_coherence(self):
        r = rates(paper_params())
        with pytest.raises(ValueError, match="rho01_0"):
            predict_rho01(r, 0.6, 25.0, [0.0])


class TestIntegration:
    def test_matches_closed_form(self):
        r = rates(paper_params())
        t = np.linspace(0.0, 2000.0, 501)
        closed = predict_rho11(r, 1.0, 1.0, t)
        numeric = integrate_rate_equation(r, 1.0, 1.0, t)
        assert np.max(np.abs(closed - numeric)) <= 1e-9

    def test_zero_rates_constant(self):
        r = rates(make_params(lam=0.0))
        numeric = integrate_rate_equation(r, 0.4, 1.0, np.linspace(0, 50, 6))
        assert np.allclose(numeric, 0.4, atol=1e-12)

    def test_rises_from_empty_block_population(self):
        r = rates(paper_params())
        numeric = integrate_rate_equation(r, 0.0, 1.0, [0.0, 5e5])
        assert numeric[-1] == pytest.approx(r.r10 / r.total, abs=1e-9)


class TestBornEquilibrium:
    def test_paper_contrast_value(self):
        expected = math.exp(-5.0) / (1.0 + math.exp(-5.0))
        assert ba_equilibrium(25.0, 5.0) == pytest.approx(expected, rel=1e-12)
        assert ba_equilibrium(25.0, 5.0) == pytest.approx(0.0066928509242848554, rel=1e-12)

    def test_high_temperature_limit(self):
        assert ba_equilibrium(25.0, 1e12) == pytest.approx(0.5, abs=1e-9)

    def test_low_temperature_limit(self):
        assert ba_equilibrium(25.0, 1e-3) == pytest.approx(0.0, abs=1e-300)

    def test_rejects_nonpositive_temperature(self):
        with pytest.raises(ValueError, match="k_t_bath"):
            ba_equilibrium(25.0, 0.0)


class TestPredictionBundle:
    def test_bundle_consistency(self):
        r = rates(paper_params())
        t = np.linspace(0.0, 100.0, 5)
        p = prediction(r, 0.5, 0.5 + 0j, 0.5, 25.0, t)
        assert np.allclose(p.rho11, predict_rho11(r, 0.5, 0.5, t))
        assert np.allclose(p.rho01, predict_rho01(r, 0.5, 25.0, t))
        assert p.rho11_infinity == pytest.approx(0.25, abs=1e-12)
