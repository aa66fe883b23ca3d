import math

import numpy as np
import pytest

from wavedecay.decay_bounds import (OdeProblem, classify, discrete_iteration,
                                    dominance_check, envelope, linear_rate_table,
                                    power_law_minorant, solve_ode)
from wavedecay.forcing import GammaProfile


def gamma_exp(M=1.0, theta=2.0):
    return GammaProfile(lambda t: M * np.exp(-theta * np.asarray(t, dtype=float)))


def gamma_poly(M=1.0, theta=2.0):
    return GammaProfile(lambda t: M * np.power(1.0 + np.asarray(t, dtype=float), -theta))


class TestSolveOde:
    def test_linear_forced_closed_form(self):
        # integrating factor: S' + S = e^{-2t}, S(0)=1 -> S = 2 e^{-t} - e^{-2t}
        prob = OdeProblem.linear_bound(1.0, 1.0, gamma_exp(theta=2.0), 1.0)
        ts, S = solve_ode(prob, 4.0, 0.05)
        exact = 2.0 * np.exp(-ts) - np.exp(-2.0 * ts)
        assert np.max(np.abs(S - exact) / exact) < 1e-6
        s_at_1 = S[np.argmin(np.abs(ts - 1.0))]
        assert s_at_1 == pytest.approx(2.0 / math.e - math.exp(-2.0), rel=1e-6)
        assert s_at_1 == pytest.approx(0.60042, abs=1e-5)

    def test_linear_homogeneous(self):
        prob = OdeProblem.linear_bound(2.0, 1.5, None, 1.0)
        ts, S = solve_ode(prob, 12.0, 0.1)
        exact = np.exp(-ts / 3.0)
        assert np.max(np.abs(S - exact) / exact) < 1e-6

    def test_power_three_halves_unforced(self):
        # separable: S' = -S^{3/2}, S(0)=1 -> S = (1 + t/2)^{-2}, S(4) = 1/9
        prob = OdeProblem(p=lambda s: s**1.5, gamma=None, s0=1.0)
        ts, S = solve_ode(prob, 4.0, 0.05)
        exact = (1.0 + ts / 2.0) ** -2
        assert np.max(np.abs(S - exact) / exact) < 1e-6
        assert S[-1] == pytest.approx(1.0 / 9.0, rel=1e-6)

    def test_negative_initial_rejected(self):
        with pytest.raises(ValueError):
            OdeProblem(p=lambda s: s, gamma=None, s0=-1.0)

    def test_unforced_strictly_decreasing(self):
        prob = OdeProblem.linear_bound(1.0, 1.0, None, 1.0)
        _, S = solve_ode(prob, 6.0, 0.05)
        assert np.all(np.diff(S) < 0)

    def test_monotone_comparison_in_gamma(self):
        # pointwise larger Gamma never lowers S
        p = lambda s: 0.5 * np.asarray(s, dtype=float)
        _, s_small = solve_ode(OdeProblem(p=p, gamma=gamma_poly(M=0.5), s0=1.0), 20.0, 0.05)
        _, s_big = solve_ode(OdeProblem(p=p, gamma=gamma_poly(M=1.0), s0=1.0), 20.0, 0.05)
        assert np.all(s_big >= s_small - 1e-10)

    def test_monotone_comparison_in_p(self):
        # pointwise larger dissipation never raises S
        g = gamma_poly()
        _, s_weak = solve_ode(OdeProblem(p=lambda s: 0.3 * s, gamma=g, s0=1.0), 20.0, 0.05)
        _, s_strong = solve_ode(OdeProblem(p=lambda s: 0.9 * s, gamma=g, s0=1.0), 20.0, 0.05)
        assert np.all(s_strong <= s_weak + 1e-10)


class TestEnvelope:
    def test_unforced_value(self):
        # B(2) = 4 e^T S(1) = 4 e * e^{-1} = 4 for the unit linear problem
        prob = OdeProblem.linear_bound(1.0, 1.0, None, 1.0)
        ts, S = solve_ode(prob, 3.0, 0.05)
        curve = envelope(ts, S, None, 1.0, factor=4.0, gamma_factor=1.0)
        assert curve.at(2.0) == pytest.approx(4.0, rel=1e-6)

    def test_zero_solution(self):
        ts = np.linspace(0, 2, 21)
        curve = envelope(ts, np.zeros_like(ts), None, 1.0)
        assert np.all(curve.values == 0.0)

    def test_constant_gamma_window(self):
        c, T = 0.7, 1.5
        g = GammaProfile(lambda t: c + 0.0 * np.asarray(t, dtype=float))
        ts = np.linspace(0, 3, 31)
        S = np.exp(-ts)
        curve = envelope(ts, S, g, T, factor=4.0, gamma_factor=1.0)
        expected = 4.0 * math.exp(T) * (S + c * T)
        assert np.allclose(curve.values, expected, rtol=1e-8)
        assert curve.times[0] == pytest.approx(T)

    def test_unforced_envelope_nonincreasing(self):
        prob = OdeProblem.linear_bound(1.0, 2.0, None, 3.0)
        ts, S = solve_ode(prob, 5.0, 0.1)
        curve = envelope(ts, S, None, 1.0)
        assert np.all(np.diff(curve.values) <= 1e-12)

    def test_empty_domain_rejected(self):
        with pytest.raises(ValueError):
            envelope(np.array([]), np.array([]), None, 1.0)


class TestDiscreteIteration:
    def test_halving_map(self):
        seq = discrete_iteration(1.0, lambda s: 0.5 * s, 0.0, steps=8)
        assert np.allclose(seq, 0.5 ** np.arange(9))

    def test_fixed_point_with_window(self):
        # W = W + d - (W + d)/2 has fixed point W* = d
        d = 0.3
        seq = discrete_iteration(1.0, lambda s: 0.5 * s, d, steps=60)
        assert seq[-1] == pytest.approx(d, rel=1e-8)

    def test_quadratic_single_step(self):
        seq = discrete_iteration(0.5, lambda s: 0.25 * s * s, 0.0, steps=1)
        assert seq[-1] == pytest.approx(0.4375)

    def test_non_monotone_complement_rejected(self):
        with pytest.raises(ValueError):
            discrete_iteration(1.0, lambda s: 3.0 * s, 0.0, steps=3)

    def test_nonzero_at_origin_rejected(self):
        with pytest.raises(ValueError):
            discrete_iteration(1.0, lambda s: s + 0.1, 0.0, steps=3)

    def test_ode_dominates_iteration(self):
        # S(mT) >= W_m when ell = T * p and deltas are the Gamma windows
        T = 0.8
        g = gamma_poly(M=0.5, theta=2.0)
        prob = OdeProblem.linear_bound(T, 2.0, g, 1.0)
        steps = 18
        ts, S = solve_ode(prob, steps * T, T / 20.0)
        deltas = [g.window(m * T, T) for m in range(steps)]
        seq = discrete_iteration(1.0, lambda s: T * prob.p(s), deltas, steps=steps)
        s_at_windows = np.interp(np.arange(steps + 1) * T, ts, S)
        assert np.all(s_at_windows >= seq - 1e-8)


class TestDominanceCheck:
    def test_equal_curves_pass(self):
        s = np.linspace(1.0, 0.1, 50)
        res = dominance_check(s, s.copy())
        assert res.passed and res.max_violation == 0.0

    def test_deliberate_violation(self):
        s = np.linspace(1.0, 0.1, 50)
        res = dominance_check(s, s - 0.1, times=np.linspace(0, 5, 50))
        assert not res.passed
        assert res.max_violation == pytest.approx(0.1, rel=1e-12)
        assert res.at_time is not None

    def test_tolerance_scale(self):
        s = np.array([1.0, 0.5])
        y = s - 5e-9 * (1 + 1.0)
        assert dominance_check(s, y).passed


class TestClassify:
    def test_unforced_linear_exponential(self):
        C = 0.7
        cls = classify(lambda s: C * np.asarray(s, dtype=float), None, 1.0,
                       horizon=30.0, name_window=(3.0, 30.0))
        assert cls.case == "unforced"
        assert cls.model == "exponential"
        assert cls.params["rate"] == pytest.approx(C, rel=1e-4)

    def test_unforced_zero_initial(self):
        cls = classify(lambda s: s, None, 0.0)
        assert cls.case == "unforced"
        assert cls.bound(5.0) == 0.0

    def test_unforced_power_matches_closed_form(self):
        # psi(x) = 2 (x^{-1/2} - 1) so the bound is (1 + t/2)^{-2}
        cls = classify(lambda s: np.asarray(s, dtype=float) ** 1.5, None, 1.0,
                       horizon=100.0, name_window=(10.0, 100.0))
        ts = np.linspace(0.5, 80.0, 40)
        assert np.allclose(cls.bound(ts), (1 + ts / 2.0) ** -2, rtol=1e-4)

    def test_sublinear_polynomial_dominant(self):
        # paper pipeline rate: exponent 2 r0 theta / (1 + r0) = 4/3
        cls = classify(lambda s: np.asarray(s, dtype=float) ** 1.5,
                       gamma_poly(theta=2.0), 1.0, horizon=1e4)
        assert cls.case == "forced-dominant"
        assert cls.model == "polynomial"
        assert cls.params["exponent"] == pytest.approx(4.0 / 3.0, rel=0.02)
        assert cls.admissibility["kappa"] >= 1.0

    def test_saturated_subdominant(self):
        # theta = 5 >= (1+r0)/(1-r0) = 3: saturated exponent 2 r0/(1-r0) = 2
        cls = classify(lambda s: np.asarray(s, dtype=float) ** 1.5,
                       gamma_poly(theta=5.0), 1.0, horizon=1e3)
        assert cls.case == "forced-subdominant"
        assert cls.model == "polynomial"
        assert cls.params["exponent"] == pytest.approx(2.0, rel=0.1)

    def test_linear_exponential_fast_rate(self):
        # p = C s with C > theta: bound follows Gamma at rate theta
        cls = classify(lambda s: 2.0 * np.asarray(s, dtype=float),
                       gamma_exp(theta=1.0), 1.0, horizon=40.0,
                       name_window=(4.0, 40.0))
        assert cls.case == "forced-dominant"
        assert cls.model == "exponential"
        assert cls.params["rate"] == pytest.approx(1.0, rel=1e-3)

    def test_mixed_sign_gamma_unclassified(self):
        g = GammaProfile(lambda t: np.maximum(1.0 - np.asarray(t, dtype=float), 0.0))
        cls = classify(lambda s: s, g, 1.0, horizon=10.0)
        assert cls.case == "unclassified"

    def test_classifier_soundness_against_ode(self):
        # whenever a 2a/2b verdict comes back, its envelope dominates S
        p = lambda s: np.asarray(s, dtype=float) ** 1.5
        for theta in (2.0, 5.0):
            g = gamma_poly(theta=theta)
            cls = classify(p, g, 1.0, horizon=1e3)
            assert cls.case in ("forced-dominant", "forced-subdominant")
            ts, S = solve_ode(OdeProblem(p=p, gamma=g, s0=1.0), 1e3, 0.25)
            y = np.asarray(cls.bound(ts[1:]), dtype=float)
            assert dominance_check(S[1:], y, ts[1:]).passed


class TestLinearRateTable:
    def closed_form_s(self, C, theta, M, ts, s0):
        if C == theta:
            return (s0 + M * ts) * np.exp(-C * ts)
        return s0 * np.exp(-C * ts) + M * (np.exp(-theta * ts) - np.exp(-C * ts)) / (C - theta)

    @pytest.mark.parametrize("C,theta,case,rate", [
        (2.0, 1.0, "exp-fast", 1.0),
        (1.0, 1.0, "exp-critical", 1.0),
        (0.5, 2.0, "exp-slow", 0.5),
    ])
    def test_exponential_cases(self, C, theta, case, rate):
        v = linear_rate_table(C, "exponential", theta, 1.0, T=1.0, s0=1.0)
        assert v.case == case
        assert v.params["rate"] == pytest.approx(rate)
        ts = np.linspace(0.0, 25.0, 400)
        assert np.all(v.s_bound(ts) >= self.closed_form_s(C, theta, 1.0, ts, 1.0) - 1e-12)

    def test_polynomial_case(self):
        v = linear_rate_table(0.5, "polynomial", 2.0, 1.0, T=1.0, s0=1.0)
        assert v.case == "polynomial"
        assert v.params["exponent"] == pytest.approx(2.0)
        # constructive constant dominates the integrated solution
        prob = OdeProblem.linear_bound(2.0, 1.0, gamma_poly(theta=2.0), 1.0)
        ts, S = solve_ode(prob, 50.0, 0.05)
        assert np.all(v.s_bound(ts) >= S - 1e-9)
        # and the envelope evaluator dominates the numeric envelope
        curve = envelope(ts, S, gamma_poly(theta=2.0), 1.0, 4.0, 1.0)
        assert np.all(v.envelope(curve.times) >= curve.values - 1e-9)

    def test_nonintegrable_polynomial_rejected(self):
        with pytest.raises(ValueError):
            linear_rate_table(1.0, "polynomial", 1.0, 1.0, T=1.0)


class TestPowerLawMinorant:
    def test_sits_below_and_tracks_exponent(self):
        law_p = lambda s: 0.25 * np.asarray(s, dtype=float) ** 1.5
        coeff, expo, p_tilde = power_law_minorant(law_p, 1e-6, 10.0)
        assert expo == pytest.approx(1.5, rel=1e-6)
        xs = np.geomspace(1e-6, 10.0, 100)
        assert np.all(p_tilde(xs) <= law_p(xs) * (1 + 1e-12))
