"""Tests for tail exponents, exceedance curves and closed-form boundaries."""

import math

import numpy as np
import pytest
from scipy import stats as sps

from sparsedetect.families import (
    AlternativeModel,
    Family,
    FixedScale,
    GFamily,
    InverseRootLogScale,
    PolynomialDecayScale,
)
from sparsedetect.theory import (
    ExpTail,
    GaussTail,
    PolyTail,
    TailExponent,
    appendix_a_thresholds,
    asymptotic_max_power,
    critical_sparsity,
    lambda_curve,
    mixture_tail_probability,
    tail_sandwich_check,
    tau_quadrature,
    tau_sup_approx,
)

CLOSED_FORM_ATOL = 1e-12
QUAD_ATOL = 1e-10
# regression pin: Laplace family, sigma=1, n=1000, delta=0.5 (stable from
# epsrel 1e-8 down to 1e-12)
TAU_LAPLACE_PIN = -0.30911530469715803


class TestMixtureTailProbability:
    def test_gaussian_closed_form(self):
        # Gaussian signal law: marginally X ~ N(0, 1 + sigma^2)
        for sigma in (0.5, 1.0, 3.0):
            for T in (0.5, 2.0, 4.0):
                exact = 2.0 * sps.norm.sf(T / math.sqrt(1.0 + sigma ** 2))
                got = mixture_tail_probability(GFamily(Family.GAUSSIAN), sigma, T)
                assert got == pytest.approx(exact, rel=1e-9)

    def test_point_mass_closed_form(self):
        got = mixture_tail_probability(GFamily(Family.POINT_MASS), 2.0, 3.0)
        exact = sps.norm.sf(1.0) + sps.norm.sf(5.0)
        assert got == pytest.approx(exact, abs=QUAD_ATOL)

    def test_one_sided_smaller(self):
        fam = GFamily(Family.LAPLACE)
        two = mixture_tail_probability(fam, 1.0, 2.0, two_sided=True)
        one = mixture_tail_probability(fam, 1.0, 2.0, two_sided=False)
        assert one < two < 2 * one + QUAD_ATOL

    def test_chi1_substitution(self):
        # chi-square(1) signal vs direct mixture of the squared-normal law:
        # E Phi_bar(T -+ sigma Z^2) estimated by a fine Gauss-Hermite-free sum
        rng = np.random.default_rng(0)
        z2 = rng.standard_normal(400_000) ** 2
        sigma, T = 1.5, 3.0
        mc = np.mean(sps.norm.sf(T - sigma * z2) + sps.norm.sf(T + sigma * z2))
        got = mixture_tail_probability(GFamily(Family.CHI_SQUARED_1), sigma, T)
        assert got == pytest.approx(float(mc), abs=5e-4)

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            mixture_tail_probability(GFamily(Family.GAUSSIAN), 0.0, 1.0)


class TestTauQuadrature:
    def test_regression_pin(self):
        tau = tau_quadrature(GFamily(Family.LAPLACE), 1.0, 1000, 0.5).tau
        assert tau == pytest.approx(TAU_LAPLACE_PIN, abs=QUAD_ATOL)

    def test_delta_zero_is_certain(self):
        assert tau_quadrature(GFamily(Family.CAUCHY), 1.0, 1000, 0.0).tau == 0.0

    def test_nonpositive(self):
        with pytest.raises(ValueError):
            TailExponent(tau=0.1, method="quadrature")

    def test_nonincreasing_in_delta(self):
        fam = GFamily(Family.LAPLACE)
        taus = [tau_quadrature(fam, 1.0, 10_000, d).tau for d in np.linspace(0.1, 1.0, 7)]
        assert all(a >= b - 1e-12 for a, b in zip(taus, taus[1:]))

    def test_range_validation(self):
        with pytest.raises(ValueError):
            tau_quadrature(GFamily(Family.LAPLACE), 1.0, 1000, 1.5)
        with pytest.raises(ValueError):
            tau_quadrature(GFamily(Family.LAPLACE), 1.0, 1, 0.5)

    def test_point_mass_limit_direction(self):
        # point mass at sqrt(2 rr log n): tau tends to -(sqrt(delta)-sqrt(rr))^2
        # from below, improving with n
        rr, delta = 0.3, 0.8
        limit = -((math.sqrt(delta) - math.sqrt(rr)) ** 2)
        taus = []
        for n in (10 ** 4, 10 ** 6, 10 ** 8):
            sig = math.sqrt(2 * rr * math.log(n))
            taus.append(tau_quadrature(GFamily(Family.POINT_MASS), sig, n, delta).tau)
        assert taus[0] < taus[1] < taus[2] < limit


class TestSupApproximation:
    def test_matches_quadrature_within_sandwich(self):
        # log-scale gap bounded by the sandwich constants
        for fam, sigma in [
            (GFamily(Family.GAUSSIAN), 2.0),
            (GFamily(Family.LAPLACE), 1.0),
            (GFamily(Family.CAUCHY), 0.5),
        ]:
            for n in (1000, 100_000):
                logn = math.log(n)
                for delta in (0.2, 0.6, 1.0):
                    tq = tau_quadrature(fam, sigma, n, delta).tau
                    ts = tau_sup_approx(fam, sigma, n, delta).tau
                    lo = ts - math.log(3 * math.sqrt(2 * logn)) / logn
                    hi = ts + math.log(4 * logn + 4) / logn
                    assert lo - 1e-9 <= tq <= hi + 1e-9

    def test_sandwich_check_spot(self):
        assert tail_sandwich_check(GFamily(Family.LAPLACE), 2.0, 1000, 0.4)


class TestLambdaCurve:
    def test_identity(self):
        model = AlternativeModel(
            n=1000, beta=0.6, family=GFamily(Family.CAUCHY), scale=FixedScale(1.0)
        )
        deltas = (0.25, 0.5, 0.75, 1.0)
        curve = lambda_curve(model, deltas)
        for d, lam, ref in curve.rows():
            tau = tau_quadrature(model.family, 1.0, 1000, d).tau
            assert lam == pytest.approx(1.0 - 0.6 + tau, abs=CLOSED_FORM_ATOL)
            assert ref == pytest.approx((1.0 - d) / 2.0, abs=CLOSED_FORM_ATOL)

    def test_grid_validation(self):
        model = AlternativeModel(
            n=1000, beta=0.6, family=GFamily(Family.CAUCHY), scale=FixedScale(1.0)
        )
        with pytest.raises(ValueError):
            lambda_curve(model, [])
        with pytest.raises(ValueError):
            lambda_curve(model, [0.0, 0.5])


class TestClosedForms:
    def test_critical_sparsity_values(self):
        assert critical_sparsity(GaussTail(2.0)) == pytest.approx(0.8, abs=CLOSED_FORM_ATOL)
        assert critical_sparsity(ExpTail(4.0)) == pytest.approx(0.5625, abs=CLOSED_FORM_ATOL)
        assert critical_sparsity(PolyTail(1.0, -0.3)) == pytest.approx(0.7, abs=CLOSED_FORM_ATOL)

    def test_range_validation(self):
        with pytest.raises(ValueError):
            critical_sparsity(GaussTail(1.0))
        with pytest.raises(ValueError):
            critical_sparsity(ExpTail(3.0))  # below sqrt(2)/(sqrt(2)-1) ~ 3.414
        with pytest.raises(ValueError):
            critical_sparsity(PolyTail(1.0, -0.6))
        with pytest.raises(TypeError):
            critical_sparsity("gaussian")

    def test_asymptotic_max_power(self):
        C = 1.0 / math.pi  # Cauchy tail constant
        assert asymptotic_max_power(C, 1.0, 0.0, 0.05) == pytest.approx(0.05, abs=CLOSED_FORM_ATOL)
        assert asymptotic_max_power(C, 1.0, 2.0, 0.05) == pytest.approx(
            0.734072839158679, abs=CLOSED_FORM_ATOL
        )
        powers = [asymptotic_max_power(C, 1.0, r, 0.05) for r in (0.0, 0.5, 1.0, 2.0, 8.0)]
        assert powers == sorted(powers)
        assert powers[-1] < 1.0

    def test_asymptotic_max_power_validation(self):
        with pytest.raises(ValueError):
            asymptotic_max_power(0.0, 1.0, 1.0, 0.05)
        with pytest.raises(ValueError):
            asymptotic_max_power(1.0, 1.0, 1.0, 1.5)

    def test_appendix_a_scan(self):
        r_max, r_hc = appendix_a_thresholds()
        assert r_hc < r_max
        assert r_max == pytest.approx(2.354, abs=5e-4)
        assert r_hc == pytest.approx(2.345, abs=5e-4)
        # the minima sit at the first atom; deeper scans change nothing
        assert appendix_a_thresholds(m_floor=0) == pytest.approx(
            (r_max, r_hc), abs=CLOSED_FORM_ATOL
        )


class TestScaleIntegration:
    def test_inverse_root_log_tau(self):
        # exponential-tail calibration: sigma = r / sqrt(2 log n) shrinks tau
        fam = GFamily(Family.LAPLACE)
        n = 10_000
        sig = InverseRootLogScale(4.0).sigma(n)
        tau_small = tau_quadrature(fam, sig, n, 0.8).tau
        tau_big = tau_quadrature(fam, 4.0, n, 0.8).tau
        assert tau_small < tau_big

    def test_polynomial_scale_lambda_near_flat(self):
        # critical polynomial scaling keeps lambda close to 0 at delta = 1
        model = AlternativeModel(
            n=100_000,
            beta=0.7,
            family=GFamily(Family.CAUCHY),
            scale=PolynomialDecayScale(1.0, 0.7, 1.0),
        )
        curve = lambda_curve(model, (1.0,))
        assert abs(curve.lam[0]) < 0.2
