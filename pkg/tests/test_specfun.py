"""
Special function tests
"""

import os
import sys
import unittest
import warnings

import mpmath
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from specfun import (
    DomainError, OscParams, PoleError, PrecisionContext, Regime, RegimeError, RegimeWarning,
    airy_ai, asympt_2f1_osc, asympt_f2_airy, asympt_2f1_window, bessel_FG, bessel_FG_asympt, bessel_FG_at,
    bessel_K_at, bessel_K_imag, bessel_K_imag_asympt, f2_value, gamma, gamma_ratio,
    gamma_ratio_asympt, gauss_2f1, hyp2f1_series, ode_residual_airy, ode_residual_FG,
    ode_residual_K, prop_2f1, regime_gate, turning_point_data, zeta,
)

CTX = PrecisionContext(working_digits=30, target_rel_error=1e-20)


class TestPrecisionContext(unittest.TestCase):
    """Test the precision carrier"""

    def test_minimum_digits(self):
        with self.assertRaises(DomainError):
            PrecisionContext(working_digits=10)

    def test_unreachable_target(self):
        """A target finer than the working precision is rejected"""
        with self.assertRaises(DomainError):
            PrecisionContext(working_digits=20, target_rel_error=1e-40)

    def test_with_digits(self):
        wider = CTX.with_digits(50)
        self.assertEqual(wider.working_digits, 50)
        self.assertEqual(wider.target_rel_error, CTX.target_rel_error)


class TestGammaZeta(unittest.TestCase):
    """Test Γ, its ratio and ζ"""

    def test_gamma_values(self):
        """Test classical values"""
        self.assertAlmostEqual(float(gamma(0.5, CTX)), float(mpmath.sqrt(mpmath.pi)), places=14)
        self.assertEqual(gamma(5, CTX), 24)

    def test_gamma_modulus_on_critical_line(self):
        """|Γ(1/2+i)|² = π/cosh π"""
        value = abs(gamma(mpmath.mpc(0.5, 1), CTX)) ** 2
        self.assertAlmostEqual(float(value), float(mpmath.pi / mpmath.cosh(mpmath.pi)), places=14)

    def test_gamma_poles(self):
        for z in (0, -1, -7):
            with self.assertRaises(PoleError):
                gamma(z, CTX)

    def test_ratio_is_unimodular(self):
        self.assertAlmostEqual(float(abs(gamma_ratio(0.25, 3.7, CTX))), 1.0, places=14)

    def test_stirling_ratio(self):
        """Each extra phase term sharpens the Stirling ratio"""
        exact = gamma_ratio(0.25, 50, CTX)
        main = gamma_ratio_asympt(0.25, 50, terms=1)
        refined = gamma_ratio_asympt(0.25, 50, terms=3)
        self.assertLess(abs(main - exact), 1e-2)
        self.assertLess(abs(refined - exact), 1e-6)
        self.assertAlmostEqual(float(abs(refined)), 1.0, places=14)

    def test_stirling_ratio_negative_height(self):
        exact = gamma_ratio(0.75, -40, CTX)
        self.assertLess(abs(gamma_ratio_asympt(0.75, -40, terms=3) - exact), 1e-6)

    def test_stirling_regime(self):
        with self.assertRaises(RegimeError):
            gamma_ratio_asympt(0.5, 5)

    def test_zeta(self):
        self.assertAlmostEqual(float(zeta(2, CTX)), float(mpmath.pi ** 2 / 6), places=14)
        with self.assertRaises(PoleError):
            zeta(1, CTX)


class TestHypergeometric(unittest.TestCase):
    """Test the ₂F₁ reference and F₂"""

    def test_value_at_zero(self):
        self.assertEqual(gauss_2f1(mpmath.mpc(0.25, 3), 0.75, 1.5, 0, CTX), 1)

    def test_closed_form(self):
        """₂F₁(1,1;2;1/2) = 2 log 2"""
        self.assertAlmostEqual(float(gauss_2f1(1, 1, 2, 0.5, CTX)), 2 * float(mpmath.log(2)), places=14)

    def test_domain(self):
        with self.assertRaises(DomainError):
            gauss_2f1(1, 1, 2, 1.5, CTX)
        with self.assertRaises(DomainError):
            gauss_2f1(1, 1, -2, 0.5, CTX)
        with self.assertRaises(DomainError):
            hyp2f1_series(1, 1, 2, 1.0, CTX)

    def test_against_series(self):
        """Oscillatory parameters at r = 10 agree with raw summation"""
        r, alpha = 10, 0.3
        shift = mpmath.mpc(0, r * (1 - alpha))
        a, b, c = 0.25 + shift, 0.75 + shift, mpmath.mpc(1, 2 * r)
        reference = hyp2f1_series(a, b, c, 0.5, CTX)
        value = gauss_2f1(a, b, c, 0.5, CTX)
        self.assertLess(abs(value - reference), 1e-12 * abs(reference))

    def test_f2_symmetry(self):
        """r ↦ −r swaps the parameters of F₂"""
        self.assertLess(abs(f2_value(7, 2, 0.3, CTX) - f2_value(-7, 2, 0.3, CTX)), 1e-12 * abs(f2_value(7, 2, 0.3, CTX)))

    def test_f2_at_zero(self):
        expected = gamma(mpmath.mpc(0.25, 5), CTX) * gamma(mpmath.mpc(0.25, -9), CTX) / mpmath.sqrt(mpmath.pi)
        self.assertLess(abs(f2_value(7, 2, 0, CTX) - expected), 1e-12 * abs(expected))

    def test_f2_domain(self):
        with self.assertRaises(DomainError):
            f2_value(7, 2, 1.0, CTX)

    def test_window_rewriting(self):
        """The shifted-window main term tracks the main term at r = T + Gv"""
        T, G, t, z = 1000, 3, 200, 0.5
        for v in (-1, 0, 1):
            direct = asympt_2f1_osc(OscParams.from_r_t(T + G * v, t), z)
            window = asympt_2f1_window(T, G, v, t, z)
            self.assertLess(abs(window - direct), 0.05 * abs(direct))

    def test_leading_term_only(self):
        with self.assertRaises(DomainError):
            asympt_2f1_osc(OscParams.from_r_alpha(200, 0.2), 0.5, n_terms=2)

    def test_regime_gate(self):
        """αr below the floor warns unless the caller has already checked it"""
        p = OscParams.from_r_alpha(20, 0.1)
        with self.assertWarns(RegimeWarning):
            asympt_2f1_osc(p, 0.5)
        with warnings.catch_warnings():
            warnings.simplefilter('error', RegimeWarning)
            asympt_2f1_osc(p, 0.5, gate=False)
            asympt_f2_airy(p, 0.5, gate=False)
            self.assertTrue(regime_gate(12.0, 'test'))

    def test_small_z_limit(self):
        """At z → 0 the main term tends to 1"""
        value = asympt_2f1_osc(OscParams.from_r_alpha(200, 0.2), 1e-12)
        self.assertLess(abs(value - 1), 1e-8)

    @pytest.mark.slow
    def test_main_term_error_decays(self):
        """Relative error of the main term shrinks as r doubles"""
        errors = []
        for r in (200, 400):
            p = OscParams.from_r_alpha(r, 0.2)
            exact = prop_2f1(p, 0.5, CTX)
            errors.append(float(abs(asympt_2f1_osc(p, 0.5) - exact) / abs(exact)))
        self.assertLess(errors[0], 0.2)
        self.assertLess(errors[1], errors[0])

    @pytest.mark.slow
    def test_airy_main_term_below_turning_point(self):
        """The Airy main term of F₂ improves as r doubles at fixed α"""
        errors = []
        for r in (200, 400):
            p = OscParams.from_r_alpha(r, 0.2)
            exact = f2_value(p.r, p.t, 0.3, CTX)
            errors.append(float(abs(asympt_f2_airy(p, 0.3) - exact) / abs(exact)))
        self.assertLess(errors[0], 0.2)
        self.assertLess(errors[1], errors[0])


class TestTurningPoint(unittest.TestCase):
    """Test the turning-point data of F₂"""

    def setUp(self):
        self.p = OscParams.from_r_alpha(400, 0.5)

    def test_series_matches_closed_forms(self):
        """Near the turning point both branches agree"""
        beta = 0.75
        for y in (beta - 0.01, beta + 0.01):
            exact = turning_point_data(self.p, y, method="exact")
            series = turning_point_data(self.p, y, method="taylor")
            self.assertAlmostEqual(float(exact.zeta_hat), float(series.zeta_hat), places=14)

    def test_sign_and_regime(self):
        below = turning_point_data(self.p, 0.3)
        above = turning_point_data(self.p, 0.9)
        self.assertLess(below.zeta_hat, 0)
        self.assertGreater(above.zeta_hat, 0)
        self.assertEqual(below.regime, Regime.BELOW)
        self.assertEqual(above.regime, Regime.ABOVE)
        self.assertIsNone(below.a1)
        self.assertIsNone(above.a0)

    def test_continuous_through_turning_point(self):
        at = turning_point_data(self.p, 0.75)
        self.assertEqual(at.zeta_hat, 0)
        self.assertEqual(at.regime, Regime.NEAR)
        self.assertLess(abs(turning_point_data(self.p, 0.75 + 1e-9).zeta_hat), 1e-5)
        self.assertLess(abs(turning_point_data(self.p, 0.75 - 1e-9).zeta_hat), 1e-5)

    def test_domain(self):
        with self.assertRaises(DomainError):
            turning_point_data(self.p, 1.0)


class TestBessel(unittest.TestCase):
    """Test imaginary-order Bessel functions"""

    def test_zero_order(self):
        """t = 0 gives J₀ and Y₀"""
        f, g = bessel_FG_at(0, 1.0, CTX)
        self.assertAlmostEqual(float(f), float(mpmath.besselj(0, 1)), places=14)
        self.assertAlmostEqual(float(g), float(mpmath.bessely(0, 1)), places=14)

    def test_domain(self):
        with self.assertRaises(DomainError):
            bessel_FG_at(-1, 1.0, CTX)
        with self.assertRaises(DomainError):
            bessel_FG_at(1, 0, CTX)
        with self.assertRaises(DomainError):
            bessel_K_imag(0.5, 0.5, CTX)
        with self.assertRaises(RegimeError):
            bessel_K_imag_asympt(20, 0.99)

    def test_K_methods_agree(self):
        """Integral and series evaluations of e^{πt}K_{2it}"""
        for t, x in ((3, 2.0), (3, 0.1), (8, 5.0)):
            integral = bessel_K_at(t, x, CTX)
            series = bessel_K_at(t, x, CTX, method="series")
            self.assertLess(abs(integral - series), 1e-12 * max(1, abs(series)))

    def test_K_even_in_t(self):
        self.assertEqual(bessel_K_at(-2, 1.5, CTX), bessel_K_at(2, 1.5, CTX))

    def test_airy_at_zero(self):
        expected = 1 / (mpmath.mpf(3) ** (mpmath.mpf(2) / 3) * mpmath.gamma(mpmath.mpf(2) / 3))
        self.assertAlmostEqual(float(airy_ai(0, CTX)), float(expected), places=14)

    def test_ode_residuals(self):
        """The scaled functions solve their second order equations"""
        self.assertLess(ode_residual_FG(5, 0.5, "F", CTX), 1e-6)
        self.assertLess(ode_residual_FG(5, 0.5, "G", CTX), 1e-6)
        self.assertLess(ode_residual_K(5, 0.5, CTX), 1e-6)
        self.assertLess(ode_residual_K(5, 1.5, CTX), 1e-6)
        self.assertLess(ode_residual_airy(1.0, CTX), 1e-6)
        self.assertLess(ode_residual_airy(-3.0, CTX), 1e-6)

    @pytest.mark.slow
    def test_FG_main_term(self):
        t, z = 40, 0.5
        f, g = bessel_FG(t, z, CTX)
        f0, g0 = bessel_FG_asympt(t, z)
        amplitude = 1 / float(mpmath.sqrt(mpmath.pi * t) * (1 + z ** 2) ** 0.25)
        self.assertLess(abs(f - f0), 0.05 * amplitude)
        self.assertLess(abs(g - g0), 0.05 * amplitude)

    @pytest.mark.slow
    def test_K_main_term(self):
        t, z = 40, 0.5
        value = bessel_K_imag(t, z, CTX)
        main = bessel_K_imag_asympt(t, z)
        amplitude = float(mpmath.sqrt(mpmath.pi / t) / (1 - z ** 2) ** 0.25)
        self.assertLess(abs(value - main), 0.05 * amplitude)


if __name__ == '__main__':
    unittest.main()
