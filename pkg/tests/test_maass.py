"""
Symmetric square L-function tests
"""

import os
import sys
import unittest

import mpmath
import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from maass import (
    AfePolynomial, CoverageError, MaassForm, SpectralWeight, VWeightKernel, WeightVariant,
    _smallest_prime_factors, afe_gaussian, analytic_conductor, convexity_reference, eisenstein_form,
    f_alpha, h_eval, harmonic_weight, hecke_violations, l_infinity, l_infinity_ratio,
    l_infinity_ratio_main, l_infinity_ratio_window, load_forms, load_forms_with_report, q_N,
    square_coefficients, sym2_L, sym2_L_report, synthetic_form, v_weight_split,
)
from cache import sym2_cache
from specfun import DomainError, PoleError, PrecisionContext

CTX = PrecisionContext(working_digits=30, target_rel_error=1e-20)


class TestMaassForm(unittest.TestCase):
    """Test form records"""

    def test_validation(self):
        with self.assertRaises(DomainError):
            MaassForm(t_j=0.0, hecke={1: 1.0})
        with self.assertRaises(DomainError):
            MaassForm(t_j=9.5, hecke={1: 2.0})
        with self.assertRaises(DomainError):
            MaassForm(t_j=9.5, hecke={1: 1.0}, weight=-0.1)

    def test_missing_coefficient(self):
        form = MaassForm(t_j=9.5, hecke={1: 1.0, 2: 0.3})
        self.assertEqual(form.lam(2), 0.3)
        with self.assertRaises(CoverageError) as cm:
            form.lam(3)
        self.assertEqual(cm.exception.required_n_max, 3)

    def test_record_round_trip(self):
        form = MaassForm(t_j=9.5, hecke={2: 0.3, 1: 1.0}, weight=0.25, parity='odd', source='x')
        again = MaassForm.from_record(form.to_record())
        self.assertEqual(again.hecke, form.hecke)
        self.assertEqual((again.t_j, again.weight, again.parity), (9.5, 0.25, 'odd'))
        self.assertEqual(form.to_record()['coefficients'], [[1, 1.0], [2, 0.3]])

    def test_key_tracks_coefficients(self):
        """Forms sharing t_j, source and n_max do not share memoized values"""
        sym2_cache.clear()
        low = synthetic_form(10.0, lambda p: 0.5, 400)
        high = synthetic_form(10.0, lambda p: 1.5, 400)
        self.assertNotEqual(low.key, high.key)
        self.assertEqual(low.key, synthetic_form(10.0, lambda p: 0.5, 400).key)

        sym2_L(low, 2.0, CTX, method='direct')
        served = sym2_L(high, 2.0, CTX, method='direct')
        sym2_cache.clear()
        fresh = sym2_L(high, 2.0, CTX, method='direct')
        self.assertEqual(served, fresh)
        self.assertNotEqual(served, sym2_L(low, 2.0, CTX, method='direct'))
        sym2_cache.clear()

    def test_load_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_forms('no/such/forms.jsonl')


class TestCoefficients(unittest.TestCase):
    """Test Hecke-multiplicative coefficient tables"""

    def test_square_coefficients(self):
        """λ(p) = 1 gives λ(p²) = 0 and λ(p⁴) = −1"""
        form = synthetic_form(10.0, lambda p: 1.0, 40)
        values = square_coefficients(form, 6)
        self.assertEqual(list(values), [0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0])

    def test_square_coefficients_need_primes(self):
        form = MaassForm(t_j=9.5, hecke={1: 1.0, 2: 0.5})
        with self.assertRaises(CoverageError) as cm:
            square_coefficients(form, 5)
        self.assertEqual(cm.exception.required_n_max, 5)

    def test_synthetic_forms_are_hecke(self):
        form = synthetic_form(10.0, {2: 0.5, 3: -1.2, 5: 0.1, 7: 1.9, 11: -0.4, 13: 0.0,
                                     17: 1.0, 19: -1.0, 23: 0.7, 29: 0.2, 31: -0.3,
                                     37: 0.9, 41: 0.6, 43: -0.8, 47: 1.1}, 50)
        self.assertEqual(hecke_violations(form, 1e-9), [])
        self.assertAlmostEqual(form.lam(6), 0.5 * -1.2)
        self.assertAlmostEqual(form.lam(4), 0.5 ** 2 - 1)

    def test_eisenstein_coefficients(self):
        t = 5.5
        form = eisenstein_form(t, 30)
        expected = sum(float(mpmath.cos(t * mpmath.log(a / (4 / a)))) for a in (1, 2, 4))
        self.assertAlmostEqual(form.lam(4), expected, places=12)
        self.assertEqual(form.kind, 'eisenstein')
        self.assertIsNone(form.weight)


class TestSpectralWeight(unittest.TestCase):
    """Test the spectral test function h"""

    def setUp(self):
        self.w = SpectralWeight(T=12.0, G=2.0, N=4)

    def test_q_and_f(self):
        self.assertAlmostEqual(float(q_N(0, 1)), 0.0025)
        self.assertEqual(f_alpha(0), 0)

    def test_even(self):
        self.assertEqual(h_eval(self.w, 11.3, CTX), h_eval(self.w, -11.3, CTX))
        self.assertEqual(h_eval(self.w.reflect(), 11.3, CTX), h_eval(self.w, -11.3, CTX))

    def test_peak(self):
        """h concentrates near r = T"""
        self.assertGreater(abs(h_eval(self.w, 12.0, CTX)), 100 * abs(h_eval(self.w, 20.0, CTX)))

    def test_window(self):
        lo, hi = self.w.window()
        self.assertAlmostEqual(12.0 - lo, hi - 12.0)
        self.assertGreater(hi, 20.0)

    def test_validation(self):
        with self.assertRaises(DomainError):
            SpectralWeight(T=12.0, G=0.0, N=4)
        with self.assertRaises(DomainError):
            SpectralWeight(T=12.0, G=2.0, N=0)
        self.assertIs(SpectralWeight(12.0, 2.0, 4, variant='H0').variant, WeightVariant.H0)


class TestArchimedeanFactors(unittest.TestCase):
    """Test L_∞ and its ratio"""

    def test_pole(self):
        with self.assertRaises(PoleError):
            l_infinity(0, 9.5, CTX)

    def test_ratio_is_unimodular(self):
        self.assertAlmostEqual(float(abs(l_infinity_ratio(1.5, 9.5, CTX))), 1.0, places=12)

    def test_ratio_main_term(self):
        """The Stirling main term tracks the exact ratio for large t_j"""
        main = l_infinity_ratio_main(3.0, 300.0)
        exact = l_infinity_ratio(3.0, 300.0, CTX)
        self.assertLess(abs(main.value - exact), 1e-3)
        self.assertAlmostEqual(main.alpha, 0.01)

    def test_ratio_window(self):
        """Expansion around T agrees with the main term at T + Gy"""
        window = l_infinity_ratio_window(3.0, 1000.0, 3.0, 1.0)
        direct = l_infinity_ratio_main(3.0, 1003.0).value
        self.assertLess(abs(window - direct), 1e-3)

    def test_conductor(self):
        self.assertEqual(analytic_conductor(0, 10), 121)
        self.assertAlmostEqual(convexity_reference(0, 10), 121 ** 0.25)


class TestAfeWeights(unittest.TestCase):
    """Test the polynomial and Gaussian of the approximate functional equation"""

    def test_polynomial(self):
        P = AfePolynomial(2, 1.0)
        self.assertEqual(P.degree, 5)
        self.assertEqual(P(0), 1)
        for root in P.roots:
            self.assertLess(abs(P(root)), 1e-12)

    def test_trivial_polynomial(self):
        P = AfePolynomial.trivial()
        self.assertEqual(P.degree, 0)
        self.assertEqual(P(mpmath.mpc(3, 4)), 1)
        with self.assertRaises(DomainError):
            AfePolynomial(-1)

    def test_gaussian_is_even(self):
        P = AfePolynomial(2, 1.0)
        z = mpmath.mpc(0.75, 3.2)
        self.assertEqual(afe_gaussian(z, P), afe_gaussian(-z, P))

    @pytest.mark.slow
    def test_split_recombines(self):
        """V(y, t, T) + Ṽ reproduces V(y, t, T + width·u)"""
        split = v_weight_split(3.0, 1.0, 40.0, 2.0, 0.5)
        self.assertLess(abs(split.base + split.tilde - split.full), 1e-8 * max(1, abs(split.full)))

    def test_kernel_sum_at_working_precision(self):
        """Γ(z) inverts to e^{−y}; the mpmath kernel sum goes well past double precision"""
        kernel = VWeightKernel(mpmath.gamma, a=1.0, height=40.0, rate=6.0, name="gamma", digits=30)
        value = kernel.dirichlet_sum(np.array([0.0, 1.0, 1.0, 1.0]), 0, _smallest_prime_factors(3))
        self.assertIsInstance(value, mpmath.mpc)
        with mpmath.workdps(30):
            expected = mpmath.exp(-1) + mpmath.exp(-2) + mpmath.exp(-3)
            self.assertLess(abs(value - expected), 1e-20)
        self.assertAlmostEqual(kernel(2.0).real, float(mpmath.exp(-2)), places=12)

    def test_double_kernel_has_no_dirichlet_sum(self):
        kernel = VWeightKernel(mpmath.gamma, a=1.0, height=40.0, rate=6.0)
        with self.assertRaises(DomainError):
            kernel.dirichlet_sum(np.array([0.0, 1.0]), 0, _smallest_prime_factors(2))


class TestSym2L(unittest.TestCase):
    """Test L(sym² u, s) on reference fixtures"""

    def test_method_validation(self):
        form = synthetic_form(10.0, lambda p: 1.0, 100)
        with self.assertRaises(DomainError):
            sym2_L_report(form, 2.0, CTX, method='guess')
        with self.assertRaises(DomainError):
            sym2_L_report(form, 1.0, CTX, method='direct')

    def test_eisenstein_direct(self):
        """L(sym² E, s) = ζ(s)ζ(s+2it)ζ(s−2it)"""
        t, s = 3.0, 2.0
        value = sym2_L(eisenstein_form(t, 4000), s, CTX)
        expected = mpmath.zeta(s) * mpmath.zeta(s + 2j * t) * mpmath.zeta(s - 2j * t)
        self.assertLess(abs(value - complex(expected)), 1e-4 * abs(expected))

    def test_harmonic_weight_simple_conventions(self):
        form = synthetic_form(10.0, lambda p: 1.0, 100, weight=0.4)
        self.assertEqual(harmonic_weight(form, 'unit'), 1.0)
        self.assertEqual(harmonic_weight(form, 'stored'), 0.4)
        with self.assertRaises(CoverageError):
            harmonic_weight(synthetic_form(10.0, lambda p: 1.0, 100, weight=None), 'stored')
        with self.assertRaises(PoleError):
            harmonic_weight(eisenstein_form(5.0, 100), 'sym2_l1')

    @pytest.mark.slow
    def test_eisenstein_afe(self):
        """The approximate functional equation with polar terms on the critical line"""
        t_j, s = 5.5, complex(0.5, 2.0)
        report = sym2_L_report(eisenstein_form(t_j, 4000), s, CTX, method='afe')
        s_mp = mpmath.mpc(s)
        expected = mpmath.zeta(s_mp) * mpmath.zeta(s_mp + 2j * t_j) * mpmath.zeta(s_mp - 2j * t_j)
        self.assertEqual(report.method, 'afe')
        self.assertNotEqual(report.polar, 0)
        self.assertLess(abs(report.value - complex(expected)), 1e-5 * abs(expected))

    @pytest.mark.slow
    def test_harmonic_conventions_differ_by_two(self):
        form = synthetic_form(10.0, lambda p: 1.0, 3000)
        self.assertAlmostEqual(harmonic_weight(form, 'sym2_l1'), 2 * harmonic_weight(form, 'inverse_l1'))


def test_load_sample_file(sample_jsonl):
    """Three records load, the malformed one is reported"""
    forms, report = load_forms_with_report(sample_jsonl)
    assert [f.source for f in forms] == ['synthetic-zero', 'synthetic-plus', 'synthetic-minus']
    assert report['loaded'] == 3
    assert report['rejected'][0]['index'] == 3
    assert forms[2].weight is None


def test_direct_series_of_synthetic_forms(synthetic_forms, ctx):
    """λ(p) = ±1 makes L(sym², s) = ζ(3s)"""
    expected = float(mpmath.zeta(6))
    for form in synthetic_forms:
        value = sym2_L(form, 2.0, ctx)
        assert abs(value - expected) < 1e-5 * expected
