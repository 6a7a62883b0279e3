"""
First moment tests
"""

import os
import sys
import json
import unittest
from unittest.mock import patch

import mpmath
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from maass import CoverageError, SpectralWeight, h_eval, sym2_L, synthetic_form
from moment import (
    ComponentValue, CriticalPoint, MomentBreakdown, arithmetic_side, check_window, continuous_term_integrand,
    decay_cutoff, i_transform, i_transform_asymptotic, i_transform_integrand, i_transform_limit_at_two,
    i_transform_result, i_transform_singular_part, main_term, s2_term, second_moment_experiment,
    second_moment_grid, second_moment_terms, verify_first_moment,
)
from specfun import DomainError, PrecisionContext, RegimeWarning

CTX = PrecisionContext(working_digits=30, target_rel_error=1e-20)


def make_breakdown(**overrides):
    values = dict(spectral=3 + 0j, mt=1 + 0j, ct=0.5 + 0j, et=0.25 + 0j, s1=0.25 + 0j, s2=1 + 0j,
                  residual=0j, tolerances={'mt': 1e-10, 's2': 2e-10},
                  residuals_by_convention={'sym2_l1': 0j, 'unit': 0.5 + 0j})
    values.update(overrides)
    breakdown = MomentBreakdown(**values)
    breakdown.residual = breakdown.recompute_residual()
    return breakdown


class TestMomentBreakdown(unittest.TestCase):
    """Test the breakdown record"""

    def test_critical_point(self):
        self.assertEqual(CriticalPoint(1.5).rho, mpmath.mpc(0.5, 3))

    def test_arithmetic_and_residual(self):
        breakdown = make_breakdown()
        self.assertEqual(breakdown.arithmetic, 3)
        self.assertEqual(breakdown.residual, 0)
        self.assertAlmostEqual(breakdown.combined_tolerance, 3e-10 + 3e-8)
        self.assertTrue(breakdown.passed)

    def test_failing_residual(self):
        breakdown = make_breakdown(spectral=3.001 + 0j)
        self.assertFalse(breakdown.passed)
        self.assertAlmostEqual(abs(breakdown.residual), 0.001)

    def test_convention_passes(self):
        breakdown = make_breakdown()
        self.assertTrue(breakdown.convention_passes('sym2_l1'))
        self.assertFalse(breakdown.convention_passes('unit'))

    def test_to_dict_is_json(self):
        data = make_breakdown(spectral=3 + 1e-3j).to_dict()
        json.dumps(data)
        self.assertEqual(data['components']['mt'], [1.0, 0.0])
        self.assertEqual(data['spectral'], [3.0, 1e-3])
        self.assertFalse(data['passed'])
        self.assertEqual(set(data['residuals_by_convention']), {'sym2_l1', 'unit'})


class TestWindowAndCutoffs(unittest.TestCase):
    """Test catalog coverage and series cutoffs"""

    def setUp(self):
        self.w = SpectralWeight(T=10.0, G=2.0, N=4)
        self.forms = [synthetic_form(t_j, lambda p: 1.0, 50) for t_j in (9.5, 11.0, 14.0)]

    def test_catalog_too_short(self):
        with self.assertRaises(CoverageError):
            check_window(self.forms, self.w)

    def test_explicit_coverage(self):
        needed = check_window(self.forms, self.w, coverage=100.0)
        self.assertEqual(needed, self.w.window()[1])

    def test_decay_cutoff(self):
        self.assertEqual(decay_cutoff(1, CriticalPoint(0.0), self.w), 126)
        self.assertEqual(decay_cutoff(2, CriticalPoint(3.0), self.w), 504)

    def test_argument_validation(self):
        cp = CriticalPoint(0.5)
        with self.assertRaises(DomainError):
            arithmetic_side(0, cp, self.w, CTX)
        with self.assertRaises(DomainError):
            i_transform_integrand(0, cp, self.w, 10.0, CTX)
        with self.assertRaises(DomainError):
            i_transform_result(-1, cp, self.w, CTX)


class TestITransform(unittest.TestCase):
    """Test I(x, ρ; h) on both sides of x = 2"""

    def setUp(self):
        self.cp = CriticalPoint(0.5)
        self.w = SpectralWeight(T=10.0, G=2.0, N=4)

    def test_singular_part_domain(self):
        with self.assertRaises(DomainError):
            i_transform_singular_part(2.0, self.cp, self.w, CTX)
        with self.assertRaises(DomainError):
            i_transform_singular_part(2.5, CriticalPoint(0.0), self.w, CTX)
        with self.assertRaises(DomainError):
            i_transform_limit_at_two(self.cp, self.w, delta=1e-13, ctx=CTX)

    @pytest.mark.slow
    def test_negligible_past_decay_cutoff(self):
        """|I(x)| ≤ 1e-10 once x ≥ 10 T^{1.1} √(1+|t|)"""
        x = decay_cutoff(1, self.cp, self.w)
        result = i_transform_result(x, self.cp, self.w, CTX, abs_floor=1e-12)
        self.assertLessEqual(abs(result.value), 1e-10)

    @pytest.mark.slow
    def test_narrow_weight_midpoint(self):
        """As G → 0 the integral tends to G√π times the integrand at r = ±T"""
        T, G = 50.0, 0.05
        w = SpectralWeight(T=T, G=G, N=4)
        cp = CriticalPoint(1.0)
        value = i_transform(3.0, cp, w, CTX)
        peaks = [i_transform_integrand(3.0, cp, w, r, CTX) for r in (T, -T)]
        scale = G * mpmath.sqrt(mpmath.pi)
        expected = scale * (peaks[0] + peaks[1])
        self.assertLess(abs(value - expected), 0.1 * scale * (abs(peaks[0]) + abs(peaks[1])))

    @pytest.mark.slow
    def test_limit_at_two(self):
        """I(2 + δ) minus its oscillating branch approaches I(2)"""
        limit = i_transform_limit_at_two(self.cp, self.w, ctx=CTX)
        self.assertLess(limit.delta, 1e-6)
        self.assertNotEqual(limit.singular, 0)
        self.assertLess(limit.relative_gap, 1e-2)
        json.dumps(limit.to_dict())

    @pytest.mark.slow
    def test_two_paths_below_two(self):
        """The Airy main term tracks the reference ₂F₁ at large T"""
        w = SpectralWeight(T=400.0, G=10.0, N=4)
        cp = CriticalPoint(3.0)
        exact = i_transform(1.0, cp, w, CTX)
        with self.assertWarns(RegimeWarning):
            asymptotic = i_transform_asymptotic(1.0, cp, w, CTX)
        self.assertNotEqual(exact, 0)
        self.assertLess(abs(asymptotic - exact), 5e-2 * abs(exact))


class TestArithmeticSide(unittest.TestCase):
    """Test the arithmetic components against direct evaluation"""

    def setUp(self):
        self.cp = CriticalPoint(0.5)
        self.w = SpectralWeight(T=10.0, G=2.0, N=4)

    def test_continuous_integrand_is_even(self):
        for r in (0.75, 7.5, 12.0):
            plus = continuous_term_integrand(2, self.cp, self.w, r, CTX)
            minus = continuous_term_integrand(2, self.cp, self.w, -r, CTX)
            self.assertNotEqual(plus, 0)
            self.assertLess(abs(plus - minus), 1e-20 * abs(plus))

    @pytest.mark.slow
    def test_main_term_by_substitution(self):
        """MT from separately integrated ∫ r h(r) tanh(πr) dr and I(2, ρ; h)"""
        m, rho = 2, self.cp.rho
        mt = main_term(m, self.cp, self.w, CTX)
        with mpmath.workdps(35):
            tanh_integral = 2 * mpmath.quad(
                lambda r: r * h_eval(self.w, r, CTX) * mpmath.tanh(mpmath.pi * r), [0, 5, 10, 15, 20, 30])
            i2 = mpmath.quad(lambda r: i_transform_integrand(2, self.cp, self.w, r, CTX),
                             [-30, -20, -15, -10, -5, 0, 5, 10, 15, 20, 30])
            expected = (mpmath.zeta(2 * rho) / (mpmath.pi ** 2 * mpmath.power(m, rho)) * tanh_integral
                        + mpmath.power(2 * mpmath.pi, rho - 1) * mpmath.zeta(2 * rho - 1) * i2
                        / mpmath.power(2 * m, 1 - rho))
        self.assertLess(abs(mt.value - expected), 1e-8 * abs(expected))

    @pytest.mark.slow
    def test_s2_stable_when_cutoff_doubles(self):
        w = SpectralWeight(T=4.0, G=2.0, N=4)
        cutoff = decay_cutoff(1, self.cp, w)
        short = s2_term(1, self.cp, w, CTX, n_max=cutoff)
        extended = s2_term(1, self.cp, w, CTX, n_max=2 * cutoff)
        self.assertEqual(short.details['cutoff'], cutoff)
        self.assertEqual(extended.details['cutoff'], 2 * cutoff)
        self.assertLessEqual(abs(extended.value - short.value), 1e-8 * max(1.0, abs(short.value)))


class TestSecondMoment(unittest.TestCase):
    """Test the second-moment experiment"""

    def setUp(self):
        self.forms = [synthetic_form(t_j, lambda p: 1.0, 2000) for t_j in (9.5, 11.0, 12.5)]

    def test_empty_window(self):
        row = second_moment_experiment(self.forms, 0.0, 20.0, 3.0, CTX, convention='unit')
        self.assertEqual(row.forms, 0)
        self.assertEqual(row.moment, 0.0)
        self.assertEqual(row.ratio, 0.0)

    def test_grid_shape(self):
        table = second_moment_grid(self.forms, [20.0, 30.0], 3.0, [0.0, 1.0], CTX, convention='unit')
        self.assertEqual(len(table), 4)
        self.assertEqual(list(table.columns), ['T', 'G', 't', 'forms', 'moment', 'ratio', 'epsilon'])
        self.assertTrue((table['forms'] == 0).all())

    @pytest.mark.slow
    def test_window_selection_and_ratio(self):
        """T < t_j ≤ T + G picks the first two forms"""
        row = second_moment_experiment(self.forms, 0.0, 9.0, 3.0, CTX, convention='unit', epsilon=0.1)
        self.assertEqual(row.forms, 2)
        self.assertGreater(row.moment, 0)
        self.assertAlmostEqual(row.ratio, row.moment / (9.0 ** 1.1 * 3.0))

    @pytest.mark.slow
    def test_terms_table(self):
        """Rows skip n = 2m and each term combines both weight variants"""
        table = second_moment_terms(0.5, 10.0, 1.0, 4, 1, 3, CTX)
        self.assertEqual(list(table.columns), ['m', 'n', 'sum', 'h0', 'hinf', 'term'])
        self.assertEqual(list(table['n']), [1, 3])
        self.assertEqual(list(table['sum']), ['S1', 'S2'])
        for _, row in table.iterrows():
            combined = row['h0'] + row['hinf']
            self.assertLess(abs(row['term'] - combined), 1e-12 * max(abs(combined), 1e-300))


@pytest.mark.slow
class TestReducedFirstMoment(unittest.TestCase):
    """Test one first-moment run over a single synthetic form"""

    def test_single_form_run(self):
        cp, w = CriticalPoint(1.0), SpectralWeight(T=12.0, G=2.0, N=4)
        form = synthetic_form(12.5, lambda p: 1.0, 4000, weight=0.4)
        breakdown = verify_first_moment([form], 1, cp, w, CTX, convention='stored',
                                        conventions=['stored', 'unit'], coverage=100.0)

        L = complex(sym2_L(form, complex(cp.rho), CTX, method='afe'))
        expected = complex(h_eval(w, form.t_j, CTX)) * 0.4 * L
        self.assertLess(abs(breakdown.spectral - expected), 1e-10 * abs(expected))
        self.assertEqual(breakdown.residual, breakdown.recompute_residual())

        # the unit control weighs the form by 1 instead of 0.4
        gap = breakdown.residuals_by_convention['unit'] - breakdown.residuals_by_convention['stored']
        self.assertLess(abs(gap - 1.5 * expected), 1e-10 * abs(expected))

        self.assertGreater(breakdown.s2_cutoff, 2)
        self.assertEqual(set(breakdown.tolerances), {'mt', 'ct', 'et', 's1', 's2', 'spectral'})
        json.dumps(breakdown.to_dict())

    def test_negative_control_fails(self):
        """Against an arithmetic side that matches the stored weights, the unit control fails"""
        cp, w = CriticalPoint(1.0), SpectralWeight(T=12.0, G=2.0, N=4)
        form = synthetic_form(12.5, lambda p: 1.0, 4000, weight=0.4)
        L = sym2_L(form, complex(cp.rho), CTX, method='afe')
        expected = complex(h_eval(w, form.t_j, CTX)) * 0.4 * L
        matched = {name: ComponentValue(value=mpmath.mpc(0), tolerance=0.0) for name in ('ct', 'et', 's1')}
        matched['mt'] = ComponentValue(value=mpmath.mpc(expected), tolerance=1e-15)
        matched['s2'] = ComponentValue(value=mpmath.mpc(0), tolerance=0.0, details={'cutoff': 3})

        with patch('moment.arithmetic_side', return_value=matched):
            breakdown = verify_first_moment([form], 1, cp, w, CTX, convention='stored',
                                            conventions=['stored', 'unit'], coverage=100.0)
        self.assertTrue(breakdown.passed)
        self.assertTrue(breakdown.convention_passes('stored'))
        self.assertFalse(breakdown.convention_passes('unit'))


if __name__ == '__main__':
    unittest.main()
