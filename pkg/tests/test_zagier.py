"""
Zagier L-series tests
"""

import os
import sys
import random
import warnings
import unittest

import mpmath
import pandas as pd

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from specfun import DomainError, PoleError, PrecisionContext
from zagier import (
    DirectSeriesResult, DirichletChar, DivergentSeriesError, ZagierPoint, completed_dirichlet_L,
    decompose, dirichlet_L, dirichlet_L_hurwitz, is_fundamental, kronecker, mobius, rho_q,
    rho_q_bruteforce, second_moment_table, t_factor, tau_nu, zagier_coefficients,
    zagier_direct_series, zagier_L,
)

CTX = PrecisionContext(working_digits=30, target_rel_error=1e-20)


class TestArithmetic(unittest.TestCase):
    """Test discriminants, characters and root counts"""

    def test_fundamental_discriminants(self):
        for D in (1, 5, 8, 12, -3, -4, -7, -8):
            self.assertTrue(is_fundamental(D), D)
        for D in (0, 4, 9, 16, -12, 2, 3):
            self.assertFalse(is_fundamental(D), D)

    def test_decompose(self):
        """n = D·l² with D fundamental"""
        cases = {5: (5, 1), 12: (12, 1), -3: (-3, 1), 45: (5, 3), 1: (1, 1),
                 -4: (-4, 1), 16: (1, 4), -12: (-3, 2), 32: (8, 2)}
        for n, (D, l) in cases.items():
            point = decompose(n)
            self.assertEqual((point.D, point.l), (D, l), n)

    def test_decompose_rejects(self):
        for n in (0, 2, 3, -2):
            with self.assertRaises(DomainError):
                decompose(n)
        with self.assertRaises(DomainError):
            ZagierPoint(n=20, D=5, l=3)

    def test_kronecker(self):
        self.assertEqual(kronecker(-4, 3), -1)
        self.assertEqual(kronecker(5, 2), -1)
        self.assertEqual(kronecker(8, 2), 0)
        self.assertEqual(kronecker(-3, 7), 1)

    def test_kronecker_without_deprecated_sympy_calls(self):
        """Odd moduli go through sympy's current Jacobi symbol"""
        with warnings.catch_warnings():
            warnings.simplefilter('error', DeprecationWarning)
            self.assertEqual(kronecker(5, 7), -1)
            self.assertEqual(kronecker(-7, 15), kronecker(-7, 3) * kronecker(-7, 5))
            self.assertEqual(kronecker(12, 9), 0)

    def test_character(self):
        chi = DirichletChar(-4)
        self.assertEqual(chi.values(), [0, 1, 0, -1])
        self.assertEqual(chi.parity, 1)
        with self.assertRaises(DomainError):
            DirichletChar(9)

    def test_mobius(self):
        self.assertEqual([mobius(n) for n in (1, 2, 6, 12, 30)], [1, -1, 1, 0, -1])

    def test_rho_examples(self):
        self.assertEqual(rho_q(1, 1), 1)
        self.assertEqual(rho_q(1, 2), 2)
        self.assertEqual(rho_q(7, 5), 0)
        self.assertEqual(rho_q(6, 11), 0)

    def test_rho_against_enumeration(self):
        """Factorized counts equal brute-force enumeration"""
        rng = random.Random(11)
        for _ in range(200):
            n = rng.randint(-10000, 10000)
            q = rng.randint(1, 200)
            self.assertEqual(rho_q(n, q), rho_q_bruteforce(n, q), (n, q))

    def test_rho_prime_powers(self):
        for n in (-12, 4, 8, 16, 32, 36, 45, -27):
            for q in (2, 4, 8, 16, 32, 9, 27, 25):
                self.assertEqual(rho_q(n, q), rho_q_bruteforce(n, q), (n, q))

    def test_reduced_coefficients(self):
        """Σ_{d|q} a(d) = ρ_q(n)"""
        for n in (5, -12, 45, 4, -3):
            a = zagier_coefficients(n, 61)
            for q in range(1, 61):
                total = sum(a[d] for d in range(1, q + 1) if q % d == 0)
                self.assertEqual(int(round(total)), rho_q(n, q), (n, q))

    def test_tau(self):
        self.assertAlmostEqual(float(tau_nu(0, 6)), 4.0)
        self.assertAlmostEqual(float(tau_nu(1, 2)), 2.5)
        self.assertEqual(t_factor(decompose(5), 2, CTX), 1)


class TestDirichletL(unittest.TestCase):
    """Test quadratic Dirichlet L-functions"""

    def test_zeta_special_case(self):
        self.assertAlmostEqual(float(dirichlet_L(DirichletChar(1), 2, CTX)), float(mpmath.pi ** 2 / 6), places=14)
        with self.assertRaises(PoleError):
            dirichlet_L(DirichletChar(1), 1, CTX)

    def test_leibniz(self):
        """L(1, χ₋₄) = π/4"""
        self.assertAlmostEqual(float(mpmath.re(dirichlet_L(DirichletChar(-4), 1, CTX))),
                               float(mpmath.pi / 4), places=14)

    def test_against_hurwitz(self):
        """Two independent evaluations agree on and off the critical line"""
        for D in (-4, -3, 5, 8, 12):
            chi = DirichletChar(D)
            for s in (2, mpmath.mpc(0.5, 3)):
                value = dirichlet_L(chi, s, CTX)
                reference = dirichlet_L_hurwitz(chi, s, CTX)
                self.assertLess(abs(value - reference), 1e-12 * max(1, abs(reference)), (D, s))

    def test_functional_equation(self):
        s = mpmath.mpc(0.3, 2)
        for D in (5, -4):
            chi = DirichletChar(D)
            left = completed_dirichlet_L(chi, s, CTX)
            right = completed_dirichlet_L(chi, 1 - s, CTX)
            self.assertLess(abs(left - right), 1e-12 * abs(left), D)


class TestZagierL(unittest.TestCase):
    """Test the decomposition route against the direct series"""

    def test_first_series_is_zeta(self):
        s = mpmath.mpc(0.5, 4)
        self.assertLess(abs(zagier_L(1, s, CTX) - mpmath.zeta(s)), 1e-12)

    def test_conjugation(self):
        s = mpmath.mpc(0.5, 2.5)
        for n in (-3, 8, 45):
            self.assertLess(abs(zagier_L(n, mpmath.conj(s), CTX) - mpmath.conj(zagier_L(n, s, CTX))), 1e-12)

    def test_direct_series_agrees(self):
        """ζ(2s)/ζ(s)·Σρ_q(n)q^{−s} matches l^{1/2−s}T_l(s)L(s,χ_D) at s = 2"""
        for n in (5, -12, 45, -3):
            direct = zagier_direct_series(n, 2, ctx=CTX)
            decomposed = zagier_L(n, 2, CTX)
            self.assertIsInstance(direct, DirectSeriesResult)
            self.assertLess(abs(direct.value - decomposed), 1e-6 * abs(decomposed), n)

    def test_vanishing_residue_classes(self):
        result = zagier_direct_series(6, 2, q_max=100, ctx=CTX)
        self.assertEqual(result.value, 0)
        self.assertEqual(result.terms, 0)

    def test_divergent_region(self):
        with self.assertRaises(DivergentSeriesError):
            zagier_direct_series(5, 1.2, ctx=CTX)


class TestSecondMoment(unittest.TestCase):
    """Test the large-sieve table"""

    def test_table(self):
        table = second_moment_table([12, 24], 0.0, CTX)
        self.assertIsInstance(table, pd.DataFrame)
        self.assertEqual(list(table['N']), [12, 24])
        self.assertGreater(table['moment'].iloc[1], table['moment'].iloc[0])
        expected_ratio = table['moment'].iloc[0] / (12 * 12 ** 0.1)
        self.assertAlmostEqual(table['ratio'].iloc[0], expected_ratio)

    def test_first_row_by_hand(self):
        """n ∈ {1, 4} up to N = 4"""
        table = second_moment_table([4], 1.0, CTX)
        s = mpmath.mpc(0.5, 2)
        expected = float(abs(zagier_L(1, s, CTX)) ** 2 + abs(zagier_L(4, s, CTX)) ** 2)
        self.assertAlmostEqual(table['moment'].iloc[0], expected, places=10)

    def test_empty_and_invalid(self):
        self.assertTrue(second_moment_table([], 0.0, CTX).empty)
        with self.assertRaises(DomainError):
            second_moment_table([24, 12], 0.0, CTX)
        with self.assertRaises(DomainError):
            second_moment_table([12], -1.0, CTX)


if __name__ == '__main__':
    unittest.main()
