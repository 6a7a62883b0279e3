"""
Zagier L-series
Square-root counts, fundamental discriminants, quadratic Dirichlet L-functions and the large-sieve moment table.
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd
from sympy import divisors, factorint, primerange
from sympy.functions.combinatorial.numbers import jacobi_symbol

from cache import dirichlet_cache, memoize
from config import config
from oscint import smooth_cutoff, smooth_cutoff_mellin
from specfun import (
    PrecisionContext, PoleError, DomainError, resolve_context, zeta,
)


logger = logging.getLogger(__name__)

DEFAULT_Q_MAX = 100000


class DivergentSeriesError(ValueError):
    """Direct Dirichlet series requested where truncation does not converge"""
    pass


# ---------------------------------------------------------------------------
# Elementary arithmetic

@lru_cache(maxsize=65536)
def _factor(n: int) -> Dict[int, int]:
    return factorint(abs(n)) if n not in (0, 1, -1) else {}


@lru_cache(maxsize=8)
def _primes_below(size: int) -> Tuple[int, ...]:
    return tuple(primerange(2, size))


def mobius(n: int) -> int:
    exponents = _factor(n).values()
    if any(e > 1 for e in exponents):
        return 0
    return -1 if len(exponents) % 2 else 1


def is_squarefree(n: int) -> bool:
    return all(e == 1 for e in _factor(n).values())


def is_fundamental(D: int) -> bool:
    """1, squarefree D ≡ 1 (mod 4), or 4m with m ≡ 2, 3 (mod 4) squarefree"""
    if D == 1:
        return True
    if D == 0:
        return False
    if D % 4 == 1:
        return is_squarefree(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


def kronecker(D: int, m: int) -> int:
    """Kronecker symbol (D/m)"""
    if m == 0:
        return 1 if abs(D) == 1 else 0

    result = 1
    if m < 0:
        m = -m
        if D < 0:
            result = -result

    while m % 2 == 0:
        m //= 2
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5):
            result = -result

    if m == 1:
        return result
    return result * int(jacobi_symbol(D % m, m))


@dataclass(frozen=True)
class DirichletChar:
    """Primitive quadratic character χ_D"""
    D: int

    def __post_init__(self):
        if not is_fundamental(self.D):
            raise DomainError(f"{self.D} is not a fundamental discriminant")

    @property
    def modulus(self) -> int:
        return abs(self.D)

    @property
    def parity(self) -> int:
        """0 for even characters (D > 0), 1 for odd"""
        return 0 if self.D > 0 else 1

    def __call__(self, m: int) -> int:
        return kronecker(self.D, m)

    def values(self) -> List[int]:
        """χ(0), ..., χ(|D|−1)"""
        return [kronecker(self.D, k) for k in range(self.modulus)]


@dataclass(frozen=True)
class ZagierPoint:
    """n = D·l² with D fundamental"""
    n: int
    D: int
    l: int

    def __post_init__(self):
        if self.n != self.D * self.l ** 2:
            raise DomainError(f"{self.n} != {self.D} * {self.l}^2")
        if not is_fundamental(self.D):
            raise DomainError(f"{self.D} is not a fundamental discriminant")

    @property
    def character(self) -> DirichletChar:
        return DirichletChar(self.D)


def decompose(n: int) -> ZagierPoint:
    """Unique n = D·l² with D a fundamental discriminant"""
    if n == 0 or n % 4 in (2, 3):
        raise DomainError(f"n = {n} is not a nonzero integer congruent to 0 or 1 mod 4")

    core, root = (1 if n > 0 else -1), 1
    for p, e in _factor(n).items():
        root *= p ** (e // 2)
        if e % 2:
            core *= p

    if core % 4 == 1:
        return ZagierPoint(n=n, D=core, l=root)
    return ZagierPoint(n=n, D=4 * core, l=root // 2)


# ---------------------------------------------------------------------------
# Square-root counts

def rho_q_bruteforce(n: int, q: int) -> int:
    modulus = 4 * q
    return sum(1 for x in range(2 * q) if (x * x - n) % modulus == 0)


def _local_root_count(n: int, p: int, e: int) -> int:
    """#{x mod p^e : x² ≡ n mod p^e}"""
    if e == 0:
        return 1
    modulus = p ** e
    residue = n % modulus
    if residue == 0:
        return p ** (e // 2)

    k = 0
    while residue % p == 0:
        residue //= p
        k += 1
    if k % 2:
        return 0

    depth = e - k
    lift = p ** (k // 2)
    if p != 2:
        u = residue % p
        return 2 * lift if pow(u, (p - 1) // 2, p) == 1 else 0

    # odd square roots of an odd unit modulo 2^depth
    if depth == 1:
        return lift
    if depth == 2:
        return 2 * lift if residue % 4 == 1 else 0
    return 4 * lift if residue % 8 == 1 else 0


def rho_local(n: int, p: int, e: int) -> int:
    """ρ_{p^e}(n); q ↦ ρ_q(n) is multiplicative for n ≡ 0, 1 (mod 4)"""
    if p == 2:
        return _local_root_count(n, 2, e + 2) // 2
    return _local_root_count(n, p, e)


def rho_q(n: int, q: int) -> int:
    """#{x mod 2q : x² ≡ n mod 4q} from the prime-power factorization of q"""
    if q < 1:
        raise DomainError(f"q must be positive, got {q}")
    if n % 4 in (2, 3):
        return 0
    count = 1
    for p, e in _factor(q).items():
        count *= rho_local(n, p, e)
        if count == 0:
            break
    return count


def zagier_coefficients(n: int, size: int) -> np.ndarray:
    """a(d) for d < size, where ρ_q(n) = Σ_{d | q} a(d).

    a is multiplicative; a(p) = (n/p) and a(p^e) = 0 for e ≥ 2 when p ∤ 2n,
    and for p | 2n the local values ρ_{p^e} − ρ_{p^{e−1}} are supported on
    finitely many e.
    """
    a = np.ones(size, dtype=np.float64)
    a[0] = 0.0
    if n % 4 in (2, 3):
        a[1:] = 0.0
        return a

    special = set(_factor(2 * n))
    for p in _primes_below(size):
        if p in special:
            factor = np.ones(size, dtype=np.float64)
            e, power = 1, p
            while power < size:
                factor[power::power] = rho_local(n, p, e) - rho_local(n, p, e - 1)
                e += 1
                power *= p
            a *= factor
        else:
            a[p::p] *= kronecker(n, p)
            if p * p < size:
                a[p * p::p * p] = 0.0
    return a


@dataclass
class DirectSeriesResult:
    value: complex
    tail_estimate: float
    terms: int


def zagier_direct_series(n: int, s, q_max: Optional[int] = None,
                         ctx: Optional[PrecisionContext] = None) -> DirectSeriesResult:
    """ζ(2s)/ζ(s)·Σ_q ρ_q(n) q^{−s} through the reduced coefficients a = μ * ρ.

    The ζ(s) cancels against Σ_{d|q}, leaving ζ(2s)·Σ a(d) d^{−s}, which is
    summed with a smooth cutoff at q_max. When n is a square the pole of the
    reduced series at s = 1 is removed with its density estimated from the
    same coefficients. The tail estimate is the change from q_max/2 to q_max.
    """
    ctx = resolve_context(ctx)
    s = mpmath.mpmathify(s)
    if mpmath.re(s) < 1.5:
        raise DivergentSeriesError(f"direct series needs Re(s) >= 1.5, got {s}")
    if n % 4 in (2, 3):
        return DirectSeriesResult(value=mpmath.mpc(0), tail_estimate=0.0, terms=0)

    q_max = q_max or DEFAULT_Q_MAX
    coefficients = zagier_coefficients(n, 2 * q_max + 1)
    d = np.arange(coefficients.size, dtype=np.float64)
    log_d = np.log(np.where(d > 0, d, 1.0))
    powers = np.exp(-complex(s) * log_d)
    square = n > 0 and math.isqrt(n) ** 2 == n

    def smoothed(cutoff: int) -> complex:
        weights = smooth_cutoff(d / cutoff)
        total = complex(np.sum(coefficients * weights * powers))
        if square:
            density = float(np.sum(coefficients * weights)) / (1.5 * cutoff)
            with mpmath.workdps(20):
                total -= density * complex(cutoff ** (1 - s) * smooth_cutoff_mellin(1 - s))
        return total

    full = smoothed(q_max)
    half = smoothed(q_max // 2)
    with ctx.workdps(5):
        scale = zeta(2 * s, ctx)
        value = scale * mpmath.mpc(full)
        tail = float(abs(scale * (mpmath.mpc(full) - mpmath.mpc(half))))
    return DirectSeriesResult(value=value, tail_estimate=tail, terms=2 * q_max)


def zagier_direct(n: int, s, q_max: Optional[int] = None, ctx: Optional[PrecisionContext] = None):
    return zagier_direct_series(n, s, q_max, ctx).value


# ---------------------------------------------------------------------------
# Dirichlet L-functions

def _gamma_shift(chi: DirichletChar) -> int:
    return chi.parity


def _dirichlet_key(chi, s, ctx=None):
    return (chi.D, repr(mpmath.mpmathify(s)), resolve_context(ctx).working_digits)


def completed_dirichlet_L(chi: DirichletChar, s, ctx: Optional[PrecisionContext] = None):
    """Λ(s, χ_D) = (q/π)^{(s+a)/2} Γ((s+a)/2) L(s, χ_D), with Λ(s) = Λ(1 − s)"""
    ctx = resolve_context(ctx)
    s = mpmath.mpmathify(s)
    a = _gamma_shift(chi)
    with ctx.workdps(10):
        factor = (mpmath.mpf(chi.modulus) / mpmath.pi) ** ((s + a) / 2) * mpmath.gamma((s + a) / 2)
        value = factor * dirichlet_L(chi, s, ctx)
    return +value


@memoize(dirichlet_cache, key_func=_dirichlet_key)
def dirichlet_L(chi: DirichletChar, s, ctx: Optional[PrecisionContext] = None):
    """L(s, χ_D) by the incomplete-gamma approximate functional equation.

    Λ(s) = Σ_n χ(n)[(q/π)^{(s+a)/2} n^{−s} Γ((s+a)/2, πn²/q)
                    + (q/π)^{(1−s+a)/2} n^{s−1} Γ((1−s+a)/2, πn²/q)]
    with root number 1 for quadratic characters; D = 1 adds −1/s − 1/(1−s).
    """
    ctx = resolve_context(ctx)
    s = mpmath.mpmathify(s)
    if chi.D == 1 and s == 1:
        raise PoleError("zeta has a pole at s = 1")

    q = chi.modulus
    a = _gamma_shift(chi)
    height = abs(float(mpmath.im(s)))
    extra = int(math.pi * height / 4 / math.log(10)) + 10

    with ctx.workdps(extra):
        q_mp = mpmath.mpf(q)
        alpha = (s + a) / 2
        beta = (1 - s + a) / 2
        left = (q_mp / mpmath.pi) ** alpha
        right = (q_mp / mpmath.pi) ** beta

        budget = (ctx.working_digits + extra) * math.log(10) + height
        n_max = int(math.sqrt(q * budget / math.pi)) + 2

        terms = []
        for n in range(1, n_max + 1):
            c = chi(n)
            if c == 0:
                continue
            x = mpmath.pi * n * n / q_mp
            terms.append(c * (left * mpmath.power(n, -s) * mpmath.gammainc(alpha, x)
                              + right * mpmath.power(n, s - 1) * mpmath.gammainc(beta, x)))
        total = mpmath.fsum(terms)
        if chi.D == 1:
            total += -1 / s - 1 / (1 - s)

        value = total / (left * mpmath.gamma(alpha))
    return +value


def dirichlet_L_hurwitz(chi: DirichletChar, s, ctx: Optional[PrecisionContext] = None):
    """Independent evaluation through Hurwitz zeta values, q^{−s} Σ_k χ(k) ζ(s, k/q)"""
    ctx = resolve_context(ctx)
    if chi.D == 1 and mpmath.mpmathify(s) == 1:
        raise PoleError("zeta has a pole at s = 1")
    with ctx.workdps(10):
        value = mpmath.dirichlet(s, chi.values())
    return +value


# ---------------------------------------------------------------------------
# Zagier L-series through the decomposition

def tau_nu(nu, k: int):
    """τ_ν(k) = Σ_{ab=k} (a/b)^ν"""
    nu = mpmath.mpmathify(nu)
    return mpmath.fsum(mpmath.power(mpmath.mpf(a) / (k // a), nu) for a in divisors(k))


def t_factor(zp: ZagierPoint, s, ctx: Optional[PrecisionContext] = None):
    """Σ_{l₁l₂=l} χ_D(l₁) μ(l₁) l₁^{−1/2} τ_{s−1/2}(l₂)"""
    ctx = resolve_context(ctx)
    with ctx.workdps(5):
        s = mpmath.mpmathify(s)
        total = mpmath.mpf(0)
        for l1 in divisors(zp.l):
            weight = kronecker(zp.D, l1) * mobius(l1)
            if weight:
                total += weight / mpmath.sqrt(l1) * tau_nu(s - 0.5, zp.l // l1)
    return +total


def zagier_L(n: int, s, ctx: Optional[PrecisionContext] = None):
    """𝓛_n(s) = l^{1/2−s} T_l(s) L(s, χ_D)"""
    ctx = resolve_context(ctx)
    zp = decompose(n)
    with ctx.workdps(5):
        s = mpmath.mpmathify(s)
        value = (mpmath.power(zp.l, 0.5 - s) * t_factor(zp, s, ctx)
                 * dirichlet_L(zp.character, s, ctx))
    return +value


# ---------------------------------------------------------------------------
# Large-sieve experiment

def _moment_terms(ns: Sequence[int], t: float, digits: int) -> List[float]:
    ctx = PrecisionContext(working_digits=digits, target_rel_error=10.0 ** (1 - digits))
    s = mpmath.mpc(0.5, 2 * t)
    return [float(abs(zagier_L(n, s, ctx)) ** 2) for n in ns]


def second_moment_table(N_list: Sequence[int], t: float, ctx: Optional[PrecisionContext] = None,
                        jobs: int = 1, epsilon: Optional[float] = None) -> pd.DataFrame:
    """Σ_{0<n≤N} |𝓛_n(1/2+2it)|² and its ratio to N·(N(1+|t|))^ε for each N"""
    ctx = resolve_context(ctx)
    epsilon = config.report.epsilon if epsilon is None else epsilon
    columns = ['N', 'moment', 'ratio', 't', 'epsilon']
    if not N_list:
        return pd.DataFrame(columns=columns)
    if list(N_list) != sorted(N_list):
        raise DomainError("N_list must be ascending")
    if t < 0:
        raise DomainError("t must be nonnegative")

    ns = [n for n in range(1, max(N_list) + 1) if n % 4 in (0, 1)]
    chunk = max(1, len(ns) // max(1, 4 * jobs))
    chunks = [ns[i:i + chunk] for i in range(0, len(ns), chunk)]

    logger.info(f"second_moment_table: {len(ns)} values at t={t} over {len(chunks)} chunks")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            parts = list(executor.map(_moment_terms, chunks, [t] * len(chunks),
                                      [ctx.working_digits] * len(chunks)))
    else:
        parts = [_moment_terms(part, t, ctx.working_digits) for part in chunks]

    values = np.array([v for part in parts for v in part])
    cumulative = np.cumsum(values)
    index = np.array(ns)

    rows = []
    for N in N_list:
        count = int(np.searchsorted(index, N, side='right'))
        moment = float(cumulative[count - 1]) if count else 0.0
        normalizer = N * (N * (1 + abs(t))) ** epsilon
        rows.append({'N': N, 'moment': moment, 'ratio': moment / normalizer,
                     't': t, 'epsilon': epsilon})
    return pd.DataFrame(rows, columns=columns)
