"""
Symmetric Square L-functions
Maass form records, spectral test functions, archimedean factors and L(sym² u, s) by the approximate functional equation.
"""

import math
import hashlib
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import mpmath
import numpy as np

from cache import memoize, sym2_cache
from catalog import (
    CatalogClient, CatalogQualityMonitor, MaassFormValidator, coefficient_map, read_jsonl,
)
from config import config
from oscint import VerticalLineRule, gaussian_cutoff, smooth_cutoff, smooth_cutoff_mellin
from specfun import PrecisionContext, DomainError, PoleError, resolve_context


logger = logging.getLogger(__name__)


class CoverageError(LookupError):
    """Stored coefficients or catalog window do not reach what a computation needs"""

    def __init__(self, message: str, required_n_max: Optional[int] = None):
        super().__init__(message)
        self.required_n_max = required_n_max


# ---------------------------------------------------------------------------
# Forms

@dataclass(frozen=True, eq=False)
class MaassForm:
    """Hecke-Maass cusp form of level one (or a reference fixture with the same data layout)"""
    t_j: float
    hecke: Dict[int, float]
    weight: Optional[float] = None
    parity: str = 'even'
    source: str = 'file'
    kind: str = 'cusp'

    def __post_init__(self):
        if not self.t_j > 0:
            raise DomainError(f"t_j must be positive, got {self.t_j}")
        if abs(self.hecke.get(1, 0.0) - 1.0) > config.catalog.hecke_tolerance:
            raise DomainError("lambda(1) must equal 1")
        if self.weight is not None and not self.weight > 0:
            raise DomainError(f"weight must be positive, got {self.weight}")

    @property
    def n_max(self) -> int:
        return max(self.hecke)

    @cached_property
    def coefficient_digest(self) -> str:
        """SHA-256 of the stored (n, λ(n)) pairs"""
        text = ";".join(f"{n}:{self.hecke[n]!r}" for n in sorted(self.hecke))
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def key(self) -> Tuple:
        return (self.kind, self.source, repr(self.t_j), self.n_max, self.coefficient_digest)

    def lam(self, n: int) -> float:
        if n not in self.hecke:
            raise CoverageError(f"lambda({n}) not stored for form {self.source}", required_n_max=n)
        return self.hecke[n]

    @classmethod
    def from_record(cls, record: dict) -> "MaassForm":
        return cls(
            t_j=float(record['t_j']),
            hecke=coefficient_map(record),
            weight=None if record.get('weight') is None else float(record['weight']),
            parity=record.get('parity', 'even'),
            source=str(record.get('source', 'file')),
        )

    def to_record(self) -> dict:
        return {
            't_j': self.t_j,
            'parity': self.parity,
            'weight': self.weight,
            'coefficients': [[n, self.hecke[n]] for n in sorted(self.hecke)],
            'source': self.source,
        }


def load_forms_with_report(source: Union[str, Path, dict],
                           client: Optional[CatalogClient] = None) -> Tuple[List[MaassForm], Dict]:
    """Validated forms from a JSON-lines file or a catalog query, with the rejection report"""
    if isinstance(source, dict):
        client = client or CatalogClient()
        fetch = client.fetch(source)
        forms = [MaassForm.from_record(r) for r in fetch.records]
        return sorted(forms, key=lambda f: f.t_j), fetch.to_dict()

    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(f"Maass form file not found: {path}")

    records = read_jsonl(path)
    quality = CatalogQualityMonitor().check_records(records)
    forms = []
    for record in quality['valid']:
        record.setdefault('source', f"{path.name}")
        forms.append(MaassForm.from_record(record))

    report = {
        'path': str(path),
        'loaded': len(forms),
        'rejected': [{'index': r['index'], 'errors': r['errors']} for r in quality['rejected']],
    }
    logger.info(f"Loaded {len(forms)} forms from {path} ({len(quality['rejected'])} rejected)")
    return sorted(forms, key=lambda f: f.t_j), report


def load_forms(source: Union[str, Path, dict], client: Optional[CatalogClient] = None) -> List[MaassForm]:
    return load_forms_with_report(source, client)[0]


def hecke_violations(form: MaassForm, tolerance: Optional[float] = None) -> List[str]:
    tolerance = tolerance if tolerance is not None else config.catalog.hecke_tolerance
    return MaassFormValidator.hecke_violations(form.hecke, tolerance)


def _smallest_prime_factors(n_max: int) -> np.ndarray:
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in range(2, int(math.isqrt(n_max)) + 1):
        if spf[p] == 0:
            block = spf[p * p::p]
            block[block == 0] = p
    unset = np.nonzero(spf == 0)[0]
    spf[unset] = unset
    return spf


def _prime_powers(lam_p: float, top: int) -> List[float]:
    """λ(p^k), k ≤ top, from λ(p^{k+1}) = λ(p)λ(p^k) − λ(p^{k−1})"""
    powers = [1.0, lam_p]
    while len(powers) <= top:
        powers.append(lam_p * powers[-1] - powers[-2])
    return powers


def _multiplicative(prime_values: Dict[int, float], n_max: int, square: bool) -> np.ndarray:
    """λ(n) (or λ(n²) when square) for n ≤ n_max from Hecke eigenvalues at primes"""
    values = np.zeros(n_max + 1)
    if n_max < 1:
        return values
    values[1] = 1.0
    spf = _smallest_prime_factors(n_max)
    top = 2 * int(math.log2(max(n_max, 2))) + 2
    tables: Dict[int, List[float]] = {}
    for n in range(2, n_max + 1):
        p = int(spf[n])
        k, e = n, 0
        while k % p == 0:
            k //= p
            e += 1
        if p not in tables:
            tables[p] = _prime_powers(prime_values[p], top)
        values[n] = values[k] * tables[p][2 * e if square else e]
    return values


def _primes_up_to(n_max: int) -> List[int]:
    spf = _smallest_prime_factors(max(n_max, 2))
    return [int(p) for p in np.nonzero(spf == np.arange(spf.size))[0] if p >= 2]


def square_coefficients(form: MaassForm, m_max: int) -> np.ndarray:
    """λ(m²) for 0 ≤ m ≤ m_max (index 0 unused) from the stored λ(p)"""
    primes = _primes_up_to(m_max)
    missing = [p for p in primes if p not in form.hecke]
    if missing:
        raise CoverageError(
            f"form {form.source} needs lambda(p) for p <= {m_max}; first missing p = {missing[0]}",
            required_n_max=m_max,
        )
    return _multiplicative({p: form.hecke[p] for p in primes}, m_max, square=True)


def synthetic_form(t_j: float, prime_values: Union[Dict[int, float], Callable[[int], float]],
                   n_max: int, weight: Optional[float] = 1.0, source: str = 'synthetic') -> MaassForm:
    """Hecke-consistent coefficients λ(n), n ≤ n_max, built from prescribed λ(p)"""
    primes = _primes_up_to(n_max)
    if callable(prime_values):
        table = {p: float(prime_values(p)) for p in primes}
    else:
        table = {p: float(prime_values[p]) for p in primes}
    values = _multiplicative(table, n_max, square=False)
    hecke = {n: float(values[n]) for n in range(1, n_max + 1)}
    return MaassForm(t_j=t_j, hecke=hecke, weight=weight, source=source, kind='synthetic')


def eisenstein_form(t_j: float, n_max: int) -> MaassForm:
    """λ(n) = Σ_{ab=n} (a/b)^{it_j}; the symmetric square is ζ(s)ζ(s+2it_j)ζ(s−2it_j)"""
    form = synthetic_form(t_j, lambda p: 2 * math.cos(t_j * math.log(p)), n_max,
                          weight=None, source=f'eisenstein({t_j})')
    return MaassForm(t_j=t_j, hecke=form.hecke, source=form.source, kind='eisenstein')


# ---------------------------------------------------------------------------
# Spectral test functions

def q_N(r, N: int):
    """(r² + 1/4)···(r² + (N − 1/2)²) / (r² + 100N²)^N"""
    r = mpmath.mpmathify(r)
    numerator = mpmath.fprod(r ** 2 + (k + mpmath.mpf(1) / 2) ** 2 for k in range(N))
    return numerator / (r ** 2 + 100 * N ** 2) ** N


def f_alpha(alpha):
    """(1+α)log(1+α) − (1−α)log(1−α) − 2α"""
    alpha = mpmath.mpmathify(alpha)
    return (1 + alpha) * mpmath.log(1 + alpha) - (1 - alpha) * mpmath.log(1 - alpha) - 2 * alpha


class WeightVariant(Enum):
    PLAIN = "plain"
    H0 = "H0"
    HINF = "Hinf"


INTERPOLATION_DEGREE = 24


@dataclass
class SpectralWeight:
    """h(T, G, N; r), optionally decorated by V(m, ∓t, r) for the second-moment reduction"""
    T: float
    G: float
    N: int
    variant: WeightVariant = WeightVariant.PLAIN
    t: float = 0.0
    m: int = 1
    reflected: bool = False
    _interpolants: Dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (self.T > 0 and self.G > 0):
            raise DomainError("T and G must be positive")
        if self.N < 1 or self.m < 1:
            raise DomainError("N and m must be positive integers")
        if isinstance(self.variant, str):
            self.variant = WeightVariant(self.variant)

    def reflect(self) -> "SpectralWeight":
        """The same weight evaluated at −r"""
        return SpectralWeight(self.T, self.G, self.N, self.variant, self.t, self.m,
                              reflected=not self.reflected)

    def window(self, tol: Optional[float] = None) -> Tuple[float, float]:
        """Radius interval around T outside which the Gaussian factor is below tolerance"""
        c = gaussian_cutoff(tol if tol is not None else config.quadrature.tol)
        return max(self.T - c * self.G, 0.0), self.T + c * self.G

    def base(self, r):
        r = mpmath.mpmathify(r)
        T, G = self.T, self.G
        return q_N(r, self.N) * (mpmath.exp(-(r - T) ** 2 / G ** 2) + mpmath.exp(-(r + T) ** 2 / G ** 2))

    def _v_at(self, sign: int, r):
        """V(m, sign·t, r), interpolated in |r| across the window for real r"""
        if mpmath.im(r) != 0:
            return mpmath.mpc(v_weight(self.m, sign * self.t, r))
        radius = abs(mpmath.re(r))
        lo, hi = self.window()
        lo = max(lo, 0.5)
        if not lo <= radius <= hi:
            return mpmath.mpc(v_weight(self.m, sign * self.t, radius))

        if sign not in self._interpolants:
            k = np.arange(INTERPOLATION_DEGREE + 1)
            nodes = np.cos(np.pi * (k + 0.5) / (INTERPOLATION_DEGREE + 1))
            radii = (lo + hi) / 2 + (hi - lo) / 2 * nodes
            values = np.array([v_weight(self.m, sign * self.t, float(x)) for x in radii])
            self._interpolants[sign] = (
                np.polynomial.chebyshev.chebfit(nodes, values.real, INTERPOLATION_DEGREE),
                np.polynomial.chebyshev.chebfit(nodes, values.imag, INTERPOLATION_DEGREE),
            )
        re_coef, im_coef = self._interpolants[sign]
        x = (2 * float(radius) - lo - hi) / (hi - lo)
        return mpmath.mpc(np.polynomial.chebyshev.chebval(x, re_coef),
                          np.polynomial.chebyshev.chebval(x, im_coef))

    def decoration(self, r):
        if self.variant is WeightVariant.PLAIN:
            return mpmath.mpf(1)
        if self.variant is WeightVariant.H0:
            return self._v_at(-1, r)
        alpha = self.t / r
        # α log(r²) continues 2α log|r| evenly off the real line
        phase = 2j * r * (alpha * mpmath.log(r ** 2) + f_alpha(alpha))
        return mpmath.exp(phase) * self._v_at(1, r)

    def __call__(self, r):
        return h_eval(self, r)


def h_eval(w: SpectralWeight, r, ctx: Optional[PrecisionContext] = None):
    """Weight value at r (complex arguments allowed)"""
    ctx = resolve_context(ctx)
    with ctx.workdps(5):
        r = mpmath.mpmathify(r)
        if w.reflected:
            r = -r
        value = w.base(r) * w.decoration(r)
    return +value


# ---------------------------------------------------------------------------
# Archimedean factors

def log_l_infinity(s, t_j):
    s = mpmath.mpmathify(s)
    it = 1j * mpmath.mpmathify(t_j)
    return (-1.5 * s * mpmath.log(mpmath.pi) + mpmath.loggamma(s / 2)
            + mpmath.loggamma((s + 2 * it) / 2) + mpmath.loggamma((s - 2 * it) / 2))


def l_infinity(s, t_j, ctx: Optional[PrecisionContext] = None):
    """π^{−3s/2} Γ(s/2) Γ((s+2it_j)/2) Γ((s−2it_j)/2)"""
    ctx = resolve_context(ctx)
    with ctx.workdps(5):
        s = mpmath.mpmathify(s)
        it = 1j * mpmath.mpmathify(t_j)
        for arg in (s / 2, (s + 2 * it) / 2, (s - 2 * it) / 2):
            if mpmath.im(arg) == 0 and mpmath.re(arg) <= 0 and mpmath.re(arg) == int(mpmath.re(arg)):
                raise PoleError(f"L_infinity has a pole at s = {s}")
        value = mpmath.exp(log_l_infinity(s, t_j))
    return +value


def l_infinity_ratio(t, t_j, ctx: Optional[PrecisionContext] = None):
    """L_∞(1/2+2it, t_j) / L_∞(1/2−2it, t_j)"""
    ctx = resolve_context(ctx)
    with ctx.workdps(5):
        value = mpmath.exp(log_l_infinity(0.5 + 2j * t, t_j) - log_l_infinity(0.5 - 2j * t, t_j))
    return +value


def _ratio_constant(t):
    """C(t) = π^{−6it} Γ(1/4+it)/Γ(1/4−it)"""
    t = mpmath.mpf(t)
    return mpmath.exp(-6j * t * mpmath.log(mpmath.pi)
                      + mpmath.loggamma(0.25 + 1j * t) - mpmath.loggamma(0.25 - 1j * t))


@dataclass
class RatioApproximation:
    value: complex
    alpha: float
    phase: float
    constant: complex


def l_infinity_ratio_main(t, t_j) -> RatioApproximation:
    """C(t) exp(2it_j(2α log t_j + f(α))), α = t/t_j"""
    alpha = mpmath.mpf(t) / t_j
    phase = 2 * t_j * (2 * alpha * mpmath.log(t_j) + f_alpha(alpha))
    constant = _ratio_constant(t)
    return RatioApproximation(value=constant * mpmath.expj(phase), alpha=float(alpha),
                              phase=float(phase), constant=constant)


def l_infinity_ratio_window(t, T, G, y):
    """Main term for t_j = T + Gy expanded around T"""
    alpha0 = mpmath.mpf(t) / T
    head = 4 * t * mpmath.log(T) + 2 * T * f_alpha(alpha0)
    slope = 2 * G * y * mpmath.log((1 + alpha0) / (1 - alpha0))
    return _ratio_constant(t) * mpmath.expj(head + slope)


def analytic_conductor(t, t_j) -> float:
    return (1 + abs(t)) * (1 + abs(t + t_j)) * (1 + abs(t - t_j))


def convexity_reference(t, t_j) -> float:
    """Q^{1/4}, the convexity size of L(sym² u_j, 1/2+2it)"""
    return analytic_conductor(t, t_j) ** 0.25


# ---------------------------------------------------------------------------
# Weight functions of the approximate functional equation

@dataclass(frozen=True)
class AfePolynomial:
    """P(t, x) with P(0) = 1 vanishing at −4t² and (1/2 ± 2it + 2j)², j < n"""
    n: int
    t: Optional[float] = None

    def __post_init__(self):
        if self.n < 0:
            raise DomainError("degree parameter must be nonnegative")

    @classmethod
    def trivial(cls) -> "AfePolynomial":
        return cls(n=0, t=None)

    @property
    def roots(self) -> List:
        t = mpmath.mpf(self.t or 0)
        roots = [-4 * t ** 2] if t != 0 else []
        for j in range(self.n):
            roots.append((0.5 + 2j * t + 2 * j) ** 2)
            roots.append((0.5 - 2j * t + 2 * j) ** 2)
        return roots

    @property
    def degree(self) -> int:
        return len(self.roots)

    def __call__(self, x):
        x = mpmath.mpmathify(x)
        return mpmath.fprod(1 - x / root for root in self.roots)


def afe_gaussian(z, P: AfePolynomial, scale: Optional[float] = None):
    """G(z) = exp((z/κ)²) P(z²)"""
    scale = scale or config.afe.gaussian_scale
    return mpmath.exp((z / scale) ** 2) * P(z ** 2)


def _contour_height(P: AfePolynomial, a: float, scale: float, tol: float) -> float:
    y = 4.0
    while y < 400:
        z = mpmath.mpc(a, y)
        if abs(afe_gaussian(z, P, scale)) * (1 + y) ** 3 < tol:
            return y
        y += 2.0
    return y


class VWeightKernel:
    """A Mellin-Barnes integrand B(z) sampled once on ℜz = a.

    V(y) = (1/2πi) ∫ B(z) y^{−z} dz becomes one weighted exponential sum per y.
    With `digits` the nodes and samples are also kept as mpmath numbers at
    that precision for `dirichlet_sum`.
    """

    def __init__(self, base: Callable, a: float, height: float, rate: float, name: str = "V",
                 digits: Optional[int] = None):
        width = config.afe.radians_per_panel / rate
        panels = max(4, int(math.ceil(2 * height / width)))
        self.name = name
        self.digits = digits
        self.rule = VerticalLineRule(a, height, panels=panels, nodes_per_panel=config.afe.nodes_per_panel)
        self.logger = logging.getLogger(f"{__name__}.VWeightKernel")

        if digits is None:
            with mpmath.workdps(20):
                samples = [complex(base(mpmath.mpc(a, y))) for y in self.rule.y]
            self.z = self.rule.z
            self.weighted = self.rule.weights * np.array(samples)
            self.z_mp, self.weighted_mp = None, None
        else:
            with mpmath.workdps(digits):
                self.z_mp, weights = self.rule.mp_nodes(digits)
                self.weighted_mp = [w * base(z) for z, w in zip(self.z_mp, weights)]
            self.z = np.array([complex(z) for z in self.z_mp])
            self.weighted = np.array([complex(v) for v in self.weighted_mp])
        self.logger.debug(f"{name}: {self.z.size} nodes on Re z = {a}, height {height}")

    def values(self, ys) -> np.ndarray:
        logs = np.log(np.atleast_1d(np.asarray(ys, dtype=np.float64)))
        return np.exp(-np.outer(logs, self.z)) @ self.weighted

    def dirichlet_sum(self, coefficients, w, spf: np.ndarray):
        """Σ_{1≤m≤M} c_m m^{−w} V(m) at the kernel's precision.

        Summed node by node as Σ_k W_k Σ_m c_m m^{−(w+z_k)}, with m^{−u}
        assembled from prime powers through the smallest-prime-factor table.
        """
        if self.z_mp is None:
            raise DomainError(f"{self.name} was sampled in double precision")
        M = len(coefficients) - 1
        with mpmath.workdps(self.digits):
            c = [mpmath.mpf(float(x)) for x in coefficients[1:]]
            logs = {m: mpmath.log(m) for m in range(2, M + 1) if spf[m] == m}
            w = mpmath.mpmathify(w)
            powers = [mpmath.mpf(1)] * (M + 1)
            total = mpmath.mpc(0)
            for z, weight in zip(self.z_mp, self.weighted_mp):
                u = w + z
                for m in range(2, M + 1):
                    p = int(spf[m])
                    powers[m] = mpmath.exp(-u * logs[p]) if p == m else powers[m // p] * powers[p]
                total += weight * mpmath.fdot(c, powers[1:])
        return total

    def __call__(self, y) -> complex:
        return complex(self.values([y])[0])


def _phase_rate(y_max: float, height: float, *scales) -> float:
    return math.log(max(y_max, 2.0)) + 1.5 * math.log(2 + height + sum(abs(complex(x)) for x in scales)) + 2


@lru_cache(maxsize=256)
def _afe_kernel(w: complex, s: complex, t_j: complex, P: AfePolynomial,
                scale: float, a: float, y_max: float, digits: Optional[int] = None) -> VWeightKernel:
    """B(z) = L_∞(w+z)/L_∞(s) · ζ(2w+2z) · G(z)/z"""
    tol = config.afe.truncation_tol
    height = _contour_height(P, a, scale, tol)
    w_mp, s_mp = mpmath.mpmathify(w), mpmath.mpmathify(s)
    t_mp = mpmath.mpmathify(t_j)

    def base(z):
        ratio = mpmath.exp(log_l_infinity(w_mp + z, t_mp) - log_l_infinity(s_mp, t_mp))
        return ratio * mpmath.zeta(2 * w_mp + 2 * z) * afe_gaussian(z, P, scale) / z

    rate = _phase_rate(y_max, height, t_j, w.imag)
    return VWeightKernel(base, a, height, rate, name=f"V[w={w}, t_j={t_j}]", digits=digits)


def _bucket(y: float) -> float:
    return float(2 ** math.ceil(math.log2(max(y, 2.0))))


def v_kernel(t, t_j, P: Optional[AfePolynomial] = None, a: Optional[float] = None,
             y_max: float = 1024.0) -> VWeightKernel:
    """Kernel of V(·, t, t_j)"""
    P = P if P is not None else AfePolynomial(config.afe.polynomial_degree, float(t))
    a = a if a is not None else config.afe.contour_a
    s = complex(0.5, 2 * float(t))
    return _afe_kernel(s, s, complex(t_j), P, config.afe.gaussian_scale, float(a), _bucket(y_max))


def v_weight(y, t, t_j, P: Optional[AfePolynomial] = None, ctx: Optional[PrecisionContext] = None,
             a: Optional[float] = None) -> complex:
    """V(y, t, t_j) = (1/2πi) ∫_(a) L_∞(1/2+2it+z)/L_∞(1/2+2it) ζ(1+4it+2z) G(t,z) y^{−z} dz/z"""
    if not y > 0:
        raise DomainError("y must be positive")
    return v_kernel(t, t_j, P, a, y_max=float(y))(float(y))


def _main_base(t, t_j_eff, P: AfePolynomial, scale: float, stretch=None):
    t_mp = mpmath.mpf(t)
    size = mpmath.sqrt(mpmath.mpmathify(t_j_eff) ** 2 - t_mp ** 2) / mpmath.pi ** 1.5
    anchor = mpmath.loggamma(0.25 + 1j * t_mp)

    def base(z):
        value = (size ** z * mpmath.exp(mpmath.loggamma(0.25 + 1j * t_mp + z / 2) - anchor)
                 * mpmath.zeta(1 + 4j * t_mp + 2 * z) * afe_gaussian(z, P, scale) / z)
        if stretch is not None:
            value *= (1 + stretch) ** (z / 2) - 1
        return value

    return base


def v_weight_main(y, t, t_j, P: Optional[AfePolynomial] = None, a: Optional[float] = None) -> complex:
    """Main term of V: (√(t_j²−t²)/(π^{3/2}y))^z Γ(1/4+it+z/2)/Γ(1/4+it) replaces the gamma ratio"""
    P = P if P is not None else AfePolynomial(config.afe.polynomial_degree, float(t))
    a = a if a is not None else config.afe.contour_a
    scale = config.afe.gaussian_scale
    height = _contour_height(P, a, scale, config.afe.truncation_tol)
    kernel = VWeightKernel(_main_base(t, t_j, P, scale), a, height,
                           _phase_rate(y, height, t), name="V-main")
    return kernel(y)


@dataclass
class VSplit:
    base: complex
    tilde: complex
    full: complex


def v_weight_split(y, t, T, width, u, P: Optional[AfePolynomial] = None,
                   a: Optional[float] = None) -> VSplit:
    """V(y, t, T+width·u) = V(y, t, T) + Ṽ from expanding (t_j² − t²)^{z/2} around T"""
    P = P if P is not None else AfePolynomial(config.afe.polynomial_degree, float(t))
    a = a if a is not None else config.afe.contour_a
    scale = config.afe.gaussian_scale
    height = _contour_height(P, a, scale, config.afe.truncation_tol)
    rate = _phase_rate(y, height, t)
    stretch = (2 * T * width * u + (width * u) ** 2) / (T ** 2 - t ** 2)

    base = VWeightKernel(_main_base(t, T, P, scale), a, height, rate, name="V-base")(y)
    tilde = VWeightKernel(_main_base(t, T, P, scale, stretch=mpmath.mpf(stretch)), a, height, rate,
                          name="V-tilde")(y)
    full = v_weight_main(y, t, T + width * u, P, a)
    return VSplit(base=base, tilde=tilde, full=full)


# ---------------------------------------------------------------------------
# Symmetric square L-values

@dataclass
class Sym2Value:
    value: complex
    method: str
    terms: int
    truncation_estimate: float
    polar: complex = 0j


def _xi(w):
    return mpmath.pi ** (-w / 2) * mpmath.gamma(w / 2) * mpmath.zeta(w)


def _eisenstein_poles(t_j) -> List[Tuple]:
    """(pole, residue) of Λ(w) = ξ(w)ξ(w+2it_j)ξ(w−2it_j), ξ(w) = π^{−w/2}Γ(w/2)ζ(w)"""
    it = 1j * mpmath.mpf(t_j)
    return [
        (mpmath.mpf(1), _xi(1 + 2 * it) * _xi(1 - 2 * it)),
        (mpmath.mpf(0), -_xi(2 * it) * _xi(-2 * it)),
        (1 - 2 * it, _xi(1 - 2 * it) * _xi(1 - 4 * it)),
        (-2 * it, -_xi(-2 * it) * _xi(-4 * it)),
        (1 + 2 * it, _xi(1 + 2 * it) * _xi(1 + 4 * it)),
        (2 * it, -_xi(2 * it) * _xi(4 * it)),
    ]


def _afe_length(kernels: List[VWeightKernel], start: float, tol: float) -> int:
    y = max(start, 2.0)
    for _ in range(40):
        if all(abs(k(y)) < tol for k in kernels):
            return int(math.ceil(y))
        y *= 1.5
    raise CoverageError(f"V weights do not decay below {tol} before y = {y:.3g}")


def _sym2_afe(form: MaassForm, s, degree: Optional[int], a: Optional[float],
              ctx: PrecisionContext) -> Sym2Value:
    s = complex(s)
    on_line = abs(s.real - 0.5) < 1e-12
    scale = config.afe.gaussian_scale
    if on_line:
        t = s.imag / 2
        P = AfePolynomial(degree if degree is not None else config.afe.polynomial_degree, t)
        a = a if a is not None else config.afe.contour_a
    else:
        P = AfePolynomial.trivial()
        a = a if a is not None else max(config.afe.contour_a, abs(s.real - 0.5) + 0.75)

    # double-precision kernels only size the sums
    size = math.sqrt(analytic_conductor(s.imag / 2, form.t_j)) / math.pi ** 1.5
    guess = _bucket(64 * size)
    front = _afe_kernel(s, s, complex(form.t_j), P, scale, float(a), guess)
    back = _afe_kernel(1 - s, s, complex(form.t_j), P, scale, float(a), guess)
    m_max = _afe_length([front, back], size, config.afe.truncation_tol)
    tail = float(max(abs(front(m_max)), abs(back(m_max))) * m_max)

    coefficients = square_coefficients(form, m_max)
    digits = ctx.working_digits + 5
    y_max = max(guess, _bucket(m_max))
    front = _afe_kernel(s, s, complex(form.t_j), P, scale, float(a), y_max, digits)
    back = _afe_kernel(1 - s, s, complex(form.t_j), P, scale, float(a), y_max, digits)
    spf = _smallest_prime_factors(max(m_max, 2))

    with ctx.workdps(5):
        s_mp = mpmath.mpmathify(s)
        value = front.dirichlet_sum(coefficients, s_mp, spf) + back.dirichlet_sum(coefficients, 1 - s_mp, spf)

        polar = mpmath.mpc(0)
        if form.kind == 'eisenstein':
            for pole, residue in _eisenstein_poles(form.t_j):
                z0 = pole - s_mp
                if z0 != 0:
                    polar += residue * afe_gaussian(z0, P, scale) / z0
            polar /= mpmath.exp(log_l_infinity(s_mp, form.t_j))
            value -= polar

    return Sym2Value(value=+value, method='afe', terms=m_max, truncation_estimate=tail, polar=+polar)


def _eisenstein_series_poles(t_j) -> List[Tuple]:
    """(pole, residue) of Σ λ(m²) m^{−s} = ζ(s)ζ(s+2it_j)ζ(s−2it_j)/ζ(2s)"""
    it = 1j * mpmath.mpf(t_j)
    return [
        (mpmath.mpf(1), mpmath.zeta(1 + 2 * it) * mpmath.zeta(1 - 2 * it) / mpmath.zeta(2)),
        (1 - 2 * it, mpmath.zeta(1 - 2 * it) * mpmath.zeta(1 - 4 * it) / mpmath.zeta(2 - 4 * it)),
        (1 + 2 * it, mpmath.zeta(1 + 2 * it) * mpmath.zeta(1 + 4 * it) / mpmath.zeta(2 + 4 * it)),
    ]


def _sym2_direct(form: MaassForm, s, cutoff: Optional[int]) -> Sym2Value:
    """ζ(2s) Σ λ(m²) m^{−s} w(m/M) with a smooth cutoff; the half-cutoff change estimates the tail"""
    s = complex(s)
    if s.real <= 1:
        raise DomainError(f"direct series needs Re(s) > 1, got {s}")
    if cutoff is None:
        covered = form.n_max
        for p in _primes_up_to(form.n_max):
            if p not in form.hecke:
                covered = p - 1
                break
        cutoff = max(covered // 2, 1)
    M = cutoff

    coefficients = square_coefficients(form, 2 * M)[1:]
    m = np.arange(1, 2 * M + 1, dtype=np.float64)
    powers = coefficients * np.exp(-s * np.log(m))

    def smoothed(cut: int) -> complex:
        total = complex(np.sum(powers * smooth_cutoff(m / cut)))
        if form.kind == 'eisenstein':
            with mpmath.workdps(20):
                for pole, residue in _eisenstein_series_poles(form.t_j):
                    total -= complex(residue * mpmath.power(cut, pole - s) * smooth_cutoff_mellin(pole - s))
        return total

    full, half = smoothed(M), smoothed(max(M // 2, 1))
    scale = complex(mpmath.zeta(2 * mpmath.mpc(s)))
    return Sym2Value(value=scale * full, method='direct', terms=2 * M,
                     truncation_estimate=abs(scale * (full - half)))


def _sym2_key(form, s, ctx=None, degree=None, a=None, method='auto', cutoff=None):
    return (form.key, repr(complex(s)), degree, a, method, cutoff, resolve_context(ctx).working_digits)


@memoize(sym2_cache, key_func=_sym2_key)
def sym2_L_report(form: MaassForm, s, ctx: Optional[PrecisionContext] = None,
                  degree: Optional[int] = None, a: Optional[float] = None,
                  method: str = 'auto', cutoff: Optional[int] = None) -> Sym2Value:
    """L(sym² u, s) with its truncation report.

    method='auto' sums the direct series for ℜs ≥ 3/2 and uses the
    approximate functional equation elsewhere.
    """
    ctx = resolve_context(ctx)
    if method not in ('auto', 'afe', 'direct'):
        raise DomainError(f"unknown method {method}")
    s = complex(s)
    if method == 'direct' or (method == 'auto' and s.real >= 1.5):
        result = _sym2_direct(form, s, cutoff)
    else:
        result = _sym2_afe(form, s, degree, a, ctx)
    logger.debug(f"L(sym2, {s}) for t_j={form.t_j}: {result.method}, {result.terms} terms, "
                 f"tail {result.truncation_estimate:.2e}")
    return result


def sym2_L(form: MaassForm, s, ctx: Optional[PrecisionContext] = None, **kwargs) -> complex:
    return sym2_L_report(form, s, ctx, **kwargs).value


class HarmonicConvention(Enum):
    SYM2_L1 = "sym2_l1"
    INVERSE_L1 = "inverse_l1"
    STORED = "stored"
    UNIT = "unit"


def harmonic_weight(form: MaassForm, convention: Union[str, HarmonicConvention] = HarmonicConvention.SYM2_L1,
                    ctx: Optional[PrecisionContext] = None) -> float:
    """α_j under the chosen normalization; 'unit' is a deliberately wrong control"""
    convention = HarmonicConvention(convention)
    if convention is HarmonicConvention.UNIT:
        return 1.0
    if convention is HarmonicConvention.STORED:
        if form.weight is None:
            raise CoverageError(f"form {form.source} has no stored weight")
        return form.weight
    if form.kind == 'eisenstein':
        raise PoleError("the Eisenstein fixture has a pole at s = 1")
    l1 = sym2_L(form, 1.0, ctx).real
    return 2 / l1 if convention is HarmonicConvention.SYM2_L1 else 1 / l1
