"""
Voronoi Summation
Theta multiplier, Bessel kernels, test-function transforms and a two-sided check of the Voronoi formula for Zagier L-series at c ≡ 0 (mod 4).
"""

import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import mpmath
from sympy.functions.combinatorial.numbers import jacobi_symbol

from cache import memoize, transform_cache
from config import config
from oscint import QuadratureBudgetError, integrate_decaying
from specfun import (
    DomainError, PoleError, PrecisionContext, bessel_FG_at, bessel_K_at, resolve_context, zeta,
)
from zagier import zagier_L


logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Test functions

class BumpKind(Enum):
    GAUSSIAN_BUMP = "gaussian_bump"
    COMPACT_POLY_BUMP = "compact_poly_bump"


POLY_BUMP_POWER = 10


@dataclass(frozen=True)
class VoronoiTestFn:
    """Smooth function supported on x0 ≤ |x| ≤ x1 of one half-line.

    gaussian_bump: exp(−((u−mid)/width)²) · exp(1 − 1/(1−v²))
    compact_poly_bump: (1 − v²)^10, nine continuous derivatives
    with v the support mapped to (−1, 1).
    """
    kind: BumpKind = BumpKind.GAUSSIAN_BUMP
    support: Tuple[float, float] = (50.0, 100.0)
    side: str = 'positive'
    width: Optional[float] = None
    amplitude: float = 1.0

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, 'kind', BumpKind(self.kind))
        x0, x1 = self.support
        if not 0 < x0 < x1:
            raise DomainError(f"support must satisfy 0 < x0 < x1, got {self.support}")
        if self.side not in ('positive', 'negative'):
            raise DomainError(f"side must be 'positive' or 'negative', got {self.side}")

    @property
    def sign(self) -> int:
        return 1 if self.side == 'positive' else -1

    def profile(self, u):
        """Bump value at distance u > 0 from the origin on the supporting half-line"""
        x0, x1 = self.support
        if self.amplitude == 0 or not x0 < u < x1:
            return mpmath.mpf(0)
        v = (2 * mpmath.mpf(u) - x0 - x1) / (x1 - x0)
        if self.kind is BumpKind.COMPACT_POLY_BUMP:
            return self.amplitude * (1 - v ** 2) ** POLY_BUMP_POWER
        width = self.width if self.width is not None else (x1 - x0) / 4
        mid = (x0 + x1) / 2
        return (self.amplitude * mpmath.exp(-((u - mid) / width) ** 2)
                * mpmath.exp(1 - 1 / (1 - v ** 2)))

    def __call__(self, x):
        x = mpmath.mpmathify(x)
        if x * self.sign <= 0:
            return mpmath.mpf(0)
        return self.profile(abs(x))

    def integers(self) -> List[int]:
        """Integers n with φ(n) possibly nonzero"""
        x0, x1 = self.support
        magnitudes = range(int(math.floor(x0)) + 1, int(math.ceil(x1)))
        return sorted(self.sign * k for k in magnitudes)


# ---------------------------------------------------------------------------
# Theta multiplier

@dataclass(frozen=True)
class ThetaFrame:
    """Frame (c, a) with c ≡ 0 (mod 4), gcd(a, c) = 1.

    inverse='mod_c' takes d = a⁻¹ mod c in (0, c); inverse='mod_4' takes the
    lift d ≡ a (mod c), which only satisfies ad ≡ 1 (mod 4).
    """
    c: int
    a: int
    inverse: str = 'mod_c'

    def __post_init__(self):
        if self.c <= 0 or self.c % 4:
            raise DomainError(f"c must be a positive multiple of 4, got {self.c}")
        if math.gcd(self.a, self.c) != 1:
            raise DomainError(f"gcd(a, c) must be 1, got a={self.a}, c={self.c}")
        if self.inverse not in ('mod_c', 'mod_4'):
            raise DomainError(f"unknown inverse convention {self.inverse!r}")

    @property
    def d(self) -> int:
        if self.inverse == 'mod_4':
            return self.a % self.c
        return pow(self.a, -1, self.c)


def _multiplier(c: int, d: int) -> complex:
    epsilon_bar = 1 if d % 4 == 1 else -1j
    return complex(epsilon_bar * int(jacobi_symbol(c % d, d)))


def theta_multiplier(fr: ThetaFrame) -> complex:
    """ε̄_d (c/d) with ε_d = 1 for d ≡ 1 (mod 4) and i for d ≡ 3 (mod 4)"""
    return _multiplier(fr.c, fr.d)


def _e(x):
    return mpmath.expj(2 * mpmath.pi * x)


def theta_sum(c: int, n: int, inverse: str = 'mod_c') -> complex:
    """Θ₀(c, n) = Σ_{a mod c, (a,c)=1} ϑ e(−dn/c)"""
    total = mpmath.mpc(0)
    for a in range(1, c):
        if math.gcd(a, c) == 1:
            fr = ThetaFrame(c, a, inverse)
            total += theta_multiplier(fr) * _e(-mpmath.mpf(fr.d * n % c) / c)
    return complex(total)


def theta_sum_bruteforce(c: int, n: int) -> complex:
    """Θ₀(c, n) by searching d with ad ≡ 1 (mod c) and evaluating the symbols directly"""
    if c <= 0 or c % 4:
        raise DomainError(f"c must be a positive multiple of 4, got {c}")
    total = 0j
    for a in range(c):
        if math.gcd(a, c) != 1:
            continue
        d = next(k for k in range(1, c) if a * k % c == 1)
        epsilon = 1 if d % 4 == 1 else 1j
        total += epsilon.conjugate() * int(jacobi_symbol(c, d)) * complex(mpmath.expj(-2 * mpmath.pi * d * n / c))
    return total


# ---------------------------------------------------------------------------
# Kernels

KERNEL_TAGS = ('++', '--', '-+', '+-')


def phi_kernel(tag: str, z, t, ctx: Optional[PrecisionContext] = None):
    """Φ^{(±,±)}(z) for the Zagier series at 1/2+2it"""
    ctx = resolve_context(ctx)
    if tag not in KERNEL_TAGS:
        raise DomainError(f"unknown kernel tag {tag!r}")
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")

    with ctx.workdps(5):
        z = mpmath.mpf(z)
        t = mpmath.mpf(t)
        root = mpmath.sqrt(z)
        if tag in ('++', '--'):
            F, G = bessel_FG_at(abs(t), 2 * root, ctx)
            if tag == '++':
                return root / mpmath.sqrt(2) * (F - G)
            return -root / mpmath.sqrt(2) * (F + G)

        k = bessel_K_at(t, 2 * root, ctx, method="series") * mpmath.exp(-mpmath.pi * abs(t))
        if tag == '-+':
            denominator = mpmath.gamma(0.25 + 1j * t) * mpmath.gamma(0.75 - 1j * t)
        else:
            denominator = mpmath.gamma(0.25 - 1j * t) * mpmath.gamma(0.75 + 1j * t)
        return 2 * root * k / denominator


# ---------------------------------------------------------------------------
# Transforms

class Direction(Enum):
    MELLIN_PLUS = "mellin_plus"
    MELLIN_MINUS = "mellin_minus"
    HAT_PLUS_POS = "hat_plus_pos"
    HAT_PLUS_NEG = "hat_plus_neg"
    HAT_MINUS_POS = "hat_minus_pos"
    HAT_MINUS_NEG = "hat_minus_neg"


_HAT_KERNELS = {
    Direction.HAT_PLUS_POS: (1, '++'),
    Direction.HAT_PLUS_NEG: (1, '-+'),
    Direction.HAT_MINUS_POS: (-1, '+-'),
    Direction.HAT_MINUS_NEG: (-1, '--'),
}


def _panels(phi: VoronoiTestFn, count: int = 8) -> List:
    x0, x1 = phi.support
    step = (x1 - x0) / count
    return [x0 + k * step for k in range(1, count)]


def _transform_key(phi, direction, arg, t, ctx=None):
    return (phi, Direction(direction).value, repr(mpmath.mpmathify(arg)), repr(t),
            resolve_context(ctx).working_digits)


@memoize(transform_cache, key_func=_transform_key)
def transform_phi(phi: VoronoiTestFn, direction, arg, t, ctx: Optional[PrecisionContext] = None):
    """φ^±(s) = ∫₀^∞ φ(±x) x^{s−1} dx, or φ̂^±(±y) = ∫₀^∞ φ(±x)/x · Φ^{(±,±)}(xy) dx"""
    ctx = resolve_context(ctx)
    direction = Direction(direction)

    if direction in (Direction.MELLIN_PLUS, Direction.MELLIN_MINUS):
        sign = 1 if direction is Direction.MELLIN_PLUS else -1
        if phi.sign != sign:
            return mpmath.mpc(0)
        s = mpmath.mpmathify(arg)
        integrand = lambda x: phi.profile(x) * mpmath.power(x, s - 1)  # noqa: E731
    else:
        sign, tag = _HAT_KERNELS[direction]
        if phi.sign != sign:
            return mpmath.mpc(0)
        y = mpmath.mpmathify(arg)
        if not y > 0:
            raise DomainError(f"y must be positive, got {arg}")
        integrand = lambda x: phi.profile(x) / x * phi_kernel(tag, x * y, t, ctx)  # noqa: E731

    if phi.amplitude == 0:
        return mpmath.mpc(0)
    try:
        result = integrate_decaying(integrand, phi.support, ctx=ctx, points=_panels(phi))
    except QuadratureBudgetError as e:
        # transforms far out in the dual sum are tiny and only need an absolute bound
        if e.partial.abs_error_estimate > config.quadrature.tol:
            raise
        result = e.partial
    return result.value


def mellin_reference(phi: VoronoiTestFn, s, ctx: Optional[PrecisionContext] = None):
    """φ^+(s) through x = e^u: ∫ φ(e^u) e^{us} du"""
    ctx = resolve_context(ctx)
    x0, x1 = phi.support
    s = mpmath.mpmathify(s)
    with ctx.workdps(5):
        a, b = mpmath.log(x0), mpmath.log(x1)
        points = [a + k * (b - a) / 8 for k in range(1, 8)]
        result = integrate_decaying(lambda u: phi.profile(mpmath.exp(u)) * mpmath.exp(u * s),
                                    (a, b), ctx=ctx, points=points)
    return result.value


def residue_terms(phi: VoronoiTestFn, c: int, t, sign: int = 1, ctx: Optional[PrecisionContext] = None):
    """𝓡_±(c, t), the polar contribution at the poles of ζ(1 ± 4it)"""
    ctx = resolve_context(ctx)
    if t == 0:
        raise PoleError("residue terms have a pole at t = 0")
    direction = Direction.MELLIN_PLUS if sign > 0 else Direction.MELLIN_MINUS
    quarter = mpmath.mpf(2 + sign) / 4

    with ctx.workdps(5):
        t = mpmath.mpf(t)
        it = 1j * t
        first = (mpmath.power(2, 4 * it) * transform_phi(phi, direction, 0.5 + it, float(t), ctx)
                 / mpmath.power(c, 1 + 2 * it) * zeta(1 + 4 * it, ctx))
        gammas = mpmath.exp(mpmath.loggamma(quarter + it) + mpmath.loggamma(0.5 - 2 * it)
                            - mpmath.loggamma(quarter - it) - mpmath.loggamma(0.5 + 2 * it))
        second = (mpmath.power(mpmath.pi, 2 * it) * transform_phi(phi, direction, 0.5 - it, float(t), ctx)
                  / mpmath.power(c, 1 - 2 * it) * zeta(1 - 4 * it, ctx) * gammas)
    return first + second


# ---------------------------------------------------------------------------
# Two-sided check

def _zagier_weighted(n: int, t, ctx: PrecisionContext):
    """𝓛_n(1/2+2it)/|n|^{1/2−it}, zero for n ≡ 2, 3 (mod 4)"""
    if n % 4 in (2, 3):
        return mpmath.mpc(0)
    return zagier_L(n, mpmath.mpc(0.5, 2 * t), ctx) / mpmath.power(abs(n), mpmath.mpc(0.5, -t))


@dataclass
class VoronoiReport:
    """Both sides of the Voronoi formula with their sub-terms"""
    parameters: Dict[str, Any]
    lhs: complex
    rhs: complex
    residue: complex
    dual_sum: complex
    residual: float
    relative_residual: float
    truncation: int
    tail_bound: float
    tail_dominated: bool = False
    terms: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        def pair(z):
            z = complex(z)
            return [z.real, z.imag]

        return {
            'parameters': self.parameters,
            'lhs': pair(self.lhs),
            'rhs': pair(self.rhs),
            'residue': pair(self.residue),
            'dual_sum': pair(self.dual_sum),
            'residual': self.residual,
            'relative_residual': self.relative_residual,
            'truncation': self.truncation,
            'tail_bound': self.tail_bound,
            'tail_dominated': self.tail_dominated,
            'terms': [{'n': term['n'], 'value': pair(term['value'])} for term in self.terms],
        }


def verify_voronoi(phi: VoronoiTestFn, fr: ThetaFrame, side: str = 'positive_n', t: float = 1.0,
                   truncation: Optional[int] = None, ctx: Optional[PrecisionContext] = None,
                   patience: int = 3, max_terms: int = 400) -> VoronoiReport:
    """|LHS − RHS| for Σ_{±n>0} φ(n) e(an/c) 𝓛_n(1/2+2it)/|n|^{1/2−it}.

    The dual sum runs over 0 < |n| ≤ truncation; without a truncation it stops
    when `patience` consecutive |n| contribute below tol relative to the sides.
    Either way the report is tail-dominated unless the last `patience` |n| did.
    """
    ctx = resolve_context(ctx)
    if side not in ('positive_n', 'negative_n'):
        raise DomainError(f"side must be positive_n or negative_n, got {side}")
    if t == 0:
        raise PoleError("the Voronoi formula at c = 0 (mod 4) needs t != 0")
    sign = 1 if side == 'positive_n' else -1
    plus, minus = ((Direction.HAT_PLUS_POS, Direction.HAT_PLUS_NEG) if sign > 0
                   else (Direction.HAT_MINUS_POS, Direction.HAT_MINUS_NEG))
    parameters = {'c': fr.c, 'a': fr.a % fr.c, 'd': fr.d, 'inverse': fr.inverse, 'side': side, 't': t,
                  'kind': phi.kind.value, 'support': list(phi.support), 'phi_side': phi.side}

    with ctx.workdps(5):
        lhs = mpmath.mpc(0)
        if phi.sign == sign:
            for n in phi.integers():
                value = phi(n)
                if value:
                    lhs += value * _e(mpmath.mpf(fr.a * n % fr.c) / fr.c) * _zagier_weighted(n, t, ctx)

        prefactor = theta_multiplier(fr) * _e(mpmath.mpf(1) / 8)
        residue = prefactor * mpmath.sqrt(2) * residue_terms(phi, fr.c, t, sign, ctx)

        tol = config.quadrature.tol
        scale = max(abs(lhs), abs(residue), mpmath.mpf(10) ** -30)
        dual, terms, quiet, tail = mpmath.mpc(0), [], 0, 0.0
        limit = truncation if truncation is not None else max_terms
        k = 0
        for k in range(1, limit + 1):
            y = 4 * mpmath.pi ** 2 * k / fr.c ** 2
            contribution = mpmath.mpc(0)
            for n, direction in ((k, plus), (-k, minus)):
                if n % 4 in (2, 3):
                    continue
                transform = transform_phi(phi, direction, y, float(t), ctx)
                value = transform * _e(-mpmath.mpf(fr.d * n % fr.c) / fr.c) * _zagier_weighted(n, t, ctx)
                terms.append({'n': n, 'value': complex(value)})
                contribution += value
            dual += contribution
            if abs(contribution) < tol * scale:
                quiet += 1
                tail += float(abs(contribution))
                if truncation is None and quiet >= patience:
                    break
            else:
                quiet, tail = 0, 0.0

        rhs = residue + prefactor * dual
        residual = float(abs(lhs - rhs))
        relative = residual / float(max(abs(lhs), abs(rhs), mpmath.mpf(10) ** -30))

    tail_dominated = quiet < patience
    if tail_dominated:
        logger.warning(f"Voronoi dual sum still above tolerance at |n| = {k}; the last {patience} terms "
                       f"are not below {tol:.1e} relative to the sides")
    logger.info(f"verify_voronoi c={fr.c} a={fr.a} {side} t={t}: residual {residual:.3e} "
                f"(relative {relative:.3e}), {k} dual terms")
    return VoronoiReport(parameters=parameters, lhs=complex(lhs), rhs=complex(rhs), residue=complex(residue),
                         dual_sum=complex(prefactor * dual), residual=residual, relative_residual=relative,
                         truncation=k, tail_bound=tail, tail_dominated=tail_dominated, terms=terms)
