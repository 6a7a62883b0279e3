"""
Special Functions
Reference evaluators for Gamma, zeta, 2F1, imaginary-order Bessel and Airy functions, with their uniform asymptotic main terms.
"""

import math
import logging
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple

import mpmath

from config import config, default_context


logger = logging.getLogger(__name__)


class PoleError(ArithmeticError):
    """Evaluation requested at a pole"""
    pass


class DomainError(ValueError):
    """Argument outside the evaluator's domain"""
    pass


class RegimeError(ValueError):
    """Asymptotic expansion requested outside the range where it holds"""
    pass


class RegimeWarning(UserWarning):
    """Soft regime gate violated; the value is returned but may be inaccurate"""
    pass


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision carried by every evaluator"""
    working_digits: int = 30
    target_rel_error: float = 1e-20

    def __post_init__(self):
        if self.working_digits < 16:
            raise DomainError(f"working_digits must be at least 16, got {self.working_digits}")
        if self.target_rel_error < 10.0 ** (1 - self.working_digits):
            raise DomainError(
                f"target_rel_error {self.target_rel_error} is finer than "
                f"{self.working_digits} digits can deliver"
            )

    def workdps(self, extra: int = 0):
        """mpmath precision block at working_digits + extra"""
        return mpmath.workdps(self.working_digits + extra)

    def with_digits(self, digits: int) -> "PrecisionContext":
        return replace(
            self,
            working_digits=digits,
            target_rel_error=max(self.target_rel_error, 10.0 ** (1 - digits)),
        )


def resolve_context(ctx: Optional[PrecisionContext]) -> PrecisionContext:
    return ctx if ctx is not None else default_context()


def _is_nonpositive_integer(z) -> bool:
    z = mpmath.mpmathify(z)
    return mpmath.im(z) == 0 and mpmath.re(z) <= 0 and mpmath.isint(mpmath.re(z))


# ---------------------------------------------------------------------------
# Gamma and zeta

def gamma(z, ctx: Optional[PrecisionContext] = None):
    """Γ(z); raises PoleError at nonpositive integers"""
    ctx = resolve_context(ctx)
    if _is_nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at {z}")
    with ctx.workdps(5):
        value = mpmath.gamma(mpmath.mpmathify(z))
    return +value


def gamma_ratio(sigma, y, ctx: Optional[PrecisionContext] = None):
    """Exact Γ(σ+iy)/Γ(σ−iy)"""
    ctx = resolve_context(ctx)
    with ctx.workdps(10):
        z = mpmath.mpc(sigma, y)
        value = mpmath.exp(mpmath.loggamma(z) - mpmath.loggamma(mpmath.conj(z)))
    return +value


def stirling_phase_coefficients(sigma, terms: int) -> List:
    """c_1..c_{terms-1} of the phase series of Γ(σ+iy)/Γ(σ−iy).

    Im log Γ(σ+iy) = y log y − y + (σ − 1/2)π/2 − Σ c_j y^{1−2j},
    c_j = (−1)^{j+1} B_{2j}(σ) / (2j(2j−1)).
    """
    coefficients = []
    for j in range(1, terms):
        coefficients.append(
            (-1) ** (j + 1) * mpmath.bernpoly(2 * j, sigma) / (2 * j * (2 * j - 1))
        )
    return coefficients


def gamma_ratio_asympt(sigma, y, terms: int = 1):
    """Stirling expansion of Γ(σ+iy)/Γ(σ−iy) for |y| ≥ 10.

    terms=1 is the main term exp(i(2y log|y| − 2y + π(σ−1/2) sgn y)); each
    further term adds one phase correction, so the result stays unimodular.
    """
    if terms < 1:
        raise DomainError(f"terms must be at least 1, got {terms}")
    y = mpmath.mpf(y)
    if abs(y) < 10:
        raise RegimeError(f"Stirling ratio needs |y| >= 10, got {y}")

    sigma = mpmath.mpf(sigma)
    sign = 1 if y > 0 else -1
    phase = 2 * y * mpmath.log(abs(y)) - 2 * y + mpmath.pi * (sigma - 0.5) * sign
    for j, c in enumerate(stirling_phase_coefficients(sigma, terms), start=1):
        phase -= 2 * c / y ** (2 * j - 1)
    return mpmath.expj(phase)


def zeta(s, ctx: Optional[PrecisionContext] = None, method: Optional[str] = None):
    """Riemann ζ(s); PoleError at s = 1"""
    ctx = resolve_context(ctx)
    s = mpmath.mpmathify(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    if method is None:
        method = config.precision.zeta_method

    with ctx.workdps(5):
        if method in (None, '', 'auto'):
            value = mpmath.zeta(s)
        else:
            value = mpmath.zeta(s, method=method)
    return +value


# ---------------------------------------------------------------------------
# Gauss hypergeometric function

def gauss_2f1(a, b, c, z, ctx: Optional[PrecisionContext] = None):
    """₂F₁(a, b; c; z) for |z| < 1 and real z < 1.

    Real z near 1 goes through the connection formula to 1 − z; when c − a − b
    is an integer mpmath resolves the degenerate connection by a limit.
    """
    ctx = resolve_context(ctx)
    if _is_nonpositive_integer(c):
        raise DomainError(f"c = {c} is a nonpositive integer")

    z = mpmath.mpmathify(z)
    if mpmath.im(z) == 0:
        if mpmath.re(z) >= 1:
            raise DomainError(f"z = {z} is on the branch cut [1, inf)")
    elif abs(z) >= 1:
        raise DomainError(f"|z| = {abs(z)} outside the unit disc")

    with ctx.workdps(10):
        value = mpmath.hyp2f1(a, b, c, z)
    return +value


def hyp2f1_series(a, b, c, z, ctx: Optional[PrecisionContext] = None, max_terms: int = 200000):
    """Raw term-by-term summation of the hypergeometric series (|z| < 1)"""
    ctx = resolve_context(ctx)
    if abs(mpmath.mpmathify(z)) >= 1:
        raise DomainError("series summation needs |z| < 1")

    with ctx.workdps(30):
        a, b, c, z = (mpmath.mpmathify(v) for v in (a, b, c, z))
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        peak = mpmath.mpf(1)
        eps = mpmath.mpf(10) ** (-(ctx.working_digits + 5))
        for n in range(max_terms):
            term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
            total += term
            peak = max(peak, abs(term))
            if n > 10 and abs(term) < eps * abs(total):
                break
        else:
            raise DomainError(f"series did not converge in {max_terms} terms")

    logger.debug(f"hyp2f1_series: {n + 1} terms, peak term {mpmath.nstr(peak, 5)}")
    return +total


# ---------------------------------------------------------------------------
# F2 and its asymptotics

@dataclass(frozen=True)
class OscParams:
    """Large spectral parameter r with ratio alpha = t/r"""
    r: float
    alpha: float
    t: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"r must be positive, got {self.r}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if abs(self.t - self.alpha * self.r) > 1e-9 * max(1.0, abs(self.t)):
            raise DomainError(f"t = {self.t} differs from alpha*r = {self.alpha * self.r}")

    @classmethod
    def from_r_alpha(cls, r: float, alpha: float) -> "OscParams":
        return cls(r=r, alpha=alpha, t=alpha * r)

    @classmethod
    def from_r_t(cls, r: float, t: float) -> "OscParams":
        return cls(r=r, alpha=t / r, t=t)


def f2_value(r, t, x, ctx: Optional[PrecisionContext] = None):
    """Γ(1/4−it+ir)Γ(1/4−it−ir)/Γ(1/2) · ₂F₁(1/4−it+ir, 1/4−it−ir; 1/2; x), 0 ≤ x < 1"""
    ctx = resolve_context(ctx)
    if not 0 <= x < 1:
        raise DomainError(f"x must lie in [0, 1), got {x}")

    with ctx.workdps(15):
        r = mpmath.mpf(r)
        t = mpmath.mpf(t)
        a = mpmath.mpc(0.25, r - t)
        b = mpmath.mpc(0.25, -r - t)
        prefactor = gamma(a, ctx.with_digits(ctx.working_digits + 15)) \
            * gamma(b, ctx.with_digits(ctx.working_digits + 15)) / mpmath.sqrt(mpmath.pi)
        if x == 0:
            value = prefactor
        else:
            value = prefactor * gauss_2f1(a, b, 0.5, x, ctx.with_digits(ctx.working_digits + 15))
    return +value


def f2_eval(p: OscParams, x, ctx: Optional[PrecisionContext] = None):
    return f2_value(p.r, p.t, x, ctx)


def prop_2f1(p: OscParams, z, ctx: Optional[PrecisionContext] = None):
    """The oscillatory ₂F₁(1/4+ir(1−α), 3/4+ir(1−α); 1+2ir; z) approximated by asympt_2f1_osc"""
    with resolve_context(ctx).workdps(10):
        shift = mpmath.mpc(0, p.r * (1 - p.alpha))
        value = gauss_2f1(0.25 + shift, 0.75 + shift, mpmath.mpc(1, 2 * p.r), z, ctx)
    return +value


REGIME_FLOOR = 10.0


def regime_gate(alpha_r: float, where: str, stacklevel: int = 3) -> bool:
    """Soft gate αr ≥ REGIME_FLOOR of the large-r expansions; warns and returns False below it"""
    if alpha_r < REGIME_FLOOR:
        message = f"{where}: alpha*r = {alpha_r:.3g} < {REGIME_FLOOR:g}, outside the asymptotic regime"
        logger.warning(message)
        warnings.warn(message, RegimeWarning, stacklevel=stacklevel)
        return False
    return True


def _soft_gate(p: OscParams, where: str):
    return regime_gate(p.alpha * p.r, where, stacklevel=4)


def l1_phase(alpha, z):
    """log 2 − α log(1+α) − log(1+S) + α log(α+S), S = √(1−(1−α²)z)"""
    alpha = mpmath.mpf(alpha)
    s = mpmath.sqrt(1 - (1 - alpha ** 2) * z)
    return (mpmath.log(2) - alpha * mpmath.log(1 + alpha)
            - mpmath.log(1 + s) + alpha * mpmath.log(alpha + s))


def asympt_2f1_osc(p: OscParams, z, n_terms: int = 1, gate: bool = True):
    """Main term exp(2ir l₁(α,z)) (1−(1−α²)z)^{−1/4} of the oscillatory ₂F₁.

    Higher correction coefficients are not available in closed form, so only
    n_terms = 1 is evaluated.
    """
    if not 0 < z < 1:
        raise DomainError(f"z must lie in (0, 1), got {z}")
    if n_terms != 1:
        raise DomainError("only the leading term of this expansion is available")
    if gate:
        _soft_gate(p, "asympt_2f1_osc")

    alpha = mpmath.mpf(p.alpha)
    return mpmath.expj(2 * p.r * l1_phase(alpha, z)) * (1 - (1 - alpha ** 2) * z) ** (-0.25)


def asympt_2f1_window(T, G, v, t, z):
    """Main term of asympt_2f1_osc rewritten around r = T + Gv with α₀ = t/T.

    Accurate to O(G²v²/T) against the main term at r = T + Gv, α = t/r.
    """
    T = mpmath.mpf(T)
    alpha0 = mpmath.mpf(t) / T
    s0 = mpmath.sqrt(1 - (1 - alpha0 ** 2) * z)
    phase = T * l1_phase(alpha0, z) + G * v * (mpmath.log(2) - mpmath.log(1 + s0))
    return mpmath.expj(2 * phase) * (1 - (1 - alpha0 ** 2) * z) ** (-0.25)


# ---------------------------------------------------------------------------
# Turning point of F2

class Regime(Enum):
    BELOW = "below"
    NEAR = "near"
    ABOVE = "above"


@dataclass(frozen=True)
class TurningPointData:
    y: float
    zeta_hat: object
    a0: Optional[object]
    a1: Optional[object]
    regime: Regime


TAYLOR_TERMS = 40
TAYLOR_WINDOW = 0.05


def _a_taylor(alpha, delta, above: bool):
    """∫₀^δ s^{1/2} g(s) ds with g(s) = ½(β∓s)^{−1/2}(α²±s)^{−1} expanded at s = 0"""
    beta = 1 - alpha ** 2
    a2 = alpha ** 2
    sign = -1 if above else 1
    # (β − sign·s)^{-1/2} = β^{-1/2} Σ binom(2k,k)/4^k (sign·s/β)^k
    # (α² + sign·s)^{-1} = α^{-2} Σ (−sign·s/α²)^k
    root = [mpmath.binomial(2 * k, k) / mpmath.mpf(4) ** k * (sign / beta) ** k
            for k in range(TAYLOR_TERMS)]
    geometric = [(-sign / a2) ** k for k in range(TAYLOR_TERMS)]
    total = mpmath.mpf(0)
    for k in range(TAYLOR_TERMS):
        g_k = sum(root[i] * geometric[k - i] for i in range(k + 1))
        total += g_k * delta ** (k + mpmath.mpf(1.5)) / (k + mpmath.mpf(1.5))
    return total / (2 * mpmath.sqrt(beta) * a2)


def _a0_exact(alpha, y):
    beta = 1 - alpha ** 2
    root = mpmath.sqrt(y) / mpmath.sqrt(beta - y)
    return (mpmath.pi * (1 - alpha) / 2 - mpmath.atan(root)
            + alpha * mpmath.atan(alpha * root))


def _a1_exact(alpha, y):
    beta = 1 - alpha ** 2
    root_y = mpmath.sqrt(y)
    root_d = mpmath.sqrt(y - beta)
    return (alpha * mpmath.log(alpha * root_y + root_d) - mpmath.log(root_y + root_d)
            - alpha / 2 * mpmath.log(1 - y) + (1 - alpha) / 2 * mpmath.log(beta))


def turning_point_data(p: OscParams, y, method: str = "auto") -> TurningPointData:
    """ζ̂(y) with 𝐚₀ below and 𝐚₁ above the turning point y = 1 − α².

    method: "auto" switches to the series form within a small window of the
    turning point, "exact" and "taylor" force one branch.
    """
    if not 0 < y < 1:
        raise DomainError(f"y must lie in (0, 1), got {y}")

    alpha = mpmath.mpf(p.alpha)
    y = mpmath.mpf(y)
    beta = 1 - alpha ** 2
    delta = abs(y - beta)
    window = TAYLOR_WINDOW * min(alpha ** 2, beta)

    if delta == 0:
        return TurningPointData(y=y, zeta_hat=mpmath.mpf(0), a0=mpmath.mpf(0),
                                a1=mpmath.mpf(0), regime=Regime.NEAR)

    use_taylor = method == "taylor" or (method == "auto" and delta < window)
    below = y < beta
    if use_taylor:
        a = _a_taylor(alpha, delta, above=not below)
    else:
        a = _a0_exact(alpha, y) if below else _a1_exact(alpha, y)

    magnitude = (3 * a / (2 * alpha)) ** (mpmath.mpf(2) / 3)
    if delta < window:
        regime = Regime.NEAR
    else:
        regime = Regime.BELOW if below else Regime.ABOVE

    if below:
        return TurningPointData(y=y, zeta_hat=-magnitude, a0=a, a1=None, regime=regime)
    return TurningPointData(y=y, zeta_hat=magnitude, a0=None, a1=a, regime=regime)


def l2_phase(alpha, y, r):
    """α log(1−y) − 2α log r + (1−α) log(1−α) − (1+α) log(1+α) + 2α"""
    alpha = mpmath.mpf(alpha)
    return (alpha * mpmath.log(1 - y) - 2 * alpha * mpmath.log(r)
            + (1 - alpha) * mpmath.log(1 - alpha) - (1 + alpha) * mpmath.log(1 + alpha)
            + 2 * alpha)


def asympt_f2_airy(p: OscParams, y, gate: bool = True):
    """Airy-type main term of F₂(r, α, y), uniform through the turning point"""
    if not 0 < y < 1:
        raise DomainError(f"y must lie in (0, 1), got {y}")
    if gate:
        _soft_gate(p, "asympt_f2_airy")

    r = mpmath.mpf(p.r)
    alpha = mpmath.mpf(p.alpha)
    y = mpmath.mpf(y)
    beta = 1 - alpha ** 2
    data = turning_point_data(p, y)
    scale = 2 * r * alpha

    if y == beta:
        # α²ζ̂/(y−β) → 2^{−2/3} β^{−1/3}
        ratio = mpmath.mpf(2) ** (-mpmath.mpf(2) / 3) * beta ** (-mpmath.mpf(1) / 3)
    else:
        ratio = alpha ** 2 * data.zeta_hat / (y - beta)

    amplitude = (mpmath.mpf(2) ** 1.5 * mpmath.pi * mpmath.exp(-mpmath.pi * r * alpha)
                 * scale ** (-mpmath.mpf(1) / 3) * ratio ** 0.25
                 * mpmath.airyai(-scale ** (mpmath.mpf(2) / 3) * data.zeta_hat))
    return mpmath.expj(r * l2_phase(alpha, y, r)) * amplitude


def asympt_f2_cosine(p: OscParams, y):
    """Oscillatory form 2√π e^{irl₂} e^{−πrα} cos(2r𝐚₁ − π/4) / (√r (y−1+α²)^{1/4})"""
    alpha = mpmath.mpf(p.alpha)
    if not 1 - alpha ** 2 < y < 1:
        raise RegimeError(f"cosine form needs 1 - alpha^2 < y < 1, got y = {y}")
    r = mpmath.mpf(p.r)
    a1 = turning_point_data(p, y).a1
    return (2 * mpmath.sqrt(mpmath.pi) * mpmath.expj(r * l2_phase(alpha, y, r))
            * mpmath.exp(-mpmath.pi * r * alpha) * mpmath.cos(2 * r * a1 - mpmath.pi / 4)
            / (mpmath.sqrt(r) * (y - 1 + alpha ** 2) ** 0.25))


def asympt_f2_decay_envelope(p: OscParams, y):
    """Bound e^{−πrα} e^{−2r𝐚₀} / (√r (1−α²−y)^{1/4}) below the turning point"""
    alpha = mpmath.mpf(p.alpha)
    if not 0 < y < 1 - alpha ** 2:
        raise RegimeError(f"decay envelope needs 0 < y < 1 - alpha^2, got y = {y}")
    r = mpmath.mpf(p.r)
    a0 = turning_point_data(p, y).a0
    return (mpmath.exp(-mpmath.pi * r * alpha) * mpmath.exp(-2 * r * a0)
            / (mpmath.sqrt(r) * (1 - alpha ** 2 - y) ** 0.25))


# ---------------------------------------------------------------------------
# Imaginary-order Bessel functions

def bessel_FG_at(t, x, ctx: Optional[PrecisionContext] = None) -> Tuple:
    """(F_{2it}(x), G_{2it}(x)): Re J_{2it}(x)/cosh(πt) and Im J_{2it}(x)/sinh(πt).

    At t = 0 these are J₀ and Y₀.
    """
    ctx = resolve_context(ctx)
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")

    t = mpmath.mpf(t)
    extra = int(math.pi * float(t) / math.log(10)) + 10
    with ctx.workdps(extra):
        if t == 0:
            return +mpmath.besselj(0, x), +mpmath.bessely(0, x)
        j = mpmath.besselj(mpmath.mpc(0, 2 * t), x)
        f = mpmath.re(j) / mpmath.cosh(mpmath.pi * t)
        g = mpmath.im(j) / mpmath.sinh(mpmath.pi * t)
    return +f, +g


def bessel_FG(mu_t, z, ctx: Optional[PrecisionContext] = None) -> Tuple:
    """(F_{2it}(2tz), G_{2it}(2tz)) in the Dunster scaling"""
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    if not mu_t > 0:
        raise DomainError("the scaled argument 2tz needs t > 0; use bessel_FG_at for t = 0")
    return bessel_FG_at(mu_t, 2 * mpmath.mpf(mu_t) * z, ctx)


def xi_phase(v):
    """ξ(v) = √(1+v²) + log(v / (1+√(1+v²)))"""
    root = mpmath.sqrt(1 + mpmath.mpf(v) ** 2)
    return root + mpmath.log(v / (1 + root))


def bessel_FG_asympt(t, z) -> Tuple:
    """Main terms (πt)^{−1/2}(1+z²)^{−1/4}·(cos, sin)(2tξ(z) − π/4)"""
    t = mpmath.mpf(t)
    amplitude = 1 / (mpmath.sqrt(mpmath.pi * t) * (1 + mpmath.mpf(z) ** 2) ** 0.25)
    phase = 2 * t * xi_phase(z) - mpmath.pi / 4
    return amplitude * mpmath.cos(phase), amplitude * mpmath.sin(phase)


def bessel_K_at(t, x, ctx: Optional[PrecisionContext] = None, method: str = "integral"):
    """e^{πt} K_{2it}(x), real for real t and x > 0.

    "integral" evaluates e^{πt} ∫₀^∞ e^{−x cosh u} cos(2tu) du with one
    double-exponential panel per half period; "series" defers to mpmath.besselk.
    """
    ctx = resolve_context(ctx)
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    t = abs(mpmath.mpf(t))
    extra = int(math.pi * float(t) / math.log(10)) + 15

    with ctx.workdps(extra):
        x = mpmath.mpf(x)
        if t == 0:
            return +mpmath.besselk(0, x)
        if method == "series":
            value = mpmath.re(mpmath.besselk(mpmath.mpc(0, 2 * t), x))
            return +(mpmath.exp(mpmath.pi * t) * value)
        if method != "integral":
            raise DomainError(f"unknown method {method!r}")

        digits = ctx.working_digits + extra
        target = x + digits * mpmath.log(10) + mpmath.pi * t
        upper = mpmath.acosh(max(target / x, mpmath.mpf(2)))
        step = mpmath.pi / (2 * t)
        panels = int(mpmath.ceil(upper / step))
        if panels > config.quadrature.max_panels:
            raise DomainError(f"{panels} panels exceed the quadrature budget")
        points = [k * step for k in range(panels + 1)]
        value = mpmath.quad(lambda u: mpmath.exp(-x * mpmath.cosh(u)) * mpmath.cos(2 * t * u),
                            points)
        result = mpmath.exp(mpmath.pi * t) * value
    return +result


def bessel_K_imag(t, z, ctx: Optional[PrecisionContext] = None, method: str = "integral"):
    """e^{πt} K_{2it}(2tz) for t ≥ 1, z > 0"""
    if t < 1:
        raise DomainError(f"t must be at least 1, got {t}")
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    return bessel_K_at(t, 2 * mpmath.mpf(t) * z, ctx, method=method)


def eta_phase(v):
    """η(v) = −√(1−v²) + log((1+√(1−v²))/v)"""
    root = mpmath.sqrt(1 - mpmath.mpf(v) ** 2)
    return -root + mpmath.log((1 + root) / v)


def bessel_K_imag_asympt(t, z, n_terms: int = 1):
    """Main term √π/(√t (1−z²)^{1/4}) cos(2tη(z) − π/4) of e^{πt}K_{2it}(2tz).

    Valid for 1 − z ≫ t^{−2/3}; closer to the turning point raises RegimeError.
    """
    if n_terms != 1:
        raise DomainError("only the leading term of this expansion is available")
    t = mpmath.mpf(t)
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    if z >= 1 - t ** (-mpmath.mpf(2) / 3):
        raise RegimeError(f"z = {z} too close to the turning point for t = {t}")
    z = mpmath.mpf(z)
    return (mpmath.sqrt(mpmath.pi) / (mpmath.sqrt(t) * (1 - z ** 2) ** 0.25)
            * mpmath.cos(2 * t * eta_phase(z) - mpmath.pi / 4))


def airy_ai(x, ctx: Optional[PrecisionContext] = None):
    ctx = resolve_context(ctx)
    with ctx.workdps(5):
        value = mpmath.airyai(x)
    return +value


# ---------------------------------------------------------------------------
# ODE residuals

def second_difference(f, x, h):
    """Richardson-extrapolated central second difference"""
    def central(step):
        return (f(x + step) - 2 * f(x) + f(x - step)) / step ** 2

    d_h = central(h)
    d_half = central(h / 2)
    d_quarter = central(h / 4)
    r1 = (4 * d_half - d_h) / 3
    r2 = (4 * d_quarter - d_half) / 3
    return (16 * r2 - r1) / 15


def _ode_residual(omega, coefficient, z, h):
    """|ω'' − qω| relative to |q| times the local amplitude √(ω² + ω'²/|q|)"""
    second = second_difference(omega, z, h)
    q = coefficient(z)
    value = omega(z)
    slope = (omega(z + h) - omega(z - h)) / (2 * h)
    amplitude = mpmath.sqrt(value ** 2 + slope ** 2 / abs(q))
    return abs(second - q * value) / (abs(q) * amplitude)


def ode_residual_FG(t, z, which: str = "F", ctx: Optional[PrecisionContext] = None, h=1e-4):
    """Relative residual of ω'' = −(1+16t²(1+z²))/(4z²) ω for ω = L_{2it}(2tz)√z"""
    ctx = resolve_context(ctx)
    index = {"F": 0, "G": 1}[which]
    with ctx.workdps(10):
        t = mpmath.mpf(t)

        def omega(v):
            return bessel_FG(t, v, ctx)[index] * mpmath.sqrt(v)

        def coefficient(v):
            return -(1 + 16 * t ** 2 * (1 + v ** 2)) / (4 * v ** 2)

        residual = _ode_residual(omega, coefficient, mpmath.mpf(z), mpmath.mpf(h))
    return float(residual)


def ode_residual_K(t, z, ctx: Optional[PrecisionContext] = None, h=1e-4):
    """Relative residual of ω'' = (16t²(z²−1) − 1)/(4z²) ω for ω = K_{2it}(2tz)√z"""
    ctx = resolve_context(ctx)
    with ctx.workdps(10):
        t = mpmath.mpf(t)

        def omega(v):
            return bessel_K_at(t, 2 * t * v, ctx, method="series") * mpmath.sqrt(v)

        def coefficient(v):
            return (16 * t ** 2 * (v ** 2 - 1) - 1) / (4 * v ** 2)

        residual = _ode_residual(omega, coefficient, mpmath.mpf(z), mpmath.mpf(h))
    return float(residual)


def ode_residual_airy(x, ctx: Optional[PrecisionContext] = None, h=1e-4):
    """Residual of Ai''(x) = x Ai(x) relative to max(1, |x|)·max(|Ai|, |Ai'|)"""
    ctx = resolve_context(ctx)
    with ctx.workdps(10):
        x = mpmath.mpf(x)
        second = second_difference(mpmath.airyai, x, mpmath.mpf(h))
        value = mpmath.airyai(x)
        scale = max(abs(x), 1) * max(abs(value), abs(mpmath.airyai(x, derivative=1)))
        residual = abs(second - x * value) / scale
    return float(residual)
