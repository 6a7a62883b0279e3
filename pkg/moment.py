"""
First Moment Reciprocity
Spectral and arithmetic sides of the twisted first moment of L(sym² u_j, 1/2+2it), and the second-moment reduction inputs.
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd

from config import config
from maass import (
    CoverageError, HarmonicConvention, MaassForm, SpectralWeight, WeightVariant,
    h_eval, harmonic_weight, square_coefficients, sym2_L_report,
)
from oscint import QuadratureBudgetError, QuadratureResult, integrate_decaying
from specfun import (
    DomainError, OscParams, PrecisionContext, asympt_2f1_osc, asympt_f2_airy,
    f2_value, regime_gate, resolve_context, zeta,
)
from zagier import tau_nu, zagier_L


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CriticalPoint:
    """ρ = 1/2 + 2it"""
    t: float

    @property
    def rho(self):
        return mpmath.mpc(0.5, 2 * self.t)


@dataclass
class ComponentValue:
    value: complex
    tolerance: float
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class MomentBreakdown:
    """Both sides of the first-moment identity with per-component tolerances"""
    spectral: complex
    mt: complex
    ct: complex
    et: complex
    s1: complex
    s2: complex
    residual: complex
    tolerances: Dict[str, float]
    convention: str = HarmonicConvention.SYM2_L1.value
    residuals_by_convention: Dict[str, complex] = field(default_factory=dict)
    s2_cutoff: int = 0
    rel_tol: float = 1e-8
    parameters: Dict[str, Any] = field(default_factory=dict)

    @property
    def arithmetic(self) -> complex:
        return self.mt + self.ct + self.et + self.s1 + self.s2

    def recompute_residual(self) -> complex:
        return self.spectral - (self.mt + self.ct + self.et + self.s1 + self.s2)

    @property
    def combined_tolerance(self) -> float:
        scale = max(abs(v) for v in (self.spectral, self.mt, self.ct, self.et, self.s1, self.s2))
        return sum(self.tolerances.values()) + self.rel_tol * scale

    @property
    def passed(self) -> bool:
        return abs(self.residual) <= self.combined_tolerance

    def convention_passes(self, convention: str) -> bool:
        return abs(self.residuals_by_convention[convention]) <= self.combined_tolerance

    def to_dict(self) -> Dict[str, Any]:
        def pair(z):
            z = complex(z)
            return [z.real, z.imag]

        return {
            'parameters': self.parameters,
            'spectral': pair(self.spectral),
            'components': {name: pair(getattr(self, name)) for name in ('mt', 'ct', 'et', 's1', 's2')},
            'residual': pair(self.residual),
            'abs_residual': abs(complex(self.residual)),
            'tolerances': self.tolerances,
            'combined_tolerance': self.combined_tolerance,
            'convention': self.convention,
            'residuals_by_convention': {k: pair(v) for k, v in self.residuals_by_convention.items()},
            's2_cutoff': self.s2_cutoff,
            'passed': self.passed,
        }


@contextmanager
def _component(name: str):
    try:
        yield
    except Exception as e:
        logger.error(f"Component {name} failed: {e}")
        e.component = name
        raise


# ---------------------------------------------------------------------------
# I(x, ρ; h)

def _windows(w: SpectralWeight, even: bool) -> List[Tuple[float, float]]:
    lo, hi = w.window()
    if even:
        return [(lo, hi)]
    if lo <= 0:
        return [(-hi, hi)]
    return [(-hi, -lo), (lo, hi)]


def _integrate_windows(f: Callable, w: SpectralWeight, ctx: PrecisionContext,
                       even: bool = False, abs_floor: Optional[float] = None) -> QuadratureResult:
    """∫ f over the Gaussian windows of w (over [0, ∞) doubled when f is even)"""
    total = None
    for a, b in _windows(w, even):
        step = w.G / 2
        points = list(np.arange(a + step, b, step))
        try:
            piece = integrate_decaying(f, (a, b), ctx=ctx, points=points, abs_floor=abs_floor)
        except QuadratureBudgetError as e:
            if abs_floor is None or e.partial.abs_error_estimate > abs_floor:
                raise
            piece = e.partial
        total = piece if total is None else total + piece

    if even:
        total = QuadratureResult(value=2 * total.value, abs_error_estimate=2 * total.abs_error_estimate,
                                 evaluations=total.evaluations, panels=total.panels)
    return total


def _is_two(x) -> bool:
    return abs(x - 2) < 1e-12


def _integrand(x, cp: CriticalPoint, w: SpectralWeight, ctx: PrecisionContext,
               asymptotic: bool = False) -> Callable:
    rho = cp.rho
    t = mpmath.mpf(cp.t)
    shift = 0.5 - rho / 2
    x = mpmath.mpf(x)

    if _is_two(x):
        constant = mpmath.gamma(rho - 0.5) * mpmath.power(2, 2 - rho) * 1j / mpmath.pi ** 1.5

        def f(r):
            ir = 1j * r
            ratio = mpmath.exp(mpmath.loggamma(shift + ir) + mpmath.loggamma(0.5 + shift + ir)
                               - mpmath.loggamma(rho / 2 + ir) - mpmath.loggamma(0.5 + rho / 2 + ir))
            return (constant * r * h_eval(w, r, ctx) / mpmath.cosh(mpmath.pi * r)
                    * mpmath.sin(mpmath.pi * (rho / 2 - ir)) * ratio)
        return f

    if x > 2:
        constant = mpmath.power(2, 2 - rho) * 1j / mpmath.pi ** 1.5
        z = 4 / x ** 2

        def f(r):
            ir = 1j * r
            ratio = mpmath.exp(mpmath.loggamma(shift + ir) + mpmath.loggamma(0.5 + shift + ir)
                               - mpmath.loggamma(1 + 2 * ir))
            if asymptotic and r > abs(t) and t > 0:
                hyper = asympt_2f1_osc(OscParams.from_r_t(float(r), float(t)), z, gate=False)
            else:
                hyper = mpmath.hyp2f1(shift + ir, 0.5 + shift + ir, 1 + 2 * ir, z)
            return (constant * r * h_eval(w, r, ctx) / mpmath.cosh(mpmath.pi * r)
                    * mpmath.power(2 / x, 2 * ir) * ratio
                    * mpmath.sin(mpmath.pi * (rho / 2 - ir)) * hyper)
        return f

    constant = 2j / mpmath.pi ** 1.5 * mpmath.power(x, 1 - rho)
    y = x ** 2 / 4

    def f(r):
        if asymptotic and abs(r) > abs(t) and t > 0:
            f2 = asympt_f2_airy(OscParams.from_r_t(float(abs(r)), float(t)), y, gate=False)
        else:
            f2 = f2_value(r, t, y, ctx)
        return (constant * r * h_eval(w, r, ctx) / mpmath.cosh(mpmath.pi * r)
                * mpmath.cos(mpmath.pi * (rho / 2 + 1j * r)) * f2)
    return f


def i_transform_integrand(x, cp: CriticalPoint, w: SpectralWeight, r,
                          ctx: Optional[PrecisionContext] = None):
    """Integrand in r of I(x, ρ; h), dispatched on x ⋛ 2"""
    ctx = resolve_context(ctx)
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    with ctx.workdps(5):
        return _integrand(x, cp, w, ctx)(mpmath.mpmathify(r))


def i_transform_result(x, cp: CriticalPoint, w: SpectralWeight, ctx: Optional[PrecisionContext] = None,
                       asymptotic: bool = False, abs_floor: Optional[float] = None) -> QuadratureResult:
    ctx = resolve_context(ctx)
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    if asymptotic and cp.t > 0:
        # αr = t at every node, so one gate covers the whole integral
        regime_gate(cp.t, f"i_transform(x={float(x):g})")
    with ctx.workdps(5):
        f = _integrand(x, cp, w, ctx, asymptotic=asymptotic)
        return _integrate_windows(f, w, ctx, abs_floor=abs_floor)


def i_transform(x, cp: CriticalPoint, w: SpectralWeight, ctx: Optional[PrecisionContext] = None):
    """I(x, ρ; h) over the windows where h is not negligible"""
    return i_transform_result(x, cp, w, ctx).value


def i_transform_asymptotic(x, cp: CriticalPoint, w: SpectralWeight, ctx: Optional[PrecisionContext] = None):
    """I(x, ρ; h) with the hypergeometric factor replaced by its large-r main term.

    Only r > |t| with t > 0 is replaced; other nodes keep the exact value.
    """
    return i_transform_result(x, cp, w, ctx, asymptotic=True).value


def i_transform_singular_part(x, cp: CriticalPoint, w: SpectralWeight,
                              ctx: Optional[PrecisionContext] = None):
    """Leading (1 − 4/x²)^{2it} branch of I(x, ρ; h) for x > 2.

    Near z = 4/x² → 1 the ₂F₁ splits into a regular branch, whose limit is
    the integrand of I(2, ρ; h), and this one, which oscillates without limit
    as x → 2⁺:

        2^{2−ρ}i/π^{3/2} Γ(−2it) (1 − 4/x²)^{2it} ∫ r h(r)/cosh(πr) (2/x)^{2ir} sin(π(ρ/2 − ir)) dr
    """
    ctx = resolve_context(ctx)
    if not x > 2:
        raise DomainError(f"the singular branch is defined for x > 2, got {x}")
    if cp.t == 0:
        raise DomainError("t = 0 merges both branches into a logarithm")
    with ctx.workdps(5):
        rho = cp.rho
        x = mpmath.mpf(x)
        it = 1j * mpmath.mpf(cp.t)

        def f(r):
            return (r * h_eval(w, r, ctx) / mpmath.cosh(mpmath.pi * r) * mpmath.power(2 / x, 2j * r)
                    * mpmath.sin(mpmath.pi * (rho / 2 - 1j * r)))

        integral = _integrate_windows(f, w, ctx)
        value = (mpmath.power(2, 2 - rho) * 1j / mpmath.pi ** 1.5 * mpmath.gamma(-2 * it)
                 * mpmath.power(1 - 4 / x ** 2, 2 * it) * integral.value)
    return +value


@dataclass
class LimitAtTwo:
    """I(2) next to I(2 + δ) split into its singular and regular parts"""
    at: complex
    above: complex
    singular: complex
    delta: float

    @property
    def regular(self) -> complex:
        return self.above - self.singular

    @property
    def relative_gap(self) -> float:
        scale = max(abs(self.at), abs(self.singular), 1e-300)
        return float(abs(self.regular - self.at) / scale)

    def to_dict(self) -> Dict[str, Any]:
        def pair(z):
            z = complex(z)
            return [z.real, z.imag]

        return {'delta': self.delta, 'at': pair(self.at), 'above': pair(self.above),
                'singular': pair(self.singular), 'relative_gap': self.relative_gap}


def i_transform_limit_at_two(cp: CriticalPoint, w: SpectralWeight, delta: Optional[float] = None,
                             ctx: Optional[PrecisionContext] = None) -> LimitAtTwo:
    """Approach x = 2 from above with the oscillating branch removed.

    The default δ keeps δ·r² ≤ 1e-4 across the window of h, which bounds the
    first-order terms of both ₂F₁ branches in 1 − z.
    """
    ctx = resolve_context(ctx)
    if delta is None:
        delta = 1e-4 / w.window()[1] ** 2
    if not delta > 1e-12:
        raise DomainError(f"delta = {delta:g} is too close to x = 2")
    with ctx.workdps(5):
        x = 2 + mpmath.mpf(delta)
        result = LimitAtTwo(at=i_transform(2, cp, w, ctx), above=i_transform(x, cp, w, ctx),
                            singular=i_transform_singular_part(x, cp, w, ctx), delta=float(delta))
    logger.debug(f"I near x = 2: delta {delta:.2e}, relative gap {result.relative_gap:.2e}")
    return result


# ---------------------------------------------------------------------------
# Arithmetic side

def _pow(base, exponent):
    return mpmath.power(mpmath.mpf(base), exponent)


def main_term(m: int, cp: CriticalPoint, w: SpectralWeight,
              ctx: Optional[PrecisionContext] = None) -> ComponentValue:
    """ζ(2ρ)/(π²m^ρ) ∫ r h tanh(πr) dr + (2π)^{ρ−1} ζ(2ρ−1) I(2)/(2m)^{1−ρ}"""
    ctx = resolve_context(ctx)
    rho = cp.rho
    with _component('mt'), ctx.workdps(5):
        tanh_part = _integrate_windows(
            lambda r: r * h_eval(w, r, ctx) * mpmath.tanh(mpmath.pi * r), w, ctx, even=True)
        i2 = i_transform_result(2, cp, w, ctx)

        first = zeta(2 * rho, ctx) / (mpmath.pi ** 2 * _pow(m, rho)) * tanh_part.value
        second = _pow(2 * mpmath.pi, rho - 1) * zeta(2 * rho - 1, ctx) * i2.value / _pow(2 * m, 1 - rho)
        tolerance = (abs(zeta(2 * rho, ctx)) / (mpmath.pi ** 2 * math.sqrt(m)) * tanh_part.abs_error_estimate
                     + abs(_pow(2 * mpmath.pi, rho - 1) * zeta(2 * rho - 1, ctx)) * i2.abs_error_estimate)
    return ComponentValue(value=first + second, tolerance=float(tolerance),
                          details={'tanh_integral': tanh_part.value, 'i2': i2.value})


def _ct_integrand(m: int, rho, w: SpectralWeight, ctx: PrecisionContext) -> Callable:
    def f(r):
        if r == 0:
            return mpmath.mpf(0)
        ir = 1j * r
        return (tau_nu(ir, m * m) * zeta(rho + 2 * ir, ctx) * zeta(rho - 2 * ir, ctx)
                / abs(zeta(1 + 2 * ir, ctx)) ** 2 * h_eval(w, r, ctx))
    return f


def continuous_term_integrand(m: int, cp: CriticalPoint, w: SpectralWeight, r,
                              ctx: Optional[PrecisionContext] = None):
    """Integrand in r of CT(m, ρ; h); even in r for the plain weight"""
    ctx = resolve_context(ctx)
    with ctx.workdps(5):
        return _ct_integrand(m, cp.rho, w, ctx)(mpmath.mpmathify(r))


def continuous_term(m: int, cp: CriticalPoint, w: SpectralWeight,
                    ctx: Optional[PrecisionContext] = None) -> ComponentValue:
    """−(ζ(ρ)/π) ∫ τ_{ir}(m²) ζ(ρ+2ir) ζ(ρ−2ir) / |ζ(1+2ir)|² h(r) dr (even integrand, doubled half line)"""
    ctx = resolve_context(ctx)
    with _component('ct'), ctx.workdps(5):
        integral = _integrate_windows(_ct_integrand(m, cp.rho, w, ctx), w, ctx, even=True)
        scale = zeta(cp.rho, ctx) / mpmath.pi
    return ComponentValue(value=-scale * integral.value,
                          tolerance=float(abs(scale) * integral.abs_error_estimate))


def error_term(m: int, cp: CriticalPoint, w: SpectralWeight,
               ctx: Optional[PrecisionContext] = None) -> ComponentValue:
    """Residual-spectrum term at r = (1−ρ)/(2i) plus the 𝓛_{−4m²}(ρ) term"""
    ctx = resolve_context(ctx)
    rho = cp.rho
    with _component('et'), ctx.workdps(5):
        point = (1 - rho) / 2j
        first = (-2 * zeta(2 * rho - 1, ctx) / zeta(2 - rho, ctx)
                 * tau_nu((1 - rho) / 2, m * m) * h_eval(w, point, ctx))

        def f(r):
            ir = 1j * r
            ratio = mpmath.exp(mpmath.loggamma(0.5 - rho / 2 + ir) - mpmath.loggamma(0.5 + rho / 2 + ir))
            return r * h_eval(w, r, ctx) / mpmath.cosh(mpmath.pi * r) * ratio

        integral = _integrate_windows(f, w, ctx)
        constant = (zagier_L(-4 * m * m, rho, ctx) * _pow(2, 1 - rho) * 1j
                    / (_pow(4 * mpmath.pi * m, 1 - rho) * mpmath.pi))
    return ComponentValue(value=first + constant * integral.value,
                          tolerance=float(abs(constant) * integral.abs_error_estimate),
                          details={'residual_spectrum': first})


def _s_term(n: int, m: int, cp: CriticalPoint, w: SpectralWeight, ctx: PrecisionContext,
            abs_floor: Optional[float] = None) -> Tuple[Any, float]:
    rho = cp.rho
    result = i_transform_result(mpmath.mpf(n) / m, cp, w, ctx, abs_floor=abs_floor)
    factor = _pow(2 * mpmath.pi, rho - 1) * _pow(n, rho - 1) * zagier_L(n * n - 4 * m * m, rho, ctx)
    return factor * result.value, float(abs(factor) * result.abs_error_estimate)


def s1_term(m: int, cp: CriticalPoint, w: SpectralWeight,
            ctx: Optional[PrecisionContext] = None) -> ComponentValue:
    """(2π)^{ρ−1} Σ_{n<2m} n^{ρ−1} 𝓛_{n²−4m²}(ρ) I(n/m, ρ; h)"""
    ctx = resolve_context(ctx)
    with _component('s1'), ctx.workdps(5):
        total, tolerance = mpmath.mpc(0), 0.0
        for n in range(1, 2 * m):
            value, error = _s_term(n, m, cp, w, ctx)
            total += value
            tolerance += error
    return ComponentValue(value=total, tolerance=tolerance)


def decay_cutoff(m: int, cp: CriticalPoint, w: SpectralWeight) -> int:
    """n beyond which x = n/m ≥ 10·T^{1.1}√(1+|t|) and I(x) is negligible"""
    return int(math.ceil(m * 10 * w.T ** 1.1 * math.sqrt(1 + abs(cp.t))))


def s2_term(m: int, cp: CriticalPoint, w: SpectralWeight, ctx: Optional[PrecisionContext] = None,
            n_max: Optional[int] = None, patience: int = 3, scale: Optional[float] = None) -> ComponentValue:
    """(2π)^{ρ−1} Σ_{n>2m} n^{ρ−1} 𝓛_{n²−4m²}(ρ) I(n/m, ρ; h).

    Without n_max the sum stops once `patience` consecutive terms fall below
    tol·scale, or at decay_cutoff.
    """
    ctx = resolve_context(ctx)
    tol = config.quadrature.tol
    cap = n_max if n_max is not None else decay_cutoff(m, cp, w)

    with _component('s2'), ctx.workdps(5):
        total, tolerance = mpmath.mpc(0), 0.0
        reference = scale
        quiet, tail, n = 0, 0.0, 2 * m
        for n in range(2 * m + 1, cap + 1):
            floor = tol * reference if reference else None
            value, error = _s_term(n, m, cp, w, ctx, abs_floor=floor)
            total += value
            tolerance += error
            if reference is None:
                reference = max(float(abs(value)), 1e-300)
            if n_max is None:
                if abs(value) < tol * reference:
                    quiet += 1
                    tail += float(abs(value))
                    if quiet >= patience:
                        break
                else:
                    quiet, tail = 0, 0.0

    logger.debug(f"s2_term(m={m}): cutoff {n}, tail {tail:.2e}")
    return ComponentValue(value=total, tolerance=tolerance + tail, details={'cutoff': n})


def arithmetic_side(m: int, cp: CriticalPoint, w: SpectralWeight,
                    ctx: Optional[PrecisionContext] = None) -> Dict[str, ComponentValue]:
    """MT, CT, ET, S₁, S₂"""
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    ctx = resolve_context(ctx)
    components = {
        'mt': main_term(m, cp, w, ctx),
        'ct': continuous_term(m, cp, w, ctx),
        'et': error_term(m, cp, w, ctx),
        's1': s1_term(m, cp, w, ctx),
    }
    scale = max(abs(c.value) for c in components.values())
    components['s2'] = s2_term(m, cp, w, ctx, scale=float(scale))
    return components


# ---------------------------------------------------------------------------
# Spectral side

def _square_coefficient(form: MaassForm, m: int) -> float:
    if m * m in form.hecke:
        return form.hecke[m * m]
    return float(square_coefficients(form, m)[m])


def check_window(forms: Sequence[MaassForm], w: SpectralWeight, coverage: Optional[float] = None) -> float:
    """Largest t_j the catalog must reach for the Gaussian tail of w to be negligible"""
    needed = w.window()[1]
    reach = coverage if coverage is not None else max((f.t_j for f in forms), default=0.0)
    if reach < needed:
        raise CoverageError(f"catalog reaches t_j = {reach:.3f}; the weight needs t_j up to {needed:.3f}")
    return needed


def _form_terms(form: MaassForm, rho: complex, digits: int,
                conventions: Tuple[str, ...]) -> Tuple[complex, float, Dict[str, float]]:
    ctx = PrecisionContext(working_digits=digits, target_rel_error=10.0 ** (1 - digits))
    report = sym2_L_report(form, rho, ctx, method='afe')
    weights = {c: harmonic_weight(form, c, ctx) for c in conventions}
    return report.value, report.truncation_estimate, weights


@dataclass
class SpectralSide:
    values: Dict[str, complex]
    tolerance: float
    forms_used: int
    truncation: float
    terms: List[Dict[str, Any]] = field(default_factory=list)


def spectral_side_report(forms: Sequence[MaassForm], m: int, cp: CriticalPoint, w: SpectralWeight,
                         ctx: Optional[PrecisionContext] = None,
                         conventions: Sequence[str] = (HarmonicConvention.SYM2_L1.value,),
                         coverage: Optional[float] = None, jobs: int = 1) -> SpectralSide:
    """Σ_j h(t_j) α_j λ_j(m²) L(sym² u_j, ρ) for each weight convention"""
    ctx = resolve_context(ctx)
    check_window(forms, w, coverage)
    conventions = tuple(HarmonicConvention(c).value for c in conventions)
    reach = coverage if coverage is not None else max(f.t_j for f in forms)

    weights_h = [complex(h_eval(w, f.t_j, ctx)) for f in forms]
    cutoff = 1e-30 * max((abs(v) for v in weights_h), default=0.0)
    active = [(f, hv) for f, hv in zip(forms, weights_h) if abs(hv) > cutoff]

    rho = complex(cp.rho)
    if jobs > 1 and len(active) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(_form_terms, [f for f, _ in active], [rho] * len(active),
                                        [ctx.working_digits] * len(active), [conventions] * len(active)))
    else:
        results = [_form_terms(f, rho, ctx.working_digits, conventions) for f, _ in active]

    values = {c: 0j for c in conventions}
    tolerance, terms = 0.0, []
    for (form, hv), (value, truncation, alphas) in zip(active, results):
        lam = _square_coefficient(form, m)
        for c in conventions:
            values[c] += hv * alphas[c] * lam * value
        tolerance += abs(hv * alphas[conventions[0]] * lam) * truncation
        terms.append({'t_j': form.t_j, 'h': hv, 'lambda_m2': lam, 'L': value, 'alpha': alphas})

    # Weyl law: about t²/12 forms below t
    truncation = float(abs(h_eval(w, reach, ctx)) * reach ** 2)
    logger.info(f"spectral side: {len(active)} of {len(forms)} forms, truncation {truncation:.2e}")
    return SpectralSide(values=values, tolerance=tolerance + truncation, forms_used=len(active),
                        truncation=truncation, terms=terms)


def spectral_side(forms: Sequence[MaassForm], m: int, cp: CriticalPoint, w: SpectralWeight,
                  ctx: Optional[PrecisionContext] = None,
                  convention: str = HarmonicConvention.SYM2_L1.value,
                  coverage: Optional[float] = None):
    report = spectral_side_report(forms, m, cp, w, ctx, (convention,), coverage)
    return report.values[HarmonicConvention(convention).value]


def verify_first_moment(forms: Sequence[MaassForm], m: int, cp: CriticalPoint, w: SpectralWeight,
                        ctx: Optional[PrecisionContext] = None,
                        convention: str = HarmonicConvention.SYM2_L1.value,
                        conventions: Optional[Sequence[str]] = None,
                        coverage: Optional[float] = None, rel_tol: float = 1e-8,
                        jobs: int = 1) -> MomentBreakdown:
    """Spectral side minus the five arithmetic components, under every requested weight convention"""
    ctx = resolve_context(ctx)
    convention = HarmonicConvention(convention).value
    conventions = [HarmonicConvention(c).value for c in (conventions or [c.value for c in HarmonicConvention])]
    if convention not in conventions:
        conventions.insert(0, convention)
    if 'stored' in conventions and any(f.weight is None for f in forms):
        conventions.remove('stored')

    logger.info(f"verify_first_moment: m={m}, t={cp.t}, T={w.T}, G={w.G}, N={w.N}, "
                f"{len(forms)} forms")
    arithmetic = arithmetic_side(m, cp, w, ctx)
    spectral = spectral_side_report(forms, m, cp, w, ctx, conventions, coverage, jobs)

    total = sum(c.value for c in arithmetic.values())
    residuals = {c: spectral.values[c] - total for c in conventions}
    tolerances = {name: c.tolerance for name, c in arithmetic.items()}
    tolerances['spectral'] = spectral.tolerance

    breakdown = MomentBreakdown(
        spectral=complex(spectral.values[convention]),
        mt=complex(arithmetic['mt'].value),
        ct=complex(arithmetic['ct'].value),
        et=complex(arithmetic['et'].value),
        s1=complex(arithmetic['s1'].value),
        s2=complex(arithmetic['s2'].value),
        residual=0j,
        tolerances=tolerances,
        convention=convention,
        residuals_by_convention={c: complex(v) for c, v in residuals.items()},
        s2_cutoff=arithmetic['s2'].details['cutoff'],
        rel_tol=rel_tol,
        parameters={'m': m, 't': cp.t, 'T': w.T, 'G': w.G, 'N': w.N, 'variant': w.variant.value,
                    'forms': len(forms), 'digits': ctx.working_digits},
    )
    breakdown.residual = breakdown.recompute_residual()

    level = logging.INFO if breakdown.passed else logging.WARNING
    logger.log(level, f"first moment m={m}: |residual| {abs(breakdown.residual):.3e} "
                      f"vs tolerance {breakdown.combined_tolerance:.3e}")
    return breakdown


# ---------------------------------------------------------------------------
# Second moment

def second_moment_terms(t: float, T: float, G: float, N: int, m_max: int, n_max: int,
                        ctx: Optional[PrecisionContext] = None) -> pd.DataFrame:
    """Per-(m, n) terms 𝓛_{n²−4m²}(1/2+2it)/n^{1/2−2it} · (I(n/m; H₀)/m^{1/2−2it} + I(n/m; H_∞)/m^{1/2+2it})"""
    ctx = resolve_context(ctx)
    cp = CriticalPoint(t)
    rho = cp.rho
    rows = []
    with ctx.workdps(5):
        for m in range(1, m_max + 1):
            h0 = SpectralWeight(T, G, N, WeightVariant.H0, t=t, m=m)
            hinf = SpectralWeight(T, G, N, WeightVariant.HINF, t=t, m=m)
            for n in range(1, n_max + 1):
                if n == 2 * m:
                    continue
                x = mpmath.mpf(n) / m
                arithmetic = zagier_L(n * n - 4 * m * m, rho, ctx) * _pow(n, rho - 1)
                v0 = arithmetic * i_transform(x, cp, h0, ctx)
                vinf = arithmetic * i_transform(x, cp, hinf, ctx)
                term = v0 * _pow(m, -rho) + vinf * _pow(m, -mpmath.conj(rho))
                rows.append({'m': m, 'n': n, 'sum': 'S1' if n < 2 * m else 'S2',
                             'h0': complex(v0), 'hinf': complex(vinf), 'term': complex(term)})
    return pd.DataFrame(rows, columns=['m', 'n', 'sum', 'h0', 'hinf', 'term'])


@dataclass
class SecondMomentRow:
    T: float
    G: float
    t: float
    forms: int
    moment: float
    ratio: float
    epsilon: float


def second_moment_experiment(forms: Sequence[MaassForm], t: float, T: float, G: float,
                             ctx: Optional[PrecisionContext] = None,
                             convention: str = HarmonicConvention.SYM2_L1.value,
                             epsilon: Optional[float] = None) -> SecondMomentRow:
    """Σ_{T<t_j≤T+G} α_j |L(sym² u_j, 1/2+2it)|² and its ratio to T^{1+ε}G"""
    ctx = resolve_context(ctx)
    epsilon = config.report.epsilon if epsilon is None else epsilon
    window = [f for f in forms if T < f.t_j <= T + G]
    total = 0.0
    for form in window:
        value = sym2_L_report(form, complex(0.5, 2 * t), ctx, method='afe').value
        total += harmonic_weight(form, convention, ctx) * abs(value) ** 2
    ratio = total / (T ** (1 + epsilon) * G)
    logger.info(f"second moment T={T}, G={G}, t={t}: {len(window)} forms, ratio {float(ratio):.4g}")
    return SecondMomentRow(T=T, G=G, t=t, forms=len(window), moment=float(total), ratio=float(ratio),
                           epsilon=epsilon)


def second_moment_grid(forms: Sequence[MaassForm], Ts: Sequence[float], G: float, ts: Sequence[float],
                       ctx: Optional[PrecisionContext] = None,
                       convention: str = HarmonicConvention.SYM2_L1.value) -> pd.DataFrame:
    rows = [second_moment_experiment(forms, t, T, G, ctx, convention).__dict__ for t in ts for T in Ts]
    return pd.DataFrame(rows, columns=['T', 'G', 't', 'forms', 'moment', 'ratio', 'epsilon'])
