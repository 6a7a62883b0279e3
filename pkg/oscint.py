"""
Quadrature Engine
Adaptive double-exponential quadrature for decaying, oscillatory and vertical-line integrals, smooth series cutoffs and the BKY bound.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from mpmath.calculus.quadrature import GaussLegendre
from scipy.special import erfcinv

from config import config
from specfun import PrecisionContext, DomainError, resolve_context


logger = logging.getLogger(__name__)


class QuadratureBudgetError(RuntimeError):
    """Node budget exhausted before the tolerance was met; carries the partial result"""

    def __init__(self, message: str, partial: "QuadratureResult"):
        super().__init__(message)
        self.partial = partial


@dataclass
class QuadratureResult:
    """Value of an integral with its error estimate and cost"""
    value: complex
    abs_error_estimate: float
    evaluations: int
    panels: int = 1
    interval: Tuple = field(default_factory=tuple)

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            value=self.value + other.value,
            abs_error_estimate=self.abs_error_estimate + other.abs_error_estimate,
            evaluations=self.evaluations + other.evaluations,
            panels=self.panels + other.panels,
        )


@dataclass(frozen=True)
class BkyParams:
    """Parameters of the non-stationary phase bound"""
    P: float
    R: float
    V: float
    X: float
    Y: float
    interval: Tuple[float, float]
    A: int = 1

    def __post_init__(self):
        for name in ('P', 'R', 'V', 'X', 'Y'):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        a, b = self.interval
        if not a < b:
            raise DomainError(f"interval must satisfy a < b, got {self.interval}")
        if self.A < 1:
            raise DomainError(f"A must be a positive integer, got {self.A}")


class _CountingIntegrand:
    def __init__(self, f: Callable):
        self.f = f
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


def tree_sum(values: Sequence):
    """Pairwise summation in a fixed tree order"""
    values = list(values)
    if not values:
        return mpmath.mpf(0)
    while len(values) > 1:
        paired = [values[i] + values[i + 1] for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            paired.append(values[-1])
        values = paired
    return values[0]


def gaussian_cutoff(tol: float) -> float:
    """c with erfc(c) = tol·envelope_floor: e^{−u²} tails beyond |u| > c are negligible"""
    target = max(tol * config.quadrature.envelope_floor, 1e-300)
    return float(erfcinv(target))


def _truncate(f: Callable, interval: Tuple, tol: float, envelope: Optional[Callable]):
    """Replace infinite endpoints by points where the envelope is below tol·floor"""
    a, b = interval
    if mpmath.isfinite(a) and mpmath.isfinite(b):
        return a, b

    bound = envelope if envelope is not None else (lambda x: abs(f(x)))
    floor = tol * config.quadrature.envelope_floor
    scale = max(abs(bound(mpmath.mpf(0))), mpmath.mpf(10) ** -300)

    def reach(sign):
        radius = mpmath.mpf(1)
        for _ in range(200):
            if abs(bound(sign * radius)) <= floor * scale:
                return sign * radius
            radius *= 2
        raise DomainError("integrand envelope does not decay")

    lo = a if mpmath.isfinite(a) else reach(-1)
    hi = b if mpmath.isfinite(b) else reach(1)
    return lo, hi


def integrate_decaying(
    f: Callable,
    interval: Tuple = (-mpmath.inf, mpmath.inf),
    tol: Optional[float] = None,
    ctx: Optional[PrecisionContext] = None,
    points: Optional[Sequence] = None,
    max_degree: Optional[int] = None,
    abs_floor: Optional[float] = None,
) -> QuadratureResult:
    """Tanh-sinh quadrature of a smooth integrand; infinite endpoints allowed.

    Succeeds when the estimate is below max(tol·|value|, abs_floor).
    """
    ctx = resolve_context(ctx)
    tol = tol if tol is not None else config.quadrature.tol
    max_degree = max_degree if max_degree is not None else config.quadrature.max_degree
    abs_floor = abs_floor if abs_floor is not None else mpmath.mpf(10) ** (-ctx.working_digits)

    counted = _CountingIntegrand(f)
    a, b = interval
    nodes = [a] + sorted(p for p in (points or []) if a < p < b) + [b]

    with ctx.workdps(5):
        value, error = mpmath.quad(counted, nodes, error=True, maxdegree=max_degree)

    result = QuadratureResult(
        value=value,
        abs_error_estimate=float(error),
        evaluations=counted.calls,
        panels=len(nodes) - 1,
        interval=(a, b),
    )
    if error > max(tol * abs(value), abs_floor):
        raise QuadratureBudgetError(
            f"estimate {float(error):.3e} above tolerance after degree {max_degree}", result
        )
    return result


def integrate_oscillatory(
    g: Callable,
    phase: Callable,
    omega: float,
    interval: Tuple,
    tol: Optional[float] = None,
    ctx: Optional[PrecisionContext] = None,
    stationary_points: Sequence = (),
    envelope: Optional[Callable] = None,
) -> QuadratureResult:
    """∫ g(x) e^{iω·phase(x)} dx.

    The interval is split at the supplied stationary points and each piece is
    panelled so that a panel spans a bounded number of oscillations.
    """
    ctx = resolve_context(ctx)
    tol = tol if tol is not None else config.quadrature.tol

    def integrand(x):
        return g(x) * mpmath.expj(omega * phase(x))

    if omega <= 1:
        return integrate_decaying(integrand, interval, tol, ctx)

    with ctx.workdps(5):
        a, b = _truncate(integrand, interval, tol, envelope)
        cuts = [a] + sorted(mpmath.mpf(p) for p in stationary_points if a < p < b) + [b]

        nodes: List = [cuts[0]]
        per_panel = config.quadrature.oscillations_per_panel
        for left, right in zip(cuts[:-1], cuts[1:]):
            # phase is monotone between stationary points
            oscillations = abs(omega * (phase(right) - phase(left))) / (2 * mpmath.pi)
            count = max(1, int(mpmath.ceil(oscillations / per_panel)))
            if count > config.quadrature.max_panels:
                raise DomainError(f"{count} panels exceed the quadrature budget")
            step = (right - left) / count
            nodes.extend(left + k * step for k in range(1, count + 1))

        counted = _CountingIntegrand(integrand)
        pieces = []
        errors = []
        for left, right in zip(nodes[:-1], nodes[1:]):
            value, error = mpmath.quad(counted, [left, right], error=True,
                                       maxdegree=config.quadrature.max_degree)
            pieces.append(value)
            errors.append(error)

        total = tree_sum(pieces)
        error = tree_sum(errors)

    logger.debug(f"integrate_oscillatory: omega={omega}, {len(pieces)} panels, {counted.calls} calls")
    result = QuadratureResult(value=total, abs_error_estimate=float(error),
                              evaluations=counted.calls, panels=len(pieces), interval=(a, b))
    if error > max(tol * abs(total), mpmath.mpf(10) ** (-ctx.working_digits)):
        raise QuadratureBudgetError(f"estimate {float(error):.3e} above tolerance", result)
    return result


def integrate_vertical_line(
    f: Callable,
    a: float,
    tol: Optional[float] = None,
    ctx: Optional[PrecisionContext] = None,
    height: Optional[float] = None,
    envelope: Optional[Callable] = None,
) -> QuadratureResult:
    """(1/2πi) ∫_{(a)} f(z) dz = (1/2π) ∫ f(a+iy) dy.

    Without an explicit height the line is cut where |f| (or the supplied
    envelope in y) drops below tol·floor relative to its value at y = 0.
    """
    ctx = resolve_context(ctx)
    tol = tol if tol is not None else config.quadrature.tol

    def on_line(y):
        return f(mpmath.mpc(a, y))

    with ctx.workdps(5):
        if height is None:
            lo, hi = _truncate(on_line, (-mpmath.inf, mpmath.inf), tol, envelope)
        else:
            lo, hi = -mpmath.mpf(height), mpmath.mpf(height)
        # y^{-z} and Gamma phases turn over on unit scales
        count = max(2, int(mpmath.ceil((hi - lo) / 2)))
        points = [lo + k * (hi - lo) / count for k in range(1, count)]
        result = integrate_decaying(on_line, (lo, hi), tol, ctx, points=points)
        result.value = result.value / (2 * mpmath.pi)
        result.abs_error_estimate = result.abs_error_estimate / (2 * float(mpmath.pi))
    return result


class VerticalLineRule:
    """Fixed composite Gauss-Legendre rule on ℜz = a, |ℑz| ≤ height.

    Evaluating the same base integrand against many values of y^{−z} reduces
    to one weighted exponential sum per y.
    """

    def __init__(self, a: float, height: float, panels: int = 40, nodes_per_panel: int = 24):
        self.a = a
        self.height = height
        self.panels = panels
        self.nodes_per_panel = nodes_per_panel

        x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
        edges = np.linspace(-height, height, panels + 1)
        half = np.diff(edges) / 2
        mid = (edges[:-1] + edges[1:]) / 2
        self.y = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        self.weights = (half[:, None] * w[None, :]).ravel() / (2 * np.pi)
        self.z = self.a + 1j * self.y

        self.logger = logging.getLogger(f"{__name__}.VerticalLineRule")

    @property
    def size(self) -> int:
        return self.z.size

    def integrate(self, values: np.ndarray) -> complex:
        """Rule applied to integrand values sampled at self.z"""
        return complex(np.sum(self.weights * values))

    def integrate_function(self, f: Callable) -> complex:
        return self.integrate(np.array([complex(f(complex(z))) for z in self.z]))

    def mp_nodes(self, digits: int) -> Tuple[List, List]:
        """The same panels at `digits` precision, 3·2^(m−1) ≥ nodes_per_panel nodes each"""
        degree = max(1, int(math.ceil(math.log2(self.nodes_per_panel / 3))) + 1)
        with mpmath.workdps(digits):
            base = GaussLegendre(mpmath.mp).calc_nodes(degree, mpmath.mp.prec)
            height = mpmath.mpf(self.height)
            half = height / self.panels
            scale = half / (2 * mpmath.pi)
            nodes, weights = [], []
            for j in range(self.panels):
                mid = -height + (2 * j + 1) * half
                for x, w in base:
                    nodes.append(mpmath.mpc(self.a, mid + half * x))
                    weights.append(scale * w)
        self.logger.debug(f"{len(nodes)} nodes at {digits} digits on Re z = {self.a}")
        return nodes, weights


def bky_estimate(p: BkyParams) -> float:
    """(b−a)·X·(1/(RV) + 1/(RP) + Y/(R²P²))^A"""
    a, b = p.interval
    base = 1 / (p.R * p.V) + 1 / (p.R * p.P) + p.Y / (p.R ** 2 * p.P ** 2)
    return (b - a) * p.X * base ** p.A


def gaussian_exp_integral(p, q):
    """∫ exp(−p²y² + qy) dy = (√π/p) exp(q²/(4p²)), ℜp² > 0"""
    p = mpmath.mpmathify(p)
    if not mpmath.re(p ** 2) > 0:
        raise DomainError("needs Re(p^2) > 0")
    return mpmath.sqrt(mpmath.pi) / p * mpmath.exp(q ** 2 / (4 * p ** 2))


def gaussian_moment_integral(n: int, q):
    """∫ yⁿ exp(−y² + qy) dy = P_n(q) exp(q²/4)"""
    if n < 0:
        raise DomainError("n must be nonnegative")
    half = mpmath.mpmathify(q) / 2
    polynomial = mpmath.mpf(0)
    for k in range(0, n + 1, 2):
        polynomial += mpmath.binomial(n, k) * half ** (n - k) * mpmath.gamma(mpmath.mpf(k + 1) / 2)
    return polynomial * mpmath.exp(half ** 2)


def smooth_cutoff(x: np.ndarray) -> np.ndarray:
    """1 on [0, 1], 0 beyond 2, C^∞ in between"""
    u = np.clip(np.asarray(x, dtype=np.float64) - 1.0, 0.0, 1.0)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        left = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        right = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return 1.0 - left / (left + right)


def smooth_cutoff_mellin(w):
    """Continuation of ∫₀^∞ smooth_cutoff(x) x^{w−1} dx, i.e. 1/w + ∫₁² smooth_cutoff(x) x^{w−1} dx.

    A smoothly truncated Dirichlet series Σ a(n) n^{−s} w(n/M) differs from
    its limit by the residues of F(s+z) W(z) M^z at poles of F.
    """
    def weight(x):
        u = x - 1
        if u <= 0:
            return mpmath.mpf(1)
        if u >= 1:
            return mpmath.mpf(0)
        left = mpmath.exp(-1 / u)
        right = mpmath.exp(-1 / (1 - u))
        return right / (left + right)

    return 1 / w + mpmath.quad(lambda x: weight(x) * x ** (w - 1), [1, 1.5, 2])
