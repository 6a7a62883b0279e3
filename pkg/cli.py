#!/usr/bin/env python3
"""
Command-Line Interface
Verification campaigns, experiment tables, catalog fetches and report merging.

Exit codes: 0 every check passed, 1 a check exceeded its tolerance or
errored, 2 usage or configuration error, 3 missing data or network.
"""

import sys
import json
import logging
import argparse
from pathlib import Path
from typing import List, Optional, Sequence

import mpmath
import numpy as np
import pandas as pd

from config import Config, config, setup_logging
from catalog import CatalogClient, CatalogFetchError
from checks import (
    CheckResult, CheckRunner, CheckStatus, Report, ReportParseError, SchemaMismatchError, report_header,
    report_merge,
)
from maass import (
    AfePolynomial, CoverageError, HarmonicConvention, MaassForm, eisenstein_form, load_forms, SpectralWeight,
    sym2_L_report, v_weight,
)
from moment import (
    CriticalPoint, check_window, decay_cutoff, i_transform_asymptotic, i_transform_limit_at_two,
    i_transform_result, second_moment_grid, second_moment_terms, verify_first_moment,
)
from specfun import (
    DomainError, OscParams, PrecisionContext, asympt_2f1_osc, asympt_f2_airy, bessel_K_at,
    bessel_K_imag_asympt, f2_eval, ode_residual_airy, ode_residual_FG, ode_residual_K, prop_2f1,
)
from voronoi import BumpKind, ThetaFrame, VoronoiTestFn, verify_voronoi
from zagier import second_moment_table, zagier_direct_series, zagier_L


EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_ENVIRONMENT = 3

ENVIRONMENT_ERRORS = (CatalogFetchError, CoverageError, OSError)

logger = logging.getLogger(__name__)


class UsageError(ValueError):
    """Arguments that parse but cannot be run"""
    pass


# ---------------------------------------------------------------------------
# Parser

def _global_options(defaults: bool) -> argparse.ArgumentParser:
    """Options accepted before or after the subcommand"""
    default = (lambda value: value) if defaults else (lambda value: argparse.SUPPRESS)
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--out', default=default(None), help='report path (default: <out_dir>/<command>.<format>)')
    parser.add_argument('--format', choices=['json', 'csv'], default=default(None), help='report format')
    parser.add_argument('--prec', type=int, default=default(None), help='working precision in decimal digits')
    parser.add_argument('--tol', type=float, default=default(None), help='override the check tolerance')
    parser.add_argument('--seed', type=int, default=default(0), help='seed for sampled points')
    parser.add_argument('--jobs', type=int, default=default(1), help='worker processes')
    parser.add_argument('--config', default=default(None), help='JSON configuration file')
    parser.add_argument('--maass-file', default=default(None), help='JSON-lines file of Maass forms')
    parser.add_argument('--catalog-url', default=default(None), help='Maass catalog endpoint')
    parser.add_argument('--cache-dir', default=default(None), help='catalog cache directory')
    parser.add_argument('--offline', action='store_true', default=default(False),
                        help='never touch the network')
    parser.add_argument('--log-level', default=default(None), help='logging level')
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _global_options(defaults=False)
    parser = argparse.ArgumentParser(prog='sym2lab', parents=[_global_options(defaults=True)],
                                     description=__doc__.strip().splitlines()[0])
    commands = parser.add_subparsers(dest='command', required=True)

    verify = commands.add_parser('verify', help='identity and asymptotic checks')
    checks = verify.add_subparsers(dest='check', required=True)

    p = checks.add_parser('zagier-decomp', parents=[common], help='direct series against the decomposition')
    p.add_argument('--nmax', type=int, default=500)
    p.add_argument('--s', type=float, default=2.0)
    p.add_argument('--qmax', type=int, default=None)

    p = checks.add_parser('voronoi', parents=[common], help='two-sided Voronoi summation at c = 0 mod 4')
    p.add_argument('--c', type=int, default=4)
    p.add_argument('--a', type=int, default=1)
    p.add_argument('--t', type=float, default=1.0)
    p.add_argument('--side', choices=['positive_n', 'negative_n', 'both'], default='both')
    p.add_argument('--bump', choices=[k.value for k in BumpKind], default=BumpKind.GAUSSIAN_BUMP.value)
    p.add_argument('--L', type=float, default=50.0, help='bump supported on [L, 2L]')
    p.add_argument('--truncation', type=int, default=None)
    p.add_argument('--inverse', choices=['mod_c', 'mod_4'], default='mod_c')

    p = checks.add_parser('first-moment', parents=[common], help='exact first-moment formula')
    p.add_argument('--m', type=int, nargs='+', default=[1, 2])
    p.add_argument('--t', type=float, default=1.0)
    p.add_argument('--T', type=float, default=12.0)
    p.add_argument('--G', type=float, default=2.0)
    p.add_argument('--N', type=int, default=4)
    p.add_argument('--convention', choices=[c.value for c in HarmonicConvention],
                   default=HarmonicConvention.SYM2_L1.value)
    p.add_argument('--control', choices=[c.value for c in HarmonicConvention],
                   default=HarmonicConvention.UNIT.value, help='convention expected to fail')
    p.add_argument('--coverage', type=float, default=None, help='catalog reach in t_j')

    p = checks.add_parser('i-transform', parents=[common], help='two-path, x = 2 and decay checks of I(x, rho; h)')
    p.add_argument('--x', type=float, default=1.0)
    p.add_argument('--t', type=float, default=3.0)
    p.add_argument('--T', type=float, default=400.0)
    p.add_argument('--G', type=float, default=10.0)
    p.add_argument('--N', type=int, default=4)
    p.add_argument('--dual-tol', type=float, default=5e-2, help='main-term accuracy of the asymptotic path')
    p.add_argument('--limit-tol', type=float, default=1e-2)
    p.add_argument('--decay-bound', type=float, default=1e-10)

    p = checks.add_parser('asympt-2f1', parents=[common], help='error decay of the hypergeometric main terms')
    p.add_argument('--z', type=float, default=0.5)
    p.add_argument('--alpha', type=float, default=0.2)
    p.add_argument('--r', type=float, nargs=2, default=[200.0, 400.0])
    p.add_argument('--airy-alpha', type=float, default=0.3)
    p.add_argument('--airy-r', type=float, nargs=2, default=[400.0, 800.0])
    p.add_argument('--decay', type=float, default=1.5)

    p = checks.add_parser('asympt-bessel', parents=[common], help='K main-term decay and ODE residual suites')
    p.add_argument('--z', type=float, default=0.5)
    p.add_argument('--t', type=float, nargs=2, default=[20.0, 40.0])
    p.add_argument('--points', type=int, default=20)
    p.add_argument('--ode-tol', type=float, default=1e-6)

    p = checks.add_parser('afe-selfcheck', parents=[common], help='AFE degree and contour independence')
    p.add_argument('--t', type=float, default=1.0)
    p.add_argument('--forms', type=int, default=5)
    p.add_argument('--tmax', type=float, default=15.0)
    p.add_argument('--degrees', type=int, nargs=2, default=[1, 2])
    p.add_argument('--fixture', choices=['catalog', 'eisenstein'], default='catalog')

    table = commands.add_parser('table', help='experiment tables')
    tables = table.add_subparsers(dest='table', required=True)

    p = tables.add_parser('large-sieve', parents=[common], help='second moment of Zagier L-values')
    p.add_argument('--N', type=int, nargs='+', default=[100, 200, 400, 800, 1600, 3200])
    p.add_argument('--t', type=float, nargs='+', default=[0.0, 5.0])
    p.add_argument('--blowup', type=float, default=2.0)

    p = tables.add_parser('second-moment', parents=[common], help='windowed second moment of L(sym2)')
    p.add_argument('--T', type=float, nargs='+', default=[10.0, 15.0, 20.0])
    p.add_argument('--G', type=float, default=2.0)
    p.add_argument('--t', type=float, nargs='+', default=[2.0])
    p.add_argument('--convention', choices=[c.value for c in HarmonicConvention],
                   default=HarmonicConvention.SYM2_L1.value)
    p.add_argument('--N', type=int, default=4, help='q_N order of the S1/S2 term weights')
    p.add_argument('--terms-m', type=int, default=1, help='S1/S2 terms for m up to this, 0 to skip')
    p.add_argument('--terms-n', type=int, default=3)

    fetch = commands.add_parser('fetch', help='populate the catalog cache')
    targets = fetch.add_subparsers(dest='target', required=True)
    p = targets.add_parser('maass', parents=[common], help='Maass forms with t_j in a range')
    p.add_argument('--tmax', type=float, required=True)
    p.add_argument('--tmin', type=float, default=0.0)

    report = commands.add_parser('report', help='report utilities')
    actions = report.add_subparsers(dest='action', required=True)
    p = actions.add_parser('merge', parents=[common], help='worst-case residual per check family')
    p.add_argument('paths', nargs='+')

    return parser


# ---------------------------------------------------------------------------
# Run configuration

def apply_configuration(args: argparse.Namespace) -> PrecisionContext:
    """Fold --config and the global flags into the shared configuration"""
    if args.config:
        if not Path(args.config).exists():
            raise UsageError(f"configuration file {args.config} not found")
        loaded = Config(args.config)
        for section in Config.SECTIONS:
            setattr(config, section, getattr(loaded, section))

    if args.prec is not None:
        config.precision.working_digits = args.prec
    if args.format is not None:
        config.report.format = args.format
    if args.catalog_url:
        config.catalog.base_url = args.catalog_url
    if args.cache_dir:
        config.catalog.cache_dir = args.cache_dir
    if args.offline:
        config.catalog.offline = True
    if args.tol is not None and not args.tol > 0:
        raise UsageError(f"--tol must be positive, got {args.tol}")
    if args.jobs < 1:
        raise UsageError(f"--jobs must be at least 1, got {args.jobs}")

    digits = config.precision.working_digits
    try:
        return PrecisionContext(working_digits=digits,
                                target_rel_error=max(config.precision.target_rel_error, 10.0 ** (1 - digits)))
    except DomainError as e:
        raise UsageError(str(e)) from e


def _tol(args, default: float) -> float:
    return args.tol if args.tol is not None else default


def _forms(args, t_max: float) -> List[MaassForm]:
    if args.maass_file:
        return load_forms(args.maass_file)
    client = CatalogClient(base_url=config.catalog.base_url, cache_dir=config.catalog.cache_dir,
                           offline=config.catalog.offline)
    return load_forms(CatalogClient.range_query(t_max), client)


def _relative(a, b) -> float:
    scale = max(abs(a), abs(b), mpmath.mpf(10) ** -30)
    return float(abs(a - b) / scale)


# ---------------------------------------------------------------------------
# verify

def zagier_decomp_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    tol = _tol(args, 1e-8)
    rows = []
    ns = [n for k in range(1, args.nmax + 1) for n in (k, -k) if n % 4 in (0, 1)]
    for n in sorted(ns):
        direct = zagier_direct_series(n, args.s, args.qmax, ctx)
        exact = zagier_L(n, args.s, ctx)
        rows.append({'n': n, 'direct': float(mpmath.re(direct.value)), 'decomposition': float(mpmath.re(exact)),
                     'residual': _relative(direct.value, exact), 'tail_estimate': direct.tail_estimate})
    frame = pd.DataFrame(rows, columns=['n', 'direct', 'decomposition', 'residual', 'tail_estimate'])
    report.tables['zagier_decomp'] = frame
    worst = frame.loc[frame['residual'].idxmax()]
    return [CheckResult.from_residual('zagier-decomp', f"nmax={args.nmax}", worst['residual'], tol,
                                      parameters={'nmax': args.nmax, 's': args.s, 'qmax': args.qmax},
                                      details={'worst_n': int(worst['n']), 'values': len(frame)})]


def voronoi_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    tol = _tol(args, 1e-8)
    frame = ThetaFrame(args.c, args.a, args.inverse)
    sides = ['positive_n', 'negative_n'] if args.side == 'both' else [args.side]
    results = []
    for side in sides:
        phi = VoronoiTestFn(kind=BumpKind(args.bump), support=(args.L, 2 * args.L),
                            side='positive' if side == 'positive_n' else 'negative')
        outcome = verify_voronoi(phi, frame, side, args.t, args.truncation, ctx)
        results.append(CheckResult.from_residual(
            'voronoi', f"c={args.c},a={args.a},t={args.t},{side}", outcome.relative_residual, tol,
            parameters=outcome.parameters, details=outcome.to_dict(), warn=outcome.tail_dominated,
        ))
    return results


def first_moment_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    w = SpectralWeight(args.T, args.G, args.N)
    forms = _forms(args, w.window()[1] + 1.0)
    check_window(forms, w, args.coverage)
    cp = CriticalPoint(args.t)
    conventions = [args.convention, args.control]
    results = []
    for m in args.m:
        breakdown = verify_first_moment(forms, m, cp, w, ctx, args.convention, conventions, args.coverage,
                                        jobs=args.jobs)
        tolerance = _tol(args, breakdown.combined_tolerance)
        results.append(CheckResult.from_residual(
            'first-moment', f"m={m},{args.convention}", abs(breakdown.residual), tolerance,
            parameters=breakdown.parameters, details=breakdown.to_dict(),
        ))
        control = abs(breakdown.residuals_by_convention[args.control])
        results.append(CheckResult(
            family='first-moment', name=f"m={m},{args.control} control", residual=float(control),
            tolerance=tolerance,
            status=CheckStatus.PASS if control > tolerance else CheckStatus.FAIL,
            parameters=breakdown.parameters, details={'expected': 'residual above tolerance'},
        ))
    return results


def i_transform_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    w = SpectralWeight(args.T, args.G, args.N)
    cp = CriticalPoint(args.t)
    parameters = {'t': args.t, 'T': args.T, 'G': args.G, 'N': args.N}

    exact = i_transform_result(args.x, cp, w, ctx).value
    asymptotic = i_transform_asymptotic(args.x, cp, w, ctx)
    limit = i_transform_limit_at_two(cp, w, ctx=ctx)
    far = decay_cutoff(1, cp, w)
    decayed = i_transform_result(far, cp, w, ctx, abs_floor=args.decay_bound / 100).value

    rows = [
        {'quantity': 'exact', 'x': args.x, 'value': complex(exact)},
        {'quantity': 'asymptotic', 'x': args.x, 'value': complex(asymptotic)},
        {'quantity': 'at two', 'x': 2.0, 'value': complex(limit.at)},
        {'quantity': 'regular part above two', 'x': 2 + limit.delta, 'value': complex(limit.regular)},
        {'quantity': 'singular part above two', 'x': 2 + limit.delta, 'value': complex(limit.singular)},
        {'quantity': 'decay cutoff', 'x': float(far), 'value': complex(decayed)},
    ]
    report.tables['i_transform'] = pd.DataFrame(rows, columns=['quantity', 'x', 'value'])
    return [
        CheckResult.from_residual('i-transform', f"x={args.x} two paths", _relative(exact, asymptotic),
                                  args.dual_tol, parameters={**parameters, 'x': args.x}),
        CheckResult.from_residual('i-transform', 'limit at x=2', limit.relative_gap, args.limit_tol,
                                  parameters=parameters, details=limit.to_dict()),
        CheckResult.from_residual('i-transform', f"x={far} decay", float(abs(decayed)), args.decay_bound,
                                  parameters={**parameters, 'x': far}),
    ]


def _decay_check(family: str, name: str, errors: Sequence[float], factor: float,
                 parameters: dict) -> CheckResult:
    """Passes when the error drops by at least `factor` between the two parameters"""
    first, second = errors
    ratio = second / first if first > 0 else float('inf')
    return CheckResult.from_residual(family, name, ratio, 1 / factor, parameters=parameters,
                                     details={'errors': list(errors), 'decay': 1 / ratio if ratio else float('inf')})


def asympt_2f1_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    factor = args.decay
    rows, osc_errors, airy_errors = [], [], []
    for r in args.r:
        p = OscParams.from_r_alpha(r, args.alpha)
        exact = prop_2f1(p, args.z, ctx)
        error = _relative(asympt_2f1_osc(p, args.z), exact)
        osc_errors.append(error)
        rows.append({'expansion': 'oscillatory', 'r': r, 'alpha': args.alpha, 'point': args.z, 'rel_error': error})

    y = 1 - args.airy_alpha ** 2
    for r in args.airy_r:
        p = OscParams.from_r_alpha(r, args.airy_alpha)
        exact = f2_eval(p, y, ctx)
        error = _relative(asympt_f2_airy(p, y), exact)
        airy_errors.append(error)
        rows.append({'expansion': 'airy', 'r': r, 'alpha': args.airy_alpha, 'point': y, 'rel_error': error})

    report.tables['asympt_2f1'] = pd.DataFrame(rows, columns=['expansion', 'r', 'alpha', 'point', 'rel_error'])
    return [
        _decay_check('asympt-2f1', 'oscillatory', osc_errors, factor,
                     {'z': args.z, 'alpha': args.alpha, 'r': list(args.r)}),
        _decay_check('asympt-2f1', 'airy turning point', airy_errors, factor,
                     {'y': y, 'alpha': args.airy_alpha, 'r': list(args.airy_r)}),
    ]


def asympt_bessel_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    tol = _tol(args, args.ode_tol)
    rows, errors = [], []
    for t in args.t:
        exact = bessel_K_at(t, 2 * t * args.z, ctx)
        amplitude = mpmath.sqrt(mpmath.pi) / (mpmath.sqrt(t) * (1 - mpmath.mpf(args.z) ** 2) ** 0.25)
        error = float(abs(bessel_K_imag_asympt(t, args.z) - exact) / amplitude)
        errors.append(error)
        rows.append({'t': t, 'z': args.z, 'rel_error': error})
    report.tables['asympt_bessel'] = pd.DataFrame(rows, columns=['t', 'z', 'rel_error'])
    results = [_decay_check('asympt-bessel', 'K main term', errors, 1.5, {'z': args.z, 't': list(args.t)})]

    rng = np.random.default_rng(args.seed)
    suites = {
        'F': lambda: ode_residual_FG(rng.uniform(1, 10), rng.uniform(0.2, 3.0), 'F', ctx),
        'G': lambda: ode_residual_FG(rng.uniform(1, 10), rng.uniform(0.2, 3.0), 'G', ctx),
        'K': lambda: ode_residual_K(rng.uniform(1, 10), rng.uniform(0.1, 0.8), ctx),
        'airy': lambda: ode_residual_airy(rng.uniform(-5, 5), ctx),
    }
    for name, sample in suites.items():
        residuals = [sample() for _ in range(args.points)]
        results.append(CheckResult.from_residual('ode', f"{name} residual", max(residuals), tol,
                                                 parameters={'points': args.points, 'seed': args.seed},
                                                 details={'median': float(np.median(residuals))}))
    return results


def afe_selfcheck_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    if args.fixture == 'eisenstein':
        forms = [eisenstein_form(t_j, 20000) for t_j in (3.0, 5.5, 8.0, 10.5, 13.0)][:args.forms]
    else:
        forms = _forms(args, args.tmax)[:args.forms]
    if not forms:
        raise CoverageError(f"no Maass forms with t_j <= {args.tmax}")

    s = complex(0.5, 2 * args.t)
    low, high = args.degrees
    rows, results = [], []
    for form in forms:
        first = sym2_L_report(form, s, ctx, degree=low, method='afe').value
        second = sym2_L_report(form, s, ctx, degree=high, method='afe').value
        residual = _relative(first, second)
        rows.append({'t_j': form.t_j, 'degree_low': complex(first), 'degree_high': complex(second),
                     'residual': residual})
        results.append(CheckResult.from_residual('afe-selfcheck', f"degrees t_j={form.t_j:.6f}", residual,
                                                 _tol(args, 1e-6), parameters={'t_j': form.t_j, 't': args.t,
                                                                               'degrees': [low, high]}))

        P = AfePolynomial(config.afe.polynomial_degree, args.t)
        base = config.afe.contour_a
        shifted = (v_weight(0.5, args.t, form.t_j, P, ctx, a=base),
                   v_weight(0.5, args.t, form.t_j, P, ctx, a=base + 0.5))
        results.append(CheckResult.from_residual('afe-selfcheck', f"contour t_j={form.t_j:.6f}",
                                                 _relative(*shifted), _tol(args, 1e-10),
                                                 parameters={'t_j': form.t_j, 't': args.t, 'a': [base, base + 0.5]}))

    report.tables['afe_selfcheck'] = pd.DataFrame(rows, columns=['t_j', 'degree_low', 'degree_high', 'residual'])
    return results


# ---------------------------------------------------------------------------
# table

def large_sieve_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    frames, results = [], []
    for t in args.t:
        frame = second_moment_table(sorted(args.N), t, ctx, jobs=args.jobs)
        frames.append(frame)
        growth = float(frame['ratio'].max() / frame['ratio'].iloc[0])
        results.append(CheckResult.from_residual('large-sieve', f"t={t}", growth, args.blowup,
                                                 parameters={'t': t, 'N': sorted(args.N)},
                                                 details={'constant': float(frame['ratio'].max())}))
    report.tables['large_sieve'] = pd.concat(frames, ignore_index=True)
    return results


def second_moment_checks(args, ctx: PrecisionContext, report: Report) -> List[CheckResult]:
    forms = _forms(args, max(args.T) + args.G + 1.0)
    frame = second_moment_grid(forms, args.T, args.G, args.t, ctx, args.convention)
    report.tables['second_moment'] = frame
    if args.terms_m > 0:
        terms = second_moment_terms(args.t[0], args.T[0], args.G, args.N, args.terms_m, args.terms_n, ctx)
        report.tables['second_moment_terms'] = terms
    finite = bool(np.isfinite(frame['ratio']).all())
    result = CheckResult.experiment('second-moment', f"G={args.G}",
                                    parameters={'T': list(args.T), 't': list(args.t), 'G': args.G},
                                    details={'max_ratio': float(frame['ratio'].max()) if len(frame) else None})
    if not finite:
        result.status = CheckStatus.FAIL
    return [result]


CAMPAIGNS = {
    ('verify', 'zagier-decomp'): zagier_decomp_checks,
    ('verify', 'voronoi'): voronoi_checks,
    ('verify', 'first-moment'): first_moment_checks,
    ('verify', 'i-transform'): i_transform_checks,
    ('verify', 'asympt-2f1'): asympt_2f1_checks,
    ('verify', 'asympt-bessel'): asympt_bessel_checks,
    ('verify', 'afe-selfcheck'): afe_selfcheck_checks,
    ('table', 'large-sieve'): large_sieve_checks,
    ('table', 'second-moment'): second_moment_checks,
}


def validate_arguments(args: argparse.Namespace):
    """Reject parameter combinations the campaigns cannot run"""
    sub = args.check if args.command == 'verify' else args.table
    if sub == 'zagier-decomp' and args.s < 1.5:
        raise UsageError(f"the direct series needs s >= 1.5, got {args.s}")
    if sub == 'voronoi':
        if args.t == 0:
            raise UsageError("--t must be nonzero")
        try:
            ThetaFrame(args.c, args.a, args.inverse)
        except DomainError as e:
            raise UsageError(str(e)) from e
    if sub == 'i-transform':
        if not (args.x > 0 and abs(args.x - 2) > 1e-12):
            raise UsageError(f"--x must be positive and differ from 2, got {args.x}")
        if not args.t > 0:
            raise UsageError("the asymptotic path and the x = 2 split need --t > 0")
    if sub in ('large-sieve', 'second-moment') and not (args.N if sub == 'large-sieve' else args.T):
        raise UsageError("the parameter grid is empty")


def _report_path(args, name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(config.report.out_dir) / f"{name}.{config.report.format}"


def run(args: argparse.Namespace, argv: Sequence[str] = ()) -> int:
    """Run one campaign and write its report"""
    ctx = apply_configuration(args)
    validate_arguments(args)
    sub = args.check if args.command == 'verify' else args.table
    name = f"{args.command}-{sub}"
    campaign = CAMPAIGNS[(args.command, sub)]

    parameters = {k: v for k, v in sorted(vars(args).items())
                  if k not in ('out', 'config', 'cache_dir', 'log_level', 'command', 'check', 'table')}
    report = Report(header=report_header(name, argv), parameters=parameters)
    runner = CheckRunner(environment_errors=ENVIRONMENT_ERRORS)
    runner.register_check(name, lambda: campaign(args, ctx, report), family=sub)

    with ctx.workdps():
        report.checks = runner.run_all()
    report.write(_report_path(args, name), config.report.format)

    status = runner.overall_status()
    print(f"{name}: {status.value} ({sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed)")
    if runner.environment_failure():
        return EXIT_ENVIRONMENT
    return EXIT_PASS if status in (CheckStatus.PASS, CheckStatus.WARN) else EXIT_FAIL


def fetch(args: argparse.Namespace) -> int:
    """Populate the disk cache; a warm cache performs no requests"""
    apply_configuration(args)
    client = CatalogClient(base_url=config.catalog.base_url, cache_dir=config.catalog.cache_dir,
                           offline=config.catalog.offline)
    query = CatalogClient.range_query(args.tmax, args.tmin)
    try:
        outcome = client.fetch(query)
    except CatalogFetchError as e:
        logger.error(f"{e} (attempts: {e.attempts})")
        print(f"fetch failed after {e.attempts} attempts: {e}", file=sys.stderr)
        return EXIT_ENVIRONMENT

    print(outcome.summary())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(outcome.to_dict(), sort_keys=True, indent=2) + '\n')
    return EXIT_PASS


def merge(args: argparse.Namespace) -> int:
    apply_configuration(args)
    summary = report_merge(args.paths)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        if config.report.format == 'csv' or out.suffix == '.csv':
            summary.to_csv(out, index=False)
        else:
            out.write_text(json.dumps(summary.to_dict(orient='records'), sort_keys=True, indent=2) + '\n')
    print(summary.to_string(index=False))
    return EXIT_PASS


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level)

    try:
        if args.command == 'fetch':
            return fetch(args)
        if args.command == 'report':
            return merge(args)
        return run(args, argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaMismatchError as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ReportParseError as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except ENVIRONMENT_ERRORS as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_ENVIRONMENT


if __name__ == "__main__":
    sys.exit(main())
