"""
Checks and Reports
Runs numerical checks as a campaign, aggregates their status and writes versioned JSON or CSV reports.
"""

import json
import math
import time
import logging
import platform
from datetime import datetime, timezone
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import pandas as pd

from config import config


logger = logging.getLogger(__name__)


class SchemaMismatchError(ValueError):
    """Reports written under different schema versions"""
    pass


class ReportParseError(ValueError):
    """Report file that cannot be read back"""

    def __init__(self, path: Union[str, Path], reason: str):
        super().__init__(f"cannot parse report {path}: {reason}")
        self.path = str(path)
        self.reason = reason


class CheckStatus(Enum):
    """Check outcome, ordered from best to worst"""
    PASS = "pass"
    WARN = "warn"
    FAIL = "fail"
    ERROR = "error"

    @property
    def severity(self) -> int:
        return _SEVERITY[self]


_SEVERITY = {CheckStatus.PASS: 0, CheckStatus.WARN: 1, CheckStatus.FAIL: 2, CheckStatus.ERROR: 3}


def jsonable(value: Any) -> Any:
    """Plain JSON types for numbers, arrays and nested containers"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (complex, mpmath.mpc, np.complexfloating)):
        value = complex(value)
        return [value.real, value.imag]
    if isinstance(value, (float, mpmath.mpf, np.floating)):
        return float(value)
    return repr(value)


@dataclass
class CheckResult:
    """Outcome of one numerical check"""
    family: str
    name: str
    residual: float
    tolerance: float
    status: CheckStatus
    parameters: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    elapsed_ms: float = 0.0

    @classmethod
    def from_residual(cls, family: str, name: str, residual: float, tolerance: float,
                      parameters: Optional[Dict[str, Any]] = None,
                      details: Optional[Dict[str, Any]] = None,
                      warn: bool = False) -> "CheckResult":
        """PASS when residual ≤ tolerance, WARN instead of PASS if flagged, FAIL otherwise"""
        residual = float(residual)
        if math.isfinite(residual) and residual <= tolerance:
            status = CheckStatus.WARN if warn else CheckStatus.PASS
        else:
            status = CheckStatus.FAIL
        return cls(family=family, name=name, residual=residual, tolerance=float(tolerance),
                   status=status, parameters=parameters or {}, details=details or {})

    @classmethod
    def experiment(cls, family: str, name: str, parameters: Optional[Dict[str, Any]] = None,
                   details: Optional[Dict[str, Any]] = None) -> "CheckResult":
        """Recorded measurement without a pass/fail bound"""
        return cls(family=family, name=name, residual=float('nan'), tolerance=float('nan'),
                   status=CheckStatus.PASS, parameters=parameters or {}, details=details or {})

    @property
    def passed(self) -> bool:
        return self.status in (CheckStatus.PASS, CheckStatus.WARN)

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        record = {
            'family': self.family,
            'name': self.name,
            'residual': self.residual,
            'tolerance': self.tolerance,
            'status': self.status.value,
            'parameters': jsonable(self.parameters),
            'details': jsonable(self.details),
        }
        if include_timing:
            record['elapsed_ms'] = self.elapsed_ms
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "CheckResult":
        return cls(
            family=record['family'],
            name=record['name'],
            residual=float(record['residual']) if record['residual'] is not None else float('nan'),
            tolerance=float(record['tolerance']) if record['tolerance'] is not None else float('nan'),
            status=CheckStatus(record['status']),
            parameters=record.get('parameters', {}),
            details=record.get('details', {}),
            elapsed_ms=float(record.get('elapsed_ms', 0.0)),
        )


class CheckRunner:
    """Runs registered checks; one failing check never stops the others"""

    def __init__(self, environment_errors: Tuple[type, ...] = ()):
        self.logger = logging.getLogger(f"{__name__}.CheckRunner")
        self.environment_errors = environment_errors
        self._checks: Dict[str, Dict[str, Any]] = {}
        self._last_results: List[CheckResult] = []

    def register_check(self, name: str, func: Callable[[], Union[CheckResult, List[CheckResult]]],
                       family: str):
        """Register a check returning one CheckResult or a list of them"""
        if name in self._checks:
            raise ValueError(f"check {name!r} already registered")
        self._checks[name] = {'func': func, 'family': family}

    @property
    def names(self) -> List[str]:
        return list(self._checks)

    def run_all(self) -> List[CheckResult]:
        results = []
        for name, check in self._checks.items():
            self.logger.info(f"Running check {name}")
            start = time.perf_counter()
            try:
                outcome = check['func']()
                outcome = outcome if isinstance(outcome, list) else [outcome]
            except Exception as e:
                self.logger.error(f"Check {name} failed: {type(e).__name__}: {e}")
                outcome = [CheckResult(
                    family=check['family'], name=name, residual=float('nan'), tolerance=float('nan'),
                    status=CheckStatus.ERROR,
                    details={'error': type(e).__name__, 'message': str(e),
                             'environment': isinstance(e, self.environment_errors)},
                )]
            elapsed = (time.perf_counter() - start) * 1000
            for result in outcome:
                result.elapsed_ms = elapsed / len(outcome)
                if result.status is CheckStatus.FAIL:
                    self.logger.warning(f"{result.family}/{result.name}: residual {result.residual:.3e} "
                                        f"above tolerance {result.tolerance:.3e}")
            results.extend(outcome)

        self._last_results = results
        self.logger.info(f"Finished {len(self._checks)} checks: {self.overall_status().value}")
        return results

    def overall_status(self) -> CheckStatus:
        return overall_status(self._last_results)

    def environment_failure(self) -> bool:
        return any(r.status is CheckStatus.ERROR and r.details.get('environment')
                   for r in self._last_results)


def overall_status(results: Sequence[CheckResult]) -> CheckStatus:
    if not results:
        return CheckStatus.PASS
    return max((r.status for r in results), key=lambda s: s.severity)


def report_header(command: str, argv: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    """Run metadata; the only report field allowed to vary between identical runs"""
    return {
        'command': command,
        'argv': list(argv or []),
        'created_at': datetime.now(timezone.utc).isoformat(),
        'host': platform.node(),
        'python': platform.python_version(),
        'mpmath': mpmath.__version__,
    }


@dataclass
class Report:
    """Versioned container for check results and tables"""
    checks: List[CheckResult] = field(default_factory=list)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    header: Dict[str, Any] = field(default_factory=dict)
    parameters: Dict[str, Any] = field(default_factory=dict)
    schema_version: str = field(default_factory=lambda: config.report.schema_version)

    @property
    def status(self) -> CheckStatus:
        return overall_status(self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': self.schema_version,
            'header': jsonable({**self.header,
                                'timings_ms': {f"{c.family}/{c.name}": c.elapsed_ms for c in self.checks}}),
            'parameters': jsonable(self.parameters),
            'status': self.status.value,
            'checks': [c.to_dict(include_timing=False) for c in self.checks],
            'tables': {name: jsonable(df.to_dict(orient='records')) for name, df in sorted(self.tables.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def checks_frame(self) -> pd.DataFrame:
        columns = ['schema_version', 'family', 'name', 'residual', 'tolerance', 'status', 'parameters']
        rows = [{
            'schema_version': self.schema_version,
            'family': c.family,
            'name': c.name,
            'residual': c.residual,
            'tolerance': c.tolerance,
            'status': c.status.value,
            'parameters': json.dumps(jsonable(c.parameters), sort_keys=True),
        } for c in self.checks]
        return pd.DataFrame(rows, columns=columns)

    def write(self, path: Union[str, Path], fmt: Optional[str] = None) -> List[Path]:
        """Write the report; CSV puts each table next to the checks file"""
        path = Path(path)
        fmt = fmt or config.report.format
        path.parent.mkdir(parents=True, exist_ok=True)
        written = [path]

        if fmt == 'json':
            path.write_text(self.to_json() + '\n')
        elif fmt == 'csv':
            self.checks_frame().to_csv(path, index=False, float_format=f"%.{config.report.float_digits}g")
            for name, df in sorted(self.tables.items()):
                table_path = path.with_name(f"{path.stem}_{name}.csv")
                df.to_csv(table_path, index=False, float_format=f"%.{config.report.float_digits}g")
                written.append(table_path)
        else:
            raise ValueError(f"unknown report format {fmt!r}")

        logger.info(f"Wrote {fmt} report to {path} ({len(self.checks)} checks, {len(self.tables)} tables)")
        return written

    @classmethod
    def read(cls, path: Union[str, Path]) -> "Report":
        """Read a JSON report, or a checks CSV written by `write`"""
        path = Path(path)
        try:
            if path.suffix == '.csv':
                return cls._read_csv(path)
            data = json.loads(path.read_text())
            checks = [CheckResult.from_dict(c) for c in data['checks']]
            tables = {name: pd.DataFrame(rows) for name, rows in data.get('tables', {}).items()}
            return cls(checks=checks, tables=tables, header=data.get('header', {}),
                       parameters=data.get('parameters', {}), schema_version=str(data['schema_version']))
        except (ReportParseError, SchemaMismatchError):
            raise
        except (OSError, UnicodeDecodeError) as e:
            raise ReportParseError(path, str(e)) from e
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ReportParseError(path, f"{type(e).__name__}: {e}") from e

    @classmethod
    def _read_csv(cls, path: Path) -> "Report":
        try:
            frame = pd.read_csv(path, dtype={'schema_version': str})
        except pd.errors.ParserError as e:
            raise ReportParseError(path, str(e)) from e
        missing = {'schema_version', 'family', 'name', 'residual', 'tolerance', 'status'} - set(frame.columns)
        if missing:
            raise ReportParseError(path, f"missing columns {sorted(missing)}")
        versions = frame['schema_version'].dropna().unique()
        if len(versions) > 1:
            raise SchemaMismatchError(f"{path} mixes schema versions {sorted(versions)}")
        checks = []
        for record in frame.to_dict(orient='records'):
            parameters = record.get('parameters')
            checks.append(CheckResult(
                family=record['family'], name=record['name'], residual=float(record['residual']),
                tolerance=float(record['tolerance']), status=CheckStatus(record['status']),
                parameters=json.loads(parameters) if isinstance(parameters, str) else {},
            ))
        version = str(versions[0]) if len(versions) else config.report.schema_version
        return cls(checks=checks, schema_version=version)


def report_merge(paths: Sequence[Union[str, Path]]) -> pd.DataFrame:
    """One row per check family with its worst-case residual.

    Identical checks appearing in several files count once, so merging a
    report with itself gives the same summary as the report alone.
    """
    columns = ['family', 'worst_residual', 'tolerance', 'checks', 'failed', 'status', 'schema_version']
    if not paths:
        return pd.DataFrame(columns=columns)

    reports = [Report.read(p) for p in paths]
    versions = {r.schema_version for r in reports}
    if len(versions) > 1:
        raise SchemaMismatchError(f"cannot merge schema versions {sorted(versions)}")
    version = versions.pop()

    frame = pd.concat([r.checks_frame() for r in reports], ignore_index=True)
    frame = frame.drop_duplicates(subset=['family', 'name', 'parameters', 'residual', 'tolerance', 'status'])
    if frame.empty:
        return pd.DataFrame(columns=columns)

    rows = []
    for family, group in frame.groupby('family', sort=True):
        statuses = [CheckStatus(s) for s in group['status']]
        margin = group['residual'] / group['tolerance'].where(group['tolerance'] > 0)
        if margin.notna().any():
            worst = margin.idxmax()
        elif group['residual'].notna().any():
            worst = group['residual'].idxmax()
        else:
            worst = group.index[0]
        rows.append({
            'family': family,
            'worst_residual': float(group.loc[worst, 'residual']),
            'tolerance': float(group.loc[worst, 'tolerance']),
            'checks': int(len(group)),
            'failed': int(sum(s in (CheckStatus.FAIL, CheckStatus.ERROR) for s in statuses)),
            'status': max(statuses, key=lambda s: s.severity).value,
            'schema_version': version,
        })
    logger.info(f"Merged {len(reports)} reports into {len(rows)} families")
    return pd.DataFrame(rows, columns=columns)
