"""
Maass Form Catalog
Record validation, JSON-lines storage and a cached, rate-limited HTTP client for level-one Maass forms.
"""

import json
import math
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import requests

from cache import DiskCache
from config import config
from resilience import RateLimiter, RetryConfig, RetryHandler


class RecordValidationError(ValueError):
    """Catalog record failed validation"""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        super().__init__(message)
        self.errors = errors or []


class CatalogFetchError(ConnectionError):
    """Catalog unreachable and no cached copy available"""

    def __init__(self, message: str, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


PARITIES = ('even', 'odd')


def coefficient_map(record: Dict[str, Any]) -> Dict[int, float]:
    """n -> λ(n) from the [[n, λ(n)], ...] list of a record"""
    return {int(n): float(value) for n, value in record.get('coefficients', [])}


def hecke_defect(coefficients: Dict[int, float], m: int, n: int) -> Optional[float]:
    """|λ(m)λ(n) − Σ_{d | gcd(m,n)} λ(mn/d²)|, or None when a term is not stored"""
    if m not in coefficients or n not in coefficients:
        return None
    total = 0.0
    for d in range(1, math.gcd(m, n) + 1):
        if m % d == 0 and n % d == 0:
            k = m * n // (d * d)
            if k not in coefficients:
                return None
            total += coefficients[k]
    return abs(coefficients[m] * coefficients[n] - total)


class MaassFormValidator:
    """Validation of catalog records"""

    RELATION_RANGE = 50

    @staticmethod
    def validate_record(record: dict, tolerance: Optional[float] = None) -> Tuple[bool, List[str]]:
        """Validate a single catalog record"""
        errors = []
        tolerance = tolerance if tolerance is not None else config.catalog.hecke_tolerance

        for key in ('t_j', 'parity', 'coefficients'):
            if key not in record or record[key] is None:
                errors.append(f"Missing required field: {key}")

        if 't_j' in record and record['t_j'] is not None:
            try:
                if not float(record['t_j']) > 0:
                    errors.append("t_j must be positive")
            except (ValueError, TypeError):
                errors.append("t_j must be numeric")

        if record.get('parity') is not None and record['parity'] not in PARITIES:
            errors.append(f"parity must be one of {PARITIES}")

        if record.get('weight') is not None:
            try:
                if not float(record['weight']) > 0:
                    errors.append("weight must be positive")
            except (ValueError, TypeError):
                errors.append("weight must be numeric")

        if errors or not isinstance(record.get('coefficients'), list):
            if 'coefficients' in record and not isinstance(record.get('coefficients'), list):
                errors.append("coefficients must be a list of [n, value] pairs")
            return len(errors) == 0, errors

        try:
            coefficients = coefficient_map(record)
        except (ValueError, TypeError):
            errors.append("coefficients must be a list of [n, value] pairs")
            return False, errors

        if any(n < 1 for n in coefficients):
            errors.append("coefficient indices must be positive")
        if 1 not in coefficients or abs(coefficients[1] - 1.0) > tolerance:
            errors.append("lambda(1) must equal 1")

        errors.extend(MaassFormValidator.hecke_violations(coefficients, tolerance))
        return len(errors) == 0, errors

    @staticmethod
    def hecke_violations(coefficients: Dict[int, float], tolerance: float) -> List[str]:
        """Hecke relation failures over stored pairs m ≤ n ≤ 50"""
        violations = []
        limit = min(MaassFormValidator.RELATION_RANGE, max(coefficients, default=0))
        for m in range(2, limit + 1):
            for n in range(m, limit + 1):
                defect = hecke_defect(coefficients, m, n)
                if defect is not None and defect > tolerance:
                    violations.append(
                        f"Hecke violation at (m, n) = ({m}, {n}): defect {defect:.3e}"
                    )
        return violations


class CatalogQualityMonitor:
    """Track record quality across loads"""

    def __init__(self):
        self.logger = logging.getLogger(f"{__name__}.CatalogQualityMonitor")
        self.quality_stats = {
            'total_records': 0,
            'valid_records': 0,
            'invalid_records': 0,
            'quality_score': 1.0
        }

    def check_records(self, records: List[dict], tolerance: Optional[float] = None) -> Dict[str, Any]:
        """Validate records and summarise the outcome"""
        if not records:
            return {'quality_score': 0.0, 'valid': [], 'rejected': [], 'issues': ['No records provided']}

        valid, rejected, issues = [], [], []
        for i, record in enumerate(records):
            is_valid, errors = MaassFormValidator.validate_record(record, tolerance)
            if is_valid:
                valid.append(record)
            else:
                rejected.append({'index': i, 'record': record, 'errors': errors})
                issues.extend(f"Record {i}: {error}" for error in errors)

        self.quality_stats['total_records'] += len(records)
        self.quality_stats['valid_records'] += len(valid)
        self.quality_stats['invalid_records'] += len(rejected)
        self.quality_stats['quality_score'] = (
            self.quality_stats['valid_records'] / self.quality_stats['total_records']
        )

        if rejected:
            self.logger.warning(f"Rejected {len(rejected)} of {len(records)} records")

        return {
            'quality_score': len(valid) / len(records),
            'valid': valid,
            'rejected': rejected,
            'valid_count': len(valid),
            'invalid_count': len(rejected),
            'total_count': len(records),
            'issues': issues[:10]
        }

    def get_quality_stats(self) -> Dict[str, Any]:
        return self.quality_stats.copy()


def read_jsonl(path) -> List[dict]:
    """Records of a JSON-lines file; blank lines are skipped"""
    records = []
    with open(path, 'r') as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise RecordValidationError(f"{path}:{number}: not valid JSON ({e.msg})") from e
    return records


def write_jsonl(path, records: List[dict]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + '\n')


@dataclass
class FetchReport:
    """Outcome of a catalog query"""
    query: Dict[str, Any]
    digest: str
    fetched: int = 0
    cached: int = 0
    rejected: int = 0
    attempts: int = 0
    records: List[dict] = field(default_factory=list)
    issues: List[str] = field(default_factory=list)

    def summary(self) -> str:
        return f"{self.fetched} fetched, {self.cached} cached, {self.rejected} rejected"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'query': self.query,
            'digest': self.digest,
            'fetched': self.fetched,
            'cached': self.cached,
            'rejected': self.rejected,
            'attempts': self.attempts,
            'issues': self.issues,
        }


def normalize_remote(entry: Dict[str, Any]) -> Dict[str, Any]:
    """Map a remote catalog entry onto the local record layout"""
    coefficients = entry.get('coefficients') or []
    if coefficients and not isinstance(coefficients[0], (list, tuple)):
        coefficients = [[n, value] for n, value in enumerate(coefficients, start=1)]

    symmetry = entry.get('symmetry', entry.get('parity'))
    if symmetry in (0, '0', 'even'):
        parity = 'even'
    elif symmetry in (1, '1', 'odd'):
        parity = 'odd'
    else:
        parity = symmetry

    return {
        't_j': entry.get('spectral_parameter', entry.get('t_j')),
        'parity': parity,
        'weight': entry.get('weight_alpha', entry.get('harmonic_weight', entry.get('weight'))),
        'coefficients': coefficients,
        'source': entry.get('maass_label', entry.get('label', entry.get('source', 'remote'))),
    }


class CatalogClient:
    """Serial HTTP client with disk cache, retries and rate limiting"""

    def __init__(
        self,
        base_url: Optional[str] = None,
        cache_dir: Optional[str] = None,
        offline: Optional[bool] = None,
        session: Optional[requests.Session] = None,
        retry_handler: Optional[RetryHandler] = None,
        rate_limiter: Optional[RateLimiter] = None,
    ):
        self.base_url = base_url or config.catalog.base_url
        self.cache = DiskCache(cache_dir or config.catalog.cache_dir)
        self.offline = config.catalog.offline if offline is None else offline
        self.session = session or requests.Session()
        self.retry_handler = retry_handler or RetryHandler(RetryConfig(
            max_attempts=config.catalog.max_retries,
            base_delay=config.catalog.retry_delay,
        ))
        self.rate_limiter = rate_limiter or RateLimiter.per_second(config.catalog.rate_limit_per_second)
        self.monitor = CatalogQualityMonitor()
        self.logger = logging.getLogger(f"{__name__}.CatalogClient")

    @staticmethod
    def range_query(t_max: float, t_min: float = 0.0) -> Dict[str, Any]:
        return {'level': 1, 't_min': t_min, 't_max': t_max}

    def _request_params(self, query: Dict[str, Any], offset: int) -> Dict[str, Any]:
        return {
            '_format': 'json',
            'level': query.get('level', 1),
            'spectral_parameter': f"{query.get('t_min', 0)}-{query['t_max']}",
            '_offset': offset,
            '_max_count': config.catalog.page_size,
        }

    def _get_page(self, params: Dict[str, Any]) -> List[dict]:
        self.rate_limiter.acquire()
        response = self.session.get(self.base_url, params=params,
                                    timeout=config.catalog.timeout_seconds)
        response.raise_for_status()
        payload = response.json()
        if isinstance(payload, dict):
            return payload.get('data', [])
        return payload

    def _download(self, query: Dict[str, Any]) -> List[dict]:
        entries, offset = [], 0
        while True:
            page = self.retry_handler.execute(
                self._get_page, (requests.RequestException, ValueError), None,
                self._request_params(query, offset)
            )
            entries.extend(page)
            if len(page) < config.catalog.page_size:
                return entries
            offset += len(page)

    def fetch(self, query: Dict[str, Any]) -> FetchReport:
        """Validated records for the query, from cache when possible"""
        report = FetchReport(query=query, digest=DiskCache.query_digest(query))

        cached = self.cache.get(query)
        if cached is not None:
            report.cached = len(cached)
            report.records = cached
            self.logger.info(f"Catalog query {report.digest[:12]} served from cache: {report.summary()}")
            return report

        if self.offline:
            raise CatalogFetchError(f"offline mode and no cached copy of query {query}")

        attempts_before = self.retry_handler.attempts
        try:
            entries = self._download(query)
        except (requests.RequestException, ValueError) as e:
            attempts = self.retry_handler.attempts - attempts_before
            raise CatalogFetchError(f"catalog fetch failed after {attempts} attempts: {e}",
                                    attempts=attempts) from e
        report.attempts = self.retry_handler.attempts - attempts_before

        records = [normalize_remote(entry) for entry in entries]
        t_min, t_max = query.get('t_min', 0.0), query['t_max']
        records = [r for r in records
                   if isinstance(r['t_j'], (int, float)) and t_min <= r['t_j'] <= t_max]

        quality = self.monitor.check_records(records) if records else {'valid': [], 'rejected': [], 'issues': []}
        report.records = sorted(quality['valid'], key=lambda r: r['t_j'])
        report.fetched = len(report.records)
        report.rejected = len(quality['rejected'])
        report.issues = quality['issues']

        self.cache.set(query, report.records)
        self.logger.info(f"Catalog query {report.digest[:12]}: {report.summary()}, "
                         f"{report.attempts} attempts")
        return report
