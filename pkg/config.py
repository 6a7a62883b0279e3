"""
Configuration Management
Handles precision, quadrature, catalog and reporting settings with file and environment overrides.
"""

import os
import sys
import json
import logging
from typing import Dict, Any, Optional
from dataclasses import dataclass, asdict, field
from pathlib import Path

from dotenv import load_dotenv


logger = logging.getLogger(__name__)


@dataclass
class PrecisionConfig:
    """Working precision for all evaluators"""
    working_digits: int = 30
    target_rel_error: float = 1e-20
    zeta_method: str = "euler-maclaurin"


@dataclass
class QuadratureConfig:
    """Quadrature budgets and truncation rules"""
    tol: float = 1e-12
    max_degree: int = 8
    max_panels: int = 4000
    envelope_floor: float = 1e-2
    oscillations_per_panel: float = 4.0


@dataclass
class AfeConfig:
    """Approximate functional equation settings"""
    polynomial_degree: int = 2
    gaussian_scale: float = 4.0
    contour_a: float = 0.75
    nodes_per_panel: int = 16
    radians_per_panel: float = 6.0
    truncation_tol: float = 1e-14


@dataclass
class CatalogConfig:
    """Maass form catalog access"""
    base_url: str = "https://www.lmfdb.org/api/maass_newforms/"
    cache_dir: str = ".sym2lab_cache"
    timeout_seconds: int = 30
    max_retries: int = 4
    retry_delay: float = 1.0
    rate_limit_per_second: float = 1.0
    page_size: int = 100
    offline: bool = False
    hecke_tolerance: float = 1e-6


@dataclass
class ReportConfig:
    """Report emission settings"""
    out_dir: str = "reports"
    format: str = "json"
    epsilon: float = 0.1
    schema_version: str = "1.0"
    float_digits: int = 17


@dataclass
class MonitoringConfig:
    """Logging configuration"""
    log_level: str = "INFO"
    log_file: Optional[str] = None
    log_format: str = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    extra_loggers: list = field(default_factory=list)


class Config:
    """Main configuration class"""

    SECTIONS = ('precision', 'quadrature', 'afe', 'catalog', 'report', 'monitoring')

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file or os.getenv('SYM2LAB_CONFIG', "sym2lab_config.json")
        self.precision = PrecisionConfig()
        self.quadrature = QuadratureConfig()
        self.afe = AfeConfig()
        self.catalog = CatalogConfig()
        self.report = ReportConfig()
        self.monitoring = MonitoringConfig()

        self._load_config()

    def _load_config(self):
        """Load configuration from file and environment variables"""
        load_dotenv(override=False)

        config_path = Path(self.config_file)
        if config_path.exists():
            try:
                with open(config_path, 'r') as f:
                    file_config = json.load(f)
                self._update_from_dict(file_config)
            except Exception as e:
                logger.warning(f"Could not load config file {self.config_file}: {e}")

        self._load_from_environment()

    def _update_from_dict(self, config_dict: Dict[str, Any]):
        """Update configuration from dictionary"""
        for section, values in config_dict.items():
            if section in self.SECTIONS and isinstance(values, dict):
                section_obj = getattr(self, section)
                for key, value in values.items():
                    if hasattr(section_obj, key):
                        setattr(section_obj, key, value)
                    else:
                        logger.warning(f"Unknown config key {section}.{key} ignored")

    def _load_from_environment(self):
        """Load configuration from environment variables"""
        env_mappings = {
            # Precision
            'SYM2LAB_PREC': ('precision', 'working_digits', int),
            'SYM2LAB_TARGET_REL_ERROR': ('precision', 'target_rel_error', float),
            'SYM2LAB_ZETA_METHOD': ('precision', 'zeta_method'),

            # Quadrature
            'SYM2LAB_QUAD_TOL': ('quadrature', 'tol', float),
            'SYM2LAB_QUAD_MAX_DEGREE': ('quadrature', 'max_degree', int),
            'SYM2LAB_QUAD_MAX_PANELS': ('quadrature', 'max_panels', int),

            # AFE
            'SYM2LAB_AFE_DEGREE': ('afe', 'polynomial_degree', int),
            'SYM2LAB_AFE_SCALE': ('afe', 'gaussian_scale', float),
            'SYM2LAB_AFE_NODES': ('afe', 'nodes_per_panel', int),

            # Catalog
            'SYM2LAB_CATALOG_URL': ('catalog', 'base_url'),
            'SYM2LAB_CACHE_DIR': ('catalog', 'cache_dir'),
            'SYM2LAB_CATALOG_TIMEOUT': ('catalog', 'timeout_seconds', int),
            'SYM2LAB_CATALOG_RETRIES': ('catalog', 'max_retries', int),
            'SYM2LAB_RATE_LIMIT': ('catalog', 'rate_limit_per_second', float),
            'SYM2LAB_OFFLINE': ('catalog', 'offline', self._str_to_bool),

            # Report
            'SYM2LAB_OUT_DIR': ('report', 'out_dir'),
            'SYM2LAB_FORMAT': ('report', 'format'),
            'SYM2LAB_EPSILON': ('report', 'epsilon', float),

            # Monitoring
            'SYM2LAB_LOG_LEVEL': ('monitoring', 'log_level'),
            'SYM2LAB_LOG_FILE': ('monitoring', 'log_file'),
            'SYM2LAB_EXTRA_LOGGERS': ('monitoring', 'extra_loggers', self._str_to_list),
        }

        for env_var, config_path in env_mappings.items():
            value = os.getenv(env_var)
            if value is not None:
                section = config_path[0]
                key = config_path[1]
                transform = config_path[2] if len(config_path) > 2 else str

                try:
                    transformed_value = transform(value)
                    setattr(getattr(self, section), key, transformed_value)
                except Exception as e:
                    logger.warning(f"Invalid value for {env_var}: {e}")

    @staticmethod
    def _str_to_bool(value: str) -> bool:
        """Convert string to boolean"""
        return value.lower() in ('true', '1', 'yes', 'on')

    @staticmethod
    def _str_to_list(value: str) -> list:
        """Convert comma-separated string to list"""
        return [item.strip() for item in value.split(',') if item.strip()]

    def to_dict(self) -> Dict[str, Any]:
        """Configuration as a plain nested dictionary"""
        return {section: asdict(getattr(self, section)) for section in self.SECTIONS}

    def save_config(self, path: Optional[str] = None):
        """Save current configuration to file"""
        target = path or self.config_file
        try:
            with open(target, 'w') as f:
                json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        except OSError as e:
            logger.error(f"Error saving config file {target}: {e}")


def setup_logging(cfg: Optional[Config] = None, level: Optional[str] = None):
    """Install the project log format on the root logger"""
    cfg = cfg or config
    handlers = [logging.StreamHandler(sys.stderr)]
    if cfg.monitoring.log_file:
        handlers.append(logging.FileHandler(cfg.monitoring.log_file))

    logging.basicConfig(
        level=getattr(logging, (level or cfg.monitoring.log_level).upper(), logging.INFO),
        format=cfg.monitoring.log_format,
        handlers=handlers,
        force=True,
    )
    for name in cfg.monitoring.extra_loggers:
        logging.getLogger(name).setLevel(logging.DEBUG)


def default_context(cfg: Optional[Config] = None):
    """PrecisionContext built from the active configuration"""
    from specfun import PrecisionContext

    cfg = cfg or config
    return PrecisionContext(
        working_digits=cfg.precision.working_digits,
        target_rel_error=max(cfg.precision.target_rel_error,
                             10.0 ** (1 - cfg.precision.working_digits)),
    )


# Global configuration instance
config = Config()
