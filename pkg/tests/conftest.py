"""
Test configuration for pytest
"""

import os
import sys
import shutil
import tempfile
import pytest
from pathlib import Path
from unittest.mock import patch

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import Config
from specfun import PrecisionContext
from maass import synthetic_form

DATA_DIR = Path(__file__).parent / "data"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long numerical suites, deselect with -m 'not slow'")


@pytest.fixture
def ctx():
    """30-digit working precision"""
    return PrecisionContext(working_digits=30, target_rel_error=1e-20)


@pytest.fixture
def temp_config():
    """Configuration with a temporary cache directory and no network"""
    config = Config("nonexistent_test_config.json")
    cache_dir = tempfile.mkdtemp(prefix='sym2lab_test_')
    config.catalog.cache_dir = cache_dir
    config.catalog.offline = True

    yield config

    shutil.rmtree(cache_dir, ignore_errors=True)


@pytest.fixture
def sample_jsonl():
    """Three Hecke-consistent synthetic forms and one malformed record"""
    return DATA_DIR / "sample_forms.jsonl"


@pytest.fixture
def synthetic_forms():
    """Forms with λ(p) = ±1, whose symmetric square L-function is ζ(3s)"""
    return [
        synthetic_form(9.5, lambda p: 1.0, 5000),
        synthetic_form(11.0, lambda p: -1.0, 5000),
        synthetic_form(12.5, lambda p: 1.0 if p % 4 == 1 else -1.0, 5000),
    ]


@pytest.fixture
def mock_environment():
    """Mock environment variables for testing"""
    env_vars = {
        'SYM2LAB_PREC': '40',
        'SYM2LAB_OFFLINE': 'true',
        'SYM2LAB_CATALOG_URL': 'http://catalog.invalid/api',
        'SYM2LAB_EXTRA_LOGGERS': 'maass,voronoi',
    }

    with patch.dict(os.environ, env_vars):
        yield env_vars


@pytest.fixture(scope="session")
def test_data_dir():
    """Scratch directory shared by a test session"""
    test_dir = tempfile.mkdtemp(prefix='sym2lab_test_')
    yield test_dir

    shutil.rmtree(test_dir, ignore_errors=True)
