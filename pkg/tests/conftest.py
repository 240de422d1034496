"""
Pytest configuration and fixtures for splitstep tests
"""
import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from splitstep.models.run_config import RunConfig
from splitstep.services.rng import RngStream


def pytest_configure(config):
    """Configure pytest with custom markers"""
    config.addinivalue_line("markers", "unit: mark test as a unit test")
    config.addinivalue_line("markers", "integration: mark test as an integration test")
    config.addinivalue_line("markers", "e2e: mark test as an end-to-end acceptance test")
    config.addinivalue_line("markers", "slow: mark test as slow")


@pytest.fixture
def stream() -> RngStream:
    """A fixed random stream"""
    return RngStream(20240611, 0)


@pytest.fixture
def make_stream():
    """Factory for streams addressed by (seed, stream_id)"""

    def _make(seed: int = 20240611, stream_id: int = 0) -> RngStream:
        return RngStream(seed, stream_id)

    return _make


@pytest.fixture
def temp_data_dir():
    """Temporary directory for output files"""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture
def mock_env_vars():
    """Environment overrides for the run seed and worker count"""
    env_vars = {"SPLITSTEP_SEED": "777", "SPLITSTEP_THREADS": "3"}
    with patch.dict(os.environ, env_vars):
        yield env_vars


@pytest.fixture
def clean_env():
    """Environment without any SPLITSTEP_ variables"""
    cleaned = {k: v for k, v in os.environ.items() if not k.startswith("SPLITSTEP_")}
    with patch.dict(os.environ, cleaned, clear=True):
        yield


@pytest.fixture
def default_run_config(temp_data_dir) -> RunConfig:
    """All-defaults configuration writing into the temporary directory"""
    cfg = RunConfig()
    return cfg.model_copy(update={"run": cfg.run.model_copy(update={"output": str(temp_data_dir)})})


@pytest.fixture
def write_config(temp_data_dir):
    """Write INI text to a file in the temporary directory and return its path"""

    def _write(text: str, name: str = "run.ini") -> str:
        path = temp_data_dir / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
