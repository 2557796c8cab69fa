"""
Pytest Configuration

This module configures the Python path for test discovery, registers the
'slow' marker for full-length replication runs and provides shared
fixtures for all tests.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to Python path so 'src' can be imported
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-length replication runs (deselect with -m 'not slow')")


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator shared by sampling tests."""
    return np.random.default_rng(12345)
