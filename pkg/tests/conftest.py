"""
Pytest configuration for HJ toolkit tests
"""

import os
import sys

import numpy as np
import pytest

# Add the project root to the path for all tests
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from hj_toolkit.core.systems import builtin_system  # noqa: E402
from hj_toolkit.utils.config import ENV_CONFIG, ENV_SEED, ENV_WORKERS  # noqa: E402

from test_helpers import TEST_SEED  # noqa: E402


@pytest.fixture
def rng():
    """A generator seeded the same way for every test."""
    return np.random.default_rng(TEST_SEED)


@pytest.fixture
def ws_system():
    """Winternitz-Smorodinsky oscillator with k = 1, omega = 1."""
    return builtin_system("ws")


@pytest.fixture
def damped_system():
    """Damped oscillator with m = 1, alpha = 0.1, V = q^2/2."""
    return builtin_system("damped")


@pytest.fixture
def harmonic_system():
    return builtin_system("harmonic", {"E": 2.0}).with_section(["sqrt(2*E - q1^2)"])


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """Run from an empty directory with none of the toolkit's variables set."""
    for name in (ENV_SEED, ENV_WORKERS, ENV_CONFIG):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path
