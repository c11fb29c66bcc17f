"""Shared test fixtures."""
import sys
import os
from pathlib import Path

import pytest

# Ensure project root is on the path
sys.path.insert(0, str(Path(__file__).parent.parent))

# Set env vars before any imports read them
os.environ.setdefault('CONVEXITY_LOG_LEVEL', 'WARNING')
os.environ.setdefault('CONVEXITY_SEARCH_WORKERS', '1')


@pytest.fixture
def unit_interval():
    from core import Interval
    return Interval(0.0, 1.0)


@pytest.fixture
def half():
    from core import GeometricWeights
    return GeometricWeights(ratio=0.5)


@pytest.fixture
def two_thirds():
    from core import GeometricWeights
    return GeometricWeights(ratio=2.0 / 3.0)


@pytest.fixture
def remark_sequence():
    from core import FiniteSupportSequence
    return FiniteSupportSequence([[1.0]], [0.0])
