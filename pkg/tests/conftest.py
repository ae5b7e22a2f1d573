"""Shared fixtures: project root on sys.path and seeded generators."""

import sys
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def project_root():
    return PROJECT_ROOT
