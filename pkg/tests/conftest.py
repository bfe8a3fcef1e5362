"""Shared fixtures for the scoring-package tests.

The acceptance-criteria marker and terminal summary are wired one level
up, in the repository-root conftest, so they cover every suite.
"""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
