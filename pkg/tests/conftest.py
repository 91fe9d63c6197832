"""Shared fixtures of the test suite."""
import pytest
from pumpwood_biharmonic.analytic import Dimension


@pytest.fixture
def dim5() -> Dimension:
    """Lowest admissible dimension."""
    return Dimension(5)


@pytest.fixture
def dim6() -> Dimension:
    """First even dimension."""
    return Dimension(6)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Runs never pick up configuration from the calling shell."""
    import os
    for key in list(os.environ):
        if key.startswith("PUMPWOOD_BIHARMONIC__"):
            monkeypatch.delenv(key)
