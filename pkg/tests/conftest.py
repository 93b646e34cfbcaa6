import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cacheleak.program import bundled  # noqa: E402
from cacheleak.solver import EnumerateBackend  # noqa: E402
from helpers import DM512  # noqa: E402


@pytest.fixture
def backend():
    return EnumerateBackend()


@pytest.fixture
def dm512():
    return DM512


@pytest.fixture(scope="session")
def fig2a():
    return bundled("fig2a")


@pytest.fixture(scope="session")
def fig2b():
    return bundled("fig2b")


@pytest.fixture(scope="session")
def fig2c():
    return bundled("fig2c")


@pytest.fixture(scope="session")
def toysbox():
    return bundled("toysbox")
