import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oamturb.grid import GridSpec


@pytest.fixture(scope="session")
def grid128():
    return GridSpec(128)

@pytest.fixture(scope="session")
def grid256():
    return GridSpec(256)

@pytest.fixture(scope="session")
def grid512():
    return GridSpec(512)
