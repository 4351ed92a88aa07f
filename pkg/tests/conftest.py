import sys
from pathlib import Path

import pytest

from serkit import numcore as nc

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(autouse=True)
def strict_numerics():
    """Unit tests run with per-op finiteness checks enabled."""
    nc.set_debug_checks(True)
    yield
    nc.set_debug_checks(False)
