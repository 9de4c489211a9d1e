import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from util import KBT, make_kb  # noqa: E402


@pytest.fixture
def kb_t():
    """The three-fact citizenship KB used throughout the examples."""
    return make_kb(KBT)
