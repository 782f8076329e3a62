import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpus import firing_mutations, valid_members  # noqa: E402


@pytest.fixture(scope="session")
def corpus():
    return valid_members()


@pytest.fixture(scope="session")
def mutations():
    return firing_mutations()
