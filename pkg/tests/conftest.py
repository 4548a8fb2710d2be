from collections import deque
from pathlib import Path

import numpy as np
import pytest

from cmhgibbs.models import RandomEffectsModel, simulate_re_data

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


class PinnedStream:
    """Stand-in generator whose ``random()`` replays given values, then falls back to a real stream."""

    def __init__(self, values, seed=0):
        self.values = deque(values)
        self.fallback = np.random.default_rng(seed)

    def random(self):
        return self.values.popleft() if self.values else self.fallback.random()

    def standard_gamma(self, shape):
        return self.fallback.standard_gamma(shape)


@pytest.fixture
def pinned():
    return PinnedStream


@pytest.fixture(scope="session")
def re_data():
    return simulate_re_data(3, 10, seed=2013)


@pytest.fixture(scope="session")
def re_model(re_data):
    return RandomEffectsModel(re_data)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results, key=lambda k: int(k.split()[0][1:])):
            terminalreporter.write_line(results[key])
