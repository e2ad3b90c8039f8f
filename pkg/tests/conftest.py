import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_images(seed, count, max_side=128, min_side=1):
    """Mix of uniform noise, smooth blobs and sparse spikes."""
    r = np.random.default_rng(seed)
    out = []
    for k in range(count):
        h, w = r.integers(min_side, max_side + 1, size=2)
        kind = k % 3
        if kind == 0:
            img = r.integers(0, 256, size=(h, w))
        elif kind == 1:
            yy, xx = np.mgrid[0:h, 0:w]
            img = 128 + 100 * np.sin(xx / r.uniform(3, 15)) * np.cos(yy / r.uniform(3, 15)) + r.normal(0, 10, (h, w))
        else:
            img = np.where(r.random((h, w)) < 0.05, r.integers(0, 256, (h, w)), r.integers(100, 140))
        out.append(np.clip(img, 0, 255).astype(np.uint8))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
