import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from varcap.grid import build_grid, sample_exponent, sample_weight

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def line():
    """[-1, 1] with h = 1/64."""
    return build_grid(1, (-1.0,), (2.0,), 129)


@pytest.fixture
def square():
    """[-1, 1]^2 with h = 1/16."""
    return build_grid(2, (-1.0, -1.0), (2.0, 2.0), 33)


@pytest.fixture
def p2_line(line):
    p = sample_exponent(2.0, line)
    return p, sample_weight(1.0, line, p)


def rng(seed=0):
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    import sys
    lines = {}
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(mod, "LINES"):
            lines.update(mod.LINES)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
