import functools

import numpy as np
import pytest

from extremal import SystemSpec, default_grading, make_mesh, trace_ray


@functools.lru_cache(maxsize=None)
def mesh(M, N, grading=None):
    return make_mesh(M, N, default_grading(N) if grading is None else grading)


SPECS = {
    "E": SystemSpec("E"),
    "G33": SystemSpec.power("G", 3, 3),
    "H22": SystemSpec.power("H", 2, 2),
}


@functools.lru_cache(maxsize=None)
def branch(name, N, sigma=1.0, M=256):
    """Traced branches are shared across test modules (tracing costs ~1 s)."""
    return trace_ray(SPECS[name], mesh(M, N), sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
