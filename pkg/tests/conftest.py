import numpy as np
import pytest

from orgsim.landscape import InfluenceMatrix, Landscape, build_influence_matrix, generate_landscape

_CRITERIA = {}


class FixedRNG:
    """Stand-in generator replaying scripted ``random()`` values."""

    def __init__(self, values, perm=None):
        self.values = list(values)
        self.perm = perm

    def random(self, size=None):
        if size is None:
            return self.values.pop(0)
        return np.array([self.values.pop(0) for _ in range(size)])

    def permutation(self, n):
        return np.arange(n) if self.perm is None else np.asarray(self.perm)


def random_landscape(n, k, seed):
    rng = np.random.default_rng(seed)
    return generate_landscape(build_influence_matrix("random", n, k, rng), rng)


def table_landscape(depends, tables):
    return Landscape(InfluenceMatrix(np.asarray(depends, dtype=bool)), tables)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker and call.when == "call":
        _CRITERIA[marker.args[0]] = (marker.args[1], call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        desc, ok = _CRITERIA[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num:>2}: {desc}")
