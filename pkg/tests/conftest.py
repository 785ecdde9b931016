import numpy as np
import pytest


class ZeroNormal:
    """Generator stand-in whose normal draws are all zero."""

    def standard_normal(self, size=None):
        return 0.0 if size is None else np.zeros(size)


@pytest.fixture
def zero_rng():
    from ctld.dynamics import ChainRng

    return ChainRng(ZeroNormal(), np.random.default_rng(0))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
