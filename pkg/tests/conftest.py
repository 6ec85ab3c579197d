from fractions import Fraction

import numpy as np
import pytest

from mvsac import MarketModel


def exact_two_asset_solve(cov, rhs):
    """Solve a 2x2 system in exact rational arithmetic (Cramer's rule)."""
    (a, b), (c, d) = [[Fraction(str(x)) for x in row] for row in cov]
    u, v = (Fraction(str(x)) for x in rhs)
    det = a * d - b * c
    return [(d * u - b * v) / det, (a * v - c * u) / det]


@pytest.fixture
def typical_market():
    return MarketModel.two_asset(rho=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(ACCEPTANCE, key=lambda x: x[0]):
        terminalreporter.write_line(line)
