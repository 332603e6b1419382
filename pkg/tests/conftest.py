import math

import numpy as np
import pytest

from chenricci import expr as ex
from chenricci.manifold import Box, ChartManifold
from chenricci.submersion import RiemannianSubmersion


def line(lo=-1.0, hi=1.0):
    return ChartManifold.euclidean(1, Box((lo,), (hi,)))


def make_multiply_warped():
    """dt² + e^{2t}dx² + cosh²t dy² + (2 + sin t)² dz² projected onto t."""
    M = ChartManifold.from_entries(
        4,
        {(0, 0): "1", (1, 1): "exp(2*x1)", (2, 2): "cosh(x1)^2", (3, 3): "(2+sin(x1))^2"},
        Box((-1.0,) * 4, (1.0,) * 4),
        name="multiply-warped",
    )
    return RiemannianSubmersion(M, line(), (ex.Var("x1"),), "multiply-warped")


def make_twisted():
    """dx1² + dx2² + (dx3 + x1 dx2)² + e^{x1} dx4² onto (x1, x2): non-integrable horizontal space."""
    M = ChartManifold.from_entries(
        4,
        {(0, 0): "1", (1, 1): "1+x1^2", (1, 2): "x1", (2, 2): "1", (3, 3): "exp(x1)"},
        Box((-1.0,) * 4, (1.0,) * 4),
        name="twisted",
    )
    N = ChartManifold.euclidean(2, Box((-1.0, -1.0), (1.0, 1.0)))
    return RiemannianSubmersion(M, N, (ex.Var("x1"), ex.Var("x2")), "twisted")


@pytest.fixture(scope="session")
def multiply_warped():
    return make_multiply_warped()


@pytest.fixture(scope="session")
def twisted():
    return make_twisted()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


PI = math.pi


# one line per acceptance criterion, shown at the end of the run
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: int(r[0].split()[1].rstrip(":"))):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name} {detail}")
