import math

import numpy as np
import pytest
from hypothesis import settings

from monobvp.mesh import Grid, MeshFunction
from monobvp.problems import RhsFunction

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

PI = math.pi


def point_rhs(n, value, name="point"):
    """Forcing taking ``value`` at the single interior node of an n=2 grid."""
    return RhsFunction(name, lambda t: value * np.sin(PI * np.asarray(t, dtype=float)))


def random_mesh(rng, n, scale=1.0):
    return MeshFunction.from_interior(Grid(n), rng.normal(0.0, scale, n - 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def linear_forcing():
    return RhsFunction("manufactured-linear",
                       lambda t: (1 + PI**2) * np.sin(PI * np.asarray(t, dtype=float)),
                       deriv=lambda t: (1 + PI**2) * PI * np.cos(PI * np.asarray(t, dtype=float)),
                       sup_norm_hint=1 + PI**2)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
