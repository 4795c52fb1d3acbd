import numpy as np
import pytest

from ergodic_mfg import (Domain, HamiltonianSpec, PotentialSpec, ProblemSpec, SolverConfig,
                         continue_delta_to_zero)

FAST = SolverConfig(damping=1.0, fixed_point_tol=1e-9)


def quadratic_problem(N=256, R=12.0, alpha=3.0, dim=1):
    return ProblemSpec(HamiltonianSpec.isotropic(2.0), alpha, Domain(dim, R, N),
                       PotentialSpec("power"))


@pytest.fixture(scope="session")
def small_solution():
    """Converged potential-free 1-D triple (gamma=2, alpha=3, N=256)."""
    return continue_delta_to_zero(quadratic_problem(), FAST)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
