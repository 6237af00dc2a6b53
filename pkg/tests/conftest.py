import numpy as np
import pytest

from cloudmpc.linear import DiscreteLinearModel
from cloudmpc.lqr import CostSpec, solve_dare
from cloudmpc.mpc import ConstraintSet, MpcSpec
from cloudmpc.polytope import Polytope, maximal_invariant_set

# two-state regulator example used across the suite
EXAMPLE_A = [[0.9752, 1.4544], [-0.0327, 0.9315]]
EXAMPLE_B = [[0.0248], [0.0327]]
EXAMPLE_A_MISMATCHED = [[0.95, 1.4544], [-0.0327, 0.9315]]
EXAMPLE_GAIN = [1.6478, 11.8344]
EXAMPLE_START = np.array([3.2, 0.15])
INSIDE_POINT = np.array([-1.0, 0.16])

TERMINAL_POLYGON = np.array([
    [-1.4742, 0.0574], [-1.3214, 0.1572], [-1.0521, 0.2], [-0.3744, 0.2],
    [1.4742, -0.0574], [1.3214, -0.1572], [1.0521, -0.2], [0.3744, -0.2],
])


@pytest.fixture(scope="session")
def example_model():
    return DiscreteLinearModel(A=EXAMPLE_A, B=EXAMPLE_B, dt=0.05)


@pytest.fixture(scope="session")
def example_cost():
    return CostSpec(Q=np.diag([10.0, 10.0]), R=[[1.0]])


@pytest.fixture(scope="session")
def example_lqr(example_model, example_cost):
    return solve_dare(example_model, example_cost)


@pytest.fixture(scope="session")
def example_terminal_set(example_model, example_lqr):
    K = example_lqr.K
    F = np.vstack([[1, 0], [-1, 0], [0, 1], [0, -1], K[0], -K[0]])
    f = np.array([5.0, 5.0, 0.2, 0.2, 1.75, 1.75])
    A_cl = example_lqr.closed_loop(example_model.A, example_model.B)
    return maximal_invariant_set(A_cl, Polytope(F, f))


@pytest.fixture(scope="session")
def example_constraints():
    return ConstraintSet(G=[[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]],
                         g=[5.0, 0.2, 5.0, 0.2])


@pytest.fixture(scope="session")
def example_spec(example_model, example_cost, example_lqr, example_constraints,
                 example_terminal_set):
    return MpcSpec(model=example_model, cost=example_cost,
                   terminal_cost=example_lqr.P, constraints=example_constraints,
                   terminal_set=example_terminal_set,
                   horizon_set=tuple(range(1, 23)))


# -- acceptance reporting -----------------------------------------------------
# test_acceptance.py tags its tests with the `criterion` marker; outcomes are
# collected here and echoed one line per criterion in the terminal summary.

ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(ident): acceptance criterion covered by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        ident = marker.args[0]
        ACCEPTANCE_RESULTS[ident] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for ident in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {ident}: {ACCEPTANCE_RESULTS[ident]}")
