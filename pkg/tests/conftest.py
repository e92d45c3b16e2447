import numpy as np
import pytest

from mbmpc.config import ExperimentConfig, build_setup
from mbmpc.constraints import Box, ConstraintSet
from mbmpc.dynamics import SystemModel, linear_model
from mbmpc.objective import CostSpec
from mbmpc.terminal import TerminalSet, design_terminal

# inside the N = 80 feasible set; see the config module
FEASIBLE_X0 = np.array([-0.5, 0.5])
LITERAL_X0 = np.array([-0.6, 0.8])


@pytest.fixture(scope="session")
def vdp():
    return build_setup(ExperimentConfig())


def scalar_setup(a=1.0, b=1.0, q=1.0, r=1.0, pi=10.0, xbound=10.0, ubound=10.0):
    """x+ = a x + b u with quadratic weights; used for convex sanity checks."""
    model = linear_model([[a]], [[b]])
    ing = design_terminal(model, [[q]], [[r]], 1.0, pi)
    spec = CostSpec([[q]], [[r]], ing.P)
    cons = ConstraintSet(Box.symmetric(xbound, 1), Box.symmetric(ubound, 1), TerminalSet(ing))
    return model, spec, ing, cons


def sine_model(ts=0.1):
    """Pendulum-like map; unlike Van der Pol its third derivatives do not vanish."""

    def f(x, u):
        out = np.empty(x.shape[:-1] + (2,)) if x.shape[:-1] == u.shape[:-1] else np.empty(
            np.broadcast_shapes(x.shape[:-1], u.shape[:-1]) + (2,))
        out[..., 0] = x[..., 0] + ts * x[..., 1]
        out[..., 1] = x[..., 1] + ts * (np.sin(u[..., 0]) - np.sin(x[..., 0]))
        return out

    return SystemModel(2, 1, f, name="sine")


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


def report(label, passed, detail=""):
    line = f"{label}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
