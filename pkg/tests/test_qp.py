import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from mbmpc.qp import INFEASIBLE, OPTIMAL, solve_qp


def random_qp(seed, n=6, n_eq=2, n_in=8, feasible=True):
    rng = np.random.default_rng(seed)
    L = rng.normal(size=(n, n))
    H = L @ L.T + 0.1 * np.eye(n)
    g = rng.normal(size=n)
    A_eq = rng.normal(size=(n_eq, n))
    A_in = rng.normal(size=(n_in, n))
    x0 = rng.normal(size=n)
    b_eq = A_eq @ x0
    b_in = A_in @ x0 + (rng.uniform(0, 1, n_in) if feasible else rng.uniform(-3, 1, n_in))
    return H, g, A_eq, b_eq, A_in, b_in


def lp_feasible(A_eq, b_eq, A_in, b_in):
    res = linprog(np.zeros(A_eq.shape[1]), A_ub=A_in, b_ub=b_in, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(None, None)] * A_eq.shape[1], method="highs")
    return res.status == 0


def test_unconstrained():
    H = np.diag([2.0, 4.0])
    res = solve_qp(H, np.array([-2.0, -4.0]))
    assert res.ok and np.allclose(res.x, [1, 1])


def test_box_active():
    # min (x-2)^2 subject to x <= 1
    res = solve_qp(np.array([[2.0]]), np.array([-4.0]), A_in=np.array([[1.0]]), b_in=np.array([1.0]))
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(1.0)
    assert res.mult_in[0] == pytest.approx(2.0)


def test_equality_only():
    res = solve_qp(np.eye(2), np.zeros(2), A_eq=np.array([[1.0, 1.0]]), b_eq=np.array([2.0]))
    assert np.allclose(res.x, [1, 1])
    assert res.mult_eq[0] == pytest.approx(-1.0)


def test_detects_infeasible():
    A_in = np.array([[1.0], [-1.0]])
    b_in = np.array([-1.0, -1.0])  # x <= -1 and x >= 1
    assert solve_qp(np.eye(1), np.zeros(1), A_in=A_in, b_in=b_in).status == INFEASIBLE


def test_inconsistent_equalities():
    A_eq = np.array([[1.0, 0.0], [1.0, 0.0]])
    res = solve_qp(np.eye(2), np.zeros(2), A_eq=A_eq, b_eq=np.array([1.0, 2.0]))
    assert res.status == INFEASIBLE


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_feasibility_agrees_with_linprog(seed):
    H, g, A_eq, b_eq, A_in, b_in = random_qp(seed, feasible=False)
    res = solve_qp(H, g, A_eq, b_eq, A_in, b_in)
    assert res.ok == lp_feasible(A_eq, b_eq, A_in, b_in)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matches_cvxopt(seed):
    cvxopt = pytest.importorskip("cvxopt")
    from cvxopt import solvers

    solvers.options["show_progress"] = False
    solvers.options["abstol"] = 1e-10
    solvers.options["reltol"] = 1e-10
    solvers.options["feastol"] = 1e-10
    H, g, A_eq, b_eq, A_in, b_in = random_qp(seed)
    res = solve_qp(H, g, A_eq, b_eq, A_in, b_in)
    m = cvxopt.matrix
    ref = solvers.qp(m(H), m(g), m(A_in), m(b_in), m(A_eq), m(b_eq))
    assert res.ok and ref["status"] == "optimal"
    x_ref = np.array(ref["x"]).ravel()
    obj = lambda x: 0.5 * x @ H @ x + g @ x  # noqa: E731
    assert obj(res.x) == pytest.approx(obj(x_ref), rel=1e-7, abs=1e-9)
    assert np.allclose(res.x, x_ref, atol=1e-5)
    # KKT: stationarity, primal and dual feasibility, complementarity
    assert np.all(res.mult_in >= -1e-10)
    assert np.max(A_in @ res.x - b_in) <= 1e-9
    assert np.allclose(A_eq @ res.x, b_eq, atol=1e-9)
    stat = H @ res.x + g + A_eq.T @ res.mult_eq + A_in.T @ res.mult_in
    assert np.linalg.norm(stat) <= 1e-7 * (1 + np.linalg.norm(g))
    assert np.all(np.abs(res.mult_in * (A_in @ res.x - b_in)) <= 1e-8)


def test_degenerate_duplicate_rows():
    # the same constraint listed twice must not break the active set
    A_in = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    b_in = np.array([0.5, 0.5, 0.2])
    res = solve_qp(np.eye(2), np.array([-1.0, -1.0]), A_in=A_in, b_in=b_in)
    assert res.ok and np.allclose(res.x, [0.5, 0.2])
