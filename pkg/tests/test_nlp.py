import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FEASIBLE_X0, LITERAL_X0
from mbmpc.blocking import uniform_pattern
from mbmpc.controller import _block_average, make_initial_extended_state
from mbmpc.errors import ParameterError
from mbmpc.nlp import (
    CONVERGED,
    INFEASIBLE_START,
    TIE_TOL,
    UNIMPROVED,
    SolverConfig,
    solve,
    solve_feasibility,
)
from mbmpc.objective import total_cost
from mbmpc.ocp import (
    EPS_FEAS,
    Evaluation,
    Linearization,
    NlpProblem,
    assemble_blocked,
    assemble_offset,
    brute_force_solve,
    initial_point,
    problem_inputs,
)

SMALL_X0 = np.array([0.1, -0.1])


def scalar_quadratic():
    """min (u - 0.5)^2 on [-1, 1]."""

    def evaluate(z):
        return Evaluation(float((z[0] - 0.5) ** 2), np.zeros(0), np.zeros(0))

    def linearize(z):
        return Linearization(evaluate(z), np.array([z[0] - 0.5]), np.eye(1), np.zeros((0, 1)), np.zeros((0, 1)))

    return NlpProblem(1, 0, 0, np.array([-1.0]), np.array([1.0]), evaluate, linearize, name="scalar")


def test_scalar_quadratic():
    out = solve(scalar_quadratic(), [0.0], math.inf, SolverConfig())
    assert out.status == CONVERGED
    assert abs(out.point[0] - 0.5) <= 1e-6


def test_zero_iterations_returns_initial_point(vdp):
    p = assemble_blocked(vdp.model, vdp.spec, vdp.cons, SMALL_X0, 4, uniform_pattern(4, 2))
    z0 = initial_point(p)
    out = solve(p, z0, math.inf, SolverConfig(max_iterations=0))
    assert out.iterations == 0 and np.array_equal(out.point, z0)
    # a feasible start beats an infinite reference, so it counts as improved
    assert out.improved
    out = solve(p, z0, out.objective, SolverConfig(max_iterations=0))
    assert out.status == UNIMPROVED and np.array_equal(out.point, z0)
    bad = z0.copy()
    bad[2] += 0.1  # break the first defect
    out = solve(p, bad, math.inf, SolverConfig(max_iterations=0))
    assert out.status == INFEASIBLE_START and np.array_equal(out.point, bad)


def test_vdp_small_vs_grid(vdp):
    pat = uniform_pattern(4, 2)
    grid = brute_force_solve(vdp.model, vdp.spec, vdp.cons, SMALL_X0, 4, pat, 21)
    p = assemble_blocked(vdp.model, vdp.spec, vdp.cons, SMALL_X0, 4, pat)
    out = solve(p, initial_point(p), math.inf, SolverConfig(max_iterations=100))
    assert out.objective <= grid.cost + max(0.01 * grid.cost, grid.bound)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.12, 0.12), st.floats(-0.2, 0.2), st.integers(1, 2))
def test_oracle_proximity(vdp, a, b, M):
    x0 = np.array([a, b])
    pat = uniform_pattern(4, M)
    grid = brute_force_solve(vdp.model, vdp.spec, vdp.cons, x0, 4, pat, 21)
    p = assemble_blocked(vdp.model, vdp.spec, vdp.cons, x0, 4, pat)
    out = solve(p, initial_point(p), math.inf, SolverConfig(max_iterations=100))
    if grid.feasible:
        assert out.improved
        assert out.objective <= grid.cost + grid.bound + 1e-12


def test_feasibility_examples(vdp):
    q = scalar_quadratic()
    out = solve_feasibility(q, [0.3])
    assert out.status == CONVERGED and out.iterations == 0 and out.point[0] == 0.3
    out = solve_feasibility(q, [1.7])
    assert out.status == CONVERGED and out.violation <= EPS_FEAS
    p = assemble_blocked(vdp.model, vdp.spec, vdp.cons, [0.9, 0.9], 4, uniform_pattern(4, 2))
    out = solve_feasibility(p, initial_point(p), SolverConfig(max_iterations=30))
    assert out.status == INFEASIBLE_START and out.violation > EPS_FEAS


def test_literal_x0_has_no_admissible_sequence(vdp):
    # the long-horizon problem from (-0.6, 0.8) cannot reach the terminal set
    p = assemble_blocked(vdp.model, vdp.spec, vdp.cons, LITERAL_X0, 80, uniform_pattern(80, 80))
    out = solve_feasibility(p, initial_point(p), SolverConfig(max_iterations=60))
    assert out.status == INFEASIBLE_START
    assert out.violation > 1e-3


def _offset_problem(vdp, M=2, eta=1e-3):
    pat = uniform_pattern(80, M)
    z = make_initial_extended_state(vdp.model, vdp.spec, vdp.ing, vdp.cons, FEASIBLE_X0, pat)
    V = total_cost(vdp.model, vdp.spec, FEASIBLE_X0, z.warmstart)
    return assemble_offset(vdp.model, vdp.spec, vdp.cons, FEASIBLE_X0, 80, pat, z.warmstart, eta), V, z


def test_monotone_merit_log(vdp):
    p, V, _ = _offset_problem(vdp)
    out = solve(p, initial_point(p, None, 1.0), V, SolverConfig(max_iterations=20, log=True))
    assert out.log
    for rec in out.log:
        assert rec.merit_after <= rec.merit_before
    for a, b in zip(out.log, out.log[1:]):
        if a.kind == b.kind == "sqp" and a.penalty == b.penalty:
            assert b.merit_after <= a.merit_after


@pytest.mark.parametrize("i", [0, 1, 2, 3, 5, 10])
def test_early_termination_safety(vdp, i):
    p, V, z = _offset_problem(vdp, M=16)
    out = solve(p, initial_point(p, None, 1.0), V, SolverConfig(max_iterations=i))
    if out.improved:
        assert out.objective <= V + TIE_TOL
        assert out.violation <= EPS_FEAS
        ev = p.evaluate(out.point)
        assert ev.objective == out.objective and p.violation(out.point, ev) <= EPS_FEAS
    else:
        assert np.array_equal(problem_inputs(p, out.point), z.warmstart)


def test_tie_keeps_incumbent(vdp):
    p, V, _ = _offset_problem(vdp)
    z0 = initial_point(p, None, 1.0)
    # reference equal to the start's own cost: nothing ties its way in
    out = solve(p, z0, V, SolverConfig(max_iterations=0))
    assert out.status == UNIMPROVED and np.array_equal(out.point, z0)


def test_deterministic(vdp):
    p, V, _ = _offset_problem(vdp, M=16)
    z0 = initial_point(p, None, 1.0)
    a = solve(p, z0, V, SolverConfig(max_iterations=5, log=True))
    b = solve(p, z0, V, SolverConfig(max_iterations=5, log=True))
    assert np.array_equal(a.point, b.point) and a.objective == b.objective and a.log == b.log


def test_buffered_start_improves(vdp):
    pat = uniform_pattern(80, 2)
    z = make_initial_extended_state(vdp.model, vdp.spec, vdp.ing, vdp.cons, FEASIBLE_X0, pat)
    V = total_cost(vdp.model, vdp.spec, FEASIBLE_X0, z.warmstart)
    p = assemble_blocked(vdp.model, vdp.spec, vdp.cons, FEASIBLE_X0, 80, pat)
    out = solve(p, initial_point(p, _block_average(pat, z.warmstart)), V, SolverConfig(max_iterations=100))
    assert out.improved and out.objective < V


def test_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(max_iterations=-1)
    with pytest.raises(ParameterError):
        SolverConfig(backtrack=1.0)
    with pytest.raises(ParameterError):
        solve(scalar_quadratic(), [0.0, 1.0])
