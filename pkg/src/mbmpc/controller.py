"""Suboptimal MPC with a warm-start buffer: fallback and offset move-blocking.

The closed loop evolves the extended state ``z = (x, w)`` where ``w`` is an
admissible full-horizon input sequence for ``x``.  Each step the optimizer
may replace ``w`` by something cheaper; whatever is applied, the next
buffer entry is built from it with the shift-and-append operator (or the
local controller when that is cheaper inside the terminal set).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from mbmpc.blocking import BlockingPattern
from mbmpc.constraints import ConstraintSet
from mbmpc.dynamics import SystemModel, as_input_sequence, as_state, rollout, step
from mbmpc.errors import ContractViolation, InitializationError, ParameterError, StepFailure, TerminalMembershipError
from mbmpc.nlp import SolverConfig, solve, solve_feasibility
from mbmpc.objective import CostSpec, stage_cost, total_cost
from mbmpc.ocp import (
    EPS_FEAS,
    assemble_blocked,
    assemble_offset,
    evaluate_admissibility,
    initial_point,
    problem_inputs,
)
from mbmpc.terminal import TerminalIngredients, TerminalSet, local_control, local_warmstart

PLAIN = "plain-blocked"
BUFFERED = "buffered-fallback"
OFFSET = "offset"
MODES = (PLAIN, BUFFERED, OFFSET)

DECREASE_TOL = 1e-6
REALIZED_TOL = 1e-12

LOCAL = "local"
SHIFTED = "shifted"


@dataclass(frozen=True)
class ControllerConfig:
    mode: str
    pattern: BlockingPattern
    solver: SolverConfig = field(default_factory=SolverConfig)
    eta: float = 1e-3
    init_solver: SolverConfig = field(default_factory=lambda: SolverConfig(max_iterations=100))

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.eta < 0:
            raise ParameterError("eta must be nonnegative")


@dataclass
class ExtendedState:
    x: np.ndarray
    warmstart: np.ndarray


@dataclass
class StepRecord:
    n: int
    x: np.ndarray
    u: np.ndarray
    V: float
    J_realized: float
    stage: float
    branch: str
    fallback: bool
    lam: float
    solver_iters: int
    solve_status: str


# ------------------------------------------------------------------ warm-start scheme


def shift_append(model: SystemModel, ing: TerminalIngredients, x, useq) -> np.ndarray:
    """``[u(1), ..., u(N-1), kappa_f(phi(N; x, useq))]``."""
    useq = as_input_sequence(model, useq)
    traj = rollout(model, x, useq)
    xN = traj.states[-1]
    if TerminalSet(ing).level(xN) > ing.pi + EPS_FEAS:
        raise TerminalMembershipError("terminal state of the sequence is outside the terminal set")
    return np.vstack([useq[1:], local_control(ing, xN)[None, :]])


def next_warmstart(model: SystemModel, spec: CostSpec, ing: TerminalIngredients, x, useq_applied):
    """Warm-start for ``x+ = f(x, u(0))``: the local sequence if it is no more expensive, else the shift."""
    useq = as_input_sequence(model, useq_applied)
    x_next = step(model, x, useq[0])
    shifted = shift_append(model, ing, x, useq)
    if TerminalSet(ing).contains(x_next):
        local = local_warmstart(model, ing, x_next, useq.shape[0])
        if total_cost(model, spec, x_next, local) <= total_cost(model, spec, x_next, shifted):
            return local, LOCAL
    return shifted, SHIFTED


def make_initial_extended_state(model: SystemModel, spec: CostSpec, ing: TerminalIngredients,
                                cons: ConstraintSet, x0, pattern: BlockingPattern,
                                solver: SolverConfig | None = None) -> ExtendedState:
    """Admissible ``(x0, w)`` pair: the local sequence inside the terminal set, else a blocked feasible point."""
    x0 = as_state(model, x0)
    N = pattern.N
    if not cons.state.contains(x0):
        raise InitializationError(f"x0 = {x0} violates the state box")
    if TerminalSet(ing).contains(x0):
        return ExtendedState(x0, local_warmstart(model, ing, x0, N))
    problem = assemble_blocked(model, spec, cons, x0, N, pattern)
    out = solve_feasibility(problem, initial_point(problem), solver or SolverConfig(max_iterations=100))
    if out.status != "converged":
        raise InitializationError(
            f"no admissible blocked input sequence found from x0 = {x0} "
            f"(best violation {out.violation:.3e} after {out.iterations} iterations)"
        )
    w = problem_inputs(problem, out.point)
    if not evaluate_admissibility(model, cons, x0, w).feasible:
        raise InitializationError("feasibility solution failed the admissibility check")
    return ExtendedState(x0, w)


# ------------------------------------------------------------------ controller step


def _block_average(pattern: BlockingPattern, w) -> np.ndarray:
    sums = np.add.reduceat(w, pattern.starts, axis=0)
    return sums / np.asarray(pattern.lengths)[:, None]


def controller_step(model: SystemModel, spec: CostSpec, ing: TerminalIngredients, cons: ConstraintSet,
                    config: ControllerConfig, z: ExtendedState, n: int = 0):
    """One closed-loop step; returns ``(u_applied, z_next, record)``."""
    x = as_state(model, z.x)
    w = as_input_sequence(model, z.warmstart)
    N = w.shape[0]
    pattern = config.pattern
    if pattern.N != N:
        raise ContractViolation(f"pattern horizon {pattern.N} does not match warm-start length {N}")
    V = total_cost(model, spec, x, w)
    lam = math.nan
    if config.mode == OFFSET:
        problem = assemble_offset(model, spec, cons, x, N, pattern, w, config.eta)
        out = solve(problem, initial_point(problem, None, 1.0), V, config.solver)
        lam = 1.0
        useq = w
        if out.improved:
            cand = problem_inputs(problem, out.point)
            if _admissible_and_cheaper(model, spec, cons, x, cand, V):
                useq, lam = cand, float(out.point[-1])
    elif config.mode == BUFFERED:
        problem = assemble_blocked(model, spec, cons, x, N, pattern)
        out = solve(problem, initial_point(problem, _block_average(pattern, w)), V, config.solver)
        useq = w
        if out.improved:
            cand = problem_inputs(problem, out.point)
            if _admissible_and_cheaper(model, spec, cons, x, cand, V):
                useq = cand
    else:
        problem = assemble_blocked(model, spec, cons, x, N, pattern)
        out = solve(problem, initial_point(problem), math.inf, config.solver)
        if not out.improved:
            raise StepFailure(f"step {n}: no feasible blocked solution ({out.stats_line()})")
        useq = problem_inputs(problem, out.point)
    fallback = useq is w
    J = total_cost(model, spec, x, useq)
    u0 = useq[0].copy()
    w_next, branch = next_warmstart(model, spec, ing, x, useq)
    x_next = step(model, x, u0)
    rec = StepRecord(n, x.copy(), u0, V, J, stage_cost(spec, x, u0), branch, fallback, lam,
                     out.iterations, out.status)
    return u0, ExtendedState(x_next, w_next), rec


def _admissible_and_cheaper(model, spec, cons, x, useq, V) -> bool:
    """Defensive re-check of a solver candidate on the single-shooting rollout."""
    if not evaluate_admissibility(model, cons, x, useq).feasible:
        return False
    return total_cost(model, spec, x, useq) <= V + REALIZED_TOL


# ------------------------------------------------------------------ closed loop and logs


@dataclass
class TrajectoryLog:
    records: list
    states: np.ndarray
    final_V: float
    mode: str | None = None

    @property
    def closed_loop_cost(self) -> float:
        return float(sum(r.stage for r in self.records))

    def inputs(self) -> np.ndarray:
        return np.array([r.u for r in self.records])

    def columns(self):
        n = self.states.shape[1]
        m = self.records[0].u.size if self.records else 1
        xs = [f"x{i + 1}" for i in range(n)]
        us = ["u"] if m == 1 else [f"u{i + 1}" for i in range(m)]
        return xs, us

    def to_csv(self, path) -> None:
        xs, us = self.columns()
        header = ["n", *xs, *us, "V", "J_realized", "stage_cost", "branch", "fallback", "lambda",
                  "solver_iters", "solve_status"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for r in self.records:
                wr.writerow([r.n, *map(repr, map(float, r.x)), *map(repr, map(float, r.u)), repr(r.V),
                             repr(r.J_realized), repr(r.stage), r.branch, int(r.fallback), repr(r.lam),
                             r.solver_iters, r.solve_status])
            last = self.states[-1]
            wr.writerow([len(self.records), *map(repr, map(float, last)), *[""] * len(us), repr(self.final_V),
                         "", "", "", "", "", "", ""])

    @classmethod
    def from_csv(cls, path, mode=None) -> "TrajectoryLog":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ContractViolation(f"{path} has no rows")
        xs = sorted((k for k in rows[0] if k.startswith("x")), key=lambda k: int(k[1:]))
        us = [k for k in rows[0] if k == "u" or (k.startswith("u") and k[1:].isdigit())]
        records = []
        for row in rows[:-1]:
            records.append(StepRecord(
                int(row["n"]), np.array([float(row[k]) for k in xs]), np.array([float(row[k]) for k in us]),
                float(row["V"]), float(row["J_realized"]), float(row["stage_cost"]), row["branch"],
                bool(int(row["fallback"])), float(row["lambda"]), int(row["solver_iters"]), row["solve_status"],
            ))
        states = np.array([r.x for r in records] + [[float(rows[-1][k]) for k in xs]])
        return cls(records, states, float(rows[-1]["V"]), mode)


def simulate_closed_loop(model: SystemModel, spec: CostSpec, ing: TerminalIngredients, cons: ConstraintSet,
                         config: ControllerConfig, x0, steps: int, z0: ExtendedState | None = None,
                         on_step=None) -> TrajectoryLog:
    """Nominal closed loop for ``steps`` steps from ``x0`` (or a given initial extended state)."""
    if steps < 0:
        raise ParameterError("steps must be nonnegative")
    z = z0 or make_initial_extended_state(model, spec, ing, cons, x0, config.pattern, config.init_solver)
    records, states = [], [z.x.copy()]
    for n in range(steps):
        try:
            _, z, rec = controller_step(model, spec, ing, cons, config, z, n)
        except StepFailure as exc:
            partial = TrajectoryLog(records, np.array(states), math.nan, config.mode)
            raise StepFailure(str(exc), log=partial) from exc
        records.append(rec)
        states.append(z.x.copy())
        if on_step is not None:
            on_step(rec, z)
    final_V = total_cost(model, spec, z.x, z.warmstart)
    return TrajectoryLog(records, np.array(states), final_V, config.mode)


@dataclass
class AuditReport:
    decrease_violations: list
    realized_violations: list
    max_decrease_excess: float
    steps: int

    @property
    def passed(self) -> bool:
        return not self.decrease_violations and not self.realized_violations

    def to_text(self) -> str:
        lines = [
            f"steps: {self.steps}",
            f"decrease violations: {len(self.decrease_violations)} {self.decrease_violations[:20]}",
            f"realized > V violations: {len(self.realized_violations)} {self.realized_violations[:20]}",
            f"max V(n+1) - V(n) + l(n): {self.max_decrease_excess!r}",
            f"verdict: {'PASS' if self.passed else 'FLAGGED'}",
        ]
        return "\n".join(lines)


def lyapunov_audit(log: TrajectoryLog) -> AuditReport:
    """Check ``V(n+1) <= V(n) - l(n) + 1e-6`` and ``J_realized(n) <= V(n) + 1e-12``.

    Violations are reported, never raised: in plain blocked mode they are
    expected.
    """
    V = np.array([r.V for r in log.records] + [log.final_V])
    stage = np.array([r.stage for r in log.records])
    excess = V[1:] - V[:-1] + stage if stage.size else np.zeros(0)
    dec = [int(i) for i in np.flatnonzero(~(excess <= DECREASE_TOL))]
    real = [r.n for r in log.records if not r.J_realized <= r.V + REALIZED_TOL]
    return AuditReport(dec, real, float(np.max(excess, initial=-math.inf)), len(log.records))
