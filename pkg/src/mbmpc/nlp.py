"""Early-terminable SQP solver with an improvement-based acceptance contract.

Each iteration solves a QP built from Gauss-Newton curvature of the
least-squares objective and the linearized constraints, then backtracks on
an l1 penalty merit.  When the linearized constraints are inconsistent a
Gauss-Newton restoration step on the squared violation is taken instead.

Whatever the iterates do, the outcome only ever reports a point that was
checked after projection (re-simulation of the shooting nodes): it must
violate no constraint by more than ``eps_feas`` and beat the reference
objective.  That is exactly the membership test the suboptimal controller
needs, so the controller can stop the solver after any number of
iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mbmpc.errors import EvaluationError, ParameterError, RolloutOverflow
from mbmpc.ocp import EPS_FEAS, Evaluation, NlpProblem
from mbmpc.qp import solve_qp

IMPROVED = "improved"
UNIMPROVED = "unimproved"
INFEASIBLE_START = "infeasible-start"
CONVERGED = "converged"

TIE_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 20
    eps_feas: float = EPS_FEAS
    eps_opt: float = 1e-6
    penalty: float = 1.0  # initial l1 merit weight
    backtrack: float = 0.5
    armijo: float = 1e-4
    min_step: float = 1e-6
    hessian_reg: float = 1e-8  # relative Levenberg-Marquardt shift of the QP Hessian
    restoration_reg: float = 1e-6
    log: bool = False

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ParameterError("max_iterations must be nonnegative")
        if not (self.eps_feas > 0 and self.eps_opt > 0):
            raise ParameterError("tolerances must be positive")
        if not 0 < self.backtrack < 1 or not 0 < self.armijo < 1:
            raise ParameterError("line-search constants must lie in (0, 1)")


@dataclass(frozen=True)
class IterateRecord:
    iteration: int
    kind: str  # "sqp" or "restoration"
    step: float
    merit_before: float
    merit_after: float
    objective: float
    violation: float
    penalty: float


@dataclass
class SolveOutcome:
    point: np.ndarray
    objective: float
    violation: float
    iterations: int
    status: str
    reference: float = math.inf
    log: list = field(default_factory=list, repr=False)

    @property
    def improved(self) -> bool:
        """True when ``point`` is feasible and strictly better than the reference."""
        return self.status in (IMPROVED, CONVERGED)

    def stats_line(self) -> str:
        return (
            f"status={self.status} iters={self.iterations} "
            f"objective={self.objective!r} violation={self.violation:.3e}"
        )


# ------------------------------------------------------------------ helpers


def _evaluate(problem: NlpProblem, z):
    """Evaluation or ``None`` when the point cannot be evaluated (overflow)."""
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            ev = problem.evaluate(z)
    except (RolloutOverflow, FloatingPointError):
        return None
    if not (np.isfinite(ev.objective) and np.all(np.isfinite(ev.eq)) and np.all(np.isfinite(ev.ineq))):
        return None
    return ev


def _l1_violation(problem: NlpProblem, A_lin, z, ev: Evaluation) -> float:
    total = float(np.abs(ev.eq).sum() + np.maximum(ev.ineq, 0.0).sum())
    total += float(np.maximum(problem.lower - z, 0.0).sum() + np.maximum(z - problem.upper, 0.0).sum())
    if A_lin.shape[0]:
        Az = A_lin @ z
        total += float(np.maximum(Az - problem.linear.upper, 0.0).sum())
        total += float(np.maximum(problem.linear.lower - Az, 0.0).sum())
    return total


def _sq_violation(problem: NlpProblem, A_lin, z, ev: Evaluation) -> float:
    """Half the squared violation measure minimized by restoration."""
    parts = [ev.eq, np.maximum(ev.ineq, 0.0), np.maximum(problem.lower - z, 0.0),
             np.maximum(z - problem.upper, 0.0)]
    if A_lin.shape[0]:
        Az = A_lin @ z
        parts += [np.maximum(Az - problem.linear.upper, 0.0), np.maximum(problem.linear.lower - Az, 0.0)]
    return 0.5 * float(sum(np.dot(p, p) for p in parts))


def _hard_rows(problem: NlpProblem, A_lin, z):
    """Bounds and linear rows as ``A d <= b`` for a step ``d`` from ``z``."""
    n = problem.n_vars
    eye = np.eye(n)
    up = np.isfinite(problem.upper)
    lo = np.isfinite(problem.lower)
    A = [eye[up], -eye[lo]]
    b = [problem.upper[up] - z[up], z[lo] - problem.lower[lo]]
    if A_lin.shape[0]:
        Az = A_lin @ z
        A += [A_lin, -A_lin]
        b += [problem.linear.upper - Az, Az - problem.linear.lower]
    return np.vstack(A), np.concatenate(b)


class _Tracker:
    """Best projected iterate that is feasible and beats the incumbent objective."""

    def __init__(self, problem, reference, eps_feas):
        self.problem = problem
        self.eps = eps_feas
        self.best_obj = reference
        self.best = None
        self.best_viol = math.inf

    def offer(self, z, project=True):
        p = self.problem
        if project and p.project is not None:
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    z = p.project(z)
            except RolloutOverflow:
                return False
        ev = _evaluate(p, z)
        if ev is None:
            return False
        viol = p.violation(z, ev)
        if viol <= self.eps and ev.objective < self.best_obj - TIE_TOL:
            self.best, self.best_obj, self.best_viol = z, ev.objective, viol
            return True
        return False


def _restoration_step(problem, A_lin, z, lin, reg):
    """Gauss-Newton step on the squared violation; bounds and linear rows stay hard."""
    n = problem.n_vars
    ev = lin.evaluation
    JE, JI = lin.eq_jac, lin.ineq_jac
    nI = JI.shape[0]
    H = np.zeros((n + nI, n + nI))
    H[:n, :n] = JE.T @ JE + reg * np.eye(n)
    H[n:, n:] = np.eye(nI)
    g = np.concatenate([JE.T @ ev.eq, np.zeros(nI)])
    A_hard, b_hard = _hard_rows(problem, A_lin, z)
    A_in = np.vstack([
        np.hstack([JI, -np.eye(nI)]),
        np.hstack([np.zeros((nI, n)), -np.eye(nI)]),
        np.hstack([A_hard, np.zeros((A_hard.shape[0], nI))]),
    ])
    b_in = np.concatenate([-ev.ineq, np.zeros(nI), b_hard])
    res = solve_qp(H, g, A_in=A_in, b_in=b_in)
    if not res.ok:
        return None, None
    d = res.x[:n]
    r_eq = ev.eq + JE @ d
    r_in = np.maximum(ev.ineq + JI @ d, 0.0)
    model = 0.5 * float(r_eq @ r_eq + r_in @ r_in)
    return d, model


def _line_search(measure, z, d, current, slope, cfg):
    """Backtracking Armijo search; returns ``(alpha, z_new, value, evaluation)`` or ``None``.

    ``measure`` maps a point to ``(value, evaluation)`` or ``None``.
    """
    alpha = 1.0
    while alpha >= cfg.min_step:
        zt = z + alpha * d
        got = measure(zt)
        if got is not None and got[0] <= current + cfg.armijo * alpha * slope:
            return alpha, zt, got[0], got[1]
        alpha *= cfg.backtrack
    return None


# ------------------------------------------------------------------ solvers


def solve(problem: NlpProblem, initial_point, reference_objective: float = math.inf,
          config: SolverConfig | None = None) -> SolveOutcome:
    """Run at most ``config.max_iterations`` SQP iterations from ``initial_point``.

    The returned point is the best checked iterate whose violation is at
    most ``eps_feas`` and whose objective is below ``reference_objective``
    (ties within ``1e-12`` keep the earlier point).  Without such a point
    the initial point is returned unchanged with status ``unimproved`` (or
    ``infeasible-start`` if it was itself infeasible).
    """
    cfg = config or SolverConfig()
    z0 = np.array(initial_point, dtype=float)
    if z0.shape != (problem.n_vars,):
        raise ParameterError(f"initial point must have length {problem.n_vars}")
    ev0 = _evaluate(problem, z0)
    if ev0 is None:
        raise EvaluationError("objective or constraints are not finite at the initial point")
    viol0 = problem.violation(z0, ev0)
    tracker = _Tracker(problem, reference_objective, cfg.eps_feas)
    tracker.offer(z0, project=False)
    log: list[IterateRecord] = []
    A_lin = problem.linear_matrix()
    mu = cfg.penalty
    z, ev = z0, ev0
    iters = 0
    converged = False
    last_best = tracker.best is not None

    def merit(zt, mu_):
        e = _evaluate(problem, zt)
        return None if e is None else (e.objective + mu_ * _l1_violation(problem, A_lin, zt, e), e)

    def theta(zt):
        e = _evaluate(problem, zt)
        return None if e is None else (_sq_violation(problem, A_lin, zt, e), e)

    while cfg.max_iterations > 0:
        try:
            lin = problem.linearize(z)
        except RolloutOverflow:
            break
        H = 2.0 * lin.residual_jac.T @ lin.residual_jac
        H += cfg.hessian_reg * max(1.0, float(np.max(np.diag(H)))) * np.eye(problem.n_vars)
        g = lin.gradient
        A_hard, b_hard = _hard_rows(problem, A_lin, z)
        qp = solve_qp(
            H, g, lin.eq_jac, -lin.evaluation.eq,
            np.vstack([lin.ineq_jac, A_hard]), np.concatenate([-lin.evaluation.ineq, b_hard]),
        )
        if qp.ok:
            d = qp.x
            viol = problem.violation(z, ev)
            if np.max(np.abs(d), initial=0.0) <= cfg.eps_opt * (1.0 + np.max(np.abs(z))) and viol <= cfg.eps_feas:
                converged = True
                break
            if iters >= cfg.max_iterations:
                break
            mult = max(np.max(np.abs(qp.mult_eq), initial=0.0), np.max(qp.mult_in, initial=0.0))
            mu = max(mu, 1.1 * mult)
            l1 = _l1_violation(problem, A_lin, z, ev)
            slope = float(g @ d) - mu * l1
            if slope >= 0:
                mu = 2.0 * mu + (float(g @ d) + 1.0) / max(l1, 1e-300)
                slope = float(g @ d) - mu * l1
            current = ev.objective + mu * l1
            found = _line_search(lambda zt: merit(zt, mu), z, d, current, slope, cfg)
            kind = "sqp"
        else:
            if iters >= cfg.max_iterations:
                break
            d, model = _restoration_step(problem, A_lin, z, lin, cfg.restoration_reg)
            if d is None:
                break
            current = _sq_violation(problem, A_lin, z, ev)
            found = _line_search(theta, z, d, current, model - current, cfg)
            kind = "restoration"
        if found is None:
            break
        alpha, z, value, ev = found
        iters += 1
        tracker.offer(z)
        if cfg.log:
            log.append(IterateRecord(iters, kind, alpha, current, value, ev.objective,
                                     problem.violation(z, ev), mu))

    if tracker.best is None:
        status = INFEASIBLE_START if viol0 > cfg.eps_feas else UNIMPROVED
        return SolveOutcome(z0, ev0.objective, viol0, iters, status, reference_objective, log)
    status = CONVERGED if converged else IMPROVED
    return SolveOutcome(tracker.best, tracker.best_obj, tracker.best_viol, iters, status,
                        reference_objective, log)


def solve_feasibility(problem: NlpProblem, initial_point, config: SolverConfig | None = None) -> SolveOutcome:
    """Minimize the squared constraint violation with Gauss-Newton restoration steps.

    Status is ``converged`` exactly when the returned point violates no
    constraint by more than ``eps_feas``; the objective is ignored.
    """
    cfg = config or SolverConfig()
    z = np.array(initial_point, dtype=float)
    if z.shape != (problem.n_vars,):
        raise ParameterError(f"initial point must have length {problem.n_vars}")
    ev = _evaluate(problem, z)
    if ev is None:
        raise EvaluationError("constraints are not finite at the initial point")
    viol = problem.violation(z, ev)
    if viol <= cfg.eps_feas:
        return SolveOutcome(z, ev.objective, viol, 0, CONVERGED)
    A_lin = problem.linear_matrix()
    tracker = _Tracker(problem, math.inf, cfg.eps_feas)
    log: list[IterateRecord] = []
    best_z, best_ev, best_viol = z, ev, viol
    iters = 0

    def theta(zt):
        e = _evaluate(problem, zt)
        return None if e is None else (_sq_violation(problem, A_lin, zt, e), e)

    while iters < cfg.max_iterations:
        try:
            lin = problem.linearize(z)
        except RolloutOverflow:
            break
        d, model = _restoration_step(problem, A_lin, z, lin, cfg.restoration_reg)
        if d is None:
            break
        current = _sq_violation(problem, A_lin, z, ev)
        found = _line_search(theta, z, d, current, model - current, cfg)
        if found is None:
            break
        alpha, z, value, ev = found
        iters += 1
        viol = problem.violation(z, ev)
        if cfg.log:
            log.append(IterateRecord(iters, "restoration", alpha, current, value, ev.objective, viol, 0.0))
        if viol < best_viol:
            best_z, best_ev, best_viol = z, ev, viol
        if tracker.offer(z):
            zb = tracker.best
            return SolveOutcome(zb, tracker.best_obj, tracker.best_viol, iters, CONVERGED, math.inf, log)
    return SolveOutcome(best_z, best_ev.objective, best_viol, iters, INFEASIBLE_START, math.inf, log)
