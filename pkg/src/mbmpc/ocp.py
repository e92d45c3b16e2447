"""Multiple-shooting transcription of the (blocked, offset-blocked) optimal control problems.

The shooting grid equals the blocking grid: node ``s_j`` is the predicted
state at the first step of block ``j`` and each defect spans the whole
block under a constant input (plus ``lam * w`` in offset mode).  The
decision vector is laid out as::

    z = (s_0, ..., s_M, ubar_0, ..., ubar_{M-1}[, lam])

Constraints handed to the solver:

* equalities: initial pin ``s_0 - x0`` followed by the defects
  ``s_{j+1} - phi(block j; s_j, ubar_j, lam)``;
* nonlinear inequalities ``c(z) <= 0``: the state box at every
  intra-block step, then the terminal level ``s_M'P s_M - pi``;
* variable bounds: state box on ``s_0 .. s_{M-1}``, input box on ``ubar``
  (plain blocking only);
* linear rows (offset only): ``lo <= ubar_j + lam*w(k) <= hi``.

Block sub-rollouts run batched over blocks and finite-difference
perturbations, so one linearization costs a single pass of ``max(L_j)``
transition calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from mbmpc.blocking import (
    BlockingPattern,
    LinearRows,
    expand,
    expand_offset,
    offset_bound_rows,
    uniform_pattern,
)
from mbmpc.constraints import ConstraintSet
from mbmpc.dynamics import FD_STEP, SystemModel, as_input_sequence, as_state, fd_steps, rollout
from mbmpc.errors import ContractViolation, OracleGuardError, ParameterError, RolloutOverflow
from mbmpc.objective import CostSpec, fold_cost, quad_rows

EPS_FEAS = 1e-8


# ------------------------------------------------------------------ generic NLP


@dataclass
class Evaluation:
    objective: float
    eq: np.ndarray
    ineq: np.ndarray


@dataclass
class Linearization:
    """Values plus first-order data at a point.

    The objective is ``|residual|^2`` (plus a constant), which is what the
    Gauss-Newton curvature in the solver relies on.
    """

    evaluation: Evaluation
    residual: np.ndarray
    residual_jac: np.ndarray
    eq_jac: np.ndarray
    ineq_jac: np.ndarray

    @property
    def gradient(self) -> np.ndarray:
        return 2.0 * self.residual_jac.T @ self.residual


@dataclass(frozen=True)
class NlpProblem:
    """``min f(z)  s.t.  eq(z) = 0,  ineq(z) <= 0,  lo <= A z <= hi,  lower <= z <= upper``.

    ``project`` maps a point onto the manifold where the equalities hold by
    construction (for shooting problems: re-simulate the nodes from the
    inputs); the solver judges candidates at projected points.
    """

    n_vars: int
    n_eq: int
    n_ineq: int
    lower: np.ndarray
    upper: np.ndarray
    evaluate: Callable[[np.ndarray], Evaluation]
    linearize: Callable[[np.ndarray], Linearization]
    linear: LinearRows | None = None
    project: Callable[[np.ndarray], np.ndarray] | None = None
    sparsity: tuple = ()
    layout: "ShootingLayout | None" = None
    name: str = "nlp"
    core: object = field(default=None, repr=False, compare=False)

    def linear_matrix(self) -> np.ndarray:
        if self.linear is None:
            return np.zeros((0, self.n_vars))
        A = np.zeros((self.linear.n_rows, self.n_vars))
        A[:, self.layout.linear_cols] = self.linear.dense()
        return A

    def violation(self, z, ev: Evaluation) -> float:
        """Largest violation over every constraint family (0 when feasible)."""
        z = np.asarray(z, dtype=float)
        parts = [0.0]
        if ev.eq.size:
            parts.append(float(np.max(np.abs(ev.eq))))
        if ev.ineq.size:
            parts.append(float(np.max(ev.ineq)))
        parts.append(float(np.max(self.lower - z, initial=0.0)))
        parts.append(float(np.max(z - self.upper, initial=0.0)))
        if self.linear is not None:
            Az = self._linear_dense() @ z
            parts.append(float(np.max(Az - self.linear.upper, initial=0.0)))
            parts.append(float(np.max(self.linear.lower - Az, initial=0.0)))
        return max(parts)

    def _linear_dense(self):
        cache = self.__dict__.get("_lin_cache")
        if cache is None:
            cache = self.linear_matrix()
            object.__setattr__(self, "_lin_cache", cache)
        return cache

    def summary(self) -> str:
        rows, _ = self.sparsity if self.sparsity else (np.zeros(0), None)
        n_lin = 0 if self.linear is None else self.linear.n_rows
        return (
            f"{self.name}: vars={self.n_vars} eq={self.n_eq} ineq={self.n_ineq} "
            f"linear={n_lin} jac_nnz={len(rows)}"
        )


# ------------------------------------------------------------------ shooting layout


@dataclass(frozen=True)
class ShootingLayout:
    n: int
    m: int
    pattern: BlockingPattern
    offset: bool

    @property
    def M(self) -> int:
        return self.pattern.M

    @property
    def n_states(self) -> int:
        return (self.M + 1) * self.n

    @property
    def n_vars(self) -> int:
        return self.n_states + self.M * self.m + int(self.offset)

    @property
    def lam_index(self) -> int:
        if not self.offset:
            raise ContractViolation("layout has no lambda variable")
        return self.n_vars - 1

    @property
    def n_local(self) -> int:
        """Variables one block's sub-rollout depends on: ``(s_j, ubar_j[, lam])``."""
        return self.n + self.m + int(self.offset)

    @property
    def linear_cols(self) -> np.ndarray:
        """Columns of ``(ubar, lam)``, the variables the offset rows act on."""
        return np.arange(self.n_states, self.n_vars)

    def local_cols(self) -> np.ndarray:
        """``(M, n_local)`` global column index of every block's local variables."""
        j = np.arange(self.M)[:, None]
        cols = [j * self.n + np.arange(self.n), self.n_states + j * self.m + np.arange(self.m)]
        if self.offset:
            cols.append(np.full((self.M, 1), self.lam_index))
        return np.hstack(cols)

    def split(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n_vars,):
            raise ContractViolation(f"decision vector must have length {self.n_vars}, got {z.shape}")
        S = z[: self.n_states].reshape(self.M + 1, self.n)
        U = z[self.n_states : self.n_states + self.M * self.m].reshape(self.M, self.m)
        lam = float(z[-1]) if self.offset else None
        return S, U, lam

    def pack(self, S, U, lam=None) -> np.ndarray:
        parts = [np.asarray(S, dtype=float).reshape(-1), np.asarray(U, dtype=float).reshape(-1)]
        if self.offset:
            parts.append([1.0 if lam is None else float(lam)])
        return np.concatenate(parts)


def _sqrt_factor(M) -> np.ndarray:
    """``F`` with ``F'F = M`` for symmetric positive semidefinite ``M``."""
    ev, V = np.linalg.eigh(M)
    return np.sqrt(np.maximum(ev, 0.0))[:, None] * V.T


class _Shooting:
    """Evaluators of one transcribed problem.  Immutable after construction."""

    def __init__(self, model, spec, cons, x0, pattern, warmstart, eta):
        self.model = model
        self.spec = spec
        self.cons = cons
        self.x0 = x0
        self.pattern = pattern
        self.offset = warmstart is not None
        self.eta = float(eta)
        n, m, N, M = model.n, model.m, pattern.N, pattern.M
        self.layout = ShootingLayout(n, m, pattern, self.offset)
        self.lengths = np.asarray(pattern.lengths)
        self.starts = pattern.starts
        self.Lmax = int(self.lengths.max())
        # active[j, l]: step l of block j exists
        self.active = np.arange(self.Lmax)[None, :] < self.lengths[:, None]
        self.all_active = self.active.all(axis=0)
        self.w = np.zeros((N, m)) if warmstart is None else warmstart
        W = np.zeros((M, self.Lmax, m))
        blk, loc = pattern.block_of_step, np.arange(N) - self.starts[pattern.block_of_step]
        W[blk, loc] = self.w
        self.W = W
        self.step_blk, self.step_loc = blk, loc
        self.P_term = cons.terminal.ingredients.P
        self.pi = cons.terminal.pi
        self.FQ = _sqrt_factor(spec.Q)
        self.FR = _sqrt_factor(spec.R)
        self.FP = _sqrt_factor(spec.P)
        self._ineq_rows()

    # rows of the intra-block state box: (block, local step, coordinate, sign, bound)
    def _ineq_rows(self):
        lo, hi = self.cons.state.lower, self.cons.state.upper
        rows = []
        for j, L in enumerate(self.lengths):
            for l in range(1, L):
                for i in range(self.model.n):
                    if np.isfinite(hi[i]):
                        rows.append((j, l, i, 1.0, hi[i]))
                    if np.isfinite(lo[i]):
                        rows.append((j, l, i, -1.0, lo[i]))
        arr = np.array(rows, dtype=float).reshape(-1, 5)
        self.box_blk = arr[:, 0].astype(int)
        self.box_loc = arr[:, 1].astype(int)
        self.box_crd = arr[:, 2].astype(int)
        self.box_sgn = arr[:, 3]
        self.box_bnd = arr[:, 4]
        self.n_ineq = arr.shape[0] + 1

    # -------------------------------------------------------------- rollouts

    def _block_rollout(self, S0, U, lam):
        """Sub-rollouts of every block; ``S0`` is ``(B, M, n)``, ``U`` ``(B, M, m)``, ``lam`` ``(B, M)``.

        Returns states ``(B, M, Lmax+1, n)`` (frozen after each block's end)
        and inputs ``(B, M, Lmax, m)``.
        """
        B, M = S0.shape[:2]
        X = np.empty((B, M, self.Lmax + 1, self.model.n))
        X[:, :, 0] = S0
        if self.offset:
            Useq = U[:, :, None, :] + lam[:, :, None, None] * self.W[None]
        else:
            Useq = np.broadcast_to(U[:, :, None, :], (B, M, self.Lmax, self.model.m))
        f = self.model.transition
        for l in range(self.Lmax):
            xn = f(X[:, :, l], Useq[:, :, l])
            if self.all_active[l]:
                X[:, :, l + 1] = xn
            else:
                X[:, :, l + 1] = np.where(self.active[None, :, l, None], xn, X[:, :, l])
        if not np.all(np.isfinite(X)):
            raise RolloutOverflow(0, "non-finite state in a shooting sub-rollout")
        return X, Useq

    def _values(self, S, X, Useq, lam):
        """Objective, equalities and inequalities from one set of sub-rollouts (``B`` squeezed)."""
        xs = X[self.step_blk, self.step_loc]
        us = Useq[self.step_blk, self.step_loc]
        stages = quad_rows(self.spec.Q, xs) + quad_rows(self.spec.R, us)
        obj = fold_cost(stages, float(quad_rows(self.spec.P, S[-1])))
        if self.offset:
            obj = obj + self.eta * (lam - 1.0) ** 2
        ends = X[np.arange(self.pattern.M), self.lengths]
        eq = np.concatenate([S[0] - self.x0, (S[1:] - ends).reshape(-1)])
        box = self.box_sgn * X[self.box_blk, self.box_loc, self.box_crd] - self.box_sgn * self.box_bnd
        term = float(quad_rows(self.P_term, S[-1])) - self.pi
        return obj, eq, np.append(box, term)

    # -------------------------------------------------------------- evaluators

    def evaluate(self, z) -> Evaluation:
        S, U, lam = self.layout.split(z)
        lam_arr = np.full((1, self.pattern.M), 1.0 if lam is None else lam)
        X, Useq = self._block_rollout(S[None, :-1], U[None], lam_arr)
        obj, eq, ineq = self._values(S, X[0], Useq[0], lam)
        return Evaluation(obj, eq, ineq)

    def linearize(self, z, step_size: float = FD_STEP) -> Linearization:
        lay = self.layout
        S, U, lam = lay.split(z)
        n, m, M, nl = lay.n, lay.m, lay.M, lay.n_local
        local = np.hstack([S[:-1], U] + ([np.full((M, 1), lam)] if self.offset else []))
        h = fd_steps(local, step_size)
        # base point followed by +h / -h for every local coordinate
        pts = np.repeat(local[None], 1 + 2 * nl, axis=0)
        idx = np.arange(nl)
        pts[1 + 2 * idx, :, idx] += h.T
        pts[2 + 2 * idx, :, idx] -= h.T
        lam_b = pts[:, :, n + m] if self.offset else np.ones(pts.shape[:2])
        X, Useq = self._block_rollout(pts[:, :, :n], pts[:, :, n : n + m], lam_b)
        obj, eq, ineq = self._values(S, X[0], Useq[0], lam)
        # dX[j, l, i, p]: derivative of sub-rollout state wrt local variable p
        dX = (X[1::2] - X[2::2]) / (2.0 * h.T[:, :, None, None])
        dX = np.moveaxis(dX, 0, -1)
        cols = lay.local_cols()
        nv = lay.n_vars
        # equalities
        JE = np.zeros((n * (M + 1), nv))
        JE[np.arange(n), np.arange(n)] = 1.0
        ends = dX[np.arange(M), self.lengths]  # (M, n, nl)
        r = n + np.arange(M * n).reshape(M, n)
        JE[r[:, :, None], cols[:, None, :]] = -ends
        JE[r, r] = 1.0  # s_{j+1} columns
        # inequalities
        JI = np.zeros((self.n_ineq, nv))
        nb = self.box_blk.size
        JI[np.arange(nb)[:, None], cols[self.box_blk]] = (
            self.box_sgn[:, None] * dX[self.box_blk, self.box_loc, self.box_crd]
        )
        sM = S[-1]
        JI[-1, n * M : n * (M + 1)] = 2.0 * self.P_term @ sM
        # Gauss-Newton residuals
        res, Jr = self._residuals(S, X[0], Useq[0], lam, dX, cols)
        return Linearization(Evaluation(obj, eq, ineq), res, Jr, JE, JI)

    def _residuals(self, S, X, Useq, lam, dX, cols):
        lay = self.layout
        n, m, M = lay.n, lay.m, lay.M
        N = self.pattern.N
        blk, loc = self.step_blk, self.step_loc
        xs = X[blk, loc]
        us = Useq[blk, loc]
        nq, nr = self.FQ.shape[0], self.FR.shape[0]
        per = nq + nr
        n_res = N * per + self.FP.shape[0] + int(self.offset)
        res = np.empty(n_res)
        J = np.zeros((n_res, lay.n_vars))
        k = np.arange(N)
        rq = (k * per)[:, None] + np.arange(nq)
        rr = (k * per + nq)[:, None] + np.arange(nr)
        res[rq] = xs @ self.FQ.T
        res[rr] = us @ self.FR.T
        J[rq[:, :, None], cols[blk][:, None, :]] = np.einsum("ai,kil->kal", self.FQ, dX[blk, loc])
        ucols = lay.n_states + blk[:, None] * m + np.arange(m)
        J[rr[:, :, None], ucols[:, None, :]] = self.FR[None]
        if self.offset:
            J[rr, lay.lam_index] = self.w @ self.FR.T
        t0 = N * per
        rp = t0 + np.arange(self.FP.shape[0])
        res[rp] = self.FP @ S[-1]
        J[rp[:, None], n * M + np.arange(n)] = self.FP
        if self.offset:
            res[-1] = np.sqrt(self.eta) * (lam - 1.0)
            J[-1, lay.lam_index] = np.sqrt(self.eta)
        return res, J

    def inputs(self, z) -> np.ndarray:
        """Full-horizon input sequence encoded by ``z``."""
        _, U, lam = self.layout.split(z)
        if self.offset:
            return expand_offset(self.pattern, U, self.w, lam)
        return expand(self.pattern, U)

    def project(self, z) -> np.ndarray:
        """Replace the shooting nodes by the single-shooting rollout of the inputs."""
        S, U, lam = self.layout.split(z)
        traj = rollout(self.model, self.x0, self.inputs(z))
        nodes = traj.states[np.append(self.starts, self.pattern.N)]
        return self.layout.pack(nodes, U, lam)

    def initial_point(self, blocked=None, lam=1.0) -> np.ndarray:
        """Point with the given blocked inputs (zeros by default) and nodes from their rollout."""
        U = np.zeros((self.pattern.M, self.model.m)) if blocked is None else blocked
        z = self.layout.pack(np.zeros((self.pattern.M + 1, self.model.n)), U, lam)
        return self.project(z)

    def sparsity(self):
        """Declared Jacobian pattern of ``(eq; ineq; linear)`` as ``(rows, cols)``."""
        lay = self.layout
        n, M = lay.n, lay.M
        cols = lay.local_cols()
        w_nz = np.any(self.W != 0.0, axis=-1)  # (M, Lmax)
        rows_out, cols_out = [np.arange(n)], [np.arange(n)]
        for j in range(M):
            keep = cols[j] if not self.offset or w_nz[j, : self.lengths[j]].any() else cols[j][:-1]
            rr = n + j * n + np.arange(n)
            rows_out.append(np.repeat(rr, keep.size + 1))
            cols_out.append(np.column_stack([np.tile(keep, (n, 1)), n * (j + 1) + np.arange(n)]).reshape(-1))
        base = n * (M + 1)
        for r, (j, l) in enumerate(zip(self.box_blk, self.box_loc)):
            keep = cols[j]
            if self.offset and not w_nz[j, :l].any():
                keep = keep[:-1]
            rows_out.append(np.full(keep.size, base + r))
            cols_out.append(keep)
        rows_out.append(np.full(n, base + self.n_ineq - 1))
        cols_out.append(n * M + np.arange(n))
        if self.offset:
            lin = offset_bound_rows(self.pattern, self.w, self.cons.input.lower, self.cons.input.upper)
            rows_out.append(base + self.n_ineq + lin.rows)
            cols_out.append(lay.n_states + lin.cols)
        return np.concatenate(rows_out).astype(int), np.concatenate(cols_out).astype(int)


def _check_horizon(model, x0, N, pattern):
    if pattern.N != N:
        raise ParameterError(f"blocking pattern covers {pattern.N} steps, horizon is {N}")
    return as_state(model, x0)


def _build(model, spec, cons, x0, pattern, warmstart, eta, name) -> NlpProblem:
    core = _Shooting(model, spec, cons, x0, pattern, warmstart, eta)
    lay = core.layout
    lower = np.full(lay.n_vars, -np.inf)
    upper = np.full(lay.n_vars, np.inf)
    M, n, m = lay.M, lay.n, lay.m
    lower[: M * n] = np.tile(cons.state.lower, M)
    upper[: M * n] = np.tile(cons.state.upper, M)
    linear = None
    if warmstart is None:
        lower[lay.n_states : lay.n_states + M * m] = np.tile(cons.input.lower, M)
        upper[lay.n_states : lay.n_states + M * m] = np.tile(cons.input.upper, M)
    else:
        linear = offset_bound_rows(pattern, warmstart, cons.input.lower, cons.input.upper)
    problem = NlpProblem(
        n_vars=lay.n_vars,
        n_eq=n * (M + 1),
        n_ineq=core.n_ineq,
        lower=lower,
        upper=upper,
        evaluate=core.evaluate,
        linearize=core.linearize,
        linear=linear,
        project=core.project,
        sparsity=core.sparsity(),
        layout=lay,
        name=name,
        core=core,
    )
    return problem


def assemble_blocked(model: SystemModel, spec: CostSpec, cons: ConstraintSet, x0, N: int,
                     pattern: BlockingPattern) -> NlpProblem:
    """Move-blocked OCP over ``(s, ubar)`` with input box bounds on ``ubar``."""
    x0 = _check_horizon(model, x0, N, pattern)
    return _build(model, spec, cons, x0, pattern, None, 0.0, f"blocked(M={pattern.M})")


def assemble_standard(model, spec, cons, x0, N: int) -> NlpProblem:
    """Unblocked OCP, i.e. the blocked problem with ``N`` blocks of length one."""
    return assemble_blocked(model, spec, cons, x0, N, uniform_pattern(N, N))


def assemble_offset(model: SystemModel, spec: CostSpec, cons: ConstraintSet, x0, N: int,
                    pattern: BlockingPattern, warmstart, eta: float = 0.0) -> NlpProblem:
    """Offset-blocked OCP over ``(s, ubar, lam)``; inputs are ``expand(ubar) + lam*w``.

    The objective carries ``eta*(lam-1)^2``; input constraints are the
    linear offset rows.
    """
    x0 = _check_horizon(model, x0, N, pattern)
    if eta < 0:
        raise ParameterError("eta must be nonnegative")
    w = as_input_sequence(model, warmstart)
    if w.shape[0] != N:
        raise ContractViolation(f"warm-start must have {N} steps, got {w.shape[0]}")
    w = w.copy()
    w.flags.writeable = False
    return _build(model, spec, cons, x0, pattern, w, eta, f"offset(M={pattern.M})")


def problem_inputs(problem: NlpProblem, z) -> np.ndarray:
    return problem.core.inputs(z)


def initial_point(problem: NlpProblem, blocked=None, lam: float = 1.0) -> np.ndarray:
    return problem.core.initial_point(blocked, lam)


def jacobian_sparsity(problem: NlpProblem):
    """Triplet index pattern ``(rows, cols)`` over the stacked ``(eq; ineq; linear)`` rows."""
    return problem.sparsity


# ------------------------------------------------------------------ admissibility


@dataclass(frozen=True)
class AdmissibilityReport:
    feasible: bool
    state_violation: float
    input_violation: float
    terminal_margin: float


def evaluate_admissibility(model: SystemModel, cons: ConstraintSet, x0, useq,
                           tol: float = EPS_FEAS) -> AdmissibilityReport:
    """Rollout check: state box for ``k < N``, input box for all ``k``, ``x(N)`` in the terminal set."""
    traj = rollout(model, x0, useq)
    sv = float(np.max(cons.state.violation(traj.states[:-1]), initial=0.0))
    iv = float(np.max(cons.input.violation(traj.inputs), initial=0.0))
    margin = cons.terminal.level(traj.states[-1]) - cons.terminal.pi
    return AdmissibilityReport(bool(sv <= tol and iv <= tol and margin <= tol), sv, iv, margin)


# ------------------------------------------------------------------ grid oracle


@dataclass
class BruteForceResult:
    feasible: bool
    blocked: np.ndarray | None
    cost: float
    bound: float
    grid: np.ndarray = field(repr=False)


def brute_force_solve(model: SystemModel, spec: CostSpec, cons: ConstraintSet, x0, N: int,
                      pattern: BlockingPattern, grid_points_per_dim: int) -> BruteForceResult:
    """Exhaustive search of blocked sequences on a uniform grid over the input box.

    ``bound`` is the largest cost change between the best admissible grid
    point and its grid neighbours, a sampled estimate of how much the cost
    can vary within one grid cell.
    """
    x0 = _check_horizon(model, x0, N, pattern)
    g = int(grid_points_per_dim)
    dims = model.m * pattern.M
    if dims > 4 or g > 21 or g < 2:
        raise OracleGuardError(f"oracle needs m*M <= 4 and 2 <= points <= 21, got m*M={dims}, points={g}")
    axes = [np.linspace(lo, hi, g) for lo, hi in zip(cons.input.lower, cons.input.upper)]
    idx = np.stack(np.meshgrid(*[np.arange(g)] * dims, indexing="ij"), axis=-1).reshape(-1, dims)
    ubar = np.stack([axes[c % model.m][idx[:, c]] for c in range(dims)], axis=-1)
    U = ubar.reshape(-1, pattern.M, model.m)[:, pattern.block_of_step]  # (G, N, m)
    x = np.broadcast_to(x0, (U.shape[0], model.n)).copy()
    cost = np.zeros(U.shape[0])
    bad = np.zeros(U.shape[0], dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(N):
            bad |= cons.state.violation(x) > EPS_FEAS
            cost += quad_rows(spec.Q, x) + quad_rows(spec.R, U[:, k])
            x = model.transition(x, U[:, k])
        cost += quad_rows(spec.P, x)
    level = quad_rows(cons.terminal.ingredients.P, x)
    bad |= ~np.isfinite(cost) | (level - cons.terminal.pi > EPS_FEAS)
    if np.all(bad):
        return BruteForceResult(False, None, np.inf, np.inf, axes[0])
    cost_ok = np.where(bad, np.inf, cost)
    best = int(np.argmin(cost_ok))
    # neighbours differ by one grid index in one coordinate
    shape = (g,) * dims
    flat = cost.reshape(shape)
    bi = np.unravel_index(best, shape)
    diffs = []
    for c in range(dims):
        for s in (-1, 1):
            nb = list(bi)
            nb[c] += s
            if 0 <= nb[c] < g and np.isfinite(flat[tuple(nb)]):
                diffs.append(abs(flat[tuple(nb)] - cost[best]))
    bound = max(diffs) if diffs else 0.0
    return BruteForceResult(True, ubar[best].reshape(pattern.M, model.m), float(cost[best]), float(bound), axes[0])
