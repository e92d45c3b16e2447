"""Quadratic stage, terminal and horizon costs."""

from __future__ import annotations

from dataclasses import InitVar, dataclass

import numpy as np

from mbmpc.dynamics import SystemModel, rollout
from mbmpc.errors import ContractViolation, ParameterError

PD_TOL = 1e-12


def _sym(M, size, what):
    M = np.array(M, dtype=float, ndmin=2)
    if M.shape == (1, 1) and size > 1:
        raise ContractViolation(f"{what} must be {size}x{size}")
    if M.shape != (size, size):
        raise ContractViolation(f"{what} must be {size}x{size}, got {M.shape}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise ParameterError(f"{what} must be symmetric")
    M = 0.5 * (M + M.T)
    M.flags.writeable = False
    return M


def min_eigenvalue(M) -> float:
    return float(np.linalg.eigvalsh(M)[0])


@dataclass(frozen=True)
class CostSpec:
    """Weights of ``l(x,u) = x'Qx + u'Ru`` and ``l_f(x) = x'Px``.

    ``R`` may be given as a scalar.  Positive definiteness is checked at
    construction unless ``check=False`` (used to build deliberately bad
    specs for :func:`verify_comparison_bounds`).
    """

    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check):
        Q = np.array(self.Q, dtype=float, ndmin=2)
        n = Q.shape[0]
        R = np.array(self.R, dtype=float, ndmin=2)
        object.__setattr__(self, "Q", _sym(Q, n, "Q"))
        object.__setattr__(self, "R", _sym(R, R.shape[0], "R"))
        object.__setattr__(self, "P", _sym(self.P, n, "P"))
        if check:
            for name in ("Q", "R", "P"):
                if min_eigenvalue(getattr(self, name)) <= PD_TOL:
                    raise ParameterError(f"{name} is not positive definite")

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]


def quad_rows(M, X) -> np.ndarray:
    """``x'Mx`` for every row of ``X`` (last axis is the coordinate).

    The products are summed in a fixed order per row, so a row gives the
    same bits whether it is evaluated alone or inside a batch.
    """
    X = np.asarray(X, dtype=float)
    t = X[..., :, None] * X[..., None, :] * M
    return t.reshape(t.shape[:-2] + (-1,)).sum(axis=-1)


def fold_cost(stages, terminal: float) -> float:
    """Sum ``stages`` onto ``terminal`` from the back, the order ``total_cost`` uses."""
    acc = float(terminal)
    for c in stages[::-1]:
        acc = float(c) + acc
    return acc


def _quad(M, v) -> float:
    return float(quad_rows(M, v))


def stage_cost(spec: CostSpec, x, u) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.shape != (spec.n,) or u.shape != (spec.m,):
        raise ContractViolation("stage_cost: dimension mismatch")
    return _quad(spec.Q, x) + _quad(spec.R, u)


def terminal_cost(spec: CostSpec, xN) -> float:
    xN = np.asarray(xN, dtype=float).reshape(-1)
    if xN.shape != (spec.n,):
        raise ContractViolation("terminal_cost: dimension mismatch")
    return _quad(spec.P, xN)


def _check_pair(model: SystemModel, spec: CostSpec):
    if model.n != spec.n or model.m != spec.m:
        raise ContractViolation("cost weights do not match model dimensions")


def total_cost(model: SystemModel, spec: CostSpec, x0, useq) -> float:
    """Finite-horizon cost of ``useq`` applied from ``x0``.

    The sum is accumulated from the terminal cost backwards so that
    ``total_cost(x0, u) == stage_cost(x0, u[0]) + total_cost(f(x0, u[0]), u[1:])``
    holds bit-exactly.
    """
    _check_pair(model, spec)
    traj = rollout(model, x0, useq)
    stages = quad_rows(spec.Q, traj.states[:-1]) + quad_rows(spec.R, traj.inputs)
    return fold_cost(stages, _quad(spec.P, traj.states[-1]))


def cost_trajectory(model: SystemModel, spec: CostSpec, x0, useq):
    """Rollout plus per-step stage costs and terminal cost (for logging)."""
    _check_pair(model, spec)
    traj = rollout(model, x0, useq)
    stages = quad_rows(spec.Q, traj.states[:-1]) + quad_rows(spec.R, traj.inputs)
    return traj, stages, terminal_cost(spec, traj.states[-1])


@dataclass(frozen=True)
class ComparisonBoundsReport:
    min_eig_Q: float
    min_eig_R: float
    min_eig_P: float

    @property
    def passed(self) -> bool:
        return min(self.min_eig_Q, self.min_eig_R, self.min_eig_P) > PD_TOL


def verify_comparison_bounds(spec: CostSpec) -> ComparisonBoundsReport:
    """Smallest eigenvalues of the weights.

    All three strictly positive means ``l(x,u) >= c*|(x,u)|^2`` and
    ``l_f(x) <= C*|x|^2`` with explicit constants, i.e. the K-infinity
    comparison functions exist.
    """
    return ComparisonBoundsReport(
        min_eigenvalue(spec.Q), min_eigenvalue(spec.R), min_eigenvalue(spec.P)
    )
