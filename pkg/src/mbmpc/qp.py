"""Dense convex QP solver: equality elimination plus a dual active-set method.

Solves::

    minimize    0.5 x'Hx + g'x
    subject to  A_eq x  = b_eq
                A_in x <= b_in

Equalities are eliminated with a QR null-space basis; the remaining
inequality problem is handled by the dual active-set method of Goldfarb
and Idnani, which starts at the unconstrained minimizer and adds one
violated constraint at a time.  The Schur complement of the active set is
grown and shrunk in place, so each pass costs O(a^2 + a*n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"


@dataclass
class QpResult:
    x: np.ndarray | None
    status: str
    mult_eq: np.ndarray
    mult_in: np.ndarray
    iterations: int
    active: list

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _null_space(A, b, tol=1e-10):
    """Particular solution, null-space basis and the factors for multipliers."""
    n = A.shape[1]
    Qf, Rf = np.linalg.qr(A.T, mode="complete")
    k = A.shape[0]
    diag = np.abs(np.diag(Rf[:k, :k])) if k else np.zeros(0)
    if k and diag.min() <= tol * max(1.0, diag.max()):
        # rank deficient: fall back to SVD
        U, s, Vt = np.linalg.svd(A)
        rank = int(np.sum(s > tol * max(1.0, s[0])))
        x_p = Vt[:rank].T @ ((U[:, :rank].T @ b) / s[:rank])
        if np.linalg.norm(A @ x_p - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
            return None
        return x_p, Vt[rank:].T, None
    R1 = Rf[:k, :k]
    Q1 = Qf[:, :k]
    x_p = Q1 @ sla.solve_triangular(R1, b, trans="T") if k else np.zeros(n)
    return x_p, Qf[:, k:], (Q1, R1)


def _dual_active_set(G, h, C, e, max_iter):
    """Goldfarb-Idnani for ``min 0.5 y'Gy + h'y  s.t.  C y <= e`` with G positive definite."""
    dim = G.shape[0]
    rows = C.shape[0]
    try:
        chol = sla.cho_factor(G, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        G = G + 1e-10 * max(1.0, np.trace(G) / max(dim, 1)) * np.eye(dim)
        chol = sla.cho_factor(G, lower=True, check_finite=False)
    y = -sla.cho_solve(chol, h, check_finite=False)
    u = np.zeros(rows)
    if rows == 0:
        return y, u, OPTIMAL, 0, []

    active: list[int] = []
    cols = np.empty((dim, 0))  # G^-1 c_j for active j
    S = np.empty((0, 0))  # C_A G^-1 C_A'
    cache: dict[int, np.ndarray] = {}
    row_norm = np.linalg.norm(C, axis=1)

    def ginv_row(p):
        v = cache.get(p)
        if v is None:
            v = sla.cho_solve(chol, C[p], check_finite=False)
            cache[p] = v
        return v

    it = 0
    while True:
        viol = C @ y - e
        tol = 1e-11 * (1.0 + np.abs(e) + row_norm * np.linalg.norm(y, np.inf))
        viol[active] = -np.inf
        p = int(np.argmax(viol - tol))
        if viol[p] <= tol[p]:
            if active and np.max(np.abs(C[active] @ y - e[active]) - 1e3 * tol[active]) > 0:
                # active rows drifted: numerically inconsistent constraints
                return y, u, INFEASIBLE, it, active
            return y, u, OPTIMAL, it, active
        up = 0.0
        while True:
            it += 1
            if it > max_iter:
                return y, u, MAX_ITER, it, active
            gp = ginv_row(p)
            if active:
                rhs = C[active] @ gp
                try:
                    r = np.linalg.solve(S, rhs)
                except np.linalg.LinAlgError:
                    r = np.linalg.lstsq(S, rhs, rcond=None)[0]
                z = gp - cols @ r
            else:
                r = np.zeros(0)
                z = gp
            cz = float(C[p] @ z)
            cg = float(C[p] @ gp)
            # cz/cg is the squared sine between c_p and the active rows (G^-1 metric)
            t2 = (float(C[p] @ y) - e[p]) / cz if cz > 1e-11 * cg else np.inf
            t1, k = np.inf, -1
            if r.size:
                uA = u[active]
                pos = r > 1e-14 * max(1.0, np.abs(r).max())
                if np.any(pos):
                    ratios = np.full(r.shape, np.inf)
                    ratios[pos] = uA[pos] / r[pos]
                    k = int(np.argmin(ratios))
                    t1 = float(ratios[k])
            if not np.isfinite(t1) and not np.isfinite(t2):
                return y, u, INFEASIBLE, it, active
            t = min(t1, t2)
            if np.isfinite(t2):
                y = y - t * z
            if r.size:
                u[active] = u[active] - t * r
            up += t
            u[p] = up
            if t2 <= t1:
                # add p to the active set
                gcol = gp
                s_new = C[active] @ gcol if active else np.zeros(0)
                S = np.block([[S, s_new[:, None]], [s_new[None, :], np.array([[cg]])]])
                cols = np.column_stack([cols, gcol])
                active.append(p)
                break
            # drop the blocking constraint and retry p
            u[active[k]] = 0.0
            del active[k]
            S = np.delete(np.delete(S, k, axis=0), k, axis=1)
            cols = np.delete(cols, k, axis=1)


def solve_qp(H, g, A_eq=None, b_eq=None, A_in=None, b_in=None, max_iter=None) -> QpResult:
    """Solve a strictly convex QP.  ``H`` must be positive definite on the null space of ``A_eq``."""
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    A_in = np.zeros((0, n)) if A_in is None else np.asarray(A_in, dtype=float).reshape(-1, n)
    b_in = np.zeros(0) if b_in is None else np.asarray(b_in, dtype=float).reshape(-1)
    if max_iter is None:
        max_iter = 10 * (n + A_in.shape[0]) + 50

    ns = _null_space(A_eq, b_eq)
    if ns is None:
        return QpResult(None, INFEASIBLE, np.zeros(A_eq.shape[0]), np.zeros(A_in.shape[0]), 0, [])
    x_p, Z, factors = ns
    G = Z.T @ H @ Z
    G = 0.5 * (G + G.T)
    h = Z.T @ (H @ x_p + g)
    C = A_in @ Z
    e = b_in - A_in @ x_p
    y, u, status, iters, active = _dual_active_set(G, h, C, e, max_iter)
    x = x_p + Z @ y
    mult_eq = np.zeros(A_eq.shape[0])
    if A_eq.shape[0]:
        resid = -(H @ x + g + A_in.T @ u)
        if factors is not None:
            Q1, R1 = factors
            mult_eq = sla.solve_triangular(R1, Q1.T @ resid)
        else:
            mult_eq = np.linalg.lstsq(A_eq.T, resid, rcond=None)[0]
    if status != OPTIMAL:
        return QpResult(x if status == MAX_ITER else None, status, mult_eq, u, iters, active)
    return QpResult(x, status, mult_eq, u, iters, active)
