"""Terminal ingredients: Riccati weight, LQR gain, level set and certificates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from mbmpc.constraints import Box
from mbmpc.dynamics import SystemModel, as_state, linearize
from mbmpc.errors import (
    ContractViolation,
    DesignFailure,
    NoConvergence,
    NotStabilizable,
    ParameterError,
    TerminalMembershipError,
)
from mbmpc.objective import CostSpec

MEMBERSHIP_SLACK = 1e-12
CLF_SLACK = 1e-9
RICCATI_RESIDUAL_TOL = 1e-8


def _mat(M):
    return np.array(M, dtype=float, ndmin=2)


def _riccati_rhs(P, A, B, Q, R, rho):
    PA = P @ A
    BtPA = B.T @ PA
    inner = rho * R + B.T @ P @ B
    return A.T @ PA - BtPA.T @ np.linalg.solve(inner, BtPA) + rho * Q


def riccati_residual(P, A, B, Q, R, rho=1.0) -> float:
    """Frobenius norm of ``rhs(P) - P`` for the scaled Riccati equation."""
    A, B, Q, R, P = map(_mat, (A, B, Q, R, P))
    return float(np.linalg.norm(_riccati_rhs(P, A, B, Q, R, rho) - P))


def lqr_gain(A, B, P, R, rho=1.0) -> np.ndarray:
    """``K = (rho R + B'PB)^-1 B'PA``."""
    A, B, P, R = map(_mat, (A, B, P, R))
    inner = rho * R + B.T @ P @ B
    try:
        return np.linalg.solve(inner, B.T @ P @ A)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("singular matrix in LQR gain") from exc


def spectral_radius(M) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(_mat(M)))))


def solve_dare(A, B, Q, R, rho=1.0, max_iter=100_000, tol=1e-12) -> np.ndarray:
    """Solve ``P = A'PA - A'PB (rho R + B'PB)^-1 B'PA + rho Q``.

    Plain fixed-point iteration of the Riccati recursion started at
    ``rho*Q``.  Stops when successive iterates differ by at most ``tol``
    in Frobenius norm.
    """
    A, B, Q, R = map(_mat, (A, B, Q, R))
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or Q.shape != (n, n) or R.shape != (B.shape[1],) * 2:
        raise ContractViolation("inconsistent DARE dimensions")
    if rho < 1:
        raise ParameterError(f"rho must be >= 1, got {rho}")
    P = rho * Q
    for _ in range(int(max_iter)):
        P_next = _riccati_rhs(P, A, B, Q, R, rho)
        P_next = 0.5 * (P_next + P_next.T)
        if not np.all(np.isfinite(P_next)):
            break
        diff = np.linalg.norm(P_next - P)
        P = P_next
        if diff <= tol:
            break
    else:
        raise NoConvergence(f"Riccati iteration did not converge in {max_iter} iterations")
    if not np.all(np.isfinite(P)):
        raise NotStabilizable("Riccati iteration diverged")
    K = lqr_gain(A, B, P, R, rho)
    if spectral_radius(A - B @ K) >= 1.0:
        raise NotStabilizable("closed-loop spectral radius of A - BK is not below one")
    if riccati_residual(P, A, B, Q, R, rho) > RICCATI_RESIDUAL_TOL:
        raise NoConvergence("Riccati residual above tolerance")
    return P


@dataclass(frozen=True)
class TerminalIngredients:
    P: np.ndarray
    K: np.ndarray
    pi: float
    rho: float

    def __post_init__(self):
        P, K = _mat(self.P), _mat(self.K)
        if P.shape[0] != P.shape[1] or K.shape[1] != P.shape[0]:
            raise ContractViolation("P must be n x n and K must be m x n")
        if not self.pi > 0:
            raise ParameterError(f"terminal level must be positive, got {self.pi}")
        P.flags.writeable = False
        K.flags.writeable = False
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "pi", float(self.pi))
        object.__setattr__(self, "rho", float(self.rho))

    def with_pi(self, pi: float) -> "TerminalIngredients":
        return TerminalIngredients(self.P, self.K, pi, self.rho)


@dataclass(frozen=True)
class TerminalSet:
    """Sublevel set ``{x : x'Px <= pi}`` of the terminal cost."""

    ingredients: TerminalIngredients

    @property
    def pi(self) -> float:
        return self.ingredients.pi

    def level(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.ingredients.P @ x)

    def contains(self, x) -> bool:
        return self.level(x) <= self.pi + MEMBERSHIP_SLACK


def design_terminal(model: SystemModel, Q, R, rho: float, pi: float) -> TerminalIngredients:
    """Linearize at the steady state, solve the DARE and build the ingredients."""
    xs, us = model.steady_state
    A, B = linearize(model, xs, us)
    P = solve_dare(A, B, Q, R, rho)
    K = lqr_gain(A, B, P, R, rho)
    return TerminalIngredients(P, K, pi, rho)


def local_control(ing: TerminalIngredients, x) -> np.ndarray:
    return -(ing.K @ np.asarray(x, dtype=float))


def local_warmstart(model: SystemModel, ing: TerminalIngredients, x, N: int) -> np.ndarray:
    """Apply ``u = -Kx`` along the closed local rollout for ``N`` steps."""
    x = as_state(model, x)
    if N < 1:
        raise ContractViolation("horizon must be positive")
    if not TerminalSet(ing).contains(x):
        raise TerminalMembershipError(f"state {x} is outside the terminal set")
    K = ing.K
    f = model.transition
    out = np.empty((N, model.m))
    for k in range(N):
        u = -(K @ x)
        out[k] = u
        x = f(x, u)
    return out


# ---------------------------------------------------------------- certificates


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_margin: float  # > 0 means violated by that amount
    witness: np.ndarray | None = None


@dataclass
class TerminalCertificate:
    pi: float
    rho: float
    samples: int
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name) -> CheckResult:
        return next(c for c in self.checks if c.name == name)

    def to_text(self) -> str:
        lines = [
            f"pi: {self.pi!r}",
            f"rho: {self.rho!r}",
            f"samples: {self.samples}",
            f"passed: {str(self.passed).lower()}",
        ]
        for c in self.checks:
            lines.append(f"check.{c.name}.passed: {str(c.passed).lower()}")
            lines.append(f"check.{c.name}.worst_margin: {c.worst_margin!r}")
            if c.witness is not None:
                lines.append(f"check.{c.name}.witness: " + ", ".join(repr(float(v)) for v in c.witness))
        return "\n".join(lines) + "\n"


def _sphere(u: np.ndarray, n: int) -> np.ndarray:
    """Map points of the unit cube ``[0,1)^k`` to unit-sphere directions in R^n."""
    if n == 1:
        return np.where(u[:, :1] < 0.5, -1.0, 1.0)
    if n == 2:
        ang = 2.0 * np.pi * u[:, 0]
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    g = ndtri(np.clip(u[:, :n], 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def level_set_samples(P, pi: float, count: int) -> np.ndarray:
    """Deterministic Halton points on the boundary and in the interior of ``x'Px <= pi``."""
    P = _mat(P)
    n = P.shape[0]
    n_bnd = count // 2
    n_int = count - n_bnd
    dim = n + 1
    halton = qmc.Halton(d=dim, scramble=False)
    halton.fast_forward(1)  # first Halton point is the cube corner
    u = halton.random(max(n_bnd, n_int))
    # the radius coordinate is the last Halton dimension
    dirs = _sphere(u, n)
    radius = u[:, n] ** (1.0 / n)
    y = np.concatenate([dirs[:n_bnd], dirs[:n_int] * radius[:n_int, None]], axis=0)
    L = np.linalg.cholesky(P)
    # x = sqrt(pi) L^-T y  gives  x'Px = pi |y|^2
    return np.sqrt(pi) * np.linalg.solve(L.T, y.T).T


def _ellipsoid_max(P, pi, c):
    """Maximum of ``c'x`` over ``x'Px <= pi`` and the maximizer."""
    Pinv_c = np.linalg.solve(P, c)
    s = float(np.sqrt(c @ Pinv_c))
    if s == 0.0:
        return 0.0, np.zeros_like(c)
    return np.sqrt(pi) * s, np.sqrt(pi) * Pinv_c / s


def validate_terminal_set(
    model: SystemModel,
    spec: CostSpec,
    ing: TerminalIngredients,
    samples: int = 10_000,
    state_box: Box | None = None,
    input_box: Box | None = None,
) -> TerminalCertificate:
    """Sampling certificate for the terminal set.

    Checks invariance, CLF decrease, input admissibility of the local law
    and containment of the level set in the state box.  The two box
    checks are also evaluated in closed form over the ellipsoid (the
    local law is linear), so they are exact rather than sampled.
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    n = model.n
    P, K, pi = ing.P, ing.K, ing.pi
    X = level_set_samples(P, pi, samples)
    U = -X @ K.T
    Xn = np.asarray(model.transition(X, U), dtype=float)
    lf = np.einsum("si,ij,sj->s", X, P, X)
    lf_next = np.einsum("si,ij,sj->s", Xn, P, Xn)
    stage = np.einsum("si,ij,sj->s", X, spec.Q, X) + np.einsum("si,ij,sj->s", U, spec.R, U)

    cert = TerminalCertificate(pi=pi, rho=ing.rho, samples=samples)

    inv = np.where(np.isfinite(lf_next), lf_next - pi, np.inf)
    k = int(np.argmax(inv))
    cert.checks.append(CheckResult("invariance", bool(inv[k] <= MEMBERSHIP_SLACK), float(inv[k]), X[k]))

    clf = np.where(np.isfinite(lf_next), lf_next - lf + stage, np.inf)
    k = int(np.argmax(clf))
    cert.checks.append(CheckResult("clf_decrease", bool(clf[k] <= CLF_SLACK), float(clf[k]), X[k]))

    for name, box, rows, values in (
        ("input_admissible", input_box, -K, U),
        ("state_admissible", state_box, np.eye(n), X),
    ):
        if box is None:
            cert.checks.append(CheckResult(name, True, -np.inf, None))
            continue
        excess = np.maximum(values - box.upper, box.lower - values).max(axis=1)
        k = int(np.argmax(excess))
        worst, witness = float(excess[k]), X[k]
        for i, row in enumerate(rows):
            # closed form: c'x ranges over [-s, s] on the ellipsoid
            s, xstar = _ellipsoid_max(P, pi, row)
            for margin, w in ((s - box.upper[i], xstar), (box.lower[i] + s, -xstar)):
                if margin > worst:
                    worst, witness = float(margin), w
        cert.checks.append(CheckResult(name, bool(worst <= MEMBERSHIP_SLACK), worst, witness))
    return cert


@dataclass(frozen=True)
class PiCalibration:
    pi: float  # largest level found to pass
    fail_bound: float  # smallest level found to fail (inf if none)
    evaluations: int


def calibrate_pi(
    model: SystemModel,
    spec: CostSpec,
    P,
    K,
    rho: float,
    state_box: Box | None = None,
    input_box: Box | None = None,
    tolerance: float = 1e-4,
    samples: int = 10_000,
    start: float = 1.0,
) -> PiCalibration:
    """Bisection for the largest level ``pi`` whose certificate passes."""
    if not tolerance > 0:
        raise ParameterError("tolerance must be positive")
    evals = 0

    def ok(pi):
        nonlocal evals
        evals += 1
        ing = TerminalIngredients(P, K, pi, rho)
        return validate_terminal_set(model, spec, ing, samples, state_box, input_box).passed

    lo, hi = 0.0, float(start)
    if ok(hi):
        lo = hi
        hi = 2 * hi
        while ok(hi):
            lo = hi
            hi *= 2
            if hi > 1e12:
                return PiCalibration(lo, np.inf, evals)
    else:
        while not ok(hi / 2):
            hi /= 2
            if hi < 1e-12:
                raise DesignFailure("no positive terminal level passes the certificate")
        lo = hi / 2
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return PiCalibration(lo, hi, evals)
