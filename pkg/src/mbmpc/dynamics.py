"""Discrete-time system models, rollouts and finite-difference linearization.

Transition maps operate on stacked arrays: ``transition(x, u)`` receives
``x`` of shape ``(..., n)`` and ``u`` of shape ``(..., m)`` and returns an
array of shape ``(..., n)``.  Batched evaluation is what keeps the shooting
Jacobians cheap, so every model in this package supports it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from mbmpc.errors import ContractViolation, ParameterError, RolloutOverflow

Transition = Callable[[np.ndarray, np.ndarray], np.ndarray]

FD_STEP = 1e-6


@dataclass(frozen=True)
class SystemModel:
    """Nonlinear discrete-time system ``x(k+1) = f(x(k), u(k))``.

    Parameters
    ----------
    n, m : int
        State and input dimensions.
    transition : callable
        Batched transition map, see module docstring.
    steady_state : tuple of ndarray
        Pair ``(x_s, u_s)`` with ``f(x_s, u_s) == x_s`` exactly.
    """

    n: int
    m: int
    transition: Transition
    steady_state: tuple = field(default=None)
    name: str = "model"

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ParameterError(f"dimensions must be positive, got n={self.n}, m={self.m}")
        if self.steady_state is None:
            object.__setattr__(self, "steady_state", (np.zeros(self.n), np.zeros(self.m)))
        xs, us = (np.asarray(v, dtype=float) for v in self.steady_state)
        if xs.shape != (self.n,) or us.shape != (self.m,):
            raise ContractViolation("steady state has wrong dimensions")
        xs.flags.writeable = False
        us.flags.writeable = False
        object.__setattr__(self, "steady_state", (xs, us))
        x_next = np.asarray(self.transition(xs, us), dtype=float)
        if x_next.shape != (self.n,):
            raise ContractViolation(f"transition returned shape {x_next.shape}, expected ({self.n},)")
        if not np.array_equal(x_next, xs):
            raise ParameterError("declared steady state is not a fixed point of the transition")


@dataclass(frozen=True)
class OpenLoopTrajectory:
    states: np.ndarray  # (N+1, n)
    inputs: np.ndarray  # (N, m)

    @property
    def horizon(self) -> int:
        return self.inputs.shape[0]


def _as_vector(v, size, what):
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape != (size,):
        raise ContractViolation(f"{what} must have shape ({size},), got {arr.shape}")
    return arr


def as_state(model: SystemModel, x) -> np.ndarray:
    return _as_vector(x, model.n, "state")


def as_input(model: SystemModel, u) -> np.ndarray:
    return _as_vector(u, model.m, "input")


def as_input_sequence(model: SystemModel, useq) -> np.ndarray:
    """Coerce a sequence of inputs to an ``(N, m)`` array."""
    arr = np.asarray(useq, dtype=float)
    if arr.ndim == 1 and model.m == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[1] != model.m:
        raise ContractViolation(f"input sequence must have shape (N, {model.m}), got {arr.shape}")
    if arr.shape[0] < 1:
        raise ContractViolation("input sequence must be non-empty")
    return arr


def step(model: SystemModel, x, u) -> np.ndarray:
    """One transition ``f(x, u)`` with dimension checks."""
    return np.asarray(model.transition(as_state(model, x), as_input(model, u)), dtype=float)


def rollout(model: SystemModel, x0, useq) -> OpenLoopTrajectory:
    """Iterate the transition map over ``useq`` starting at ``x0``.

    Raises
    ------
    RolloutOverflow
        If a state becomes non-finite; ``index`` names the offending step.
    """
    x = as_state(model, x0)
    inputs = as_input_sequence(model, useq)
    states = np.empty((inputs.shape[0] + 1, model.n))
    states[0] = x
    f = model.transition
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(inputs.shape[0]):
            x = f(x, inputs[k])
            states[k + 1] = x
    finite = np.isfinite(states).all(axis=1)
    if not finite.all():
        raise RolloutOverflow(int(np.argmin(finite)))
    return OpenLoopTrajectory(states, inputs)


def fd_steps(point: np.ndarray, base: float = FD_STEP) -> np.ndarray:
    """Per-coordinate central-difference widths ``max(base, base*|z_i|)``."""
    return np.maximum(base, base * np.abs(point))


def linearize(model: SystemModel, x, u, step_size: float = FD_STEP):
    """Central-difference Jacobians ``(A, B)`` of the transition at ``(x, u)``.

    All ``2(n+m)`` perturbed points are evaluated in one batched call.
    ``step_size`` sets the base stencil width; the default is what the
    rest of the package uses.
    """
    x = as_state(model, x)
    u = as_input(model, u)
    n, m = model.n, model.m
    z = np.concatenate([x, u])
    h = fd_steps(z, step_size)
    pert = np.repeat(z[None, :], 2 * (n + m), axis=0)
    idx = np.arange(n + m)
    pert[2 * idx, idx] += h
    pert[2 * idx + 1, idx] -= h
    vals = np.asarray(model.transition(pert[:, :n], pert[:, n:]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise RolloutOverflow(0, "non-finite transition value during linearization")
    jac = ((vals[0::2] - vals[1::2]) / (2.0 * h)[:, None]).T
    return jac[:, :n], jac[:, n:]


def vdp_model(ts: float = 2.0**-5) -> SystemModel:
    """Euler-discretized Van der Pol oscillator with an additive input.

    ``x1+ = x1 + ts*x2``,
    ``x2+ = x2 + ts*u - ts*x1 + ts*x2*(1 - x1**2)``.
    """
    if not ts > 0 or not np.isfinite(ts):
        raise ParameterError(f"step size must be positive, got {ts}")
    ts = float(ts)

    def transition(x, u):
        x1 = x[..., 0]
        x2 = x[..., 1]
        lead = x.shape[:-1] if x.shape[:-1] == u.shape[:-1] else np.broadcast_shapes(x.shape[:-1], u.shape[:-1])
        out = np.empty(lead + (2,))
        out[..., 0] = x1 + ts * x2
        out[..., 1] = x2 + ts * u[..., 0] - ts * x1 + ts * x2 * (1.0 - x1**2)
        return out

    return SystemModel(2, 1, transition, name=f"vdp(ts={ts!r})")


def linear_model(A, B) -> SystemModel:
    """``x+ = A x + B u``; handy for tests and for checking linear theory."""
    A = np.array(A, dtype=float, ndmin=2)
    B = np.array(B, dtype=float, ndmin=2)
    if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
        raise ContractViolation("A must be square and B must have as many rows as A")

    def transition(x, u):
        return x @ A.T + u @ B.T

    return SystemModel(A.shape[0], B.shape[1], transition, name="linear")
