"""Box constraints and the constraint set used by the optimal control problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from mbmpc.errors import ContractViolation, ParameterError

if TYPE_CHECKING:
    from mbmpc.terminal import TerminalSet


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float, ndmin=1)
        hi = np.array(self.upper, dtype=float, ndmin=1)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ContractViolation("box bounds must be 1-D arrays of equal length")
        if np.any(lo > hi) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ParameterError("box is empty")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def symmetric(cls, bound, size):
        b = np.broadcast_to(np.asarray(bound, dtype=float), (size,))
        return cls(-b, b)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def violation(self, points) -> np.ndarray:
        """Largest bound violation of each point (0 when inside); last axis is the coordinate."""
        p = np.asarray(points, dtype=float)
        excess = np.maximum(p - self.upper, self.lower - p)
        return np.maximum(excess.max(axis=-1), 0.0)

    def contains(self, point) -> bool:
        return bool(self.violation(point) <= 0.0)

    def scaled(self, factor: float) -> "Box":
        return Box(self.lower * factor, self.upper * factor)


@dataclass(frozen=True)
class ConstraintSet:
    """State box, compact input box and terminal set."""

    state: Box
    input: Box
    terminal: "TerminalSet"

    def __post_init__(self):
        if not self.input.is_finite:
            raise ParameterError("the input box must be compact (finite bounds)")
        if not self.state.contains(np.zeros(self.state.dim)):
            raise ParameterError("state box must contain the origin")
        if not self.input.contains(np.zeros(self.input.dim)):
            raise ParameterError("input box must contain the origin")
