"""Move-blocking patterns, expansion and the offset parameterization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mbmpc.errors import ContractViolation, ParameterError


@dataclass(frozen=True)
class BlockingPattern:
    """Consecutive input blocks of the given lengths covering the horizon."""

    lengths: tuple

    def __post_init__(self):
        lengths = tuple(int(v) for v in self.lengths)
        if not lengths or any(v < 1 for v in lengths):
            raise ParameterError(f"block lengths must be positive, got {lengths}")
        object.__setattr__(self, "lengths", lengths)

    @property
    def N(self) -> int:
        return sum(self.lengths)

    @property
    def M(self) -> int:
        return len(self.lengths)

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.lengths)[:-1]]).astype(int)

    @property
    def block_of_step(self) -> np.ndarray:
        """Block index of every horizon step."""
        return np.repeat(np.arange(self.M), self.lengths)

    def __str__(self):
        return ",".join(map(str, self.lengths))


def uniform_pattern(N: int, M: int) -> BlockingPattern:
    """Blocks as equal as possible; the first ``N mod M`` blocks are one longer."""
    if not 1 <= M <= N:
        raise ParameterError(f"need 1 <= M <= N, got N={N}, M={M}")
    q, r = divmod(N, M)
    return BlockingPattern(tuple(q + 1 if j < r else q for j in range(M)))


def parse_pattern(text: str, N: int) -> BlockingPattern:
    """Parse ``"uniform: M"`` or an explicit comma list of block lengths."""
    text = text.strip()
    if text.startswith("uniform"):
        _, _, rest = text.partition(":")
        return uniform_pattern(N, int(rest))
    pattern = BlockingPattern(tuple(int(v) for v in text.replace(" ", "").split(",") if v))
    if pattern.N != N:
        raise ParameterError(f"block lengths sum to {pattern.N}, horizon is {N}")
    return pattern


def blocking_matrix(pattern: BlockingPattern) -> np.ndarray:
    B = np.zeros((pattern.N, pattern.M))
    B[np.arange(pattern.N), pattern.block_of_step] = 1.0
    return B


def is_admissible(matrix) -> bool:
    """Exactly one 1 per row, and the block column advances by at most one per row."""
    B = np.asarray(matrix)
    if B.ndim != 2 or B.shape[0] < B.shape[1] or B.shape[1] < 1:
        return False
    if not np.all((B == 0) | (B == 1)):
        return False
    if not np.all(B.sum(axis=1) == 1):
        return False
    cols = np.argmax(B, axis=1)
    if cols[0] != 0 or cols[-1] != B.shape[1] - 1:
        return False
    return bool(np.all(np.diff(cols) >= 0) and np.all(np.diff(cols) <= 1))


def _blocked_array(pattern, blocked):
    arr = np.asarray(blocked, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(pattern.M, -1) if arr.size % pattern.M == 0 else arr
    if arr.ndim != 2 or arr.shape[0] != pattern.M:
        raise ContractViolation(f"blocked sequence must have {pattern.M} rows, got shape {arr.shape}")
    return arr


def expand(pattern: BlockingPattern, blocked) -> np.ndarray:
    """``(B kron I_m) ubar`` computed by repetition; returns an ``(N, m)`` array."""
    return np.repeat(_blocked_array(pattern, blocked), pattern.lengths, axis=0)


def expand_offset(pattern: BlockingPattern, blocked, warmstart, lam: float) -> np.ndarray:
    """``expand(blocked) + lam * warmstart``."""
    full = expand(pattern, blocked)
    w = np.asarray(warmstart, dtype=float).reshape(full.shape[0], -1)
    if w.shape != full.shape:
        raise ContractViolation(f"warm-start shape {w.shape} does not match {full.shape}")
    return full + lam * w


@dataclass(frozen=True)
class LinearRows:
    """Two-sided linear rows ``lower <= A v <= upper`` stored as triplets.

    The variable vector ``v`` is ``(ubar flattened block-major, lam)``.
    """

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_cols: int

    @property
    def n_rows(self) -> int:
        return self.lower.shape[0]

    def dense(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_cols))
        np.add.at(A, (self.rows, self.cols), self.vals)
        return A

    def satisfied(self, v, tol: float = 0.0) -> bool:
        Av = self.dense() @ np.asarray(v, dtype=float)
        return bool(np.all(Av <= self.upper + tol) and np.all(Av >= self.lower - tol))


def offset_bound_rows(pattern: BlockingPattern, warmstart, lower, upper) -> LinearRows:
    """Rows ``lower <= ubar_j + lam * w(k) <= upper`` for every step ``k`` in block ``j``.

    One row per step and input coordinate; each row touches the block
    variable and the ``lam`` column (the latter even where ``w(k) == 0``).
    """
    w = np.asarray(warmstart, dtype=float)
    w = w.reshape(pattern.N, -1)
    m = w.shape[1]
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (m,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (m,))
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ParameterError("input bounds must be finite")
    lam_col = pattern.M * m
    step_block = pattern.block_of_step
    row = np.arange(pattern.N * m)
    k = row // m
    i = row % m
    ubar_col = step_block[k] * m + i
    rows = np.concatenate([row, row])
    cols = np.concatenate([ubar_col, np.full_like(row, lam_col)])
    vals = np.concatenate([np.ones(row.size), w[k, i]])
    return LinearRows(rows, cols, vals, np.tile(lower, pattern.N), np.tile(upper, pattern.N), lam_col + 1)
