"""Minimum-weight perfect matching on dense square cost matrices.

The solver is the shortest-augmenting-path form of the Hungarian method with
row/column potentials, O(n^3). Instances here are small (n <= max(M, K)), so
the inner column scan is vectorised with numpy and the outer loops stay in
Python.

``backend="scipy"`` dispatches to :func:`scipy.optimize.linear_sum_assignment`
(a compiled Jonker-Volgenant variant). Both return an optimum; ties may be
broken differently, so callers compare costs, not permutations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

BACKENDS = ("hungarian", "scipy")
DEFAULT_BACKEND = "scipy"


@dataclass(frozen=True)
class MatchingResult:
    assignment: np.ndarray  # assignment[row] = column
    total_cost: float


@dataclass(frozen=True)
class PaddedMatrix:
    costs: np.ndarray
    real_rows: int
    real_cols: int

    def is_dummy_row(self, i: int) -> bool:
        return i >= self.real_rows

    def is_dummy_col(self, j: int) -> bool:
        return j >= self.real_cols


def _check(costs) -> np.ndarray:
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise ValueError("cost matrix must be a non-empty 2-D array")
    if c.shape[0] != c.shape[1]:
        raise ValueError(f"cost matrix must be square, got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix contains non-finite entries")
    if np.any(c < 0):
        raise ValueError("cost matrix entries must be >= 0")
    return c


def hungarian(c: np.ndarray) -> np.ndarray:
    """Return ``assignment[row] = col`` minimising the total cost of square ``c``."""
    n = c.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    # col_match[j] = row matched to column j (1-based, 0 = free); column 0 is the virtual root
    col_match = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    padded = np.zeros((n + 1, n + 1))
    padded[1:, 1:] = c

    for i in range(1, n + 1):
        col_match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = col_match[j0]
            free = ~used
            free[0] = False
            reduced = padded[i0] - u[i0] - v
            better = free & (reduced < minv)
            minv[better] = reduced[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[col_match[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if col_match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            col_match[j0] = col_match[j1]
            j0 = j1

    assignment = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        assignment[col_match[j] - 1] = j - 1
    return assignment


def solve_assignment(costs, backend: str | None = None) -> MatchingResult:
    """Minimum-weight perfect matching of a square, finite, nonnegative matrix."""
    c = _check(costs)
    backend = backend or DEFAULT_BACKEND
    if backend == "hungarian":
        assignment = hungarian(c)
    elif backend == "scipy":
        _, assignment = linear_sum_assignment(c)
        assignment = assignment.astype(np.int64)
    else:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    total = float(c[np.arange(len(c)), assignment].sum())
    return MatchingResult(assignment, total)


def default_pad_value(costs) -> float:
    """A finite weight larger than any assignment of the real entries."""
    return 1.0 + float(np.sum(costs))


def pad_to_square(costs, pad_value: float | None = None) -> PaddedMatrix:
    """Grow an r x c matrix to max(r, c) square with dummy rows or columns.

    Dummies are always appended after the real rows/columns, so a row or column
    index at or beyond ``real_rows`` / ``real_cols`` is a dummy.
    """
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if pad_value is None:
        pad_value = default_pad_value(c)
    if pad_value < 0:
        raise ValueError("pad_value must be >= 0")
    r, k = c.shape
    n = max(r, k)
    if r == k:
        return PaddedMatrix(c, r, k)
    out = np.full((n, n), float(pad_value))
    out[:r, :k] = c
    return PaddedMatrix(out, r, k)


def solve_rectangular(costs, pad_value: float | None = None, backend: str | None = None) -> dict[int, int]:
    """Match every row of an r x c (r <= c) matrix to a distinct column.

    Pads with dummy rows, solves the square problem and drops the dummies.
    """
    c = np.asarray(costs, dtype=float)
    if c.shape[0] > c.shape[1]:
        raise ValueError("more rows than columns: not every row can be matched")
    if c.shape[0] == 0:
        return {}
    padded = pad_to_square(c, pad_value)
    result = solve_assignment(padded.costs, backend=backend)
    # dummies are rows only (r <= c), and they come after the real rows
    return {i: int(j) for i, j in enumerate(result.assignment[: padded.real_rows])}
