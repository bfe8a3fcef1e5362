"""Object-level matching: cost matrices, count-penalty padding, optimal assignment.

The cost of pairing two detections is 1 - cosine(feature_a, feature_b),
so costs live in [0, 2]. Rectangular matrices are padded to square with
the maximum regular cost 1, which charges one unit for every missing or
surplus object before the assignment is solved.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .semantic import cosine_similarity
from .types import Detection

#: Cost assigned to padding slots: the maximum cost of a regular match.
PAD_COST = 1.0

#: Largest matrix side brute_force_assignment will enumerate (9! ~ 363k permutations).
BRUTE_FORCE_MAX_SIDE = 9

# permutation tables are reused across calls; keyed by side
_PERM_CACHE: dict[int, np.ndarray] = {}


@dataclass(frozen=True)
class CostMatrix:
    """Pairing costs between original (rows) and generated (columns) detections.

    pad_from_row / pad_from_col mark where synthetic padding begins; rows
    and columns past those indices carry the constant PAD_COST.
    """

    entries: np.ndarray
    pad_from_row: int
    pad_from_col: int

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.entries, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"cost matrix must be 2-d, got shape {arr.shape}")
        if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 2.0):
            raise ValueError("cost entries must be finite and lie in [0, 2]")
        if not (0 <= self.pad_from_row <= arr.shape[0] and 0 <= self.pad_from_col <= arr.shape[1]):
            raise ValueError("padding markers outside matrix bounds")
        if arr[self.pad_from_row :, :].size and not np.all(
            arr[self.pad_from_row :, :] == PAD_COST
        ):
            raise ValueError("padded rows must equal the pad cost exactly")
        if arr[:, self.pad_from_col :].size and not np.all(
            arr[:, self.pad_from_col :] == PAD_COST
        ):
            raise ValueError("padded columns must equal the pad cost exactly")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols


@dataclass(frozen=True)
class Assignment:
    """A perfect matching on a (padded) square cost matrix.

    pairs covers every row and column exactly once; matched_real_pairs is
    the subset where neither side is a padding slot.
    """

    pairs: tuple[tuple[int, int], ...]
    total_cost: float
    matched_real_pairs: tuple[tuple[int, int], ...]


def build_cost_matrix(ori: Sequence[Detection], gen: Sequence[Detection]) -> CostMatrix:
    """Cost[i][j] = 1 - cosine(ori feature i, gen feature j); no padding yet."""
    m, n = len(ori), len(gen)
    entries = np.zeros((m, n), dtype=np.float64)
    for i, det_o in enumerate(ori):
        for j, det_g in enumerate(gen):
            entries[i, j] = 1.0 - cosine_similarity(det_o.feature, det_g.feature)
    return CostMatrix(entries=entries, pad_from_row=m, pad_from_col=n)


def pad_cost_matrix(c: CostMatrix) -> CostMatrix:
    """Extend to a square matrix of side max(rows, cols), new entries = PAD_COST.

    Already-square matrices are returned unchanged. Padding applies in both
    directions: missing objects (more rows) and hallucinated objects (more
    columns) are penalized identically.
    """
    if c.is_square:
        return c
    side = max(c.rows, c.cols)
    entries = np.full((side, side), PAD_COST, dtype=np.float64)
    entries[: c.rows, : c.cols] = c.entries
    return CostMatrix(entries=entries, pad_from_row=c.pad_from_row, pad_from_col=c.pad_from_col)


def _assignment_from_cols(c: CostMatrix, row_to_col: Sequence[int]) -> Assignment:
    pairs = tuple((i, int(j)) for i, j in enumerate(row_to_col))
    total = float(sum(c.entries[i, j] for i, j in pairs))
    real = tuple((i, j) for i, j in pairs if i < c.pad_from_row and j < c.pad_from_col)
    return Assignment(pairs=pairs, total_cost=total, matched_real_pairs=real)


def hungarian_solve(c: CostMatrix) -> Assignment:
    """Minimum-cost perfect matching via the Kuhn-Munkres potentials method.

    O(k^3) for side k. The matrix must be square; run pad_cost_matrix first
    for rectangular inputs.
    """
    if not c.is_square:
        raise ValueError(f"matrix must be square, got {c.rows}x{c.cols}; pad it first")
    n = c.rows
    if n == 0:
        return Assignment(pairs=(), total_cost=0.0, matched_real_pairs=())

    cost = c.entries
    inf = np.inf
    # potentials over rows (u) and columns (v); match[j] = row matched to column j
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.full(n + 1, -1, dtype=np.intp)  # column n is the virtual start column

    for row in range(n):
        match[n] = row
        j_cur = n
        min_to = np.full(n, inf)
        prev_col = np.full(n, -1, dtype=np.intp)
        visited = np.zeros(n + 1, dtype=bool)

        # grow an alternating tree until a free column is reached
        while match[j_cur] != -1:
            visited[j_cur] = True
            r = match[j_cur]
            reduced = cost[r, :n] - u[r] - v[:n]
            better = (~visited[:n]) & (reduced < min_to)
            min_to[better] = reduced[better]
            prev_col[better] = j_cur

            open_cols = np.flatnonzero(~visited[:n])
            j_next = open_cols[np.argmin(min_to[open_cols])]
            delta = min_to[j_next]

            u[match[visited]] += delta
            v[visited] -= delta
            min_to[~visited[:n]] -= delta
            j_cur = int(j_next)

        # flip matched/unmatched edges along the augmenting path
        while j_cur != n:
            j_prev = int(prev_col[j_cur])
            match[j_cur] = match[j_prev]
            j_cur = j_prev

    row_to_col = np.empty(n, dtype=np.intp)
    row_to_col[match[:n]] = np.arange(n)
    return _assignment_from_cols(c, row_to_col)


def brute_force_assignment(c: CostMatrix) -> Assignment:
    """Exhaustive-minimum oracle: same contract as hungarian_solve, side <= 9."""
    if not c.is_square:
        raise ValueError(f"matrix must be square, got {c.rows}x{c.cols}; pad it first")
    n = c.rows
    if n == 0:
        return Assignment(pairs=(), total_cost=0.0, matched_real_pairs=())
    if n > BRUTE_FORCE_MAX_SIDE:
        raise ValueError(f"matrix too large for brute force: side {n} > {BRUTE_FORCE_MAX_SIDE}")
    if n not in _PERM_CACHE:
        _PERM_CACHE[n] = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    perms = _PERM_CACHE[n]
    costs = c.entries[np.arange(n), perms].sum(axis=1)
    return _assignment_from_cols(c, perms[int(np.argmin(costs))])


def object_match_score(ori: Sequence[Detection], gen: Sequence[Detection]) -> float:
    """Mean optimal matching cost per padded slot, in [0, 2].

    Empty vs empty scores a perfect 0; one side empty scores the maximal 1
    (every slot is a count-penalty pad). The raw summed matching cost is
    this value times max(len(ori), len(gen)).
    """
    m, n = len(ori), len(gen)
    if m == 0 and n == 0:
        return 0.0
    padded = pad_cost_matrix(build_cost_matrix(ori, gen))
    assignment = hungarian_solve(padded)
    return assignment.total_cost / max(m, n)
