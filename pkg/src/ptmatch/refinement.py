"""Iterative refinement of a matching via neighborhood intersections.

Given a current guess, each round counts, for every vertex pair (i, i'),
how many neighbors of i in the shuffled graph are matched by the guess to
neighbors of i' in the reference graph.  A pair is re-matched when its
count clears a threshold and is the unique such pair in both its row and
its column; the partial result is then extended to a bijection.  On graphs
where the guess is mostly right, each round halves the error set, so a
logarithmic number of rounds suffices.

Counts are sparse: only pairs reachable through an actual two-step walk
(obs edge, then a ref edge of the matched endpoint) get a nonzero count,
so a round costs the number of such walks, not n^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .graph import Graph, neighbors_flat
from .matcher import (
    Matching,
    ORIGIN_EXTENDED,
    ORIGIN_KEPT,
    ORIGIN_REFINED,
    complete_matching,
)


def default_epsilon(n: int, p: float) -> float:
    """Tolerance default: np/ln(n) - 1 clamped into [0.05, 1]."""
    if n < 2:
        raise ParameterError("default epsilon needs n >= 2")
    return min(max(n * p / math.log(n) - 1.0, 0.05), 1.0)


@dataclass(frozen=True)
class RefineParams:
    """Round budget and re-match threshold for refinement.

    threshold = epsilon^2 * p * n / 512; rounds defaults to ceil(log2 n).
    """

    n: int
    p: float
    epsilon: float
    rounds: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon <= 1.0:
            raise ParameterError("epsilon must lie in (0, 1]")
        if self.n < 1 or not 0.0 < self.p < 1.0:
            raise ParameterError("invalid instance parameters")
        if self.rounds is None:
            object.__setattr__(self, "rounds", max(1, math.ceil(math.log2(self.n))))
        if self.rounds < 1:
            raise ParameterError("rounds must be at least 1")
        if self.threshold <= 0:
            raise ParameterError("threshold must be positive")

    @property
    def threshold(self) -> float:
        return self.epsilon * self.epsilon * self.p * self.n / 512.0


@dataclass
class IntersectionCounts:
    """Sparse nonzero intersection counts, sorted by (obs row, ref column)."""

    n: int
    obs: np.ndarray
    ref: np.ndarray
    counts: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "IntersectionCounts":
        z = np.empty(0, dtype=np.int64)
        return cls(n=n, obs=z, ref=z.copy(), counts=z.copy())

    def __len__(self) -> int:
        return len(self.counts)

    def as_dict(self) -> dict:
        return {
            (int(i), int(j)): int(c)
            for i, j, c in zip(self.obs, self.ref, self.counts)
        }

    def qualifying(self, threshold: float) -> tuple:
        """Row/column tallies of pairs meeting the threshold, plus the pairs."""
        mask = self.counts >= threshold
        rows, cols = self.obs[mask], self.ref[mask]
        row_tally = np.bincount(rows, minlength=self.n)
        col_tally = np.bincount(cols, minlength=self.n)
        return rows, cols, row_tally, col_tally


def intersection_counts(
    g_obs: Graph, g_ref: Graph, current: Matching, chunk: int = 2048
) -> IntersectionCounts:
    """Count matched common neighbors for every pair with a nonzero count.

    For an obs vertex i and ref vertex i', the count is the number of ref
    vertices v adjacent to i' whose matched label current.assign[v] is
    adjacent to i.  Accumulated by expanding, for each obs edge (i, u), the
    ref neighborhood of the ref-label matched to u; row-chunked so the
    concatenated unique keys stay globally sorted.
    """
    n = g_obs.n
    if g_ref.n != n or current.n != n:
        raise ParameterError("graph and matching sizes differ")
    inv = current.inverse_assign()
    keys_parts, count_parts = [], []
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        span = np.arange(lo, hi, dtype=np.int64)
        deg = g_obs.indptr[lo + 1:hi + 1] - g_obs.indptr[lo:hi]
        rows_per_edge = np.repeat(span, deg)
        u = g_obs.indices[g_obs.indptr[lo]:g_obs.indptr[hi]]
        if len(u) == 0:
            continue
        mid = inv[u]
        cols, edge_pos = neighbors_flat(g_ref, mid)
        if len(cols) == 0:
            continue
        pair_keys = rows_per_edge[edge_pos] * n + cols
        uniq, cnt = np.unique(pair_keys, return_counts=True)
        keys_parts.append(uniq)
        count_parts.append(cnt)
    if not keys_parts:
        return IntersectionCounts.empty(n)
    keys = np.concatenate(keys_parts)
    counts = np.concatenate(count_parts).astype(np.int64)
    return IntersectionCounts(n=n, obs=keys // n, ref=keys % n, counts=counts)


def refine_round(counts: IntersectionCounts, params: RefineParams) -> np.ndarray:
    """One selection pass: partial assignment array, -1 where undecided.

    A pair (i, i') is taken exactly when its count meets the threshold and
    no other pair in row i or column i' does; evaluated via tallies, which
    is equivalent to the per-pair universally quantified comparisons.
    """
    rows, cols, row_tally, col_tally = counts.qualifying(params.threshold)
    keep = (row_tally[rows] == 1) & (col_tally[cols] == 1)
    partial = np.full(counts.n, -1, dtype=np.int64)
    partial[cols[keep]] = rows[keep]
    taken = rows[keep]
    if len(np.unique(taken)) != len(taken):
        raise AssertionError("refinement selection produced a non-injective map")
    return partial


@dataclass
class RoundInfo:
    """Progress snapshot handed to the on_round callback."""

    round_index: int
    assigned: int
    matching: Matching
    fixed_point: bool


def _extend(partial: np.ndarray, current: Matching, policy: str) -> Matching:
    origin = np.full(len(partial), ORIGIN_EXTENDED, dtype=np.uint8)
    origin[partial >= 0] = ORIGIN_REFINED
    if policy == "keep":
        used = np.zeros(len(partial), dtype=bool)
        used[partial[partial >= 0]] = True
        open_ref = np.nonzero(partial < 0)[0]
        inherit = current.assign[open_ref]
        ok = ~used[inherit]
        partial = partial.copy()
        partial[open_ref[ok]] = inherit[ok]
        origin[open_ref[ok]] = ORIGIN_KEPT
    elif policy != "extend":
        raise ParameterError(f"unknown extension policy: {policy}")
    return complete_matching(partial, origin)


def refine_matching(
    g_obs: Graph,
    g_ref: Graph,
    initial: Matching,
    params: RefineParams,
    policy: str = "extend",
    on_round=None,
) -> Matching:
    """Run up to params.rounds refinement rounds starting from initial.

    policy "extend" completes each round's partial matching in increasing
    label order; "keep" first inherits non-conflicting entries of the
    previous round.  Stops early at a fixed point.  on_round, if given,
    receives a RoundInfo after every round.
    """
    current = initial
    for round_index in range(1, params.rounds + 1):
        counts = intersection_counts(g_obs, g_ref, current)
        partial = refine_round(counts, params)
        assigned = int(np.count_nonzero(partial >= 0))
        new = _extend(partial, current, policy)
        fixed = bool(np.array_equal(new.assign, current.assign))
        if on_round is not None:
            on_round(RoundInfo(round_index=round_index, assigned=assigned,
                               matching=new, fixed_point=fixed))
        current = new
        if fixed:
            break
    return current
