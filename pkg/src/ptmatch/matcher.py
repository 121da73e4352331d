"""Greedy extraction of a one-to-one matching from the candidate matrix."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .comparison import CandidateMatrix
from .graph import unpack_bit_row
from .model import Permutation

# per-entry provenance of a matching
ORIGIN_PEELED = 0
ORIGIN_EXTENDED = 1
ORIGIN_REFINED = 2
ORIGIN_KEPT = 3
ORIGIN_NAMES = ("peeled", "extended", "refined", "kept")


@dataclass
class Matching:
    """Bijection from reference-graph labels to shuffled-graph labels.

    assign[i_ref] = i_obs; origin[i_ref] records how the entry was set.
    """

    n: int
    assign: np.ndarray
    origin: np.ndarray

    def __post_init__(self) -> None:
        self.assign = np.asarray(self.assign, dtype=np.int64)
        self.origin = np.asarray(self.origin, dtype=np.uint8)
        if len(self.assign) != self.n or len(self.origin) != self.n:
            raise ParameterError("matching arrays must have length n")
        if not np.array_equal(np.sort(self.assign), np.arange(self.n)):
            raise ParameterError("matching is not a bijection")

    def inverse_assign(self) -> np.ndarray:
        """obs-label -> ref-label array."""
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.assign] = np.arange(self.n)
        return inv

    def origin_names(self) -> list:
        return [ORIGIN_NAMES[c] for c in self.origin]


def _peel_lex(matrix: CandidateMatrix) -> list:
    # single ascending-row pass with lazy column deletion; equivalent to
    # repeatedly taking the lexicographically smallest surviving edge,
    # because a skipped row can never regain columns
    avail = np.full(matrix.words_per_row, np.uint64(0xFFFFFFFFFFFFFFFF))
    tail = matrix.n & 63
    if tail:
        avail[-1] = np.uint64((1 << tail) - 1)
    pairs = []
    for i in range(matrix.n):
        row = matrix.words[i] & avail
        hit = np.nonzero(row)[0]
        if len(hit) == 0:
            continue
        k = int(hit[0])
        word = int(row[k])
        bit = (word & -word).bit_length() - 1
        col = (k << 6) | bit
        pairs.append((i, col))
        avail[k] &= ~np.uint64(1 << bit)
    return pairs


def _peel_random_rows(matrix: CandidateMatrix, rng: np.random.Generator) -> list:
    avail = np.ones(matrix.n, dtype=bool)
    pairs = []
    for i in rng.permutation(matrix.n):
        cols = np.nonzero(unpack_bit_row(matrix.words[i], matrix.n) & avail)[0]
        if len(cols) == 0:
            continue
        col = int(cols[rng.integers(len(cols))])
        pairs.append((int(i), col))
        avail[col] = False
    return pairs


def _peel_random_edges(matrix: CandidateMatrix, rng: np.random.Generator) -> list:
    # uniform over surviving edges at every step; quadratic bookkeeping,
    # meant for fuzzing-scale n
    rows = {i: set(matrix.row(i).tolist()) for i in range(matrix.n)}
    rows = {i: cols for i, cols in rows.items() if cols}
    by_col: dict = {}
    for i, cols in rows.items():
        for j in cols:
            by_col.setdefault(j, set()).add(i)
    pairs = []
    while rows:
        live = sorted(rows)
        sizes = np.array([len(rows[i]) for i in live], dtype=np.float64)
        i = live[rng.choice(len(live), p=sizes / sizes.sum())]
        cols = sorted(rows[i])
        j = cols[rng.integers(len(cols))]
        pairs.append((i, j))
        for col in rows.pop(i):
            by_col[col].discard(i)
        for r in sorted(by_col.pop(j, ())):
            if r in rows:
                rows[r].discard(j)
                if not rows[r]:
                    del rows[r]
    return pairs


def approximate_matching(
    matrix: CandidateMatrix,
    selection: str = "lex",
    rng: np.random.Generator | None = None,
) -> Matching:
    """Peel candidate edges into a partial matching, then extend to a bijection.

    Peeling repeatedly takes a surviving edge (i_obs, i_ref), records it,
    and deletes its row and column.  The default picks the
    lexicographically smallest edge; "random-rows" and "random-edges" are
    randomized orders used to probe order-independence of the error bound.
    Unmatched labels are then paired off in increasing order.
    """
    n = matrix.n
    if selection == "lex":
        pairs = _peel_lex(matrix)
    elif selection == "random-rows":
        pairs = _peel_random_rows(matrix, rng or np.random.default_rng())
    elif selection == "random-edges":
        pairs = _peel_random_edges(matrix, rng or np.random.default_rng())
    else:
        raise ParameterError(f"unknown selection rule: {selection}")
    assign = np.full(n, -1, dtype=np.int64)
    origin = np.full(n, ORIGIN_EXTENDED, dtype=np.uint8)
    for i_obs, i_ref in pairs:
        assign[i_ref] = i_obs
        origin[i_ref] = ORIGIN_PEELED
    return complete_matching(assign, origin)


def complete_matching(assign: np.ndarray, origin: np.ndarray) -> Matching:
    """Fill the -1 entries of a partial assignment in increasing order."""
    n = len(assign)
    assign = assign.copy()
    open_ref = np.nonzero(assign < 0)[0]
    used = np.zeros(n, dtype=bool)
    used[assign[assign >= 0]] = True
    open_obs = np.nonzero(~used)[0]
    if len(open_ref) != len(open_obs):
        raise ParameterError("partial assignment is not injective")
    assign[open_ref] = open_obs
    return Matching(n=n, assign=assign, origin=origin)


def matching_mismatches(est: Matching, truth: Permutation) -> int:
    """Number of reference labels mapped away from their true counterpart."""
    if est.n != truth.n:
        raise ParameterError("matching and permutation sizes differ")
    return int(np.count_nonzero(est.assign != truth.forward))
