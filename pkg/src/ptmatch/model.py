"""Correlated random graph pairs with a hidden vertex correspondence.

A parent graph is sampled with edge probability q, then two children are
derived by independently keeping each parent edge with probability 1 - alpha
in each child.  Each child is marginally an Erdos-Renyi graph with edge
probability p = q * (1 - alpha), and a shared parent edge survives into both
children with probability p * (1 - alpha).  The first child is observed
through a uniformly random relabeling of its vertices; the task downstream
is to recover that relabeling from the pair of observed graphs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .graph import Graph, from_edge_arrays

# Stream labels, fixed so every sampled object has its own deterministic
# substream of the instance seed.
STREAM_PARENT = "parent"
STREAM_THIN_G = "thin-G"
STREAM_THIN_GPRIME = "thin-Gprime"
STREAM_PERM = "perm"
STREAM_INDEX_SET = "index-set"

# Above this many vertex pairs the parent sampler switches from dense
# per-pair Bernoulli draws to geometric skip sampling.
PAIR_BUDGET = 1 << 26


def named_stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator derived from (seed, label).

    The label is folded into the seed sequence spawn key byte by byte, so
    streams for distinct labels are independent and reproducible without any
    global draw-order coupling.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(label.encode("ascii")))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ModelParams:
    """Instance shape: n vertices, child edge probability p, thinning alpha.

    The implied parent probability is q = p / (1 - alpha); alpha may range
    over [0, 1 - p] so that q stays at most 1.
    """

    n: int
    p: float
    alpha: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("n must be positive")
        if not 0.0 < self.p <= 1.0:
            raise ParameterError("p must lie in (0, 1]")
        if not 0.0 <= self.alpha <= 1.0 - self.p:
            raise ParameterError("alpha must lie in [0, 1 - p]")

    @property
    def q(self) -> float:
        return self.p / (1.0 - self.alpha)


@dataclass(frozen=True)
class Permutation:
    """Bijection on vertex ids, stored as the forward image array."""

    forward: np.ndarray

    def __post_init__(self) -> None:
        fwd = np.asarray(self.forward, dtype=np.int64)
        n = len(fwd)
        if not np.array_equal(np.sort(fwd), np.arange(n)):
            raise ParameterError("not a permutation of 0..n-1")
        object.__setattr__(self, "forward", fwd)
        fwd.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.forward)

    def __call__(self, i: int) -> int:
        return int(self.forward[i])

    def inverse(self) -> "Permutation":
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.forward] = np.arange(self.n)
        return Permutation(inv)


@dataclass(frozen=True)
class CorrelatedInstance:
    """One sampled problem instance.

    g_obs is the relabeled first child (vertex perm.forward[i] of g_obs
    plays the role latent vertex i played in the parent); g_ref is the
    second child on latent labels.  Recovering perm from (g_obs, g_ref) is
    the matching task.
    """

    params: ModelParams
    g_obs: Graph
    g_ref: Graph
    perm: Permutation
    seed: int


def _decode_pair_indices(n: int, flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over the i<j pair enumeration back to (i, j)."""
    i_arange = np.arange(n, dtype=np.int64)
    offsets = i_arange * (2 * n - i_arange - 1) // 2
    rows = np.searchsorted(offsets, flat, side="right") - 1
    cols = flat - offsets[rows] + rows + 1
    return rows, cols


def sample_pair_graph(n: int, q: float, rng: np.random.Generator,
                      pair_budget: int = PAIR_BUDGET) -> Graph:
    """Erdos-Renyi G(n, q) with each unordered pair independent.

    Two exact strategies: when the total pair count fits the budget, draw
    one Bernoulli per pair in chunks of linear indices; otherwise walk the
    pair enumeration with geometric gaps between successes.  Both sample the
    same distribution; the switch depends only on n.
    """
    if not 0.0 <= q <= 1.0:
        raise ParameterError("edge probability out of [0, 1]")
    total = n * (n - 1) // 2
    hits: list[np.ndarray] = []
    if total <= pair_budget:
        chunk = 1 << 24
        for start in range(0, total, chunk):
            stop = min(total, start + chunk)
            mask = rng.random(stop - start) < q
            hits.append(np.nonzero(mask)[0] + start)
    elif q > 0.0:
        pos = -1
        expect = int(total * q * 1.1) + 1024
        while pos < total:
            gaps = rng.geometric(q, size=min(expect, 1 << 24))
            steps = np.cumsum(gaps) + pos
            hits.append(steps[steps < total])
            pos = int(steps[-1])
    flat = np.concatenate(hits) if hits else np.empty(0, dtype=np.int64)
    u, v = _decode_pair_indices(n, flat)
    return from_edge_arrays(n, u, v)


def thin_graph(parent: Graph, keep: float, rng: np.random.Generator) -> Graph:
    """Keep each parent edge independently with the given probability."""
    edges = parent.edge_array()
    mask = rng.random(len(edges)) < keep
    kept = edges[mask]
    return from_edge_arrays(parent.n, kept[:, 0], kept[:, 1])


def apply_permutation(g: Graph, perm: Permutation) -> Graph:
    """Relabel: edge (u, v) becomes (perm(u), perm(v))."""
    if perm.n != g.n:
        raise ParameterError("permutation length does not match graph")
    edges = g.edge_array()
    return from_edge_arrays(g.n, perm.forward[edges[:, 0]], perm.forward[edges[:, 1]])


def sample_instance(params: ModelParams, seed: int,
                    pair_budget: int = PAIR_BUDGET,
                    perm: Permutation | None = None) -> CorrelatedInstance:
    """Sample parent, two thinned children, and the hiding permutation.

    perm defaults to a uniform draw from the "perm" stream; a caller may fix
    it (identity is handy when debugging) without disturbing the other
    streams.
    """
    if params.q > 1.0:
        raise ParameterError("parent edge probability p/(1-alpha) exceeds 1")
    parent = sample_pair_graph(params.n, params.q,
                               named_stream(seed, STREAM_PARENT), pair_budget)
    keep = 1.0 - params.alpha
    child_a = thin_graph(parent, keep, named_stream(seed, STREAM_THIN_G))
    child_b = thin_graph(parent, keep, named_stream(seed, STREAM_THIN_GPRIME))
    if perm is None:
        perm = Permutation(named_stream(seed, STREAM_PERM).permutation(params.n))
    elif perm.n != params.n:
        raise ParameterError("supplied permutation size does not match n")
    return CorrelatedInstance(params=params, g_obs=apply_permutation(child_a, perm),
                              g_ref=child_b, perm=perm, seed=seed)


def overlap_fraction(assign: np.ndarray, perm: Permutation) -> float:
    """Fraction of vertices mapped to their true counterpart.

    assign[i] is the claimed g_obs label for latent vertex i; -1 means
    unassigned and counts as wrong.
    """
    assign = np.asarray(assign, dtype=np.int64)
    if len(assign) != perm.n:
        raise ParameterError("assignment length does not match instance size")
    return float(np.count_nonzero(assign == perm.forward)) / perm.n


def estimate_edge_probability(g_obs: Graph, g_ref: Graph) -> float:
    """Plug-in estimate of p from the observed edge densities of both graphs."""
    n = g_obs.n
    if g_ref.n != n:
        raise ParameterError("graphs differ in size")
    if n < 2:
        raise ParameterError("need at least two vertices to estimate density")
    pairs = n * (n - 1) / 2.0
    return (g_obs.edge_count + g_ref.edge_count) / (2.0 * pairs)
