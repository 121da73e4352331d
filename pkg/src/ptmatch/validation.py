"""Brute-force oracles and concentration diagnostics.

Everything here exists to check the main implementation from the outside:
exhaustive search over permutations at toy sizes, literal dense
reimplementations of the signature comparison and the intersection counts,
and per-vertex structural diagnostics measuring the quantities the matcher
relies on.  Oracles favor plain Python data structures over the optimized
array paths on purpose; they share only the coordinate arithmetic, which
is fixed repo-wide so differential checks can be exact.

Diagnostics report measured quantities and empirical rates.  They never
assert asymptotic statements; thresholds used in tests are desk-scale
choices recorded with the results.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .graph import Graph, bfs_distances, neighbors_flat
from .matcher import Matching, ORIGIN_EXTENDED
from .model import CorrelatedInstance, Permutation, apply_permutation
from .signatures import ClassKey, partition_tree

# ---------------------------------------------------------------------------
# exhaustive matching oracle
# ---------------------------------------------------------------------------


def edge_overlap_objective(g_obs: Graph, g_ref: Graph, assign: np.ndarray) -> int:
    """Number of reference edges mapped onto shuffled-graph edges."""
    count = 0
    for u, v in g_ref.edge_array():
        if g_obs.has_edge(int(assign[u]), int(assign[v])):
            count += 1
    return count


def brute_force_best_matching(g_obs: Graph, g_ref: Graph) -> tuple:
    """Exhaustive search over all n! label maps; n <= 9 enforced.

    Returns the lexicographically first permutation achieving the maximum
    edge overlap, together with that overlap.
    """
    n = g_obs.n
    if g_ref.n != n:
        raise ParameterError("graphs differ in size")
    if n > 9:
        raise ParameterError("exhaustive search is limited to n <= 9")
    obs_edges = set()
    for u, v in g_obs.edge_array():
        obs_edges.add((int(u), int(v)))
        obs_edges.add((int(v), int(u)))
    ref_edges = [(int(u), int(v)) for u, v in g_ref.edge_array()]
    best_perm, best = None, -1
    for sigma in itertools.permutations(range(n)):
        score = sum(1 for u, v in ref_edges if (sigma[u], sigma[v]) in obs_edges)
        if score > best:
            best_perm, best = sigma, score
    return Permutation(np.array(best_perm, dtype=np.int64)), best


# ---------------------------------------------------------------------------
# naive reimplementations (differential oracles)
# ---------------------------------------------------------------------------


def naive_distance_matrix(g: Graph) -> list:
    """List-of-lists BFS distances, -1 when unreachable; n <= 64."""
    if g.n > 64:
        raise ParameterError("naive distance matrix is limited to n <= 64")
    adj = [sorted(int(x) for x in g.neighbors(i)) for i in range(g.n)]
    out = []
    for src in range(g.n):
        dist = [-1] * g.n
        dist[src] = 0
        queue = [src]
        while queue:
            nxt = []
            for u in queue:
                for v in adj[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            queue = nxt
        out.append(dist)
    return out


def ball_contains_cycle(g: Graph, center: int, radius: int) -> bool:
    """Explicit DFS cycle search on the induced ball; n <= 64."""
    if g.n > 64:
        raise ParameterError("explicit cycle search is limited to n <= 64")
    dist = naive_distance_matrix(g)[center]
    ball = {v for v, d in enumerate(dist) if 0 <= d <= radius}
    seen: dict = {}
    for start in sorted(ball):
        if start in seen:
            continue
        stack = [(start, -1)]
        seen[start] = True
        while stack:
            u, parent = stack.pop()
            skipped_parent = False
            for v in sorted(int(x) for x in g.neighbors(u)):
                if v not in ball:
                    continue
                if v == parent and not skipped_parent:
                    skipped_parent = True
                    continue
                if v in seen:
                    return True
                seen[v] = True
                stack.append((v, u))
    return False


def naive_vertex_signature(g: Graph, root: int, depth: int, n: int, p: float) -> dict:
    """Dense literal signature: every sign sequence materialized.

    Classes are built with Python sets, level by level, over all 2^depth
    sign histories; depth <= 12 and n <= 256 enforced.  Returns a complete
    dict over all depth-level keys, zeros included.
    """
    if depth > 12 or n > 256:
        raise ParameterError("naive signature limited to depth <= 12, n <= 256")
    mean_degree = n * p
    dist = naive_full_distances(g, root)
    degs = [g.degree(v) for v in range(g.n)]
    classes = {(): {root}}
    for level in range(depth):
        nxt = {}
        for signs, members in classes.items():
            reached = set()
            for j in members:
                for v in g.neighbors(j):
                    if dist[int(v)] == level + 1:
                        reached.add(int(v))
            nxt[signs + (1,)] = {v for v in reached if degs[v] >= mean_degree}
            nxt[signs + (-1,)] = {v for v in reached if degs[v] < mean_degree}
        classes = nxt
    out = {}
    for signs, members in classes.items():
        frontier = set()
        for j in members:
            for v in g.neighbors(j):
                if dist[int(v)] == depth + 1:
                    frontier.add(int(v))
        deg_sum = sum(degs[v] for v in frontier)
        count = len(frontier)
        f = float(deg_sum - count) - count * mean_degree
        var = (mean_degree * (1.0 - p)) * count
        out[ClassKey.from_signs(signs)] = (f, var)
    return out


def naive_full_distances(g: Graph, src: int) -> list:
    dist = [-1] * g.n
    dist[src] = 0
    queue = [src]
    while queue:
        nxt = []
        for u in queue:
            for v in g.neighbors(u):
                v = int(v)
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        queue = nxt
    return dist


def naive_comparison_matrix(
    g_obs: Graph, g_ref: Graph, n: int, p: float, index_set, slack: float
) -> tuple:
    """Dense doubly-looped candidate matrix; n <= 256 enforced.

    Returns (boolean matrix, distance matrix) as plain ndarrays.  The probe
    set is taken as given so the comparison can be replayed against the
    sparse path key for key.
    """
    if n > 256:
        raise ParameterError("naive comparison limited to n <= 256")
    depth = index_set.depth
    keys = [ClassKey(depth, int(b)) for b in index_set.keys]
    sig_obs = [naive_vertex_signature(g_obs, i, depth, n, p) for i in range(n)]
    sig_ref = [naive_vertex_signature(g_ref, i, depth, n, p) for i in range(n)]
    distances = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            total = 0.0
            for key in keys:
                fa, va = sig_obs[i][key]
                fb, vb = sig_ref[j][key]
                diff = fa - fb
                denom = va + vb
                if denom == 0.0:
                    if diff != 0.0:
                        total = float("inf")
                        break
                    continue
                total += diff * diff / denom
            distances[i, j] = total
    threshold = len(keys) * (1.0 - slack)
    return distances < threshold, distances


def naive_intersection_counts(g_obs: Graph, g_ref: Graph, matching: Matching) -> dict:
    """Triple-loop matched-common-neighbor counts; n <= 64 enforced."""
    n = g_obs.n
    if n > 64:
        raise ParameterError("naive counts limited to n <= 64")
    inv = {int(obs): ref for ref, obs in enumerate(matching.assign)}
    pulled = [
        {inv[int(u)] for u in g_obs.neighbors(i)}
        for i in range(n)
    ]
    out = {}
    for i in range(n):
        for j in range(n):
            c = len(pulled[i] & {int(v) for v in g_ref.neighbors(j)})
            if c:
                out[(i, j)] = c
    return out


# ---------------------------------------------------------------------------
# structured candidate matrices for peeling fuzz
# ---------------------------------------------------------------------------


def adversarial_candidate_matrix(
    n: int,
    perm: Permutation,
    index: np.ndarray,
    rng: np.random.Generator,
    density: float = 0.2,
):
    """Random candidate matrix honoring the peeling guarantee's hypotheses.

    Rows are shuffled-graph vertices, columns reference vertices.  For the
    chosen index vertices i the entry (perm(i), i) is set and the rest of
    the (perm(index) x index) block is cleared; every other entry carries
    independent noise.  Rows outside perm(index) and columns outside index
    stay fully adversarial.
    """
    from .comparison import CandidateMatrix

    index = np.asarray(index, dtype=np.int64)
    dense = rng.random((n, n)) < density
    rows = perm.forward[index]
    dense[np.ix_(rows, index)] = False
    dense[rows, index] = True
    return CandidateMatrix.from_dense(dense)


# ---------------------------------------------------------------------------
# corruption oracles for refinement experiments
# ---------------------------------------------------------------------------


def matching_from_permutation(perm: Permutation) -> Matching:
    origin = np.full(perm.n, ORIGIN_EXTENDED, dtype=np.uint8)
    return Matching(n=perm.n, assign=perm.forward.copy(), origin=origin)


def _derangement(size: int, rng: np.random.Generator) -> np.ndarray:
    if size < 2:
        raise ParameterError("derangements need at least two elements")
    while True:
        candidate = rng.permutation(size)
        if not np.any(candidate == np.arange(size)):
            return candidate


def corrupt_random(truth: Permutation, count: int, rng: np.random.Generator) -> Matching:
    """Truth with `count` uniformly chosen entries deranged among themselves."""
    picked = np.sort(rng.choice(truth.n, size=count, replace=False))
    assign = truth.forward.copy()
    assign[picked] = assign[picked[_derangement(count, rng)]]
    m = matching_from_permutation(Permutation(assign))
    return m


def corrupt_high_degree(truth: Permutation, g_ref: Graph, count: int) -> Matching:
    """Truth corrupted on the `count` highest-degree reference vertices.

    Deterministic adversary: ties break toward smaller ids and the chosen
    entries are cyclically shifted, so every chosen entry is wrong.
    """
    order = np.lexsort((np.arange(g_ref.n), -g_ref.degrees.astype(np.int64)))
    picked = np.sort(order[:count])
    assign = truth.forward.copy()
    assign[picked] = np.roll(assign[picked], 1)
    return matching_from_permutation(Permutation(assign))


# ---------------------------------------------------------------------------
# structural diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypicalityParams:
    """Knobs of the per-vertex structural conditions.

    kappa loosens the sphere growth and mass bounds, degree_factor caps
    degrees relative to the mean, deviation scales the sqrt-mean band that
    splits neighbor degrees into high and low.
    """

    m: int
    kappa: float
    degree_factor: float
    deviation: float

    def __post_init__(self) -> None:
        if not 0.0 < self.kappa < 0.5:
            raise ParameterError("kappa must lie in (0, 1/2)")
        if self.degree_factor <= 1.0:
            raise ParameterError("degree_factor must exceed 1")
        if self.deviation <= 0.0:
            raise ParameterError("deviation must be positive")
        if self.m < 1:
            raise ParameterError("m must be at least 1")


@dataclass
class TypicalityReport:
    """Per-vertex verdicts for the six structural conditions."""

    params: TypicalityParams
    vertices: np.ndarray
    tree: np.ndarray
    degree_cap: np.ndarray
    sphere_growth: np.ndarray
    high_degree_mass: np.ndarray
    upward_band: np.ndarray
    downward_band: np.ndarray

    def typical_mask(self) -> np.ndarray:
        return (self.tree & self.degree_cap & self.sphere_growth
                & self.high_degree_mass & self.upward_band & self.downward_band)

    @property
    def fraction_typical(self) -> float:
        if len(self.vertices) == 0:
            return 0.0
        return float(np.count_nonzero(self.typical_mask())) / len(self.vertices)

    def condition_counts(self) -> dict:
        return {
            "tree": int(self.tree.sum()),
            "degree_cap": int(self.degree_cap.sum()),
            "sphere_growth": int(self.sphere_growth.sum()),
            "high_degree_mass": int(self.high_degree_mass.sum()),
            "upward_band": int(self.upward_band.sum()),
            "downward_band": int(self.downward_band.sum()),
            "typical": int(self.typical_mask().sum()),
        }


def _band_condition(g, dist, sphere, level, mean, params, upper: bool) -> bool:
    # fraction of sphere vertices with too few band neighbors on the next
    # sphere must stay below kappa / (degree_factor * 3^level)
    if len(sphere) == 0:
        return True
    degs = g.degrees
    children, owner = neighbors_flat(g, sphere)
    on_next = dist[children] == level + 1
    if upper:
        in_band = on_next & (degs[children] > mean + params.deviation * math.sqrt(mean))
    else:
        in_band = on_next & (degs[children] < mean - params.deviation * math.sqrt(mean))
    per_vertex = np.bincount(owner[in_band], minlength=len(sphere))
    enough = per_vertex >= (0.5 - params.kappa) * mean
    allowed = params.kappa / (params.degree_factor * 3 ** level) * len(sphere)
    return int(np.count_nonzero(~enough)) <= allowed


def typicality_vertex(g0: Graph, i: int, params: TypicalityParams, n: int, q: float) -> dict:
    """Evaluate the six conditions for one vertex of the parent graph."""
    m = params.m
    mean = n * q
    degs = g0.degrees
    dist = bfs_distances(g0, i, cap=m + 1)
    spheres = [np.nonzero(dist == l)[0] for l in range(m + 2)]
    ball = np.nonzero(dist >= 0)[0]
    in_ball = dist >= 0
    children, _ = neighbors_flat(g0, ball)
    internal = int(np.count_nonzero(in_ball[children]))
    out = {"tree": internal // 2 == len(ball) - 1}
    out["degree_cap"] = bool(degs[ball].max() <= params.degree_factor * mean)
    growth = True
    ball_size = 1
    for l in range(1, m + 1):
        ball_size += len(spheres[l])
        if not (len(spheres[l]) > (1 - params.kappa) * mean * 3 ** (l - 1)
                and ball_size <= params.degree_factor * mean ** l):
            growth = False
            break
    out["sphere_growth"] = growth
    mass = True
    for l in range(0, m + 1):
        sphere = spheres[l]
        if len(sphere) == 0:
            continue
        low = int(np.count_nonzero(degs[sphere] <= (1 - params.kappa) * mean))
        if low > params.kappa / (params.degree_factor * 3 ** l) * len(sphere):
            mass = False
            break
    out["high_degree_mass"] = mass
    out["upward_band"] = all(
        _band_condition(g0, dist, spheres[l], l, mean, params, upper=True)
        for l in range(0, m)
    )
    out["downward_band"] = all(
        _band_condition(g0, dist, spheres[l], l, mean, params, upper=False)
        for l in range(0, m)
    )
    return out


def typicality_report(
    g0: Graph, params: TypicalityParams, n: int, q: float, vertices=None
) -> TypicalityReport:
    """Evaluate the structural conditions for many parent-graph vertices."""
    if vertices is None:
        vertices = np.arange(g0.n, dtype=np.int64)
    else:
        vertices = np.asarray(vertices, dtype=np.int64)
    cols = {name: np.zeros(len(vertices), dtype=bool)
            for name in ("tree", "degree_cap", "sphere_growth",
                         "high_degree_mass", "upward_band", "downward_band")}
    for k, v in enumerate(vertices):
        verdict = typicality_vertex(g0, int(v), params, n, q)
        for name in cols:
            cols[name][k] = verdict[name]
    return TypicalityReport(params=params, vertices=vertices, **cols)


def naive_typicality_vertex(g0: Graph, i: int, params: TypicalityParams,
                            n: int, q: float) -> dict:
    """Slow set-based evaluation of the same six conditions; n <= 128."""
    if g0.n > 128:
        raise ParameterError("slow typicality evaluator limited to n <= 128")
    m = params.m
    mean = n * q
    dist = naive_full_distances(g0, i)
    spheres = [
        sorted(v for v in range(g0.n) if dist[v] == l) for l in range(m + 2)
    ]
    ball = [v for v in range(g0.n) if 0 <= dist[v] <= m + 1]
    edges_in_ball = sum(
        1 for u in ball for v in g0.neighbors(u) if int(v) in set(ball) and u < int(v)
    )
    out = {"tree": edges_in_ball == len(ball) - 1}
    out["degree_cap"] = all(g0.degree(v) <= params.degree_factor * mean for v in ball)
    ok = True
    for l in range(1, m + 1):
        ball_l = [v for v in range(g0.n) if 0 <= dist[v] <= l]
        if not (len(spheres[l]) > (1 - params.kappa) * mean * 3 ** (l - 1)
                and len(ball_l) <= params.degree_factor * mean ** l):
            ok = False
    out["sphere_growth"] = ok
    ok = True
    for l in range(0, m + 1):
        sphere = spheres[l]
        if not sphere:
            continue
        high = [v for v in sphere if g0.degree(v) > (1 - params.kappa) * mean]
        if len(sphere) - len(high) > params.kappa / (params.degree_factor * 3 ** l) * len(sphere):
            ok = False
    out["high_degree_mass"] = ok
    for name, test in (
        ("upward_band", lambda d: d > mean + params.deviation * math.sqrt(mean)),
        ("downward_band", lambda d: d < mean - params.deviation * math.sqrt(mean)),
    ):
        ok = True
        for l in range(0, m):
            sphere = spheres[l]
            if not sphere:
                continue
            strong = 0
            for j in sphere:
                band = [
                    int(v) for v in g0.neighbors(j)
                    if dist[int(v)] == l + 1 and test(g0.degree(int(v)))
                ]
                if len(band) >= (0.5 - params.kappa) * mean:
                    strong += 1
            if len(sphere) - strong > params.kappa / (params.degree_factor * 3 ** l) * len(sphere):
                ok = False
        out[name] = ok
    return out


# ---------------------------------------------------------------------------
# class overlap across the two children
# ---------------------------------------------------------------------------


@dataclass
class ClassOverlapStats:
    """Per-vertex minimum class intersection between the two children.

    Partition trees are built in latent coordinates (the shuffled child
    pulled back through the hidden permutation) so classes of the same key
    are comparable.  reference is the scale the intersections are compared
    against; tree_vertices flags which sampled vertices had an all-tree
    ball in the latent child.
    """

    vertices: np.ndarray
    min_overlap: np.ndarray
    tree_vertices: np.ndarray
    reference: float

    def median_min_overlap(self) -> float:
        if len(self.min_overlap) == 0:
            return float("nan")
        return float(np.median(self.min_overlap))

    def rate_above_reference(self, tree_only: bool = True) -> tuple:
        """(satisfying count, eligible count) for min overlap >= reference."""
        mask = self.tree_vertices if tree_only else np.ones(len(self.vertices), bool)
        eligible = int(np.count_nonzero(mask))
        good = int(np.count_nonzero(self.min_overlap[mask] >= self.reference))
        return good, eligible


def class_overlap_stats(
    instance: CorrelatedInstance,
    m: int,
    kappa: float,
    mean_degree: float | None = None,
    vertices=None,
) -> ClassOverlapStats:
    """Minimum same-key class intersection over all depth-m keys, per vertex."""
    n = instance.params.n
    if mean_degree is None:
        mean_degree = n * instance.params.p
    latent_obs = apply_permutation(instance.g_obs, instance.perm.inverse())
    if vertices is None:
        vertices = np.arange(n, dtype=np.int64)
    else:
        vertices = np.asarray(vertices, dtype=np.int64)
    mins = np.zeros(len(vertices), dtype=np.int64)
    trees = np.zeros(len(vertices), dtype=bool)
    for k, v in enumerate(vertices):
        t_a = partition_tree(latent_obs, int(v), m, mean_degree)
        t_b = partition_tree(instance.g_ref, int(v), m, mean_degree)
        worst = None
        for bits in range(1 << m):
            a = set(t_a.levels[m].get(bits, np.empty(0)).tolist())
            b = set(t_b.levels[m].get(bits, np.empty(0)).tolist())
            size = len(a & b)
            worst = size if worst is None else min(worst, size)
        mins[k] = worst
        dist = bfs_distances(latent_obs, int(v), cap=m + 1)
        ball = np.nonzero(dist >= 0)[0]
        inside = dist >= 0
        children, _ = neighbors_flat(latent_obs, ball)
        trees[k] = int(np.count_nonzero(inside[children])) // 2 == len(ball) - 1
    reference = (mean_degree / 2.0) ** m * (1.0 - 8.0 * kappa) ** m
    return ClassOverlapStats(
        vertices=vertices, min_overlap=mins, tree_vertices=trees, reference=reference,
    )


def class_size_bound_rate(
    g: Graph, n: int, p: float, depth: int, factor: float = 10.0, vertices=None
) -> tuple:
    """(obeying, tested) for max class size <= factor*(np/2)^level on tree balls."""
    mean_degree = n * p
    if vertices is None:
        vertices = np.arange(g.n, dtype=np.int64)
    obeying = tested = 0
    for v in vertices:
        dist = bfs_distances(g, int(v), cap=depth + 1)
        ball = np.nonzero(dist >= 0)[0]
        inside = dist >= 0
        children, _ = neighbors_flat(g, ball)
        if int(np.count_nonzero(inside[children])) // 2 != len(ball) - 1:
            continue
        tested += 1
        tree = partition_tree(g, int(v), depth, mean_degree)
        ok = True
        for level in range(1, depth + 1):
            cap = factor * (mean_degree / 2.0) ** level
            for members in tree.levels[level].values():
                if len(members) > cap:
                    ok = False
        obeying += ok
    return obeying, tested
