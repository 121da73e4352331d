"""Immutable sparse undirected graphs and neighborhood primitives.

The graph is stored in compressed sparse row form (offset array plus a flat
sorted neighbor array) so that degree lookups, neighborhood gathers and
intersection counting are O(deg) and cache friendly.  Everything downstream
(sphere decompositions, partition trees, refinement counts) consumes this
one representation.

Vertex ids are 0-based contiguous integers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

UNREACHED = 255  # sentinel distance in capped uint8 distance rows


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph in CSR shape.

    indptr has length n+1; indices holds the concatenated, per-vertex sorted
    neighbor lists.  Neighbor lists are duplicate free and never contain the
    vertex itself.  Instances are immutable and safe to share across worker
    threads; all operations are pure reads.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self) -> None:
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        k = np.searchsorted(row, v)
        return bool(k < len(row) and row[k] == v)

    def edge_array(self) -> np.ndarray:
        """Canonical (m, 2) array of edges with u < v, lexicographically sorted."""
        owner = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        mask = owner < self.indices
        return np.column_stack([owner[mask], self.indices[mask].astype(np.int64)])


@dataclass
class SphereDecomposition:
    """BFS layering around a center vertex.

    layers[l] lists the vertices at distance exactly l, for l = 0..radius
    (empty arrays kept so there are always radius+1 layers).  parent_of maps
    every discovered vertex except the center to its smallest-id neighbor in
    the previous layer; undiscovered vertices map to -1.
    """

    center: int
    radius: int
    layers: list = field(default_factory=list)
    parent_of: np.ndarray | None = None


def from_edge_arrays(n: int, u: np.ndarray, v: np.ndarray) -> Graph:
    """Build a Graph from parallel endpoint arrays, deduplicating edges."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if len(u) != len(v):
        raise ParameterError("endpoint arrays differ in length")
    if n < 0:
        raise ParameterError("vertex count must be nonnegative")
    if len(u):
        if u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n:
            raise ParameterError("vertex id out of range")
        if np.any(u == v):
            raise ParameterError("self-loops are not allowed")
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    key = lo * n + hi
    key = np.unique(key)
    lo = key // n
    hi = key % n
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    src = src[order]
    dst = dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return Graph(n=n, indptr=indptr, indices=dst.astype(np.int32))


def from_edge_list(n: int, edges) -> Graph:
    """Build a Graph from an iterable of (u, v) pairs."""
    pairs = list(edges)
    if not pairs:
        return from_edge_arrays(n, np.empty(0, np.int64), np.empty(0, np.int64))
    arr = np.asarray(pairs, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError("edges must be pairs")
    return from_edge_arrays(n, arr[:, 0], arr[:, 1])


def neighbors_flat(g: Graph, verts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gather the neighbor lists of many vertices at once.

    Returns (children, owner_pos) where children is the concatenation of the
    neighbor lists of verts in order and owner_pos[k] is the position within
    verts of the vertex owning children[k].
    """
    verts = np.asarray(verts, dtype=np.int64)
    counts = (g.indptr[verts + 1] - g.indptr[verts]).astype(np.int64)
    total = int(counts.sum())
    owner_pos = np.repeat(np.arange(len(verts), dtype=np.int64), counts)
    if total == 0:
        return np.empty(0, dtype=np.int32), owner_pos
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    starts = np.repeat(g.indptr[verts] - offsets, counts)
    pos = starts + np.arange(total, dtype=np.int64)
    return g.indices[pos], owner_pos


def bfs_distances(g: Graph, source: int, cap: int | None = None) -> np.ndarray:
    """Distances from source, -1 for vertices beyond cap (or unreachable)."""
    if not 0 <= source < g.n:
        raise ParameterError("source out of range")
    if cap is None:
        cap = g.n
    dist = np.full(g.n, -1, dtype=np.int32)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    for level in range(1, cap + 1):
        children, _ = neighbors_flat(g, frontier)
        if len(children) == 0:
            break
        fresh = children[dist[children] < 0]
        if len(fresh) == 0:
            break
        fresh = np.unique(fresh)
        dist[fresh] = level
        frontier = fresh.astype(np.int64)
    return dist


def bfs_spheres(g: Graph, center: int, radius: int) -> SphereDecomposition:
    """Exact BFS spheres around center up to the given radius."""
    if not 0 <= center < g.n:
        raise ParameterError("center out of range")
    if radius < 0:
        raise ParameterError("radius must be nonnegative")
    dist = np.full(g.n, -1, dtype=np.int32)
    parent = np.full(g.n, -1, dtype=np.int64)
    dist[center] = 0
    layers = [np.array([center], dtype=np.int64)]
    frontier = layers[0]
    for level in range(1, radius + 1):
        children, owner_pos = neighbors_flat(g, frontier)
        fresh_mask = dist[children] < 0
        fresh = children[fresh_mask]
        owners = frontier[owner_pos[fresh_mask]]
        if len(fresh):
            # smallest-id previous-layer neighbor wins as parent
            order = np.lexsort((owners, fresh))
            fresh_sorted = fresh[order]
            owners_sorted = owners[order]
            first = np.ones(len(fresh_sorted), dtype=bool)
            first[1:] = fresh_sorted[1:] != fresh_sorted[:-1]
            uniq = fresh_sorted[first].astype(np.int64)
            parent[uniq] = owners_sorted[first]
            dist[uniq] = level
        else:
            uniq = np.empty(0, dtype=np.int64)
        layers.append(uniq)
        frontier = uniq
    return SphereDecomposition(center=center, radius=radius, layers=layers, parent_of=parent)


def neighborhood_is_tree(g: Graph, center: int, radius: int) -> bool:
    """True iff the subgraph induced on the radius-ball around center is a tree.

    The ball is connected by construction, so this reduces to checking that
    the number of induced edges equals |ball| - 1.  Cost O(|ball| + edges in
    the ball).
    """
    dist = bfs_distances(g, center, cap=radius)
    ball = np.nonzero(dist >= 0)[0]
    in_ball = dist >= 0
    children, _ = neighbors_flat(g, ball)
    internal_half_edges = int(np.count_nonzero(in_ball[children]))
    return internal_half_edges // 2 == len(ball) - 1


# ---------------------------------------------------------------------------
# packed all-pairs reachability
# ---------------------------------------------------------------------------


def _pack_bool_rows(rows: np.ndarray) -> np.ndarray:
    packed = np.packbits(rows, axis=1, bitorder="little")
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.pad(packed, ((0, 0), (0, pad)))
    return packed.view(np.uint64)


def unpack_bit_row(words: np.ndarray, n: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:n].astype(bool)


class AllPairsDistances:
    """Capped all-pairs distance oracle.

    For moderate n the oracle runs a level-synchronized reachability sweep
    over bit-packed vertex sets (one 64-bit word covers 64 columns), keeping
    one packed snapshot per level.  Distance rows are reconstructed on
    demand.  Above ``matrix_limit`` vertices it falls back to per-root BFS.

    Distance rows use uint8 with UNREACHED marking "farther than cap".
    ``cap`` must stay below 255.
    """

    def __init__(self, g: Graph, cap: int, matrix_limit: int = 16384, block: int = 2048):
        if cap >= UNREACHED:
            raise ParameterError("distance cap too large for uint8 rows")
        self.g = g
        self.cap = cap
        self.n = g.n
        self._snapshots: list[np.ndarray] | None = None
        if g.n <= matrix_limit:
            self._snapshots = self._sweep(block)

    def _sweep(self, block: int) -> list[np.ndarray]:
        g = self.g
        n = g.n
        reach = _pack_bool_rows(np.eye(n, dtype=bool)) if n else np.zeros((0, 0), np.uint64)
        snaps = [reach]
        for _ in range(self.cap):
            nxt = np.empty_like(reach)
            for start in range(0, n, block):
                verts = np.arange(start, min(n, start + block), dtype=np.int64)
                counts = (g.indptr[verts + 1] - g.indptr[verts]).astype(np.int64) + 1
                bounds = np.concatenate([[0], np.cumsum(counts)])
                idx = np.empty(int(bounds[-1]), dtype=np.int64)
                head = np.ones(len(idx), dtype=bool)
                idx[bounds[:-1]] = verts
                head[bounds[:-1]] = False
                children, _ = neighbors_flat(g, verts)
                idx[head] = children
                gathered = reach[idx]
                nxt[verts] = np.bitwise_or.reduceat(gathered, bounds[:-1], axis=0)
            if np.array_equal(nxt, reach):
                break
            snaps.append(nxt)
            reach = nxt
        return snaps

    def row(self, root: int) -> np.ndarray:
        """uint8 distance row for one root (UNREACHED beyond cap)."""
        if self._snapshots is None:
            d = bfs_distances(self.g, root, cap=self.cap)
            out = np.full(self.n, UNREACHED, dtype=np.uint8)
            mask = d >= 0
            out[mask] = d[mask].astype(np.uint8)
            return out
        out = np.full(self.n, UNREACHED, dtype=np.uint8)
        for level in range(len(self._snapshots) - 1, -1, -1):
            members = unpack_bit_row(self._snapshots[level][root], self.n)
            out[members] = level
        return out

    def rows_block(self, roots: np.ndarray) -> np.ndarray:
        return np.stack([self.row(int(r)) for r in roots])
