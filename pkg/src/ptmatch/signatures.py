"""Degree-profile partition trees and vertex signature vectors.

Around a root vertex, each BFS sphere is split recursively by a degree test:
within the class reached through sign history s, the vertices of the next
sphere whose degree is at least the expected average degree go to class
(s, high) and the rest to (s, low).  After m levels, every surviving class
contributes one signature coordinate: the sum of centered degrees over the
class frontier (its neighbors in sphere m+1), plus the matching binomial
variance.  Two vertices playing the same role in isomorphic neighborhoods
get identical signatures, which is what makes the signatures usable for
matching across a hidden relabeling.

Signatures are sparse: only classes with nonempty frontier are stored, and
an absent class key means (0, 0).  The number of nonempty classes is at
most the sphere size, never 2^m.

Two evaluation paths are provided.  `vertex_signature` computes one root
through an explicit `partition_tree`, which is the readable reference used
by small-scale tests.  `SignatureEngine` computes many roots on a shared
distance oracle, walking only the part of each partition tree that can
reach the frontier (and, when restricted to a probe key set, only classes
whose sign prefix can extend to a probe key).  Both paths derive each
coordinate from the same integer sums, so their outputs are bit-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .graph import Graph, AllPairsDistances, bfs_distances, neighbors_flat


@dataclass(frozen=True, order=True)
class ClassKey:
    """Sign history of a partition class, packed into a machine word.

    bit k set ⇔ the sign chosen at level k+1 was "high".  Keys order by
    (depth, bits).
    """

    depth: int
    bits: int

    def __post_init__(self) -> None:
        if not 0 <= self.depth <= 64:
            raise ParameterError("class key depth must lie in 0..64")
        if not 0 <= self.bits < (1 << self.depth):
            raise ParameterError("class key bits exceed depth")

    @classmethod
    def from_signs(cls, signs) -> "ClassKey":
        bits = 0
        for k, s in enumerate(signs):
            if s not in (-1, 1):
                raise ParameterError("signs must be -1 or +1")
            if s == 1:
                bits |= 1 << k
        return cls(depth=len(tuple(signs)), bits=bits)

    def signs(self) -> tuple:
        return tuple(1 if self.bits >> k & 1 else -1 for k in range(self.depth))

    def sign_string(self) -> str:
        return "".join("+" if self.bits >> k & 1 else "-" for k in range(self.depth))

    @classmethod
    def parse(cls, text: str) -> "ClassKey":
        bits = 0
        for k, c in enumerate(text):
            if c == "+":
                bits |= 1 << k
            elif c != "-":
                raise ParameterError("sign string may only contain + and -")
        return cls(depth=len(text), bits=bits)

    def child(self, high: bool) -> "ClassKey":
        bits = self.bits | (1 << self.depth) if high else self.bits
        return ClassKey(self.depth + 1, bits)


@dataclass
class PartitionTree:
    """Per-level degree-split classes around one root.

    levels[l] maps packed sign bits (depth l) to the sorted vertex array of
    that class; only nonempty classes are stored.  Level 0 is {root}.  In a
    non-tree ball a vertex may belong to several classes of the same level,
    once per distinct parent class.
    """

    root: int
    depth: int
    levels: list

    def classes_at(self, level: int) -> dict:
        return {ClassKey(level, bits): verts for bits, verts in sorted(self.levels[level].items())}

    def class_vertices(self, key: ClassKey) -> np.ndarray:
        return self.levels[key.depth].get(key.bits, np.empty(0, dtype=np.int64))


def default_depth(n: int) -> int:
    """Depth policy for size n; requires n ≥ 16 so the iterated log is sane."""
    if n < 16:
        raise ParameterError("default depth needs n >= 16")
    return math.ceil(22.0 * math.log(math.log(n)))


def partition_tree(g: Graph, root: int, depth: int, mean_degree: float) -> PartitionTree:
    """Build the class decomposition of the spheres around root.

    mean_degree is the degree-test threshold (ties go to the high class).
    Class membership follows the set definitions literally: a sphere-(l+1)
    vertex joins the child class of every level-l class it has a neighbor
    in.
    """
    if not 0 <= root < g.n:
        raise ParameterError("root out of range")
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    if depth > 64:
        raise ParameterError("depth exceeds the 64-bit key encoding")
    if mean_degree <= 0:
        raise ParameterError("mean degree must be positive")
    dist = bfs_distances(g, root, cap=depth)
    high = g.degrees >= mean_degree
    levels = [{0: np.array([root], dtype=np.int64)}]
    for l in range(depth):
        nxt: dict = {}
        for bits, verts in sorted(levels[l].items()):
            children, _ = neighbors_flat(g, verts)
            sel = children[dist[children] == l + 1]
            if len(sel) == 0:
                continue
            uniq = np.unique(sel).astype(np.int64)
            hi_mask = high[uniq]
            hi, lo = uniq[hi_mask], uniq[~hi_mask]
            if len(hi):
                nxt[bits | (1 << l)] = hi
            if len(lo):
                nxt[bits] = lo
        levels.append(nxt)
    return PartitionTree(root=root, depth=depth, levels=levels)


def _coordinate(deg_sum: int, count: int, mean_degree: float, p: float) -> tuple:
    # single definition shared by every evaluation path, so equal integer
    # inputs give bit-identical floats
    f = float(deg_sum - count) - count * mean_degree
    v = (mean_degree * (1.0 - p)) * count
    return f, v


def vertex_signature(g: Graph, root: int, depth: int, n: int, p: float) -> dict:
    """Sparse signature of one root: ClassKey -> (sum coordinate, variance).

    For each depth-m class, the frontier is its neighbor set within sphere
    m+1; the coordinate sums deg(j) - 1 - n·p over the frontier and the
    variance is n·p·(1-p) times the frontier size.  Classes with empty
    frontier are omitted (they mean (0, 0)).
    """
    mean_degree = n * p
    tree = partition_tree(g, root, depth, mean_degree)
    dist = bfs_distances(g, root, cap=depth + 1)
    degs = g.degrees
    out: dict = {}
    for bits, verts in sorted(tree.levels[depth].items()):
        children, _ = neighbors_flat(g, verts)
        sel = children[dist[children] == depth + 1]
        if len(sel) == 0:
            continue
        uniq = np.unique(sel)
        out[ClassKey(depth, bits)] = _coordinate(int(degs[uniq].sum()), len(uniq), mean_degree, p)
    return out


@dataclass
class SignatureSet:
    """Signatures of many vertices of one graph, sharing depth and centering."""

    depth: int
    mean_degree: float
    signatures: dict

    def get(self, vertex: int, key: ClassKey) -> tuple:
        return self.signatures[vertex].get(key, (0.0, 0.0))


def _in_sorted(values: np.ndarray, table: np.ndarray) -> np.ndarray:
    if len(table) == 0:
        return np.zeros(len(values), dtype=bool)
    pos = np.searchsorted(table, values).clip(max=len(table) - 1)
    return table[pos] == values


def _dedupe_pairs(verts: np.ndarray, bits: np.ndarray) -> tuple:
    # lexsort handles uint64 bits; packing (vertex, bits) into one int64
    # would overflow beyond depth ~40
    order = np.lexsort((verts, bits))
    v, b = verts[order], bits[order]
    keep = np.ones(len(v), dtype=bool)
    keep[1:] = (v[1:] != v[:-1]) | (b[1:] != b[:-1])
    return v[keep], b[keep]


class SignatureEngine:
    """Bulk signature evaluation over one graph.

    Shares a capped distance oracle across roots and prunes each root's
    class walk to the vertices that can actually reach the frontier sphere:
    starting from sphere m+1, the needed set at level l is the sphere-l
    neighborhood of the needed set at level l+1.  Every frontier membership
    survives the pruning, so results equal the unpruned walk exactly; the
    saving is decisive when deep spheres are nearly empty.

    With `keys` given (sorted packed depth-m keys), classes whose sign
    prefix cannot extend to any probe key are dropped level by level.
    """

    def __init__(self, g: Graph, n: int, p: float, depth: int, keys: np.ndarray | None = None):
        if depth < 1 or depth > 64:
            raise ParameterError("depth must lie in 1..64")
        if not 0.0 < p < 1.0:
            raise ParameterError("p must lie in (0, 1)")
        self.g = g
        self.p = p
        self.depth = depth
        self.mean_degree = n * p
        self.degs = g.degrees
        self.high = self.degs >= self.mean_degree
        self.apd = AllPairsDistances(g, cap=depth + 1)
        self.keys = None
        if keys is not None:
            self.keys = np.unique(np.asarray(keys, dtype=np.uint64))
            self.prefix_allowed = [
                np.unique(self.keys & np.uint64((1 << l) - 1)) for l in range(depth + 1)
            ]

    def class_stats(self, root: int) -> tuple:
        """(bits, frontier degree sums, frontier counts) for one root, bits ascending."""
        g, depth = self.g, self.depth
        empty = (np.empty(0, np.uint64), np.empty(0, np.int64), np.empty(0, np.int64))
        row = self.apd.row(root)
        frontier_sphere = np.nonzero(row == depth + 1)[0]
        if len(frontier_sphere) == 0:
            return empty
        needed = [None] * (depth + 2)
        needed[depth + 1] = frontier_sphere
        for l in range(depth, 0, -1):
            cand, _ = neighbors_flat(g, needed[l + 1])
            needed[l] = np.unique(cand[row[cand] == l])
        verts = needed[1]
        bits = self.high[verts].astype(np.uint64)
        if self.keys is not None:
            ok = _in_sorted(bits, self.prefix_allowed[1])
            verts, bits = verts[ok], bits[ok]
        # fresh per call: class_stats must stay safe under concurrent roots
        scratch = np.zeros(g.n, dtype=bool)
        for l in range(1, depth):
            if len(verts) == 0:
                return empty
            scratch[needed[l + 1]] = True
            children, owner = neighbors_flat(g, verts)
            ok = scratch[children]
            scratch[needed[l + 1]] = False
            children = children[ok]
            nb = bits[owner[ok]] | (self.high[children].astype(np.uint64) << np.uint64(l))
            verts, bits = _dedupe_pairs(children, nb)
            if self.keys is not None:
                ok = _in_sorted(bits, self.prefix_allowed[l + 1])
                verts, bits = verts[ok], bits[ok]
        if len(verts) == 0:
            return empty
        children, owner = neighbors_flat(g, verts)
        ok = row[children] == depth + 1
        fr_verts, fr_bits = _dedupe_pairs(children[ok], bits[owner[ok]])
        if len(fr_verts) == 0:
            return empty
        order = np.argsort(fr_bits, kind="stable")
        fr_verts, fr_bits = fr_verts[order], fr_bits[order]
        starts = np.nonzero(np.concatenate([[True], fr_bits[1:] != fr_bits[:-1]]))[0]
        sums = np.add.reduceat(self.degs[fr_verts].astype(np.int64), starts)
        counts = np.diff(np.concatenate([starts, [len(fr_verts)]]))
        return fr_bits[starts], sums, counts.astype(np.int64)

    def signature(self, root: int) -> dict:
        bits, sums, counts = self.class_stats(root)
        return {
            ClassKey(self.depth, int(b)): _coordinate(int(s), int(c), self.mean_degree, self.p)
            for b, s, c in zip(bits, sums, counts)
        }

    def signature_rows(self, roots) -> tuple:
        """Dense (len(roots) × len(keys)) coordinate and variance matrices."""
        if self.keys is None:
            raise ParameterError("engine built without a probe key set")
        roots = np.asarray(roots, dtype=np.int64)
        fmat = np.zeros((len(roots), len(self.keys)), dtype=np.float64)
        vmat = np.zeros_like(fmat)
        unit_var = self.mean_degree * (1.0 - self.p)
        for r, root in enumerate(roots):
            bits, sums, counts = self.class_stats(int(root))
            if len(bits) == 0:
                continue
            cols = np.searchsorted(self.keys, bits)
            fmat[r, cols] = (sums - counts).astype(np.float64) - counts * self.mean_degree
            vmat[r, cols] = unit_var * counts
        return fmat, vmat


def signature_set(g: Graph, n: int, p: float, depth: int, roots=None) -> SignatureSet:
    """Signatures for the given roots (default: all vertices)."""
    engine = SignatureEngine(g, n, p, depth)
    if roots is None:
        roots = range(g.n)
    return SignatureSet(
        depth=depth,
        mean_degree=engine.mean_degree,
        signatures={int(r): engine.signature(int(r)) for r in roots},
    )
