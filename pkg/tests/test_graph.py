import numpy as np
import pytest

from ptmatch.errors import ParameterError
from ptmatch.graph import (
    AllPairsDistances,
    bfs_distances,
    bfs_spheres,
    from_edge_arrays,
    from_edge_list,
    neighborhood_is_tree,
    neighbors_flat,
)
from ptmatch.validation import ball_contains_cycle, naive_distance_matrix

from conftest import er_graph


def path_graph(k):
    return from_edge_list(k, [(i, i + 1) for i in range(k - 1)])


class TestConstruction:
    def test_basic_adjacency(self):
        g = from_edge_list(4, [(0, 1), (2, 1), (0, 3)])
        assert g.n == 4
        assert g.edge_count == 3
        assert list(g.neighbors(1)) == [0, 2]
        assert list(g.degrees) == [2, 2, 1, 1]
        assert g.has_edge(1, 0) and g.has_edge(0, 3)
        assert not g.has_edge(2, 3)

    def test_duplicates_collapse(self):
        g = from_edge_list(3, [(0, 1), (1, 0), (0, 1)])
        assert g.edge_count == 1

    def test_rejects_self_loops_and_range(self):
        with pytest.raises(ParameterError):
            from_edge_list(3, [(1, 1)])
        with pytest.raises(ParameterError):
            from_edge_list(3, [(0, 3)])
        with pytest.raises(ParameterError):
            from_edge_list(3, [(-1, 0)])

    def test_edge_array_canonical(self):
        g = from_edge_list(5, [(4, 0), (3, 1), (1, 0)])
        assert g.edge_array().tolist() == [[0, 1], [0, 4], [1, 3]]

    def test_immutable(self):
        g = from_edge_list(3, [(0, 1)])
        with pytest.raises(ValueError):
            g.indices[0] = 2

    def test_neighbors_flat_matches_loop(self, rng):
        g = er_graph(40, 0.15, rng)
        verts = np.array([3, 7, 7, 0, 39])
        children, owner = neighbors_flat(g, verts)
        expect = []
        for k, v in enumerate(verts):
            expect.extend((int(u), k) for u in g.neighbors(int(v)))
        assert list(zip(children.tolist(), owner.tolist())) == expect


class TestBFS:
    def test_distances_match_naive(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 64))
            g = er_graph(n, float(rng.uniform(0.02, 0.3)), rng)
            naive = naive_distance_matrix(g)
            for src in range(0, n, 3):
                assert bfs_distances(g, src).tolist() == naive[src]

    def test_distance_cap(self):
        g = path_graph(6)
        d = bfs_distances(g, 0, cap=2)
        assert d.tolist() == [0, 1, 2, -1, -1, -1]

    def test_spheres_partition_ball(self, rng):
        g = er_graph(50, 0.08, rng)
        naive = naive_distance_matrix(g)
        for center in (0, 17, 49):
            dec = bfs_spheres(g, center, 3)
            assert len(dec.layers) == 4
            seen = set()
            for level, layer in enumerate(dec.layers):
                for v in layer.tolist():
                    assert naive[center][v] == level
                    seen.add(v)
            ball = {v for v in range(50) if 0 <= naive[center][v] <= 3}
            assert seen == ball
            assert sum(len(layer) for layer in dec.layers) <= 50

    def test_sphere_parent_is_smallest_neighbor(self, rng):
        g = er_graph(45, 0.1, rng)
        dec = bfs_spheres(g, 5, 3)
        dist = bfs_distances(g, 5)
        for level in range(1, 4):
            for v in dec.layers[level].tolist():
                prev = [int(u) for u in g.neighbors(v) if dist[u] == level - 1]
                assert dec.parent_of[v] == min(prev)
        for v in range(45):
            if not (0 < dist[v] <= 3):
                assert dec.parent_of[v] == -1


class TestTreeness:
    def test_path_center(self):
        assert neighborhood_is_tree(path_graph(4), 1, 2)

    def test_triangle(self):
        g = from_edge_list(3, [(0, 1), (1, 2), (2, 0)])
        assert not neighborhood_is_tree(g, 0, 1)

    def test_star_hub(self):
        g = from_edge_list(6, [(0, i) for i in range(1, 6)])
        assert neighborhood_is_tree(g, 0, 1)

    def test_matches_explicit_cycle_search(self, rng):
        for _ in range(25):
            n = int(rng.integers(3, 40))
            g = er_graph(n, float(rng.uniform(0.03, 0.25)), rng)
            center = int(rng.integers(n))
            r = int(rng.integers(1, 4))
            assert neighborhood_is_tree(g, center, r) == (
                not ball_contains_cycle(g, center, r)
            )


class TestAllPairs:
    @pytest.mark.parametrize("matrix_limit", [16384, 1])
    def test_rows_match_bfs(self, rng, matrix_limit):
        for _ in range(6):
            n = int(rng.integers(5, 70))
            g = er_graph(n, float(rng.uniform(0.03, 0.2)), rng)
            cap = int(rng.integers(1, 6))
            apd = AllPairsDistances(g, cap=cap, matrix_limit=matrix_limit)
            for root in range(n):
                row = apd.row(root).astype(np.int64)
                row[row == 255] = -1
                ref = bfs_distances(g, root, cap=cap)
                assert row.tolist() == ref.tolist()

    def test_rows_block(self, rng):
        g = er_graph(60, 0.1, rng)
        apd = AllPairsDistances(g, cap=3)
        block = apd.rows_block(np.arange(10, 20))
        for k, root in enumerate(range(10, 20)):
            assert block[k].tolist() == apd.row(root).tolist()

    def test_disconnected(self):
        g = from_edge_list(5, [(0, 1), (2, 3)])
        apd = AllPairsDistances(g, cap=4)
        row = apd.row(0)
        assert row[1] == 1
        assert row[2] == 255 and row[4] == 255
