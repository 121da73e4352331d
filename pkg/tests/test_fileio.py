import math

import numpy as np
import pytest

from ptmatch.comparison import CandidateMatrix
from ptmatch.errors import DataFormatError, ParameterError
from ptmatch.fileio import (
    INSTANCE_FILE,
    read_candidate_rows,
    read_config,
    read_edge_list,
    read_instance,
    read_key_values,
    read_matching,
    read_signature_dump,
    write_candidate_rows,
    write_edge_list,
    write_instance,
    write_matching,
    write_provenance,
    write_signature_dump,
)
from ptmatch.graph import from_edge_list
from ptmatch.matcher import ORIGIN_PEELED, ORIGIN_REFINED, Matching
from ptmatch.model import ModelParams, sample_instance
from ptmatch.pipeline import PipelineParams, match_exact
from ptmatch.signatures import vertex_signature

from conftest import er_graph


class TestEdgeLists:
    def test_round_trip(self, tmp_path, rng):
        g = er_graph(40, 0.15, rng)
        path = tmp_path / "g.el"
        write_edge_list(g, path)
        again = read_edge_list(path)
        assert again.n == g.n
        assert np.array_equal(again.edge_array(), g.edge_array())

    def test_reader_tolerates_comments_order_duplicates(self, tmp_path):
        path = tmp_path / "g.el"
        path.write_text("# a comment\n4 3\n\n2 1\n0 1\n1 2\n")
        g = read_edge_list(path)
        assert g.edge_array().tolist() == [[0, 1], [1, 2]]

    def test_structural_errors(self, tmp_path):
        cases = {
            "empty.el": "",
            "header.el": "4\n",
            "alpha.el": "a b\n",
            "count.el": "4 2\n0 1\n",
            "badedge.el": "4 1\n0 x\n",
            "range.el": "4 1\n0 9\n",
            "loop.el": "4 1\n2 2\n",
        }
        for name, content in cases.items():
            path = tmp_path / name
            path.write_text(content)
            with pytest.raises(DataFormatError):
                read_edge_list(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_edge_list(tmp_path / "absent.el")


class TestMatchings:
    def test_round_trip_with_origins(self, tmp_path):
        matching = Matching(
            n=4, assign=np.array([2, 0, 3, 1]),
            origin=np.array([0, 1, 2, 3], dtype=np.uint8))
        path = tmp_path / "m.txt"
        write_matching(matching, path)
        text = path.read_text()
        assert text.startswith("# columns: i_prime i origin\n")
        assert "0 2 peeled" in text and "2 3 refined" in text
        again = read_matching(path)
        assert np.array_equal(again.assign, matching.assign)
        assert np.array_equal(again.origin, matching.origin)

    def test_two_column_rows_default_to_extended(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("0 1\n1 0\n")
        again = read_matching(path)
        assert again.assign.tolist() == [1, 0]
        assert again.origin.tolist() == [1, 1]

    def test_reader_rejects_structural_problems(self, tmp_path):
        cases = {
            "dup.txt": "0 1\n0 0\n1 0\n",
            "gap.txt": "0 1\n2 0\n",
            "origin.txt": "0 1 zapped\n1 0 peeled\n",
            "columns.txt": "0 1 peeled extra\n",
            "nonbij.txt": "0 1\n1 1\n",
        }
        for name, content in cases.items():
            path = tmp_path / name
            path.write_text(content)
            with pytest.raises(DataFormatError):
                read_matching(path)


class TestCandidateRows:
    def test_round_trip(self, tmp_path, rng):
        dense = rng.random((20, 20)) < 0.2
        matrix = CandidateMatrix.from_dense(dense)
        path = tmp_path / "b.txt"
        write_candidate_rows(matrix, path)
        again = read_candidate_rows(path, 20)
        assert np.array_equal(again.words, matrix.words)

    def test_empty_rows_have_no_trailing_space(self, tmp_path):
        matrix = CandidateMatrix.from_rows(3, [[1], [], [0, 2]])
        path = tmp_path / "b.txt"
        write_candidate_rows(matrix, path)
        assert path.read_text() == "0: 1\n1:\n2: 0 2\n"

    def test_reader_rejects_bad_rows(self, tmp_path):
        for content in ("0 1\n", "0: 5\n", "9: 0\n", "0: 1\n0: 2\n", "x: 1\n"):
            path = tmp_path / "b.txt"
            path.write_text(content)
            with pytest.raises(DataFormatError):
                read_candidate_rows(path, 3)

    def test_reader_sorts_and_dedupes(self, tmp_path):
        path = tmp_path / "b.txt"
        path.write_text("0: 2 1 2\n1:\n2: 0\n")
        matrix = read_candidate_rows(path, 3)
        assert matrix.row(0).tolist() == [1, 2]


class TestSignatureDumps:
    def test_bit_exact_round_trip(self, tmp_path, rng):
        g = er_graph(60, 0.1, rng)
        entries = [(v, vertex_signature(g, v, 3, 60, 0.1)) for v in (0, 7, 13)]
        path = tmp_path / "sigs.txt"
        write_signature_dump(path, entries)
        again = read_signature_dump(path)
        assert [v for v, _ in again] == [0, 7, 13]
        for (_, want), (_, got) in zip(entries, again):
            assert got == want

    def test_reader_needs_vertex_header_first(self, tmp_path):
        path = tmp_path / "sigs.txt"
        path.write_text("++- 0.5 1.5\n")
        with pytest.raises(DataFormatError):
            read_signature_dump(path)

    def test_reader_rejects_bad_rows(self, tmp_path):
        for content in ("vertex 0\n+- 0.5\n", "vertex 0\n+z 0.5 1.5\n",
                        "vertex 0\n+- a 1.5\n", "vertex 0 extra\n"):
            path = tmp_path / "sigs.txt"
            path.write_text(content)
            with pytest.raises(DataFormatError):
                read_signature_dump(path)


class TestInstances:
    def test_round_trip(self, tmp_path):
        inst = sample_instance(ModelParams(n=50, p=0.1, alpha=0.2), 3)
        paths = write_instance(tmp_path / "inst", inst)
        again = read_instance(tmp_path / "inst")
        assert again.params == inst.params
        assert again.seed == 3
        assert np.array_equal(again.perm.forward, inst.perm.forward)
        assert np.array_equal(again.g_obs.edge_array(), inst.g_obs.edge_array())
        assert np.array_equal(again.g_ref.edge_array(), inst.g_ref.edge_array())
        assert set(paths) == {"instance", "obs", "ref"}

    def test_reader_rejects_bad_json(self, tmp_path):
        d = tmp_path / "inst"
        d.mkdir()
        (d / INSTANCE_FILE).write_text("{ not json")
        with pytest.raises(DataFormatError):
            read_instance(d)

    def test_reader_rejects_missing_fields(self, tmp_path):
        inst = sample_instance(ModelParams(n=10, p=0.2, alpha=0.0), 1)
        write_instance(tmp_path / "inst", inst)
        path = tmp_path / "inst" / INSTANCE_FILE
        payload = path.read_text().replace('"seed": 1,', '')
        path.write_text(payload)
        with pytest.raises(DataFormatError):
            read_instance(tmp_path / "inst")

    def test_reader_checks_sizes_agree(self, tmp_path):
        inst = sample_instance(ModelParams(n=10, p=0.2, alpha=0.0), 1)
        write_instance(tmp_path / "inst", inst)
        write_edge_list(from_edge_list(11, []), tmp_path / "inst" / "g_pi.el")
        with pytest.raises(DataFormatError):
            read_instance(tmp_path / "inst")


class TestProvenanceAndConfig:
    def test_provenance_round_trip(self, tmp_path):
        n = 80
        p = 8 * math.log(n) / n
        inst = sample_instance(ModelParams(n=n, p=p, alpha=0.0), 5)
        _, prov = match_exact(inst.g_obs, inst.g_ref,
                              PipelineParams(p=p, m=2, w=2))
        path = tmp_path / "prov.txt"
        write_provenance(path, prov)
        values = read_key_values(path)
        assert values["n"] == repr(n)
        assert values["stages"] == "compare,peel,refine"
        assert "seconds_total" in values

    def test_key_values_reject_duplicates_and_bad_lines(self, tmp_path):
        path = tmp_path / "kv.txt"
        path.write_text("a=1\na=2\n")
        with pytest.raises(DataFormatError):
            read_key_values(path)
        path.write_text("novalue\n")
        with pytest.raises(DataFormatError):
            read_key_values(path)
        path.write_text("=1\n")
        with pytest.raises(DataFormatError):
            read_key_values(path)

    def test_config_checks_allowed_keys(self, tmp_path):
        path = tmp_path / "conf.txt"
        path.write_text("# settings\nm=3\nslack = 0.4\n")
        values = read_config(path, allowed={"m", "slack", "w"})
        assert values == {"m": "3", "slack": "0.4"}
        path.write_text("m=3\nmystery=1\n")
        with pytest.raises(ParameterError):
            read_config(path, allowed={"m"})
