import numpy as np
import pytest

from ptmatch.comparison import CandidateMatrix
from ptmatch.errors import ParameterError
from ptmatch.matcher import (
    ORIGIN_EXTENDED,
    ORIGIN_PEELED,
    Matching,
    approximate_matching,
    complete_matching,
    matching_mismatches,
)
from ptmatch.model import Permutation
from ptmatch.validation import adversarial_candidate_matrix


def identity_matrix(n):
    return CandidateMatrix.from_rows(n, [[i] for i in range(n)])


class TestMatching:
    def test_validates_bijection(self):
        Matching(n=3, assign=np.array([1, 0, 2]), origin=np.zeros(3))
        with pytest.raises(ParameterError):
            Matching(n=3, assign=np.array([0, 0, 2]), origin=np.zeros(3))
        with pytest.raises(ParameterError):
            Matching(n=3, assign=np.array([0, 3, 2]), origin=np.zeros(3))

    def test_length_checked(self):
        with pytest.raises(ParameterError):
            Matching(n=3, assign=np.arange(3), origin=np.zeros(2))

    def test_inverse_assign(self):
        matching = Matching(n=4, assign=np.array([2, 0, 3, 1]), origin=np.zeros(4))
        inv = matching.inverse_assign()
        assert all(inv[matching.assign[i]] == i for i in range(4))

    def test_origin_names(self):
        matching = Matching(n=2, assign=np.array([1, 0]),
                            origin=np.array([ORIGIN_PEELED, ORIGIN_EXTENDED]))
        assert matching.origin_names() == ["peeled", "extended"]


class TestApproximateMatching:
    def test_identity_pattern_fully_peeled(self):
        n = 32
        matching = approximate_matching(identity_matrix(n))
        assert matching.assign.tolist() == list(range(n))
        assert np.all(matching.origin == ORIGIN_PEELED)

    def test_all_zero_rows_extend_to_identity(self):
        n = 12
        matching = approximate_matching(CandidateMatrix.from_rows(n, [[]] * n))
        assert matching.assign.tolist() == list(range(n))
        assert np.all(matching.origin == ORIGIN_EXTENDED)

    def test_lexicographic_order_deterministic(self):
        # row 0 takes column 1, starving row 1; row 2 has no candidates, so
        # columns 0 and 2 are paired off by extension
        matrix = CandidateMatrix.from_rows(3, [[1, 2], [1], []])
        matching = approximate_matching(matrix)
        assert matching.assign.tolist() == [1, 0, 2]
        assert matching.origin.tolist() == [
            ORIGIN_EXTENDED, ORIGIN_PEELED, ORIGIN_EXTENDED]

    def test_dense_rows_peel_in_order(self):
        matrix = CandidateMatrix.from_rows(3, [[0, 1], [0, 1], [0, 1, 2]])
        matching = approximate_matching(matrix)
        assert matching.assign.tolist() == [0, 1, 2]
        assert np.all(matching.origin == ORIGIN_PEELED)

    def test_planted_permutation_recovered(self):
        n = 40
        perm = Permutation(np.random.default_rng(3).permutation(n))
        matrix = adversarial_candidate_matrix(
            n, perm, np.arange(n), np.random.default_rng(7), density=0.5)
        matching = approximate_matching(matrix)
        assert np.array_equal(matching.assign, perm.forward)
        assert np.all(matching.origin == ORIGIN_PEELED)

    def test_unknown_selection_rule(self):
        with pytest.raises(ParameterError):
            approximate_matching(identity_matrix(4), selection="greedy-max")

    def test_random_orders_stay_valid(self):
        n = 24
        dense = np.random.default_rng(5).random((n, n)) < 0.2
        matrix = CandidateMatrix.from_dense(dense)
        for selection in ("random-rows", "random-edges"):
            for seed in range(4):
                matching = approximate_matching(
                    matrix, selection=selection, rng=np.random.default_rng(seed))
                assert sorted(matching.assign.tolist()) == list(range(n))
                for i_ref in np.flatnonzero(matching.origin == ORIGIN_PEELED):
                    assert dense[matching.assign[i_ref], i_ref]


class TestCompleteMatching:
    def test_fills_in_increasing_order(self):
        assign = np.array([-1, 3, -1, -1], dtype=np.int64)
        matching = complete_matching(assign, np.zeros(4, dtype=np.uint8))
        assert matching.assign.tolist() == [0, 3, 1, 2]

    def test_rejects_non_injective_partial(self):
        assign = np.array([2, 2, -1], dtype=np.int64)
        with pytest.raises(ParameterError):
            complete_matching(assign, np.zeros(3, dtype=np.uint8))


class TestMismatches:
    def test_zero_for_truth(self):
        truth = Permutation(np.array([2, 0, 1]))
        matching = Matching(n=3, assign=truth.forward.copy(), origin=np.zeros(3))
        assert matching_mismatches(matching, truth) == 0

    def test_counts_disagreements(self):
        truth = Permutation(np.arange(4))
        matching = Matching(n=4, assign=np.array([1, 0, 2, 3]), origin=np.zeros(4))
        assert matching_mismatches(matching, truth) == 2

    def test_size_mismatch(self):
        truth = Permutation(np.arange(3))
        matching = Matching(n=4, assign=np.arange(4), origin=np.zeros(4))
        with pytest.raises(ParameterError):
            matching_mismatches(matching, truth)


class TestPeelGuarantee:
    """Candidate noise confined off the planted block keeps errors small.

    With a clean identity pattern on an (n - k)-subset and arbitrary noise
    elsewhere, any peel order must misassign at most 4k vertices.
    """

    def test_quick_fuzz(self):
        master = np.random.default_rng(424242)
        for _ in range(40):
            n = int(master.integers(8, 80))
            k = int(master.integers(0, n // 4 + 1))
            perm = Permutation(master.permutation(n))
            good = master.choice(n, size=n - k, replace=False)
            matrix = adversarial_candidate_matrix(n, perm, good, master, density=0.5)
            for selection in ("lex", "random-rows"):
                matching = approximate_matching(matrix, selection=selection, rng=master)
                wrong = int(np.sum(matching.assign != perm.forward))
                assert wrong <= 4 * k, (n, k, wrong, selection)
