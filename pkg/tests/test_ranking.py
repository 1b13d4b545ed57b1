import numpy as np
import pytest
from hypothesis import given, settings

from conftest import random_sample, samples
from winprob.errors import RankingError
from winprob.ranking import (
    BenchmarkSample,
    RankingObservation,
    compute_rank_counts,
    compute_rank_counts_excluding,
    winner_of,
)


def brute_counts(sample, depth):
    counts = np.zeros((sample.m, depth), dtype=int)
    for obs in sample.observations:
        for j, a in enumerate(obs.order[:depth]):
            counts[a, j] += 1
    return counts


class TestObservation:
    def test_winner(self):
        assert winner_of(RankingObservation((2, 0, 1), 3)) == 2

    @pytest.mark.parametrize("order,m", [((0, 0, 1), 3), ((0, 3), 3), ((), 3), ((0, 1, 2, 3), 3),
                                         ((-1, 0), 3)])
    def test_invalid(self, order, m):
        with pytest.raises(RankingError):
            RankingObservation(order, m)

    def test_partial(self):
        obs = RankingObservation((1, 0), 4)
        assert obs.depth == 2 and not obs.is_full


class TestSample:
    def test_two_row_matrix(self):
        s = BenchmarkSample.from_orders([[0, 1, 2], [1, 0, 2]])
        assert (s.n, s.m, s.effective_depth) == (2, 3, 3)
        assert s.is_full
        assert s.winners.tolist() == [0, 1]
        assert s.names == ("A", "B", "C")

    def test_mixed_depths(self):
        s = BenchmarkSample.from_observations([[0, 1, 2, 3], [2, 1], [3]], m=4)
        assert s.effective_depth == 1
        assert not s.is_full
        assert s.observations[1].order == (2, 1)

    def test_m_inferred_from_max_index(self):
        s = BenchmarkSample.from_observations([[0, 4], [1, 2]])
        assert s.m == 5

    def test_duplicate_in_row(self):
        with pytest.raises(RankingError, match="row 1"):
            BenchmarkSample.from_orders([[0, 1, 2], [1, 1, 2]])

    def test_duplicate_names(self):
        with pytest.raises(RankingError):
            BenchmarkSample.from_orders([[0, 1]], names=["x", "x"])

    def test_immutable(self):
        s = BenchmarkSample.from_orders([[0, 1, 2]])
        with pytest.raises(ValueError):
            s.orders[0, 0] = 2

    def test_subset_and_relabel(self, rng):
        s = random_sample(rng, 4, 10)
        sub = s.subset([0, 3, 5])
        assert np.array_equal(sub.orders, s.orders[[0, 3, 5]])
        perm = np.array([2, 0, 3, 1])
        r = s.relabel(perm)
        assert np.array_equal(r.winners, perm[s.winners])
        np.testing.assert_array_equal(compute_rank_counts(r).counts[perm],
                                      compute_rank_counts(s).counts)

    def test_rank_matrix_roundtrip(self, rng):
        s = random_sample(rng, 5, 8)
        ranks = s.to_rank_matrix()
        for row, order in zip(ranks, s.orders):
            assert [int(row[a]) for a in order] == [1, 2, 3, 4, 5]


class TestCounts:
    def test_small_example(self):
        s = BenchmarkSample.from_orders([[0, 1, 2], [1, 0, 2], [0, 2, 1]])
        c = compute_rank_counts(s).counts
        np.testing.assert_array_equal(c, [[2, 1, 0], [1, 1, 1], [0, 1, 2]])

    def test_depth_too_large(self):
        s = BenchmarkSample.from_observations([[0, 1], [1, 0]], m=3)
        with pytest.raises(RankingError):
            compute_rank_counts(s, 3)

    def test_excluding_bounds(self, rng):
        s = random_sample(rng, 3, 4)
        with pytest.raises(IndexError):
            compute_rank_counts_excluding(s, 4)

    @settings(max_examples=60, deadline=None)
    @given(samples(full=False))
    def test_matches_brute_force(self, s):
        d = s.effective_depth
        c = compute_rank_counts(s)
        np.testing.assert_array_equal(c.counts, brute_counts(s, d))
        # every position is held by exactly one algorithm per dataset
        np.testing.assert_array_equal(c.counts.sum(axis=0), np.full(d, s.n))
        assert np.all(c.counts.sum(axis=1) <= s.n)

    @settings(max_examples=40, deadline=None)
    @given(samples())
    def test_excluding_equals_subset(self, s):
        for i in range(s.n):
            keep = [j for j in range(s.n) if j != i]
            ex = compute_rank_counts_excluding(s, i)
            assert ex.n == s.n - 1
            np.testing.assert_array_equal(ex.counts, brute_counts(s.subset(keep), s.m))

    @settings(max_examples=40, deadline=None)
    @given(samples())
    def test_full_rank_counts_doubly_stochastic(self, s):
        c = compute_rank_counts(s).counts
        np.testing.assert_array_equal(c.sum(axis=1), np.full(s.m, s.n))
