"""
Test the exact brute-force oracles
"""

import numpy as np
import pytest

from geoclust.exceptions import EnumerationGuardError, InvalidInputError
from geoclust.geometry import kmeans_cost, sosfl_cost
from geoclust.instances import InstanceSpec, gen_instance
from geoclust.oracle import (
    BELL_NUMBERS,
    enumerate_partitions,
    exact_kmeans,
    exact_sosfl,
    subset_sse,
)


class TestEnumeratePartitions:
    """Set partitions of {0..n-1}"""

    @pytest.mark.parametrize("n", range(1, 8))
    def test_bell_counts(self, n):
        """Every partition is produced exactly once"""
        seen = {
            tuple(sorted(tuple(block) for block in partition))
            for partition in enumerate_partitions(n)
        }
        assert len(seen) == BELL_NUMBERS[n]
        assert sum(1 for _ in enumerate_partitions(n)) == BELL_NUMBERS[n]

    def test_max_blocks(self):
        """n = 4 with at most two blocks: S(4,1) + S(4,2) = 8"""
        assert sum(1 for _ in enumerate_partitions(4, max_blocks=2)) == 8

    def test_blocks_cover(self):
        """Each partition covers every index once"""
        for partition in enumerate_partitions(5):
            assert sorted(i for block in partition for i in block) == list(range(5))

    def test_guard(self):
        """n = 13 exceeds the default guard"""
        with pytest.raises(EnumerationGuardError):
            next(enumerate_partitions(13))

    def test_bad_arguments(self):
        """n and max_blocks must be positive"""
        with pytest.raises(InvalidInputError):
            next(enumerate_partitions(0))
        with pytest.raises(InvalidInputError):
            next(enumerate_partitions(3, max_blocks=0))


class TestSubsetSse:
    """Within-subset squared error table"""

    def test_pair(self, pair_1d):
        """Masks 0b01, 0b10 and 0b11"""
        sse = subset_sse(pair_1d)
        assert sse.tolist() == pytest.approx([0.0, 0.0, 0.0, 0.5])

    def test_matches_direct(self):
        """Agrees with the centroid formula on a random mask"""
        P = gen_instance(InstanceSpec(n=6, d=2, seed=3))
        mask = 0b101101
        members = [i for i in range(6) if mask >> i & 1]
        block = P[members]
        expected = ((block - block.mean(axis=0)) ** 2).sum()
        assert subset_sse(P)[mask] == pytest.approx(expected)

    def test_translated_points(self):
        """Coordinates near 1e8 keep their small within-block error"""
        sse = subset_sse(np.array([[1e8], [1e8 + 1.0]]))
        assert sse[0b11] == pytest.approx(0.5)


class TestExactSosfl:
    """exact_sosfl()"""

    def test_pair_cheap_facilities(self, pair_1d):
        """f = 0.3: two facilities, cost 0.6"""
        result = exact_sosfl(pair_1d, 0.3)
        assert result.opt_cost == pytest.approx(0.6)
        assert len(result.opt_partition) == 2

    def test_pair_expensive_facilities(self, pair_1d):
        """f = 1: one facility at 0.5, cost 1.5"""
        result = exact_sosfl(pair_1d, 1.0)
        assert result.opt_cost == pytest.approx(1.5)
        np.testing.assert_allclose(result.opt_centers, [[0.5]])

    def test_bad_f(self, pair_1d):
        """f must be positive"""
        with pytest.raises(InvalidInputError):
            exact_sosfl(pair_1d, 0.0)

    def test_guard_override(self):
        """A lower max_n refuses smaller instances"""
        P = gen_instance(InstanceSpec(n=6, d=1, seed=0))
        with pytest.raises(EnumerationGuardError):
            exact_sosfl(P, 1.0, max_n=5)

    def test_to_dict(self, pair_1d):
        """JSON payload"""
        data = exact_sosfl(pair_1d, 1.0).to_dict()
        assert data["mode"] == "sosfl"
        assert data["opt_partition"] == [[0, 1]]


class TestExactKmeans:
    """exact_kmeans()"""

    def test_single_center(self):
        """k = 1, P = [0, 2]: cost 2"""
        assert exact_kmeans([[0.0], [2.0]], 1).opt_cost == pytest.approx(2.0)

    def test_four_points(self, four_1d):
        """k = 2 on [0, 2, 3, 5]: cost 4"""
        assert exact_kmeans(four_1d, 2).opt_cost == pytest.approx(4.0)

    def test_nonincreasing_in_k(self):
        """More centers never cost more; k = n costs nothing"""
        P = gen_instance(InstanceSpec(n=7, d=2, seed=9))
        costs = [exact_kmeans(P, k).opt_cost for k in range(1, 8)]
        assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))
        assert costs[-1] == pytest.approx(0.0)

    def test_bad_k(self, pair_1d):
        """k outside [1, n] is bad input"""
        with pytest.raises(InvalidInputError):
            exact_kmeans(pair_1d, 3)


class TestTranslatedInstances:
    """Oracle costs agree with their own solutions far from the origin"""

    def test_kmeans_cost_matches_centers(self):
        """k = 1 on 1e8 and 1e8 + 1 costs 0.5"""
        P = np.array([[1e8], [1e8 + 1.0]])
        result = exact_kmeans(P, 1)
        assert result.opt_cost == pytest.approx(0.5)
        assert kmeans_cost(P, result.opt_centers) == pytest.approx(result.opt_cost)

    def test_sosfl_translated_line(self):
        """f = 0.6 on 1e8 + {0, 1, 2}: two facilities, cost 1.7"""
        C = np.array([[1e8], [1e8 + 1.0], [1e8 + 2.0]])
        result = exact_sosfl(C, 0.6)
        assert result.opt_cost == pytest.approx(1.7)
        assert sosfl_cost(C, result.opt_centers, 0.6).total == pytest.approx(1.7)

    def test_shift_invariance(self):
        """Translating an instance leaves the optimum unchanged"""
        P = gen_instance(InstanceSpec(n=7, d=2, seed=4))
        base = exact_kmeans(P, 3).opt_cost
        assert exact_kmeans(P + 1e7, 3).opt_cost == pytest.approx(base, rel=1e-6)
