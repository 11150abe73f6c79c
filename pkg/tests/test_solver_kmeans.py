"""
Test the bicriteria k-means local search
"""

import numpy as np
import pytest
from pydantic import ValidationError

from geoclust.candidates import CandidateStrategy
from geoclust.exceptions import InvalidInputError
from geoclust.geometry import kmeans_cost
from geoclust.instances import InstanceSpec, gen_instance
from geoclust.oracle import exact_kmeans
from geoclust.solver_kmeans import (
    BicriteriaConfig,
    center_budget,
    d2_seeding,
    initialize_kmeans,
    pad_centers,
    singleswap_surrogate,
    solve_kmeans_bicriteria,
)


class TestCenterBudget:
    """ceil((1+5*eps)k)"""

    @pytest.mark.parametrize(
        "k,epsilon,expected",
        [(2, 0.2, 4), (2, 0.04, 3), (2, 0.0, 2), (10, 0.1, 15), (1, 0.01, 2)],
    )
    def test_values(self, k, epsilon, expected):
        """Documented budgets, with at least one extra center when eps > 0"""
        assert center_budget(k, epsilon) == expected

    def test_config_budget(self):
        """The config exposes the same budget"""
        assert BicriteriaConfig(k=2, epsilon=0.04).budget == 3

    def test_epsilon_range(self):
        """eps above 1 is refused"""
        with pytest.raises(ValidationError):
            BicriteriaConfig(k=2, epsilon=1.5)


class TestSeeding:
    """D^2 seeding and the single-swap surrogate"""

    def test_distinct_seeds(self):
        """Distinct points give k distinct seeds"""
        P = gen_instance(InstanceSpec(n=30, d=2, seed=2))
        seeds = d2_seeding(P, 5, np.random.default_rng(0))
        assert len(set(seeds.tolist())) == 5

    def test_coincident_points(self):
        """All points equal still yields k different indices"""
        seeds = d2_seeding(np.zeros((6, 2)), 3, np.random.default_rng(0))
        assert len(set(seeds.tolist())) == 3

    def test_k_above_n(self, pair_1d):
        """At most n seeds"""
        assert len(d2_seeding(pair_1d, 5, np.random.default_rng(0))) == 2

    def test_surrogate_separates_clusters(self):
        """Two far clusters get one center each"""
        P = np.array([[0.0], [0.1], [0.2], [10.0], [10.1], [10.2]])
        centers = singleswap_surrogate(P, 2, np.random.default_rng(3))
        sides = sorted(bool(P[i, 0] > 5) for i in centers)
        assert sides == [False, True]


class TestPadCenters:
    """pad_centers()"""

    def test_fresh_points_first(self, four_1d):
        """Padding uses client points that are not centers yet"""
        K = pad_centers([[0.0]], four_1d, 3)
        assert len(K) == 3
        assert K[0, 0] == 0.0
        assert len(set(K.ravel().tolist())) == 3

    def test_duplicates_once_exhausted(self, four_1d):
        """Budget above n repeats client points"""
        K = pad_centers(four_1d, four_1d, 6)
        assert len(K) == 6
        assert set(K.ravel().tolist()) == {0.0, 2.0, 3.0, 5.0}

    def test_over_budget(self, four_1d):
        """More centers than the budget is bad input"""
        with pytest.raises(InvalidInputError):
            pad_centers(four_1d, four_1d, 2)


class TestInitialize:
    """initialize_kmeans()"""

    def test_given_centers_truncated(self, four_1d):
        """Given centers above the budget keep the first budget rows"""
        cfg = BicriteriaConfig(k=2, epsilon=0.04, initializer="given",
                               initial_centers=[[0.0], [1.0], [2.0], [4.0], [5.0]])
        K = initialize_kmeans(four_1d, 2, 0.04, cfg)
        assert K.ravel().tolist() == [0.0, 1.0, 2.0]

    def test_given_centers_padded(self, four_1d):
        """Given centers below the budget are padded"""
        cfg = BicriteriaConfig(k=2, epsilon=0.2, initializer="given", initial_centers=[[1.0]])
        K = initialize_kmeans(four_1d, 2, 0.2, cfg)
        assert len(K) == 4
        assert K[0, 0] == 1.0

    def test_given_requires_centers(self, four_1d):
        """initializer 'given' without centers is bad input"""
        cfg = BicriteriaConfig(k=2, initializer="given")
        with pytest.raises(InvalidInputError):
            initialize_kmeans(four_1d, 2, 0.2, cfg)

    @pytest.mark.parametrize("initializer", ["singleswap_surrogate", "d2_seeding"])
    def test_exact_budget(self, initializer):
        """Every initializer returns exactly the budget"""
        P = gen_instance(InstanceSpec(n=20, d=2, seed=8))
        cfg = BicriteriaConfig(k=3, epsilon=0.1, initializer=initializer)
        assert len(initialize_kmeans(P, 3, 0.1, cfg)) == center_budget(3, 0.1)


class TestSolveKmeans:
    """solve_kmeans_bicriteria() on P = [0, 2, 3, 5], k = 2"""

    def test_budget_four_reaches_zero(self, four_1d):
        """eps = 0.2: four centers cover every point"""
        result = solve_kmeans_bicriteria(four_1d, BicriteriaConfig(k=2, epsilon=0.2))
        assert len(result.solution) == 4
        assert result.cost.total == pytest.approx(0.0)

    def test_budget_three(self, four_1d):
        """eps = 0.04: three centers reach 0.5"""
        result = solve_kmeans_bicriteria(four_1d, BicriteriaConfig(k=2, epsilon=0.04))
        assert len(result.solution) == 3
        assert result.cost.total == pytest.approx(0.5)

    def test_budget_two_default_threshold(self, four_1d):
        """eps = 0 with the 1 - 1/n threshold stops at 5 and records the rejected improvement"""
        result = solve_kmeans_bicriteria(four_1d, BicriteriaConfig(k=2, epsilon=0.0))
        assert len(result.solution) == 2
        assert result.converged
        assert result.cost.total == pytest.approx(5.0)
        blocked = result.blocked
        assert blocked is not None
        assert blocked.old_cost == pytest.approx(5.0)
        assert 4.0 <= blocked.new_cost < blocked.old_cost
        assert blocked.new_cost >= 0.75 * blocked.old_cost

    def test_budget_two_matches_optimum(self, four_1d):
        """eps = 0 with greedy acceptance and a wide swap reaches the optimum 4"""
        cfg = BicriteriaConfig(k=2, epsilon=0.0, greedy=True, swap_cap=4)
        result = solve_kmeans_bicriteria(four_1d, cfg)
        assert len(result.solution) == 2
        assert result.cost.total == pytest.approx(4.0)
        assert result.cost.total == pytest.approx(exact_kmeans(four_1d, 2).opt_cost)

    def test_payload(self, four_1d):
        """The result records the budget and reports the facility term as zero"""
        result = solve_kmeans_bicriteria(four_1d, BicriteriaConfig(k=2, epsilon=0.04))
        data = result.to_dict()
        assert data["budget"] == 3
        assert data["k"] == 2
        assert result.cost.facility_open_cost == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_cardinality_and_cost(self, seed):
        """|K| equals the budget throughout and the cost is never below the budget optimum"""
        P = gen_instance(InstanceSpec(n=8, d=2, seed=seed))
        cfg = BicriteriaConfig(k=2, epsilon=0.1, greedy=True, seed=seed,
                               candidates=CandidateStrategy.parse("subset:3"))
        result = solve_kmeans_bicriteria(P, cfg)
        assert len(result.solution) == cfg.budget
        assert result.cost.total == pytest.approx(kmeans_cost(P, result.solution))
        assert result.cost.total >= exact_kmeans(P, cfg.budget).opt_cost * (1 - 1e-9)
        costs = [entry.cost for entry in result.trace]
        assert all(b < a for a, b in zip(costs, costs[1:]))

    def test_deterministic(self):
        """A fixed seed reproduces the run"""
        P = gen_instance(InstanceSpec(n=12, d=2, seed=4))
        cfg = BicriteriaConfig(k=3, epsilon=0.1, seed=2)
        first = solve_kmeans_bicriteria(P, cfg)
        second = solve_kmeans_bicriteria(P, cfg)
        np.testing.assert_array_equal(first.solution, second.solution)


@pytest.mark.slow
class TestKmeansAcceptance:
    """100 seeded instances, n <= 8, d in {1,2}, k in {2,3}, eps = 0.2"""

    def test_bicriteria_promise(self):
        """Exactly the budget, within OPT_k on at least 90 runs, never below OPT at the budget"""
        within = 0
        for seed in range(100):
            P = gen_instance(InstanceSpec(n=4 + seed % 5, d=1 + seed % 2, seed=seed))
            cfg = BicriteriaConfig(k=2 + seed % 2, epsilon=0.2, swap_cap=3, greedy=True, seed=seed,
                                   candidates=CandidateStrategy.parse(f"subset:{len(P)}"))
            result = solve_kmeans_bicriteria(P, cfg)
            assert len(result.solution) == center_budget(cfg.k, 0.2) == 2 * cfg.k
            cost = result.cost.total
            within += cost <= exact_kmeans(P, cfg.k).opt_cost * (1 + 1e-9) + 1e-12
            opt_budget = exact_kmeans(P, min(cfg.budget, len(P))).opt_cost
            assert cost >= opt_budget * (1 - 1e-9) - 1e-12
        assert within >= 90
