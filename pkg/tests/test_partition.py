"""
Test PARTITION, the observation checks and the reassignment certificates
"""

import dataclasses

import numpy as np
import pytest
from pydantic import ValidationError

from geoclust.exceptions import (
    DimensionMismatchError,
    InvalidInputError,
    LemmaViolationError,
    PartitionError,
    SeparatorError,
)
from geoclust.geometry import empty_points
from geoclust.instances import InstanceSpec, gen_instance
from geoclust.partition import (
    PartitionParams,
    build_assignment_g,
    build_swap_solution,
    check_lemma2,
    check_observation1,
    classify_clients,
    run_partition,
    swap_solution_diagnostics,
    verify_partition,
)
from geoclust.separator import Ball, SeparatorResult, separate


@pytest.fixture
def tiny():
    """Five local and five global facilities, far below alpha * mu"""
    L = gen_instance(InstanceSpec(n=5, d=2, seed=1))
    O = gen_instance(InstanceSpec(n=5, d=2, seed=2))
    return L, O, run_partition(L, O, 0.5)


class TestPartitionParams:
    """PARTITION constants"""

    def test_mu(self):
        """mu = ceil(gamma / eps^d)"""
        assert PartitionParams(gamma=4.0).mu(0.5, 2) == 16
        assert PartitionParams().mu(0.5, 2) == 256

    def test_derived_beta(self):
        """(max(c_hi, alpha) * mu + kappa * mu^(1 - 1/d)) * eps^d"""
        assert PartitionParams(gamma=4.0).derived_beta(0.5, 2) == pytest.approx(160.0 * 0.25)

    def test_alpha_below_one(self):
        """alpha < 1 is refused"""
        with pytest.raises(ValidationError):
            PartitionParams(alpha=0.5)

    def test_separator_inherits_alpha(self):
        """The separator runs with PARTITION's alpha"""
        assert PartitionParams(alpha=3.0).separator_params().alpha == 3.0


class TestRunPartition:
    """run_partition() on small and random inputs"""

    def test_single_leftover_part(self, tiny):
        """|L u O| <= alpha * mu gives one leftover part and no net"""
        L, O, out = tiny
        assert out.I == 1
        assert out.parts[0].is_leftover
        assert out.T_total == 0
        assert len(out.parts[0].L) == 5 and len(out.parts[0].O) == 5

    def test_disjoint_cover(self, partition_instance):
        """Parts split L and O exactly"""
        out = partition_instance["out"]
        local = np.concatenate([p.L_idx for p in out.parts])
        global_ = np.concatenate([p.O_idx for p in out.parts])
        assert sorted(local.tolist()) == list(range(200))
        assert sorted(global_.tolist()) == list(range(200))
        assert (out.part_of_local() >= 1).all() and (out.part_of_global() >= 1).all()

    def test_part_count_bound(self, partition_instance):
        """I <= eps(|L|+|O|)/10 = 20"""
        assert partition_instance["out"].I <= 20

    def test_only_last_part_is_leftover(self, partition_instance):
        """Every part but the last was cut by the separator"""
        parts = partition_instance["out"].parts
        assert parts[-1].is_leftover
        assert not any(p.is_leftover for p in parts[:-1])
        assert [p.index for p in parts] == list(range(1, len(parts) + 1))

    def test_deterministic(self, partition_instance):
        """Identical inputs give identical output"""
        inst = partition_instance
        again = run_partition(inst["L"], inst["O"], 0.5, inst["params"])
        assert again.to_dict() == inst["out"].to_dict()

    def test_part_lookup(self, partition_instance):
        """Parts are addressed 1-based"""
        out = partition_instance["out"]
        assert out.part(1) is out.parts[0]
        with pytest.raises(InvalidInputError):
            out.part(0)

    def test_bad_epsilon(self, tiny):
        """eps must lie in (0, 1]"""
        L, O, _ = tiny
        with pytest.raises(InvalidInputError):
            run_partition(L, O, 0.0)

    def test_dimension_mismatch(self):
        """L and O must share a dimension"""
        with pytest.raises(DimensionMismatchError):
            run_partition([[0.0, 0.0]], [[0.0]], 0.5)

    def test_separator_failure_aborts(self, partition_instance, mocker):
        """A separator error surfaces as a PartitionError"""
        inst = partition_instance
        mocker.patch("geoclust.partition.separate", side_effect=SeparatorError("boom"))
        with pytest.raises(PartitionError, match="separator failed"):
            run_partition(inst["L"], inst["O"], 0.5, inst["params"])

    def test_stall_is_detected(self, partition_instance, mocker):
        """A separator that removes nothing stalls PARTITION"""
        inst = partition_instance

        def empty_ball(X, mu, params=None):
            far = np.full(X.shape[1], 1e6)
            return SeparatorResult(ball=Ball(center=far, radius=0.0), net=empty_points(X.shape[1]),
                                   inside_count=0, densify_rounds=0, mu=mu)

        mocker.patch("geoclust.partition.separate", side_effect=empty_ball)
        params = inst["params"].model_copy(update={"stall_limit": 3})
        with pytest.raises(PartitionError, match="no progress"):
            run_partition(inst["L"], inst["O"], 0.5, params)


class TestObservation:
    """check_observation1()"""

    def test_trivial_output_passes(self, tiny):
        """I = 1 satisfies every bound"""
        report = check_observation1(tiny[2])
        assert report.passed
        assert len(report.items) == 4

    def test_double_count(self, partition_instance):
        """Each net point appears in at most two of the T_i u ZB_i"""
        report = check_observation1(partition_instance["out"])
        assert report.double_count_ok
        assert report.items[1].passed

    def test_small_gamma_overruns_are_reported(self, partition_instance):
        """gamma = 4 is far below the analysed constant; the net bound shows it"""
        report = check_observation1(partition_instance["out"])
        assert not report.items[2].passed
        assert any(line.startswith("FAIL") for line in report.lines())

    def test_configured_beta(self, partition_instance):
        """A configured beta turns the size item into a real check"""
        out = dataclasses.replace(partition_instance["out"], beta=1e-6)
        assert not check_observation1(out).items[0].passed

    def test_derived_beta_bound(self, partition_instance):
        """Without beta the size item checks the bound implied by the constants"""
        out = partition_instance["out"]
        item = check_observation1(out).items[0]
        # mu = 16, max(c_hi, alpha) = 8, net budget 8 * 16 ** 0.5 = 32
        assert item.bound == pytest.approx(160.0)
        assert item.passed == (item.measured <= 160.0)
        assert "derived" in item.name

    def test_derived_beta_can_fail(self, partition_instance):
        """An oversized part fails the derived size bound"""
        out = dataclasses.replace(partition_instance["out"], derived_beta=1e-6)
        report = check_observation1(out)
        assert not report.items[0].passed
        assert not report.passed


class TestClientSides:
    """classify_clients()"""

    def test_equal_solutions(self):
        """L = O puts every client in C_l"""
        S = [[0.0], [4.0]]
        sides = classify_clients([[1.0], [3.0], [9.0]], S, S)
        assert sides.C_l.tolist() == [0, 1, 2]
        assert sides.C_o.size == 0

    def test_local_side(self):
        """C=[0], L=[1], O=[3]: c in C_l with c_L = 1 and c_O = 9"""
        sides = classify_clients([[0.0]], [[1.0]], [[3.0]])
        assert sides.C_l.tolist() == [0]
        assert sides.c_L[0] == 1.0 and sides.c_O[0] == 9.0

    def test_global_side(self):
        """C=[0], L=[3], O=[1]: c in C_o"""
        sides = classify_clients([[0.0]], [[3.0]], [[1.0]])
        assert sides.C_o.tolist() == [0]


class TestCertificates:
    """Witnesses and the reassignment map"""

    def test_single_part_not_applicable(self, tiny):
        """With I = 1 no client has i < j"""
        L, O, out = tiny
        C = gen_instance(InstanceSpec(n=20, d=2, seed=3))
        sides = classify_clients(C, L, O)
        assert all(check_lemma2(c, sides, out) is None for c in range(len(C)))
        assert build_assignment_g(C, sides, out, 1) == {}

    def test_witnesses_within_bound(self, partition_instance):
        """Every applicable client has a witness in ZB_j u T_j"""
        inst = partition_instance
        out = inst["out"]
        sides = classify_clients(inst["C"], out.L, out.O)
        applicable = 0
        for c in range(len(inst["C"])):
            witness = check_lemma2(c, sides, out)
            if witness is None:
                continue
            applicable += 1
            assert witness.sq_dist <= max(sides.c_O[c], sides.c_L[c]) * (1 + 1e-9) ** 2
            assert witness.source in ("ZB", "T")
        assert applicable > 0

    def test_assignment_bounds(self, partition_instance):
        """g(c) respects c_O on C_l and c_L on C_o, and uses T_j when i > j"""
        inst = partition_instance
        out = inst["out"]
        sides = classify_clients(inst["C"], out.L, out.O)
        owner_O = out.part_of_global()
        for part in out.parts:
            g = build_assignment_g(inst["C"], sides, out, part.index)
            for c, witness in g.items():
                bound = sides.c_O[c] if sides.in_C_l[c] else sides.c_L[c]
                assert witness.sq_dist <= bound * (1 + 1e-9) ** 2
                if owner_O[sides.nearest_O[c]] > part.index:
                    assert witness.source == "T"

    def test_verify_partition_passes_certificates(self, partition_instance):
        """Certificates and per-iteration contracts hold on the random instance"""
        inst = partition_instance
        report = verify_partition(inst["C"], inst["out"])
        assert report.certificates_passed
        assert report.contracts_passed
        assert report.lemma2_applicable > 0
        assert report.to_dict()["lemma2"]["violations"] == []

    def test_planted_empty_net(self, partition_instance, mocker):
        """Emptying every net breaks the witnesses and the contract"""
        inst = partition_instance

        def broken(X, mu, params=None):
            result = separate(X, mu, params)
            return dataclasses.replace(result, net=empty_points(X.shape[1]))

        mocker.patch("geoclust.partition.separate", side_effect=broken)
        out = run_partition(inst["L"], inst["O"], 0.5, inst["params"])
        report = verify_partition(inst["C"], out)
        assert report.lemma2_violations
        assert not report.contracts_passed
        assert not report.passed

    def test_lemma_violation_raised(self, partition_instance, mocker):
        """check_lemma2 raises when no witness exists"""
        inst = partition_instance

        def broken(X, mu, params=None):
            result = separate(X, mu, params)
            return dataclasses.replace(result, net=empty_points(X.shape[1]))

        mocker.patch("geoclust.partition.separate", side_effect=broken)
        out = run_partition(inst["L"], inst["O"], 0.5, inst["params"])
        sides = classify_clients(inst["C"], out.L, out.O)
        owner_L, owner_O = out.part_of_local(), out.part_of_global()
        c = next(c for c in range(len(inst["C"]))
                 if owner_O[sides.nearest_O[c]] < owner_L[sides.nearest_L[c]])
        with pytest.raises(LemmaViolationError):
            check_lemma2(c, sides, out)


class TestSwapSolutions:
    """Test solutions built from a part"""

    def test_single_part(self, tiny):
        """With I = 1, S_1 = O"""
        L, O, out = tiny
        S = build_swap_solution(L, out, 1)
        np.testing.assert_array_equal(S, O)

    def test_sizes(self, partition_instance):
        """|S_i| = |L| - |L_i| + |O_i| + |T_i| + |ZB_i|"""
        out = partition_instance["out"]
        for part in out.parts:
            S = build_swap_solution(out.L, out, part.index)
            assert len(S) == 200 - len(part.L) + len(part.O) + len(part.T) + len(part.ZB)

    def test_group_mode(self, partition_instance):
        """Group mode removes and adds the union of its parts"""
        out = partition_instance["out"]
        S = build_swap_solution(out.L, out, mode="kmeans-group", group=[1, 2])
        p1, p2 = out.part(1), out.part(2)
        removed = len(p1.L) + len(p2.L)
        added = sum(len(p.O) + len(p.T) + len(p.ZB) for p in (p1, p2))
        assert len(S) == 200 - removed + added

    def test_bad_mode(self, tiny):
        """Unknown modes and missing arguments are bad input"""
        L, _, out = tiny
        with pytest.raises(InvalidInputError):
            build_swap_solution(L, out, mode="other")
        with pytest.raises(InvalidInputError):
            build_swap_solution(L, out)

    def test_diagnostics(self, partition_instance):
        """One row per part with a shared threshold"""
        inst = partition_instance
        rows = swap_solution_diagnostics(inst["C"], inst["L"], inst["out"], f=0.01, swap_cap=3)
        assert len(rows) == inst["out"].I
        assert len({row.threshold for row in rows}) == 1
        assert all(not row.within_cap for row in rows if row.sym_diff > 3)


@pytest.mark.slow
class TestPartitionAcceptance:
    """50 random (L, O) pairs, |L| = |O| = 200, d = 2, eps in {0.25, 0.5}, default gamma"""

    @pytest.mark.parametrize("epsilon", [0.25, 0.5])
    def test_observation_and_certificates(self, epsilon):
        """Items 1-4 hold, the cover is exact and no certificate is violated"""
        for pair in range(25):
            seed = 1000 * pair + int(epsilon * 100)
            L = gen_instance(InstanceSpec(n=200, d=2, seed=seed))
            O = gen_instance(InstanceSpec(n=200, d=2, seed=seed + 1))
            C = gen_instance(InstanceSpec(n=150, d=2, seed=seed + 2))
            out = run_partition(L, O, epsilon)

            local = np.concatenate([p.L_idx for p in out.parts])
            global_ = np.concatenate([p.O_idx for p in out.parts])
            assert sorted(local.tolist()) == list(range(200))
            assert sorted(global_.tolist()) == list(range(200))

            report = verify_partition(C, out)
            assert report.observation.passed, report.observation.lines()
            assert report.certificates_passed, report.to_dict()["lemma2"]
            assert report.lemma2_violations == [] and report.lemma3_violations == []
