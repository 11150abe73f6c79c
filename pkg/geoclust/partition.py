"""
PARTITION over the ball separator, its observation checks and the reassignment
certificates used by the approximation argument.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import (
    DimensionMismatchError,
    InvalidInputError,
    LemmaViolationError,
    PartitionError,
    SeparatorError,
)
from .geometry import (
    PointSet,
    as_point_set,
    bounding_box,
    empty_points,
    kmeans_cost,
    nearest_all,
    sosfl_cost,
    sq_dist_matrix,
)
from .log import get_logger
from .separator import (
    Ball,
    SeparatorParams,
    SeparatorResult,
    sample_queries,
    separate,
    verify_contract,
)

logger = get_logger(__name__)

WITNESS_TOLERANCE = 1e-9

NetId = Tuple[int, int]


class PartitionParams(BaseModel):
    """Constants of PARTITION; beta=None means measured and reported"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=8.0, ge=1)
    gamma: float = Field(default=64.0, gt=0)
    beta: Optional[float] = Field(default=None, gt=0)
    max_iterations: int = Field(default=10_000, ge=1)
    stall_limit: int = Field(default=25, ge=1)
    separator: SeparatorParams = SeparatorParams()

    def mu(self, epsilon: float, d: int) -> int:
        return max(1, math.ceil(self.gamma / epsilon ** d - 1e-9))

    def derived_beta(self, epsilon: float, d: int) -> float:
        """beta implied by the construction: at most max(c_hi, alpha)*mu points plus a net"""
        mu = self.mu(epsilon, d)
        count = max(self.separator.c_hi, self.alpha) * mu + self.separator.net_budget(mu, d)
        return count * epsilon ** d

    def separator_params(self) -> SeparatorParams:
        return self.separator.model_copy(update={"alpha": self.alpha})


@dataclass(frozen=True)
class Part:
    """One (L_i, O_i, T_i, Z_i n B_i, B_i) tuple"""

    index: int
    L: PointSet
    O: PointSet
    T: PointSet
    ZB: PointSet
    ball: Ball
    L_idx: np.ndarray
    O_idx: np.ndarray
    T_ids: Tuple[NetId, ...] = ()
    ZB_ids: Tuple[NetId, ...] = ()
    separator: Optional[SeparatorResult] = None
    separated: Optional[PointSet] = None

    @property
    def is_leftover(self) -> bool:
        return self.separator is None

    @property
    def size(self) -> int:
        return len(self.L) + len(self.O) + len(self.T) + len(self.ZB)

    @property
    def net_size(self) -> int:
        """|T_i u ZB_i|; net identities make the two disjoint"""
        return len(set(self.T_ids) | set(self.ZB_ids))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "local": [int(i) for i in self.L_idx],
            "global": [int(i) for i in self.O_idx],
            "T": self.T.tolist(),
            "ZB": self.ZB.tolist(),
            "ball": self.ball.to_dict(),
            "leftover": self.is_leftover,
            "fallback": bool(self.separator.fallback) if self.separator else False,
        }


@dataclass(frozen=True)
class PartitionOutput:
    parts: Tuple[Part, ...]
    epsilon: float
    mu: int
    alpha: float
    gamma: float
    beta: Optional[float]
    L: PointSet
    O: PointSet
    derived_beta: float

    @property
    def I(self) -> int:  # noqa: E743
        return len(self.parts)

    @property
    def d(self) -> int:
        return self.L.shape[1]

    @property
    def T_total(self) -> int:
        return sum(len(p.T) for p in self.parts)

    @property
    def fallback_iterations(self) -> int:
        return sum(1 for p in self.parts if p.separator is not None and p.separator.fallback)

    def part_of_local(self) -> np.ndarray:
        """1-based part index of every point of L"""
        owner = np.zeros(len(self.L), dtype=int)
        for part in self.parts:
            owner[part.L_idx] = part.index
        return owner

    def part_of_global(self) -> np.ndarray:
        owner = np.zeros(len(self.O), dtype=int)
        for part in self.parts:
            owner[part.O_idx] = part.index
        return owner

    def part(self, index: int) -> Part:
        if not 1 <= index <= self.I:
            raise InvalidInputError(f"part index must be in [1, {self.I}], got {index}")
        return self.parts[index - 1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "mu": self.mu,
            "constants": {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                          "derived_beta": self.derived_beta},
            "I": self.I,
            "T_total": self.T_total,
            "fallback_iterations": self.fallback_iterations,
            "parts": [p.to_dict() for p in self.parts],
        }


def _leftover_ball(points: PointSet, d: int) -> Ball:
    if len(points) == 0:
        return Ball(center=np.zeros(d), radius=0.0)
    lo, hi = bounding_box(points)
    return Ball(center=(lo + hi) / 2.0, radius=float(np.linalg.norm(hi - lo) / 2.0))


def run_partition(L, O, epsilon: float, params: Optional[PartitionParams] = None) -> PartitionOutput:
    """Split L and O into parts by repeatedly separating L_i u O_i u Z_i"""
    params = params or PartitionParams()
    if not 0 < epsilon <= 1:
        raise InvalidInputError(f"epsilon must be in (0, 1], got {epsilon}")
    L = as_point_set(L)
    O = as_point_set(O)
    if L.shape[1] != O.shape[1]:
        raise DimensionMismatchError(f"dimension mismatch: {L.shape[1]} vs {O.shape[1]}")

    d = L.shape[1]
    mu = params.mu(epsilon, d)
    sep_params = params.separator_params()
    threshold = params.alpha * mu

    L_rem = np.arange(len(L))
    O_rem = np.arange(len(O))
    Z = empty_points(d)
    Z_ids: List[NetId] = []

    parts: List[Part] = []
    stalled = 0
    iteration = 1
    while len(L_rem) + len(O_rem) + len(Z) > threshold:
        if iteration > params.max_iterations:
            logger.error("partition iteration limit", iterations=iteration - 1)
            raise PartitionError(f"PARTITION exceeded {params.max_iterations} iterations")

        X = as_point_set(np.vstack([L[L_rem], O[O_rem], Z]))
        try:
            result = separate(X, mu, sep_params)
        except SeparatorError as e:
            logger.error("separator failed during partition", iteration=iteration, error=str(e))
            raise PartitionError(f"separator failed at iteration {iteration}: {e}") from e

        in_L = result.ball.contains(L[L_rem])
        in_O = result.ball.contains(O[O_rem])
        in_Z = result.ball.contains(Z)

        T_ids = tuple((iteration, j) for j in range(len(result.net)))
        ZB_ids = tuple(nid for nid, inside in zip(Z_ids, in_Z) if inside)
        parts.append(Part(
            index=iteration,
            L=as_point_set(L[L_rem[in_L]], allow_empty=True),
            O=as_point_set(O[O_rem[in_O]], allow_empty=True),
            T=result.net,
            ZB=as_point_set(Z[in_Z], allow_empty=True),
            ball=result.ball,
            L_idx=L_rem[in_L],
            O_idx=O_rem[in_O],
            T_ids=T_ids,
            ZB_ids=ZB_ids,
            separator=result,
            separated=X,
        ))

        before = len(X)
        L_rem = L_rem[~in_L]
        O_rem = O_rem[~in_O]
        Z = as_point_set(np.vstack([Z[~in_Z], result.net]), allow_empty=True)
        Z_ids = [nid for nid, inside in zip(Z_ids, in_Z) if not inside] + list(T_ids)

        after = len(L_rem) + len(O_rem) + len(Z)
        stalled = stalled + 1 if after >= before else 0
        if stalled >= params.stall_limit:
            logger.error("partition stalled", iteration=iteration, size=after, mu=mu)
            raise PartitionError(
                f"PARTITION made no progress for {stalled} iterations (|X|={after}, mu={mu})"
            )
        logger.debug(
            "partition iteration",
            iteration=iteration, removed_local=int(in_L.sum()), removed_global=int(in_O.sum()),
            net=len(result.net), remaining=after,
        )
        iteration += 1

    leftover = as_point_set(np.vstack([L[L_rem], O[O_rem], Z]), allow_empty=True)
    parts.append(Part(
        index=iteration,
        L=as_point_set(L[L_rem], allow_empty=True),
        O=as_point_set(O[O_rem], allow_empty=True),
        T=empty_points(d),
        ZB=Z,
        ball=_leftover_ball(leftover, d),
        L_idx=L_rem,
        O_idx=O_rem,
        ZB_ids=tuple(Z_ids),
    ))

    out = PartitionOutput(
        parts=tuple(parts),
        epsilon=float(epsilon),
        mu=mu,
        alpha=params.alpha,
        gamma=params.gamma,
        beta=params.beta,
        L=L,
        O=O,
        derived_beta=params.derived_beta(epsilon, d),
    )
    logger.info("partition done", parts=out.I, mu=mu, T=out.T_total, fallbacks=out.fallback_iterations)
    return out


@dataclass(frozen=True)
class ObservationItem:
    name: str
    measured: float
    bound: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: measured {self.measured:g} vs bound {self.bound:g}"

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "measured": self.measured, "bound": self.bound,
                "passed": self.passed}


@dataclass(frozen=True)
class ObservationReport:
    items: Tuple[ObservationItem, ...]
    measured_beta: float
    double_count_ok: bool
    fallback_iterations: int

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def lines(self) -> List[str]:
        return [item.line() for item in self.items]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "items": [item.to_dict() for item in self.items],
            "measured_beta": self.measured_beta,
            "double_count_ok": self.double_count_ok,
            "fallback_iterations": self.fallback_iterations,
        }


def check_observation1(out: PartitionOutput) -> ObservationReport:
    """Evaluate the four part-count bounds against the configured constants"""
    eps_d = out.epsilon ** out.d
    total = len(out.L) + len(out.O)
    tenth = out.epsilon * total / 10.0

    largest = max(p.size for p in out.parts)
    measured_beta = largest * eps_d
    if out.beta is None:
        name, bound = "|L_i u O_i u T_i u ZB_i| <= beta/eps^d (beta derived)", out.derived_beta / eps_d
    else:
        name, bound = "|L_i u O_i u T_i u ZB_i| <= beta/eps^d", out.beta / eps_d
    size_item = ObservationItem(name, float(largest), bound, largest <= bound)

    net_sum = sum(p.net_size for p in out.parts)
    items = (
        size_item,
        ObservationItem("I <= eps(|L|+|O|)/10", float(out.I), max(1.0, tenth),
                        out.I <= max(1.0, tenth)),
        ObservationItem("|T| <= eps(|L|+|O|)/10", float(out.T_total), tenth,
                        out.T_total <= tenth),
        ObservationItem("sum |T_i u ZB_i| <= eps(|L|+|O|)/5", float(net_sum), 2 * tenth,
                        net_sum <= 2 * tenth),
    )
    report = ObservationReport(
        items=items,
        measured_beta=measured_beta,
        double_count_ok=net_sum <= 2 * out.T_total,
        fallback_iterations=out.fallback_iterations,
    )
    if not report.passed:
        logger.warning("observation bounds exceeded", failed=[i.name for i in items if not i.passed],
                       fallbacks=report.fallback_iterations)
    return report


@dataclass(frozen=True)
class ClientSides:
    """Split of clients by which solution serves them at least as well"""

    clients: PointSet
    C_l: np.ndarray
    C_o: np.ndarray
    c_L: np.ndarray
    c_O: np.ndarray
    nearest_L: np.ndarray
    nearest_O: np.ndarray

    @property
    def in_C_l(self) -> np.ndarray:
        mask = np.zeros(len(self.clients), dtype=bool)
        mask[self.C_l] = True
        return mask


def classify_clients(C, L, O) -> ClientSides:
    C = as_point_set(C)
    L = as_point_set(L)
    O = as_point_set(O)
    nearest_L, c_L = nearest_all(C, L)
    nearest_O, c_O = nearest_all(C, O)
    local = c_L <= c_O
    return ClientSides(
        clients=C,
        C_l=np.flatnonzero(local),
        C_o=np.flatnonzero(~local),
        c_L=c_L,
        c_O=c_O,
        nearest_L=nearest_L,
        nearest_O=nearest_O,
    )


@dataclass(frozen=True)
class Witness:
    client: int
    point: np.ndarray
    sq_dist: float
    bound_sq: float
    source: str
    part: int


def _within(sq: float, bound_sq: float) -> bool:
    return sq <= bound_sq * (1.0 + WITNESS_TOLERANCE) ** 2


def _nearest_in(c: np.ndarray, S: PointSet) -> Tuple[int, float]:
    dists = sq_dist_matrix(c.reshape(1, -1), S)[0]
    idx = int(np.argmin(dists))
    return idx, float(dists[idx])


def check_lemma2(c: int, sides: ClientSides, out: PartitionOutput) -> Optional[Witness]:
    """Witness in ZB_j u T_j for a client whose global facility left before its local one"""
    i = int(out.part_of_global()[sides.nearest_O[c]])
    j = int(out.part_of_local()[sides.nearest_L[c]])
    if not i < j:
        return None

    part = out.part(j)
    point = sides.clients[c]
    bound_sq = float(max(sides.c_O[c], sides.c_L[c]))
    best: Optional[Witness] = None
    for source, S in (("ZB", part.ZB), ("T", part.T)):
        if len(S) == 0:
            continue
        idx, sq = _nearest_in(point, S)
        if _within(sq, bound_sq) and (best is None or sq < best.sq_dist):
            best = Witness(client=c, point=S[idx].copy(), sq_dist=sq, bound_sq=bound_sq,
                           source=source, part=j)
    if best is None:
        raise LemmaViolationError(
            f"no witness in ZB_{j} u T_{j} for client {c} (i={i}, j={j}, bound {bound_sq:g})"
        )
    return best


def build_assignment_g(C, sides: ClientSides, out: PartitionOutput, j: int) -> Dict[int, Witness]:
    """Reassign clients of L_j whose global facility lies outside O_j to T_j u ZB_j"""
    C = as_point_set(C)
    owner_L = out.part_of_local()
    owner_O = out.part_of_global()
    part = out.part(j)
    C_l = sides.in_C_l
    if len(C) != len(sides.clients):
        raise InvalidInputError("client set does not match the classified sides")

    g: Dict[int, Witness] = {}
    for c in range(len(sides.clients)):
        if owner_L[sides.nearest_L[c]] != j:
            continue
        i = int(owner_O[sides.nearest_O[c]])
        if i == j:
            continue

        bound_sq = float(sides.c_O[c] if C_l[c] else sides.c_L[c])
        if i < j:
            witness = check_lemma2(c, sides, out)
        else:
            if len(part.T) == 0:
                raise LemmaViolationError(f"T_{j} is empty but client {c} needs it (i={i})")
            idx, sq = _nearest_in(C[c], part.T)
            witness = Witness(client=c, point=part.T[idx].copy(), sq_dist=sq,
                              bound_sq=bound_sq, source="T", part=j)
        if not _within(witness.sq_dist, bound_sq):
            raise LemmaViolationError(
                f"client {c}: ||c-g(c)||^2={witness.sq_dist:g} exceeds {bound_sq:g} (part {j})"
            )
        g[c] = Witness(client=c, point=witness.point, sq_dist=witness.sq_dist,
                       bound_sq=bound_sq, source=witness.source, part=j)
    return g


def build_swap_solution(L, out: PartitionOutput, i: Optional[int] = None, mode: str = "sosfl",
                        group: Optional[Sequence[int]] = None) -> PointSet:
    """The test solution (L minus L_J) u O_J u T_J for part i or group J"""
    L = as_point_set(L)
    if mode == "sosfl":
        if i is None:
            raise InvalidInputError("sosfl mode needs a part index i")
        members = [out.part(i)]
    elif mode == "kmeans-group":
        if not group:
            raise InvalidInputError("kmeans-group mode needs a nonempty group of part indices")
        members = [out.part(j) for j in group]
    else:
        raise InvalidInputError(f"unknown swap-solution mode: {mode}")

    removed = np.zeros(len(L), dtype=bool)
    for part in members:
        removed[part.L_idx] = True
    blocks = [L[~removed]]
    for part in members:
        blocks.extend([part.O, part.T, part.ZB])
    return as_point_set(np.vstack(blocks), allow_empty=True)


@dataclass(frozen=True)
class SwapDiagnostic:
    members: Tuple[int, ...]
    cost: float
    threshold: float
    holds: bool
    sym_diff: int
    within_cap: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "members": list(self.members),
            "cost": self.cost,
            "threshold": self.threshold,
            "holds": self.holds,
            "sym_diff": self.sym_diff,
            "within_cap": self.within_cap,
        }


def swap_solution_diagnostics(C, L, out: PartitionOutput, f: Optional[float] = None,
                              swap_cap: int = 3,
                              groups: Optional[Sequence[Sequence[int]]] = None) -> List[SwapDiagnostic]:
    """Compare cost(S) with (1-1/n)cost(L) for every part (f given) or every group"""
    C = as_point_set(C)
    L = as_point_set(L)
    n = len(C)

    def cost(S: PointSet) -> float:
        if len(S) == 0:
            return math.inf
        return sosfl_cost(C, S, f).total if f is not None else kmeans_cost(C, S)

    threshold = (1.0 - 1.0 / n) * cost(L)
    if groups is None:
        units = [(p.index,) for p in out.parts]
        mode = "sosfl"
    else:
        units = [tuple(g) for g in groups]
        mode = "kmeans-group"

    rows = []
    for members in units:
        if mode == "sosfl":
            S = build_swap_solution(L, out, members[0], mode="sosfl")
        else:
            S = build_swap_solution(L, out, mode="kmeans-group", group=members)
        parts = [out.part(j) for j in members]
        sym_diff = sum(len(p.L) + len(p.O) + len(p.T) + len(p.ZB) for p in parts)
        value = cost(S)
        rows.append(SwapDiagnostic(
            members=members,
            cost=value,
            threshold=threshold,
            holds=value >= threshold * (1.0 - 1e-12),
            sym_diff=sym_diff,
            within_cap=sym_diff <= swap_cap,
        ))
    return rows


@dataclass
class PartitionVerification:
    """Observation bounds, certificates and per-iteration separator contracts"""

    observation: ObservationReport
    lemma2_applicable: int = 0
    lemma2_violations: List[str] = field(default_factory=list)
    lemma3_assigned: int = 0
    lemma3_violations: List[str] = field(default_factory=list)
    contract_violations: Dict[int, int] = field(default_factory=dict)

    @property
    def certificates_passed(self) -> bool:
        return not self.lemma2_violations and not self.lemma3_violations

    @property
    def contracts_passed(self) -> bool:
        return not any(self.contract_violations.values())

    @property
    def passed(self) -> bool:
        return self.observation.passed and self.certificates_passed and self.contracts_passed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "observation": self.observation.to_dict(),
            "lemma2": {"applicable": self.lemma2_applicable,
                       "violations": self.lemma2_violations},
            "lemma3": {"assigned": self.lemma3_assigned,
                       "violations": self.lemma3_violations},
            "contract_violations": {str(k): v for k, v in self.contract_violations.items()},
        }


def verify_partition(C, out: PartitionOutput, queries: int = 1000, seed: int = 0) -> PartitionVerification:
    """Run every partition checker, recording failures instead of raising"""
    C = as_point_set(C)
    sides = classify_clients(C, out.L, out.O)
    report = PartitionVerification(observation=check_observation1(out))

    for c in range(len(C)):
        try:
            if check_lemma2(c, sides, out) is not None:
                report.lemma2_applicable += 1
        except LemmaViolationError as e:
            report.lemma2_applicable += 1
            report.lemma2_violations.append(str(e))

    for part in out.parts:
        try:
            report.lemma3_assigned += len(build_assignment_g(C, sides, out, part.index))
        except LemmaViolationError as e:
            report.lemma3_violations.append(str(e))

    for part in out.parts:
        if part.separator is None:
            continue
        probe = sample_queries(part.separated, queries, seed + part.index)
        probe = np.vstack([probe, C])
        contract = verify_contract(part.separated, part.separator, probe)
        report.contract_violations[part.index] = contract.violations

    if not report.passed:
        logger.warning(
            "partition verification failed",
            observation=report.observation.passed,
            lemma2=len(report.lemma2_violations),
            lemma3=len(report.lemma3_violations),
        )
    return report
