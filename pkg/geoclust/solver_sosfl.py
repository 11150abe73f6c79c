"""
Multi-swap local search for sum-of-squares facility location.

The swap engine here is shared with the bicriteria k-means solver: it searches all
moves (A, B) that close the facilities A and open the candidates B with
|A| + |B| <= swap_cap, and returns the best one.
"""

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .candidates import CandidateSet, CandidateStrategy
from .exceptions import InvalidInputError
from .geometry import CostBreakdown, PointSet, as_point_set, sosfl_cost, sq_dist_matrix
from .log import get_logger

logger = get_logger(__name__)

GREEDY_SLACK = 1e-12


class LocalSearchConfig(BaseModel):
    """Swap budget, acceptance rule and candidate strategy of a local search"""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(default=0.5, gt=0, le=1)
    swap_cap: int = Field(default=3, ge=1)
    improvement_factor: Optional[float] = Field(default=None, gt=0, lt=1)
    greedy: bool = False
    max_iterations: int = Field(default=10_000, ge=1)
    candidates: CandidateStrategy = CandidateStrategy()
    seed: int = 0

    def factor(self, n: int) -> float:
        if self.improvement_factor is not None:
            return self.improvement_factor
        return 1.0 - 1.0 / n

    def accepts(self, new_cost: float, old_cost: float, n: int) -> bool:
        if self.greedy:
            return new_cost < old_cost * (1.0 - GREEDY_SLACK)
        return new_cost < self.factor(n) * old_cost


@dataclass(frozen=True)
class SwapMove:
    """Close F[removed], open candidates[added]"""

    removed: Tuple[int, ...]
    added: Tuple[int, ...]
    cost: float
    size: int

    def describe(self, candidates: PointSet) -> str:
        opened = [candidates[k].tolist() for k in self.added]
        return f"close {list(self.removed)} open {opened}"


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    cost: float
    swap: str

    def to_dict(self) -> Dict[str, Any]:
        return {"iteration": self.iteration, "cost": self.cost, "swap": self.swap}


@dataclass(frozen=True)
class BlockedImprovement:
    """An improving move the acceptance threshold rejected"""

    iteration: int
    old_cost: float
    new_cost: float
    threshold: float
    swap: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "old_cost": self.old_cost,
            "new_cost": self.new_cost,
            "threshold": self.threshold,
            "swap": self.swap,
        }


@dataclass(frozen=True)
class SolveResult:
    solution: PointSet
    cost: CostBreakdown
    trace: Tuple[TraceEntry, ...]
    iterations: int
    converged: bool
    factor: float
    blocked: Optional[BlockedImprovement] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "cost": self.cost.to_dict(),
            "facilities": self.solution.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "improvement_factor": self.factor,
            "trace": [entry.to_dict() for entry in self.trace],
            "blocked": self.blocked.to_dict() if self.blocked else None,
        }
        data.update(self.extras)
        return data


def descent_iteration_bound(initial: float, final: float, factor: float) -> float:
    """ceil(ln(initial/final) / -ln(factor)); inf when the ratio is unbounded"""
    if final <= 0 or factor >= 1:
        return math.inf
    if initial <= final:
        return 0
    return math.ceil(math.log(initial / final) / -math.log(factor) - 1e-9)


def _best_open(base: np.ndarray, dist: np.ndarray, kept: Sequence[int], b: int,
               start: int = 0) -> Tuple[float, Tuple[int, ...]]:
    """Lexicographically first b-subset of kept[start:] minimising the connection cost"""
    if b == 1:
        cols = list(kept[start:])
        costs = np.minimum(base[:, None], dist[:, cols]).sum(axis=0)
        idx = int(np.argmin(costs))
        return float(costs[idx]), (cols[idx],)

    best_cost, best_pick = math.inf, ()
    for pos in range(start, len(kept) - b + 1):
        reduced = np.minimum(base, dist[:, kept[pos]])
        cost, rest = _best_open(reduced, dist, kept, b - 1, pos + 1)
        if cost < best_cost:
            best_cost, best_pick = cost, (kept[pos],) + rest
    return best_cost, best_pick


def best_swap(F, C, f: float, swap_cap: int, candidates, max_facilities: Optional[int] = None,
              current_cost: Optional[float] = None) -> Optional[SwapMove]:
    """Best strictly improving move, ties broken by (|A|+|B|, A, B); None if there is none"""
    F = as_point_set(F)
    C = as_point_set(C)
    cand = candidates.points if isinstance(candidates, CandidateSet) else as_point_set(candidates)
    m = len(F)

    dist_F = sq_dist_matrix(C, F)
    dist_K = sq_dist_matrix(C, cand)
    old = current_cost if current_cost is not None else f * m + float(dist_F.min(axis=1).sum())

    best: Optional[SwapMove] = None
    best_key: Optional[tuple] = None
    for size in range(1, swap_cap + 1):
        for a in range(0, min(size, m) + 1):
            b = size - a
            if b > len(cand):
                continue
            new_count = m - a + b
            if new_count < 1 or (max_facilities is not None and new_count > max_facilities):
                continue
            for A in combinations(range(m), a):
                keep = [j for j in range(m) if j not in A]
                base = dist_F[:, keep].min(axis=1) if keep else np.full(len(C), np.inf)
                if b == 0:
                    connection, B = float(base.sum()), ()
                else:
                    # a candidate saving no more than f can be dropped from B at no cost
                    with np.errstate(invalid="ignore"):
                        saving = np.maximum(base[:, None] - dist_K, 0.0).sum(axis=0)
                    kept = [int(k) for k in np.flatnonzero(saving > f)]
                    if len(kept) < b:
                        continue
                    connection, B = _best_open(base, dist_K, kept, b)
                cost = f * new_count + connection
                if not cost < old:
                    continue
                key = (cost, size, A, B)
                if best_key is None or key < best_key:
                    best_key = key
                    best = SwapMove(removed=A, added=B, cost=cost, size=size)
    return best


def find_improving_swap(F, C, f: float, cfg: LocalSearchConfig, candidates,
                        max_facilities: Optional[int] = None) -> Optional[SwapMove]:
    """Best move whose cost clears the configured acceptance threshold, else None"""
    C = as_point_set(C)
    F = as_point_set(F)
    if len(F) == 0:
        raise InvalidInputError("find_improving_swap needs a nonempty facility set")
    old = f * len(F) + float(sq_dist_matrix(C, F).min(axis=1).sum())
    move = best_swap(F, C, f, cfg.swap_cap, candidates, max_facilities, current_cost=old)
    if move is None or not cfg.accepts(move.cost, old, len(C)):
        return None
    return move


def apply_swap(F: PointSet, move: SwapMove, candidates: PointSet) -> PointSet:
    keep = [j for j in range(len(F)) if j not in move.removed]
    return as_point_set(np.vstack([F[keep], candidates[list(move.added)]]))


def run_local_search(C: PointSet, start: PointSet, f: float, cfg: LocalSearchConfig,
                     cand: CandidateSet, max_facilities: Optional[int] = None,
                     repair=None) -> Tuple[PointSet, List[TraceEntry], int, bool, Optional[BlockedImprovement]]:
    """Apply best moves until none clears the threshold; shared by both solvers"""
    n = len(C)
    F = start
    old = f * len(F) + float(sq_dist_matrix(C, F).min(axis=1).sum())
    trace = [TraceEntry(iteration=0, cost=old, swap="start")]
    blocked = None

    for iteration in range(1, cfg.max_iterations + 1):
        move = best_swap(F, C, f, cfg.swap_cap, cand, max_facilities, current_cost=old)
        if move is None:
            return F, trace, iteration - 1, True, blocked
        description = move.describe(cand.points)
        if not cfg.accepts(move.cost, old, n):
            threshold = old * (1.0 - GREEDY_SLACK) if cfg.greedy else cfg.factor(n) * old
            blocked = BlockedImprovement(iteration=iteration, old_cost=old, new_cost=move.cost,
                                         threshold=threshold, swap=description)
            logger.info("improvement blocked by threshold", old=old, new=move.cost,
                        threshold=threshold)
            return F, trace, iteration - 1, True, blocked

        F = apply_swap(F, move, cand.points)
        if repair is not None:
            F = repair(F, iteration)
        new = f * len(F) + float(sq_dist_matrix(C, F).min(axis=1).sum())
        trace.append(TraceEntry(iteration=iteration, cost=new, swap=description))
        logger.debug("swap accepted", iteration=iteration, cost=new, swap=description)
        old = new

    logger.warning("local search hit the iteration limit", iterations=cfg.max_iterations, cost=old)
    return F, trace, cfg.max_iterations, False, blocked


def solve_sosfl(C, f: float, cfg: Optional[LocalSearchConfig] = None,
                candidates: Optional[CandidateSet] = None) -> SolveResult:
    """Local search started from one facility at every client"""
    cfg = cfg or LocalSearchConfig()
    if not f > 0:
        raise InvalidInputError(f"facility cost f must be > 0, got {f}")
    C = as_point_set(C)
    cand = candidates or cfg.candidates.build(C, cfg.seed)

    F, trace, iterations, converged, blocked = run_local_search(C, C, f, cfg, cand)
    cost = sosfl_cost(C, F, f)
    logger.info("sosfl solved", n=len(C), facilities=len(F), cost=cost.total,
                iterations=iterations, converged=converged)
    return SolveResult(
        solution=F,
        cost=cost,
        trace=tuple(trace),
        iterations=iterations,
        converged=converged,
        factor=cfg.factor(len(C)),
        blocked=blocked,
        extras={"f": f, "epsilon": cfg.epsilon, "swap_cap": cfg.swap_cap,
                "candidates": str(cfg.candidates), "greedy": cfg.greedy},
    )
