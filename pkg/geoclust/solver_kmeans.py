"""
Bicriteria local search for k-means with a budget of ceil((1+5*eps)k) centers.
"""

import math
from typing import List, Literal, Optional

import numpy as np
from pydantic import Field

from .candidates import CandidateSet
from .exceptions import InvalidInputError
from .geometry import CostBreakdown, PointSet, as_point_set, kmeans_cost, sq_dist_matrix
from .log import get_logger
from .solver_sosfl import LocalSearchConfig, SolveResult, run_local_search

logger = get_logger(__name__)


class BicriteriaConfig(LocalSearchConfig):
    """Local search settings plus k, the initializer and optional given centers"""

    k: int = Field(default=2, ge=1)
    epsilon: float = Field(default=0.2, ge=0, le=1)
    initializer: Literal["singleswap_surrogate", "d2_seeding", "given"] = "singleswap_surrogate"
    initial_centers: Optional[List[List[float]]] = None

    @property
    def budget(self) -> int:
        return center_budget(self.k, self.epsilon)


def center_budget(k: int, epsilon: float) -> int:
    """ceil((1+5*eps)k), and at least k+1 when eps > 0"""
    return max(k + (1 if epsilon > 0 else 0), math.ceil((1.0 + 5.0 * epsilon) * k - 1e-9))


def d2_seeding(P, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of k seeds drawn with probability proportional to squared distance"""
    P = as_point_set(P)
    n = len(P)
    k = min(k, n)
    chosen = [int(rng.integers(n))]
    closest = sq_dist_matrix(P, P[chosen]).min(axis=1)
    while len(chosen) < k:
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a seed
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        closest = np.minimum(closest, sq_dist_matrix(P, P[[nxt]])[:, 0])
    return np.array(chosen, dtype=int)


def singleswap_surrogate(P, k: int, rng: np.random.Generator, max_iterations: int = 10_000) -> np.ndarray:
    """D^2 seeds improved by single swaps over client positions until none gains a 1/n factor"""
    P = as_point_set(P)
    n = len(P)
    centers = list(d2_seeding(P, k, rng))
    dist = sq_dist_matrix(P, P)
    factor = 1.0 - 1.0 / n
    cost = float(dist[:, centers].min(axis=1).sum())

    for _ in range(max_iterations):
        best = None
        for slot in range(len(centers)):
            others = centers[:slot] + centers[slot + 1:]
            base = dist[:, others].min(axis=1) if others else np.full(n, np.inf)
            costs = np.minimum(base[:, None], dist).sum(axis=0)
            idx = int(np.argmin(costs))
            if best is None or costs[idx] < best[0]:
                best = (float(costs[idx]), slot, idx)
        if best is None or not best[0] < factor * cost:
            break
        cost, slot, idx = best
        centers[slot] = idx
    return np.array(centers, dtype=int)


def pad_centers(K, P, budget: int, seed: int = 0) -> PointSet:
    """Append client points that are not centers yet (duplicates once exhausted)"""
    P = as_point_set(P)
    K = as_point_set(K, allow_empty=True, dim=P.shape[1])
    if len(K) > budget:
        raise InvalidInputError(f"|K|={len(K)} exceeds the budget {budget}")
    need = budget - len(K)
    if need == 0:
        return K

    rng = np.random.default_rng(seed)
    if len(K):
        used = (sq_dist_matrix(P, K) == 0).any(axis=1)
    else:
        used = np.zeros(len(P), dtype=bool)
    fresh = rng.permutation(np.flatnonzero(~used))[:need]
    extra = [P[fresh]]
    if len(fresh) < need:
        extra.append(P[rng.choice(len(P), size=need - len(fresh))])
    return as_point_set(np.vstack([K] + extra))


def initialize_kmeans(P, k: int, epsilon: float, cfg: Optional[BicriteriaConfig] = None) -> PointSet:
    """Initial centers padded to exactly the center budget"""
    cfg = cfg or BicriteriaConfig(k=k, epsilon=epsilon)
    P = as_point_set(P)
    budget = center_budget(k, epsilon)
    rng = np.random.default_rng(cfg.seed)

    if cfg.initializer == "given":
        if cfg.initial_centers is None:
            raise InvalidInputError("initializer 'given' needs initial_centers")
        K = as_point_set(cfg.initial_centers, dim=P.shape[1])
        if len(K) > budget:
            logger.warning("given centers truncated", given=len(K), budget=budget)
            K = as_point_set(K[:budget])
        elif len(K) < budget:
            logger.warning("given centers padded", given=len(K), budget=budget)
    elif cfg.initializer == "d2_seeding":
        K = P[d2_seeding(P, k, rng)]
    else:
        K = P[singleswap_surrogate(P, k, rng, cfg.max_iterations)]
    return pad_centers(K, P, budget, cfg.seed)


def solve_kmeans_bicriteria(P, cfg: Optional[BicriteriaConfig] = None,
                            candidates: Optional[CandidateSet] = None) -> SolveResult:
    """Multi-swap descent that keeps exactly the center budget"""
    cfg = cfg or BicriteriaConfig()
    P = as_point_set(P)
    budget = cfg.budget
    K = initialize_kmeans(P, cfg.k, cfg.epsilon, cfg)
    cand = candidates or cfg.candidates.build(P, cfg.seed)

    def repair(centers: PointSet, iteration: int) -> PointSet:
        return pad_centers(centers, P, budget, cfg.seed + iteration)

    K, trace, iterations, converged, blocked = run_local_search(
        P, K, 0.0, cfg, cand, max_facilities=budget, repair=repair
    )
    cost = kmeans_cost(P, K)
    logger.info("kmeans solved", n=len(P), k=cfg.k, budget=budget, cost=cost,
                iterations=iterations, converged=converged)
    return SolveResult(
        solution=K,
        cost=CostBreakdown.of(0.0, cost),
        trace=tuple(trace),
        iterations=iterations,
        converged=converged,
        factor=cfg.factor(len(P)),
        blocked=blocked,
        extras={"budget": budget, "k": cfg.k, "epsilon": cfg.epsilon,
                "swap_cap": cfg.swap_cap, "candidates": str(cfg.candidates),
                "greedy": cfg.greedy},
    )
