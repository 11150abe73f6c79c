"""
Exact brute-force solvers for tiny instances.

Both oracles enumerate set partitions of the points; an optimal facility or center of
a block is its centroid, so each partition is scored by f times its block count (SOS-FL
only) plus the within-block squared error.
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .config import get_settings
from .exceptions import EnumerationGuardError, InvalidInputError
from .geometry import PointSet, as_point_set
from .log import get_logger

logger = get_logger(__name__)

BELL_NUMBERS = (1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597)


@dataclass(frozen=True)
class OracleResult:
    opt_cost: float
    opt_partition: Tuple[Tuple[int, ...], ...]
    opt_centers: PointSet
    mode: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "opt_cost": self.opt_cost,
            "opt_partition": [list(block) for block in self.opt_partition],
            "opt_centers": self.opt_centers.tolist(),
        }


def _guard(n: int, max_n: Optional[int]) -> None:
    limit = max_n if max_n is not None else get_settings().oracle_max_n
    if n > limit:
        logger.error("oracle guard refused instance", n=n, limit=limit)
        raise EnumerationGuardError(f"oracle limited to n <= {limit} points, got {n}")


def _block_masks(n: int, max_blocks: int) -> Iterator[List[int]]:
    """Block bitmasks of every partition, in restricted-growth-string order"""
    blocks: List[int] = []

    def place(i: int) -> Iterator[List[int]]:
        if i == n:
            yield blocks
            return
        bit = 1 << i
        for b in range(len(blocks)):
            blocks[b] |= bit
            yield from place(i + 1)
            blocks[b] &= ~bit
        if len(blocks) < max_blocks:
            blocks.append(bit)
            yield from place(i + 1)
            blocks.pop()

    yield from place(0)


def _members(mask: int, n: int) -> Tuple[int, ...]:
    return tuple(i for i in range(n) if mask >> i & 1)


def enumerate_partitions(n: int, max_blocks: Optional[int] = None,
                         max_n: Optional[int] = None) -> Iterator[List[List[int]]]:
    """Every set partition of {0..n-1} with at most max_blocks blocks, exactly once"""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    _guard(n, max_n)
    limit = n if max_blocks is None else max_blocks
    if limit < 1:
        raise InvalidInputError(f"max_blocks must be >= 1, got {max_blocks}")
    for masks in _block_masks(n, limit):
        yield [list(_members(m, n)) for m in masks]


def subset_sse(P: PointSet) -> np.ndarray:
    """Within-subset squared error for every bitmask over the points, about each block centroid"""
    n = len(P)
    masks = np.arange(1 << n)
    member = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    count = member.sum(axis=1)
    shifted = P - P.mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        centroids = (member @ shifted) / count[:, None]
    centroids[0] = 0.0
    residual = shifted[None, :, :] - centroids[:, None, :]
    return np.einsum("mi,mij,mij->m", member, residual, residual)


def _solve(P: PointSet, max_blocks: int, f: float, mode: str, max_n: Optional[int]) -> OracleResult:
    n = len(P)
    _guard(n, max_n)
    sse = subset_sse(P)

    best_cost = np.inf
    best_masks: List[int] = []
    for masks in _block_masks(n, max_blocks):
        cost = f * len(masks) + sum(sse[m] for m in masks)
        if cost < best_cost:
            best_cost = cost
            best_masks = list(masks)

    partition = tuple(_members(m, n) for m in best_masks)
    centers = as_point_set(np.array([P[list(block)].mean(axis=0) for block in partition]))
    logger.debug("oracle solved", mode=mode, n=n, cost=float(best_cost), blocks=len(partition))
    return OracleResult(opt_cost=float(best_cost), opt_partition=partition,
                        opt_centers=centers, mode=mode)


def exact_sosfl(C, f: float, max_n: Optional[int] = None) -> OracleResult:
    """Optimal SOS-FL cost over all set partitions of C"""
    if not f > 0:
        raise InvalidInputError(f"facility cost f must be > 0, got {f}")
    C = as_point_set(C)
    return _solve(C, len(C), f, "sosfl", max_n)


def exact_kmeans(P, k: int, max_n: Optional[int] = None) -> OracleResult:
    """Optimal k-means cost over all partitions into at most k blocks"""
    P = as_point_set(P)
    if not 1 <= k <= len(P):
        raise InvalidInputError(f"k must be in [1, {len(P)}], got {k}")
    return _solve(P, k, 0.0, "kmeans", max_n)
