"""
Candidate facility positions for the swap search.
"""

import math
import re
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial import KDTree

from .exceptions import EnumerationGuardError, InvalidInputError
from .geometry import PointSet, as_point_set, bounding_box
from .log import get_logger

logger = get_logger(__name__)

ENUMERATION_LIMIT = 1_000_000
DEDUP_TOLERANCE = 1e-12


class CandidateKind(str, Enum):
    SUBSET_CENTROIDS = "subset_centroids"
    SAMPLED_CENTROIDS = "sampled_centroids"
    GRID = "grid"
    CLIENTS = "clients"


@dataclass(frozen=True)
class CandidateSet:
    points: PointSet
    strategy_tag: CandidateKind

    def __len__(self) -> int:
        return len(self.points)


def dedup_points(points: np.ndarray) -> PointSet:
    """Drop points within relative 1e-12 (max norm) of an earlier kept point, keeping order"""
    if len(points) == 0:
        return as_point_set(points, allow_empty=True)
    scale = max(float(np.abs(points).max()), 1e-300)
    pairs = KDTree(points).query_pairs(DEDUP_TOLERANCE * scale, p=np.inf, output_type="ndarray")
    if len(pairs) == 0:
        return as_point_set(points)

    earlier: Dict[int, List[int]] = defaultdict(list)
    for i, j in np.sort(pairs, axis=1):
        earlier[int(j)].append(int(i))
    keep = np.ones(len(points), dtype=bool)
    for j in sorted(earlier):
        if any(keep[i] for i in earlier[j]):
            keep[j] = False
    return as_point_set(points[keep])


def subset_centroids(C, max_subset: int, limit: int = ENUMERATION_LIMIT) -> CandidateSet:
    """Centroids of every nonempty subset of C with at most max_subset points"""
    C = as_point_set(C)
    n = len(C)
    if max_subset < 1:
        raise InvalidInputError(f"max_subset must be >= 1, got {max_subset}")
    max_subset = min(max_subset, n)
    total = sum(math.comb(n, s) for s in range(1, max_subset + 1))
    if total > limit:
        raise EnumerationGuardError(
            f"{total} subsets exceed the enumeration guard {limit}; use sampled_centroids"
        )

    blocks = []
    for size in range(1, max_subset + 1):
        idx = np.array(list(combinations(range(n), size)), dtype=int)
        blocks.append(C[idx].mean(axis=1))
    return CandidateSet(dedup_points(np.vstack(blocks)), CandidateKind.SUBSET_CENTROIDS)


def sampled_centroids(C, n_samples: int, sample_size: int, seed: int = 0) -> CandidateSet:
    """The client points plus centroids of n_samples random subsets of sample_size points"""
    C = as_point_set(C)
    if n_samples < 1:
        raise InvalidInputError(f"n_samples must be >= 1, got {n_samples}")
    if not 1 <= sample_size <= len(C):
        raise InvalidInputError(f"sample_size must be in [1, {len(C)}], got {sample_size}")

    rng = np.random.default_rng(seed)
    samples = np.empty((n_samples, C.shape[1]))
    for s in range(n_samples):
        samples[s] = C[rng.choice(len(C), size=sample_size, replace=False)].mean(axis=0)
    return CandidateSet(dedup_points(np.vstack([C, samples])), CandidateKind.SAMPLED_CENTROIDS)


def grid_candidates(C, resolution: int, limit: int = ENUMERATION_LIMIT) -> CandidateSet:
    """resolution^d grid over the bounding box of C, inflated by 1%"""
    C = as_point_set(C)
    d = C.shape[1]
    if resolution < 1:
        raise InvalidInputError(f"resolution must be >= 1, got {resolution}")
    if resolution ** d > limit:
        raise EnumerationGuardError(f"grid of {resolution}^{d} points exceeds the guard {limit}")

    lo, hi = bounding_box(C)
    pad = 0.005 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    if resolution == 1:
        return CandidateSet(as_point_set(((lo + hi) / 2.0).reshape(1, -1)), CandidateKind.GRID)

    axes = [np.linspace(lo[j], hi[j], resolution) for j in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return CandidateSet(as_point_set(points), CandidateKind.GRID)


def client_candidates(C) -> CandidateSet:
    return CandidateSet(dedup_points(as_point_set(C)), CandidateKind.CLIENTS)


_STRATEGY = re.compile(
    r"^(?:(?P<auto>auto)|(?P<clients>clients)|subset:(?P<subset>\d+)"
    r"|sampled:(?P<samples>\d+)x(?P<size>\d+)|grid:(?P<grid>\d+))$"
)


class CandidateStrategy(BaseModel):
    """How the candidate set is built: subset:k, sampled:NxS, grid:R, clients or auto"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["auto", "subset", "sampled", "grid", "clients"] = "auto"
    max_subset: Optional[int] = Field(default=None, ge=1)
    n_samples: Optional[int] = Field(default=None, ge=1)
    sample_size: Optional[int] = Field(default=None, ge=1)
    resolution: Optional[int] = Field(default=None, ge=1)

    @classmethod
    def parse(cls, text: str) -> "CandidateStrategy":
        match = _STRATEGY.match(text.strip().lower())
        if not match:
            raise InvalidInputError(
                f"bad candidate strategy {text!r}; expected subset:K, sampled:NxS, grid:R, clients or auto"
            )
        if match["auto"]:
            return cls(kind="auto")
        if match["clients"]:
            return cls(kind="clients")
        if match["subset"]:
            return cls(kind="subset", max_subset=int(match["subset"]))
        if match["samples"]:
            return cls(kind="sampled", n_samples=int(match["samples"]),
                       sample_size=int(match["size"]))
        return cls(kind="grid", resolution=int(match["grid"]))

    def __str__(self) -> str:
        if self.kind == "subset":
            return f"subset:{self.max_subset}"
        if self.kind == "sampled":
            return f"sampled:{self.n_samples}x{self.sample_size}"
        if self.kind == "grid":
            return f"grid:{self.resolution}"
        return self.kind

    def resolve(self, n: int) -> "CandidateStrategy":
        """Replace auto by the concrete strategy for n clients"""
        if self.kind != "auto":
            return self
        if n <= 12:
            return CandidateStrategy(kind="subset", max_subset=n)
        return CandidateStrategy(kind="sampled", n_samples=500, sample_size=min(8, n))

    def build(self, C, seed: int = 0) -> CandidateSet:
        C = as_point_set(C)
        strategy = self.resolve(len(C))
        if strategy.kind == "subset":
            result = subset_centroids(C, strategy.max_subset)
        elif strategy.kind == "sampled":
            result = sampled_centroids(C, strategy.n_samples, min(strategy.sample_size, len(C)), seed)
        elif strategy.kind == "grid":
            result = grid_candidates(C, strategy.resolution)
        else:
            result = client_candidates(C)
        logger.debug("candidates built", strategy=str(strategy), count=len(result))
        return result
