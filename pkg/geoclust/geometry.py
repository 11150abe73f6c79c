"""
Core geometry: points, squared distances, clustering costs and Voronoi assignment.

Every other module speaks in terms of the helpers here. A point set is a read-only
float64 array of shape (n, d); ties between equidistant references always go to the
lowest index.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from .exceptions import DimensionMismatchError, EmptySetError, InvalidInputError
from .log import get_logger

logger = get_logger(__name__)

PointSet = np.ndarray
Point = np.ndarray
PathLike = Union[str, Path]


def as_point_set(points, allow_empty: bool = False, dim: Optional[int] = None) -> PointSet:
    """Validate points and return them as a read-only (n, d) float64 array"""
    arr = np.array(points, dtype=np.float64)
    if arr.ndim == 1:
        # a flat list of scalars is a one-dimensional point set
        arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, dim or 1)
    if arr.ndim != 2:
        raise InvalidInputError(f"points must form an (n, d) array, got shape {arr.shape}")
    if arr.shape[0] == 0 and not allow_empty:
        raise EmptySetError("empty point set")
    if arr.shape[1] < 1:
        raise InvalidInputError("points must have dimension d >= 1")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("points must have finite coordinates (no NaN/inf)")
    arr.setflags(write=False)
    return arr


def as_point(p) -> Point:
    arr = np.array(p, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise InvalidInputError("a point needs at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("points must have finite coordinates (no NaN/inf)")
    return arr


def empty_points(d: int) -> PointSet:
    return as_point_set(np.zeros((0, d)), allow_empty=True)


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )


@dataclass(frozen=True)
class CostBreakdown:
    """Opening cost, connection cost and their total"""

    facility_open_cost: float
    connection_cost: float
    total: float

    @classmethod
    def of(cls, facility_open_cost: float, connection_cost: float) -> "CostBreakdown":
        return cls(
            facility_open_cost=float(facility_open_cost),
            connection_cost=float(connection_cost),
            total=float(facility_open_cost) + float(connection_cost),
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "open": self.facility_open_cost,
            "connection": self.connection_cost,
            "total": self.total,
        }


def sq_dist(p, q) -> float:
    """Squared Euclidean distance between two points"""
    a, b = as_point(p), as_point(q)
    _check_dims(a, b)
    diff = a - b
    return float(np.dot(diff, diff))


def sq_dist_matrix(A: PointSet, B: PointSet) -> np.ndarray:
    """All squared distances, shape (|A|, |B|)"""
    _check_dims(A, B)
    if len(A) == 0 or len(B) == 0:
        return np.zeros((len(A), len(B)))
    return cdist(A, B, metric="sqeuclidean")


def nearest(p, S) -> Tuple[int, float]:
    """Index of the nearest point of S (lowest index on ties) and its squared distance"""
    a = as_point(p)
    S = as_point_set(S, allow_empty=True)
    if len(S) == 0:
        raise EmptySetError()
    _check_dims(a, S)
    dists = sq_dist_matrix(a.reshape(1, -1), S)[0]
    idx = int(np.argmin(dists))
    return idx, float(dists[idx])


def nearest_all(C: PointSet, S: PointSet) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised `nearest` for every row of C"""
    if len(S) == 0:
        raise EmptySetError()
    dists = sq_dist_matrix(C, S)
    idx = np.argmin(dists, axis=1)
    return idx, dists[np.arange(len(C)), idx]


def connection_cost(C: PointSet, F: PointSet) -> float:
    if len(C) == 0:
        return 0.0
    _, dists = nearest_all(C, F)
    return float(np.sum(dists))


def sosfl_cost(C, F, f: float) -> CostBreakdown:
    """f·|F| plus the sum of squared distances from clients to their nearest facility"""
    if not f > 0:
        raise InvalidInputError(f"facility cost f must be > 0, got {f}")
    C = as_point_set(C, allow_empty=True)
    F = as_point_set(F, allow_empty=True)
    if len(F) == 0:
        raise EmptySetError("empty facility set")
    _check_dims(C, F)
    return CostBreakdown.of(f * len(F), connection_cost(C, F))


def kmeans_cost(P, K) -> float:
    """Sum over P of the squared distance to the nearest center of K"""
    P = as_point_set(P, allow_empty=True)
    K = as_point_set(K, allow_empty=True)
    if len(K) == 0:
        raise EmptySetError("empty center set")
    _check_dims(P, K)
    return connection_cost(P, K)


def centroid(S) -> Point:
    """Coordinate-wise mean, the minimiser of the summed squared distance"""
    S = as_point_set(S, allow_empty=True)
    if len(S) == 0:
        raise EmptySetError("centroid of an empty set")
    return S.mean(axis=0)


def sse(S) -> float:
    """Summed squared distance of S about its centroid"""
    S = as_point_set(S, allow_empty=True)
    if len(S) == 0:
        return 0.0
    diff = S - S.mean(axis=0)
    return float(np.sum(diff * diff))


def voronoi_assign(C, R) -> Dict[int, List[int]]:
    """Map every reference index to the client indices in its Voronoi cell"""
    C = as_point_set(C, allow_empty=True)
    R = as_point_set(R, allow_empty=True)
    if len(R) == 0:
        raise EmptySetError()
    _check_dims(C, R)
    cells: Dict[int, List[int]] = {j: [] for j in range(len(R))}
    if len(C):
        owners, _ = nearest_all(C, R)
        for i, j in enumerate(owners):
            cells[int(j)].append(i)
    return cells


def bounding_box(S: PointSet) -> Tuple[np.ndarray, np.ndarray]:
    return S.min(axis=0), S.max(axis=0)


def read_points_csv(path: PathLike) -> PointSet:
    """Read a points CSV: one point per row, optional header, d inferred from row one"""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"points file not found: {path}")
    try:
        raw = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise InvalidInputError(f"{path}: no points") from e
    except pd.errors.ParserError as e:
        raise DimensionMismatchError(f"{path}: rows have inconsistent dimension") from e

    # a first row that does not parse as numbers is a header
    if pd.to_numeric(raw.iloc[0], errors="coerce").isna().any():
        raw = raw.iloc[1:]
    if raw.empty:
        raise InvalidInputError(f"{path}: no points")

    values = raw.apply(pd.to_numeric, errors="coerce")
    if values.isna().any().any():
        raise InvalidInputError(f"{path}: non-numeric, missing or ragged values")

    points = as_point_set(values.to_numpy(dtype=np.float64))
    logger.debug("points loaded", path=str(path), n=len(points), d=points.shape[1])
    return points


def write_points_csv(points: PointSet, path: PathLike) -> Path:
    path = Path(path)
    points = as_point_set(points, allow_empty=True)
    columns = [f"x{j}" for j in range(points.shape[1])]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(points, columns=columns).to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise OSError(f"cannot write points to {path}: {e}") from e
    return path
