"""
Ball separator with a small net.

For a point set X and a size parameter mu, `separate` returns a ball B holding
Theta(mu) points of X and a net Z such that, for every point p of space,

    d(p, Z) <= max(d(p, X \\ B), d(p, X n B)).

The net is the frontier of the ball: the points on one side of the sphere whose
Voronoi cells (in X) touch a cell of the other side. Walking from p towards its
nearest point on the opposite side, the first change of Voronoi owner happens at a
point equidistant from an inside and an outside neighbour, so either neighbour is
within the walked distance of p.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial import Delaunay, QhullError

from .exceptions import InvalidInputError, SeparatorError
from .geometry import PointSet, as_point_set, bounding_box, sq_dist_matrix
from .log import get_logger

logger = get_logger(__name__)

MEMBERSHIP_SLACK = 1e-12
CONTRACT_TOLERANCE = 1e-9


class SeparatorParams(BaseModel):
    """Constants of the separator (asymptotic in theory, explicit here)"""

    model_config = ConfigDict(frozen=True)

    c_lo: float = Field(default=0.25, ge=0.25)
    c_hi: float = 4.0
    kappa: float = Field(default=8.0, gt=0)
    shell_layers: int = Field(default=4, ge=1)
    radius_jitter_seed: int = 0
    alpha: float = Field(default=8.0, ge=1)
    max_rounds: int = Field(default=6, ge=0)
    self_check_queries: int = Field(default=512, ge=0)

    @model_validator(mode="after")
    def _window(self) -> "SeparatorParams":
        if self.c_hi < self.c_lo:
            raise ValueError("c_hi must be >= c_lo")
        return self

    def net_budget(self, mu: int, d: int) -> float:
        return self.kappa * mu ** (1.0 - 1.0 / d)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise InvalidInputError(f"ball radius must be finite and >= 0, got {self.radius}")

    def contains(self, points: PointSet) -> np.ndarray:
        """Closed-ball membership mask with a small relative slack"""
        if len(points) == 0:
            return np.zeros(0, dtype=bool)
        sq = sq_dist_matrix(points, self.center.reshape(1, -1))[:, 0]
        return sq <= self.radius ** 2 * (1.0 + MEMBERSHIP_SLACK)

    def to_dict(self) -> Dict[str, Any]:
        return {"center": self.center.tolist(), "radius": float(self.radius)}


@dataclass(frozen=True)
class SeparatorResult:
    ball: Ball
    net: PointSet
    inside_count: int
    densify_rounds: int
    mu: int
    fallback: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ball": self.ball.to_dict(),
            "net": self.net.tolist(),
            "inside_count": self.inside_count,
            "densify_rounds": self.densify_rounds,
            "fallback": self.fallback,
            "mu": self.mu,
        }


@dataclass(frozen=True)
class ContractReport:
    """Outcome of checking d(p,Z) <= max(d(p,X\\B), d(p,X n B)) on queries"""

    n_queries: int
    violations: int
    worst_ratio: float
    violating_queries: List[int] = field(default_factory=list)
    vacuous_inside: bool = False
    vacuous_outside: bool = False

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_queries": self.n_queries,
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
            "violating_queries": self.violating_queries[:50],
            "vacuous_inside": self.vacuous_inside,
            "vacuous_outside": self.vacuous_outside,
        }


def _min_dist(queries: PointSet, S: PointSet) -> np.ndarray:
    if len(S) == 0:
        return np.full(len(queries), np.inf)
    return np.sqrt(sq_dist_matrix(queries, S).min(axis=1))


def verify_contract(X, result: SeparatorResult, queries) -> ContractReport:
    """Evaluate both sides of the separator inequality for every query point"""
    X = as_point_set(X)
    queries = as_point_set(queries, allow_empty=True)
    if len(queries) == 0:
        raise InvalidInputError("verify_contract needs at least one query")

    inside = result.ball.contains(X)
    lhs = _min_dist(queries, result.net)
    d_in = _min_dist(queries, X[inside])
    d_out = _min_dist(queries, X[~inside])
    rhs = np.maximum(d_in, d_out)

    bad = lhs > rhs * (1.0 + CONTRACT_TOLERANCE)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    ratio = np.where(np.isinf(rhs), 0.0, ratio)

    return ContractReport(
        n_queries=len(queries),
        violations=int(bad.sum()),
        worst_ratio=float(ratio.max()) if len(ratio) else 0.0,
        violating_queries=[int(i) for i in np.flatnonzero(bad)],
        vacuous_inside=not inside.any(),
        vacuous_outside=bool(inside.all()),
    )


def sample_queries(X, count: int, seed: int) -> PointSet:
    """Query mixture: uniform box points, points of X, far-field points"""
    X = as_point_set(X)
    rng = np.random.default_rng(seed)
    lo, hi = bounding_box(X)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    diameter = float(np.linalg.norm(span))
    d = X.shape[1]

    n_box = count // 3
    n_on = count // 3
    n_far = count - n_box - n_on

    box = lo + rng.random((n_box, d)) * span
    on_x = X[rng.integers(0, len(X), size=n_on)]
    directions = rng.normal(size=(n_far, d))
    directions /= np.maximum(np.linalg.norm(directions, axis=1, keepdims=True), 1e-300)
    far = (lo + hi) / 2.0 + directions * 10.0 * diameter
    return as_point_set(np.vstack([box, on_x, far]), allow_empty=True)


def _frontier(X: PointSet, inside: np.ndarray) -> Tuple[PointSet, bool]:
    """Smaller side of the inside/outside Voronoi frontier; flag set if Qhull failed"""
    uniq, inverse = np.unique(X, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    inside_u = np.zeros(len(uniq), dtype=bool)
    inside_u[inverse[inside]] = True
    n_u, d = uniq.shape

    adjacent_in = np.zeros(n_u, dtype=bool)
    adjacent_out = np.zeros(n_u, dtype=bool)

    if d == 1:
        # np.unique sorts, so Voronoi neighbours are consecutive rows
        cross = inside_u[:-1] != inside_u[1:]
        adjacent_in[:-1] |= cross
        adjacent_in[1:] |= cross
        adjacent_out = adjacent_in.copy()
    elif n_u <= d + 1:
        adjacent_in[:] = True
        adjacent_out[:] = True
    else:
        try:
            tri = Delaunay(uniq, qhull_options="QJ")
        except (QhullError, ValueError) as e:
            logger.warning("delaunay failed, using inside points as net", error=str(e))
            return as_point_set(X[inside], allow_empty=True), True
        indptr, indices = tri.vertex_neighbor_vertices
        for v in range(n_u):
            neighbours = indices[indptr[v]:indptr[v + 1]]
            if np.any(inside_u[neighbours] != inside_u[v]):
                adjacent_in[v] = True
        adjacent_out = adjacent_in

    front_in = uniq[adjacent_in & inside_u]
    front_out = uniq[adjacent_out & ~inside_u]
    net = front_in if len(front_in) <= len(front_out) else front_out
    return as_point_set(net, allow_empty=True), False


def _snap_radius(sorted_dists: np.ndarray, target: float, lo: int, hi: int) -> Optional[int]:
    """Inside count m in [lo, hi] closest to the target radius with a gap after it"""
    m0 = int(np.searchsorted(sorted_dists, target, side="right"))
    m0 = min(max(m0, lo), hi)
    for offset in range(0, hi - lo + 1):
        for m in (m0 - offset, m0 + offset):
            if lo <= m <= hi and sorted_dists[m - 1] < sorted_dists[m]:
                return m
    return None


def _better_shell(candidate, best, budget: float) -> bool:
    """Within budget the shell removing the most points wins, otherwise the smaller net"""
    _, net, m = candidate
    _, best_net, best_m = best
    fits, best_fits = len(net) <= budget, len(best_net) <= budget
    if fits != best_fits:
        return fits
    if fits:
        return m - len(net) > best_m - len(best_net)
    return len(net) < len(best_net)


def _fallback(X: PointSet, center: np.ndarray, sorted_dists: np.ndarray, mu: int,
              reason: str) -> SeparatorResult:
    gaps = np.flatnonzero(sorted_dists[:-1] < sorted_dists[1:])
    if len(gaps):
        m = int(gaps[np.argmin(np.abs(gaps + 1 - mu))]) + 1
        radius = (sorted_dists[m - 1] + sorted_dists[m]) / 2.0
    else:
        radius = 0.0
    ball = Ball(center=center, radius=float(radius))
    inside = ball.contains(X)
    logger.warning("separator fallback", reason=reason, inside=int(inside.sum()), mu=mu)
    return SeparatorResult(
        ball=ball,
        net=as_point_set(X[inside], allow_empty=True),
        inside_count=int(inside.sum()),
        densify_rounds=1,
        mu=mu,
        fallback=True,
    )


def separate(X, mu: int, params: Optional[SeparatorParams] = None) -> SeparatorResult:
    """Compute a ball with Theta(mu) points of X and a net satisfying the contract"""
    params = params or SeparatorParams()
    X = as_point_set(X)
    n, d = X.shape
    if mu < 1:
        raise InvalidInputError(f"mu must be >= 1, got {mu}")
    if n <= mu or n <= params.alpha * mu:
        raise SeparatorError(
            f"set too small to separate: |X|={n} <= alpha*mu={params.alpha * mu:g}"
        )

    dist = np.sqrt(sq_dist_matrix(X, X))
    kth = np.sort(dist, axis=1)[:, mu]
    center_idx = int(np.argmin(kth))
    center = X[center_idx].copy()
    order = np.argsort(dist[center_idx], kind="stable")
    sorted_dists = dist[center_idx][order]
    base_radius = float(sorted_dists[mu])

    m_lo = max(1, math.ceil(params.c_lo * mu))
    m_hi = min(math.floor(params.c_hi * mu), n - 1)
    if m_lo > m_hi:
        return _fallback(X, center, sorted_dists, mu, "empty inside-count window")

    budget = params.net_budget(mu, d)
    rng = np.random.default_rng(params.radius_jitter_seed)
    best = None
    rounds = 0
    for rounds in range(params.max_rounds + 1):
        spread = 2.0 ** (-rounds)
        for factor in 1.0 + rng.random(params.shell_layers) * spread:
            m = _snap_radius(sorted_dists, base_radius * factor, m_lo, m_hi)
            if m is None:
                continue
            ball = Ball(center=center, radius=float((sorted_dists[m - 1] + sorted_dists[m]) / 2.0))
            inside = ball.contains(X)
            if int(inside.sum()) != m:
                continue
            net, qhull_failed = _frontier(X, inside)
            if qhull_failed:
                return _fallback(X, center, sorted_dists, mu, "qhull failure")
            if best is None or _better_shell((ball, net, m), best, budget):
                best = (ball, net, m)
        if best is None:
            return _fallback(X, center, sorted_dists, mu, "inside-count window unattainable")
        if len(best[1]) <= budget:
            break
    else:
        logger.warning(
            "separator net over budget",
            net=len(best[1]), budget=round(budget, 3), rounds=rounds, mu=mu,
        )

    ball, net, m = best
    result = SeparatorResult(
        ball=ball, net=net, inside_count=m, densify_rounds=rounds, mu=mu, fallback=False
    )

    if params.self_check_queries:
        queries = sample_queries(X, params.self_check_queries, params.radius_jitter_seed + 1)
        report = verify_contract(X, result, np.vstack([queries, net]) if len(net) else queries)
        if not report.passed:
            return _fallback(X, center, sorted_dists, mu, "self-check violation")

    logger.debug(
        "separator built", inside=m, net=len(net), budget=round(budget, 3), rounds=rounds
    )
    return result
