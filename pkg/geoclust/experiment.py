"""
Experiment orchestration: TOML configs, per-instance pipelines, invariant suites
and JSON/CSV reports.
"""

import json
import statistics
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .candidates import CandidateStrategy
from .config import get_settings
from .exceptions import GroupingError, InvalidInputError, InvariantViolation
from .geometry import PointSet, as_point_set, read_points_csv, sse
from .grouping import (
    GroupedCollection,
    GroupingReport,
    group_parts,
    group_size_limit,
    signed_parts,
    surplus_precondition,
    verify_grouping,
)
from .instances import InstanceSpec, gen_instance
from .log import get_logger
from .oracle import exact_kmeans, exact_sosfl
from .partition import PartitionParams, PartitionVerification, run_partition, verify_partition
from .separator import SeparatorParams, sample_queries, separate, verify_contract
from .solver_kmeans import BicriteriaConfig, solve_kmeans_bicriteria
from .solver_sosfl import (
    LocalSearchConfig,
    SolveResult,
    descent_iteration_bound,
    find_improving_swap,
    solve_sosfl,
)

logger = get_logger(__name__)

SCHEMA_VERSION = 1
RATIO_TOLERANCE = 1e-9

PathLike = Union[str, Path]


class QualityGate(BaseModel):
    """Suite-level acceptance thresholds over oracle ratios"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    enabled: bool = True
    ratio_target: float = Field(default=1.05, ge=1)
    ratio_ceiling: float = Field(default=1.25, ge=1)
    share: float = Field(default=0.9, gt=0, le=1)


class ExperimentSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "experiment"
    oracle: Literal["auto", "off"] = "auto"
    checks: List[Literal["descent", "oracle", "separator", "observation", "lemmas", "grouping"]] = [
        "descent", "oracle", "separator", "observation", "lemmas", "grouping",
    ]
    partition_epsilon: float = Field(default=0.5, gt=0, le=1)
    partition_gamma: float = Field(default=64.0, gt=0)
    partition_alpha: float = Field(default=8.0, gt=0)
    partition_beta: Optional[float] = Field(default=None, gt=0)
    separator_mu: int = Field(default=25, ge=1)
    separator_queries: int = Field(default=10_000, ge=1)
    include_timing: bool = False
    quality: QualityGate = QualityGate()


class InstanceEntry(InstanceSpec):
    """One [[instances]] table: an instance source plus the problem to run on it"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    problem: Literal["sosfl", "kmeans", "separator", "partition"]
    n: int = Field(default=8, ge=1)
    input: Optional[str] = None
    repeat: int = Field(default=1, ge=1)
    f: Optional[float] = Field(default=None, gt=0)
    f_scale: Optional[float] = Field(default=None, gt=0)
    k: int = Field(default=2, ge=1)
    epsilon: float = Field(default=0.2, ge=0, le=1)
    swap_cap: int = Field(default=3, ge=1)
    candidates: str = "auto"
    greedy: bool = False
    mu: Optional[int] = Field(default=None, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: Literal[1]
    experiment: ExperimentSection = ExperimentSection()
    instances: List[InstanceEntry] = []


def load_config(path: PathLike) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
        config = ExperimentConfig.model_validate(raw)
    except tomllib.TOMLDecodeError as e:
        raise InvalidInputError(f"{path}: invalid TOML: {e}") from e
    except ValidationError as e:
        raise InvalidInputError(f"{path}: invalid experiment config: {e}") from e

    base = path.parent
    resolved = []
    for entry in config.instances:
        if entry.input is not None:
            source = Path(entry.input)
            if not source.is_absolute():
                source = base / source
            if not source.is_file():
                raise FileNotFoundError(f"{path}: input not found: {source}")
            entry = entry.model_copy(update={"input": str(source)})
        resolved.append(entry)
    return config.model_copy(update={"instances": resolved})


@dataclass
class ExperimentRow:
    instance_id: str
    problem: str
    solver_cost: Optional[float] = None
    oracle_cost: Optional[float] = None
    ratio: Optional[float] = None
    iterations: Optional[int] = None
    wall_time: float = 0.0
    checks: Dict[str, bool] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.checks.values())

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data = {
            "instance_id": self.instance_id,
            "problem": self.problem,
            "solver_cost": self.solver_cost,
            "oracle_cost": self.oracle_cost,
            "ratio": self.ratio,
            "iterations": self.iterations,
            "checks": self.checks,
            "passed": self.passed,
            "details": self.details,
            "error": self.error,
        }
        if include_timing:
            data["wall_time"] = self.wall_time
        return data


@dataclass
class ExperimentReport:
    name: str
    rows: List[ExperimentRow] = field(default_factory=list)
    include_timing: bool = False
    quality: QualityGate = field(default_factory=QualityGate)

    def quality_checks(self) -> Dict[str, bool]:
        """Share of SOS-FL ratios on target, the ratio ceiling and k-means rows within OPT_k"""
        if not self.quality.enabled:
            return {}
        gate = self.quality
        checks: Dict[str, bool] = {}
        ratios = [row.ratio for row in self.rows if row.problem == "sosfl" and row.ratio is not None]
        if ratios:
            on_target = sum(1 for r in ratios if r <= gate.ratio_target + RATIO_TOLERANCE)
            checks["sosfl_ratio_target"] = on_target >= gate.share * len(ratios) - RATIO_TOLERANCE
            checks["sosfl_ratio_ceiling"] = all(r <= gate.ratio_ceiling + RATIO_TOLERANCE for r in ratios)
        within = [row.details["bicriteria_within_opt_k"] for row in self.rows
                  if "bicriteria_within_opt_k" in row.details]
        if within:
            checks["kmeans_within_opt_k"] = sum(within) >= gate.share * len(within) - RATIO_TOLERANCE
        return checks

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows) and all(self.quality_checks().values())

    @property
    def failures(self) -> List[str]:
        out = []
        for row in self.rows:
            if row.error:
                out.append(f"{row.instance_id}: {row.error}")
            out.extend(f"{row.instance_id}: {name}" for name, ok in row.checks.items() if not ok)
        out.extend(f"aggregate: {name}" for name, ok in self.quality_checks().items() if not ok)
        return out

    def raise_for_failures(self) -> None:
        if not self.passed:
            failures = self.failures
            raise InvariantViolation(f"{len(failures)} failed check(s): " + "; ".join(failures[:10]))

    def aggregate(self) -> Dict[str, Any]:
        ratios = [row.ratio for row in self.rows if row.ratio is not None]
        summary: Dict[str, Any] = {
            "instances": len(self.rows),
            "passed": self.passed,
            "failed_rows": sum(1 for row in self.rows if not row.passed),
        }
        if ratios:
            summary.update({
                "mean_ratio": statistics.fmean(ratios),
                "median_ratio": statistics.median(ratios),
                "max_ratio": max(ratios),
                "ratio_le_1_05": sum(1 for r in ratios if r <= 1.05),
                "ratio_le_1_25": sum(1 for r in ratios if r <= 1.25),
            })
        within = [row.details["bicriteria_within_opt_k"] for row in self.rows
                  if "bicriteria_within_opt_k" in row.details]
        if within:
            summary["bicriteria_within_opt_k"] = sum(within)
        quality = self.quality_checks()
        if quality:
            summary["quality"] = quality
        return summary

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "schema_version": SCHEMA_VERSION,
            "aggregate": self.aggregate(),
            "rows": [row.to_dict(self.include_timing) for row in self.rows],
        }


def to_json(payload: Dict[str, Any]) -> str:
    """Sorted-key JSON with a generated_at timestamp"""
    stamped = dict(payload)
    stamped["generated_at"] = datetime.now(timezone.utc).isoformat()
    return json.dumps(stamped, sort_keys=True, indent=2, default=_json_default)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serialisable: {type(value).__name__}")


def write_json(payload: Dict[str, Any], path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(to_json(payload) + "\n", encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write report to {path}: {e}") from e
    return path


def write_csv(report: ExperimentReport, path: PathLike) -> Path:
    path = Path(path)
    frame = pd.DataFrame([
        {
            "instance_id": row.instance_id,
            "problem": row.problem,
            "solver_cost": row.solver_cost,
            "oracle_cost": row.oracle_cost,
            "ratio": row.ratio,
            "iterations": row.iterations,
            "wall_time": row.wall_time,
            "passed": row.passed,
        }
        for row in report.rows
    ], columns=["instance_id", "problem", "solver_cost", "oracle_cost", "ratio",
                "iterations", "wall_time", "passed"])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as e:
        raise OSError(f"cannot write report to {path}: {e}") from e
    return path


def descent_ok(result: SolveResult, greedy: bool) -> bool:
    """Every accepted step beats the threshold and the step count respects the bound"""
    costs = [entry.cost for entry in result.trace]
    for old, new in zip(costs, costs[1:]):
        limit = old * (1.0 - 1e-12) if greedy else result.factor * old
        if not new < limit:
            return False
    if greedy or len(costs) < 2:
        return True
    return result.iterations <= descent_iteration_bound(costs[0], costs[-1], result.factor)


def _oracle_enabled(section: ExperimentSection, n: int) -> bool:
    return section.oracle == "auto" and n <= get_settings().oracle_max_n


def _points(entry: InstanceEntry, seed_offset: int = 0) -> PointSet:
    if entry.input is not None and seed_offset == 0:
        return read_points_csv(entry.input)
    spec = InstanceSpec(**entry.model_dump(include=set(InstanceSpec.model_fields)))
    return gen_instance(spec.model_copy(update={"seed": spec.seed + seed_offset}))


def _run_sosfl(entry: InstanceEntry, section: ExperimentSection, row: ExperimentRow) -> None:
    C = _points(entry)
    f = entry.f if entry.f is not None else (entry.f_scale or 1.0) * max(sse(C), 1e-12) / len(C)
    cfg = LocalSearchConfig(epsilon=max(entry.epsilon, 1e-9), swap_cap=entry.swap_cap,
                            greedy=entry.greedy, seed=entry.seed,
                            candidates=CandidateStrategy.parse(entry.candidates))
    result = solve_sosfl(C, f, cfg)
    row.solver_cost = result.cost.total
    row.iterations = result.iterations
    row.details.update({"f": f, "facilities": len(result.solution), "converged": result.converged})

    if "descent" in section.checks:
        row.checks["descent"] = descent_ok(result, entry.greedy)
        if result.converged:
            cand = cfg.candidates.build(C, cfg.seed)
            row.checks["local_optimum"] = find_improving_swap(result.solution, C, f, cfg, cand) is None
    if "oracle" in section.checks and _oracle_enabled(section, len(C)):
        opt = exact_sosfl(C, f)
        row.oracle_cost = opt.opt_cost
        row.ratio = result.cost.total / opt.opt_cost
        row.checks["oracle_lower_bound"] = row.ratio >= 1.0 - RATIO_TOLERANCE


def _run_kmeans(entry: InstanceEntry, section: ExperimentSection, row: ExperimentRow) -> None:
    P = _points(entry)
    cfg = BicriteriaConfig(k=entry.k, epsilon=entry.epsilon, swap_cap=entry.swap_cap,
                           greedy=entry.greedy, seed=entry.seed,
                           candidates=CandidateStrategy.parse(entry.candidates))
    result = solve_kmeans_bicriteria(P, cfg)
    cost = result.cost.total
    row.solver_cost = cost
    row.iterations = result.iterations
    row.details.update({"budget": cfg.budget, "k": cfg.k, "converged": result.converged})
    row.checks["cardinality"] = len(result.solution) == cfg.budget

    if "descent" in section.checks:
        row.checks["descent"] = descent_ok(result, entry.greedy)
    if "oracle" in section.checks and _oracle_enabled(section, len(P)) and cfg.k <= len(P):
        opt_k = exact_kmeans(P, cfg.k).opt_cost
        row.oracle_cost = opt_k
        row.ratio = cost / opt_k if opt_k > 0 else (1.0 if cost == 0 else float("inf"))
        row.details["bicriteria_within_opt_k"] = cost <= opt_k * (1.0 + RATIO_TOLERANCE) + 1e-12
        opt_budget = exact_kmeans(P, min(cfg.budget, len(P))).opt_cost
        row.details["oracle_at_budget"] = opt_budget
        row.checks["oracle_lower_bound"] = cost >= opt_budget * (1.0 - RATIO_TOLERANCE) - 1e-12


def _run_separator(entry: InstanceEntry, section: ExperimentSection, row: ExperimentRow) -> None:
    X = _points(entry)
    mu = entry.mu or section.separator_mu
    params = SeparatorParams(radius_jitter_seed=entry.seed)
    result = separate(X, mu, params)
    queries = sample_queries(X, section.separator_queries, entry.seed + 1)
    contract = verify_contract(X, result, queries)
    row.details.update({
        "mu": mu,
        "inside_count": result.inside_count,
        "net": len(result.net),
        "densify_rounds": result.densify_rounds,
        "fallback": result.fallback,
        "violations": contract.violations,
        "worst_ratio": contract.worst_ratio,
    })
    if "separator" in section.checks:
        row.checks["separator"] = contract.passed
        if not result.fallback:
            row.checks["inside_window"] = (
                params.c_lo * mu <= result.inside_count <= params.c_hi * mu
            )


def _partition_params(section: ExperimentSection) -> PartitionParams:
    return PartitionParams(alpha=section.partition_alpha, gamma=section.partition_gamma,
                           beta=section.partition_beta)


def _run_partition(entry: InstanceEntry, section: ExperimentSection, row: ExperimentRow) -> None:
    L = _points(entry)
    O = _points(entry, seed_offset=1)
    C = _points(entry, seed_offset=2)
    report = verify(L, O, section.partition_epsilon, C=C, params=_partition_params(section),
                    k=entry.k)
    row.details.update(report.to_dict())
    part = report.partition
    if "observation" in section.checks:
        row.checks["observation"] = part.observation.passed
    if "lemmas" in section.checks:
        row.checks["lemmas"] = part.certificates_passed
    if "separator" in section.checks:
        row.checks["separator"] = part.contracts_passed
    row.checks["partition_cover"] = report.cover_ok
    if "grouping" in section.checks and report.grouping is not None:
        row.checks["grouping"] = report.grouping.passed


_PIPELINES = {
    "sosfl": _run_sosfl,
    "kmeans": _run_kmeans,
    "separator": _run_separator,
    "partition": _run_partition,
}


def _instance_id(entry: InstanceEntry) -> str:
    if entry.input:
        return f"{entry.problem}:{Path(entry.input).name}"
    spec = InstanceSpec(**entry.model_dump(include=set(InstanceSpec.model_fields)))
    return f"{entry.problem}:{spec.instance_id}"


def _run_entry(entry: InstanceEntry, section: ExperimentSection) -> ExperimentRow:
    instance_id = _instance_id(entry)
    row = ExperimentRow(instance_id=instance_id, problem=entry.problem)
    started = time.perf_counter()
    try:
        _PIPELINES[entry.problem](entry, section, row)
    except Exception as e:
        logger.error("instance failed", instance=instance_id, error=str(e))
        row.error = f"{type(e).__name__}: {e}"
    row.wall_time = time.perf_counter() - started
    logger.info("instance done", instance=instance_id, passed=row.passed,
                cost=row.solver_cost, ratio=row.ratio)
    return row


def expand_instances(config: ExperimentConfig) -> List[InstanceEntry]:
    """One entry per repeat, seeds advanced by the repeat index"""
    tasks = []
    for entry in config.instances:
        for r in range(entry.repeat):
            tasks.append(entry.model_copy(update={"seed": entry.seed + r, "repeat": 1}))
    return tasks


def run_experiment(config: Union[ExperimentConfig, PathLike], threads: Optional[int] = None) -> ExperimentReport:
    """Run every configured instance, in parallel, merging rows in config order"""
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    section = config.experiment
    tasks = expand_instances(config)
    workers = max(1, min(threads or get_settings().threads, max(1, len(tasks))))

    logger.info("experiment started", name=section.name, instances=len(tasks), workers=workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda entry: _run_entry(entry, section), tasks))

    report = ExperimentReport(name=section.name, rows=rows, include_timing=section.include_timing,
                              quality=section.quality)
    logger.info("experiment finished", name=section.name, passed=report.passed,
                failed=len(report.failures))
    return report


@dataclass
class VerifyReport:
    partition: PartitionVerification
    cover_ok: bool
    grouping: Optional[GroupingReport] = None
    grouping_skipped: Optional[str] = None
    surplus: Dict[str, Any] = field(default_factory=dict)
    groups: Optional[GroupedCollection] = None

    @property
    def passed(self) -> bool:
        grouping_ok = self.grouping is None or self.grouping.passed
        return self.partition.passed and self.cover_ok and grouping_ok

    def failures(self) -> List[str]:
        part = self.partition
        checks = {
            "observation": part.observation.passed,
            "certificates": part.certificates_passed,
            "separator_contracts": part.contracts_passed,
            "partition_cover": self.cover_ok,
            "grouping": self.grouping is None or self.grouping.passed,
        }
        return [name for name, ok in checks.items() if not ok]

    def raise_for_failures(self) -> None:
        if not self.passed:
            raise InvariantViolation("verify failed: " + ", ".join(self.failures()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "partition": self.partition.to_dict(),
            "cover_ok": self.cover_ok,
            "grouping": {
                "report": self.grouping.to_dict() if self.grouping else None,
                "skipped": self.grouping_skipped,
                "surplus": self.surplus,
                "collection": self.groups.to_dict() if self.groups else None,
            },
        }


def _cover_ok(out, n_local: int, n_global: int) -> bool:
    local = np.concatenate([p.L_idx for p in out.parts])
    global_ = np.concatenate([p.O_idx for p in out.parts])
    return (len(local) == n_local and np.array_equal(np.sort(local), np.arange(n_local))
            and len(global_) == n_global and np.array_equal(np.sort(global_), np.arange(n_global)))


def verify(L, O, epsilon: float, C=None, params: Optional[PartitionParams] = None,
           k: Optional[int] = None, grouping: Optional[GroupedCollection] = None,
           queries: int = 1000) -> VerifyReport:
    """Partition L and O and run every checker; failures are recorded, not raised"""
    L = as_point_set(L)
    O = as_point_set(O)
    C = as_point_set(C) if C is not None else as_point_set(np.vstack([L, O]))
    out = run_partition(L, O, epsilon, params)
    report = VerifyReport(partition=verify_partition(C, out, queries=queries),
                          cover_ok=_cover_ok(out, len(L), len(O)))

    parts = signed_parts(out)
    l = group_size_limit(out)  # noqa: E741
    if grouping is not None:
        report.groups = grouping
        report.grouping = verify_grouping(grouping, out.parts)
        return report

    report.surplus = surplus_precondition(parts, l, k=k, epsilon=epsilon if k else None)
    try:
        report.groups = group_parts(parts, l)
    except GroupingError as e:
        logger.info("grouping skipped", reason=str(e))
        report.grouping_skipped = str(e)
        return report
    report.grouping = verify_grouping(report.groups, out.parts)
    return report


@dataclass
class BenchRow:
    solver: str
    n: int
    d: int
    seed: int
    cost: float
    iterations: int
    wall_time: float


def run_bench(sizes: Sequence[int], d: int = 2, repeats: int = 3, seed: int = 0,
              swap_cap: int = 2, k: int = 3, epsilon: float = 0.2,
              f_scale: float = 0.3) -> List[BenchRow]:
    """Time both solvers over uniform instances of the given sizes"""
    rows = []
    for n in sizes:
        for r in range(repeats):
            points = gen_instance(InstanceSpec(n=n, d=d, seed=seed + r))
            f = f_scale * max(sse(points), 1e-12) / n
            started = time.perf_counter()
            result = solve_sosfl(points, f, LocalSearchConfig(swap_cap=swap_cap, seed=seed + r))
            rows.append(BenchRow("sosfl", n, d, seed + r, result.cost.total, result.iterations,
                                 time.perf_counter() - started))
            started = time.perf_counter()
            result = solve_kmeans_bicriteria(
                points, BicriteriaConfig(k=min(k, n), epsilon=epsilon, swap_cap=swap_cap, seed=seed + r)
            )
            rows.append(BenchRow("kmeans", n, d, seed + r, result.cost.total, result.iterations,
                                 time.perf_counter() - started))
            logger.info("bench instance", n=n, repeat=r)
    return rows


def bench_frame(rows: Sequence[BenchRow]) -> pd.DataFrame:
    return pd.DataFrame([row.__dict__ for row in rows],
                        columns=["solver", "n", "d", "seed", "cost", "iterations", "wall_time"])
