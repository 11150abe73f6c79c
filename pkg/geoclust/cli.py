"""
Command-line interface for geoclust
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from .candidates import CandidateStrategy
from .config import get_settings
from .exceptions import EXIT_OK, InvalidInputError, InvariantViolation, exit_code_for
from .experiment import (
    bench_frame,
    load_config,
    run_bench,
    run_experiment,
    to_json,
    verify,
    write_csv,
    write_json,
)
from .geometry import read_points_csv
from .instances import InstanceSpec, gen_instance
from .log import configure_logging, get_logger
from .oracle import exact_kmeans, exact_sosfl
from .partition import PartitionParams, run_partition, verify_partition
from .separator import SeparatorParams, sample_queries, separate, verify_contract
from .solver_kmeans import BicriteriaConfig, solve_kmeans_bicriteria
from .solver_sosfl import LocalSearchConfig, solve_sosfl

logger = get_logger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise InvalidInputError(message)


def _emit(payload: Dict[str, Any], path: Optional[str]) -> None:
    if path:
        write_json(payload, path)
        logger.info("report written", path=path)
    else:
        sys.stdout.write(to_json(payload) + "\n")


def _cmd_gen(args) -> int:
    spec = InstanceSpec(
        generator=args.generator, n=args.n, d=args.d, seed=args.seed, box_size=args.box_size,
        components=args.components, spread=args.spread, noise=args.noise,
    )
    gen_instance(spec, args.out)
    return EXIT_OK


def _cmd_solve_sosfl(args) -> int:
    C = read_points_csv(args.input)
    cfg = LocalSearchConfig(
        epsilon=args.epsilon, swap_cap=args.swap_cap, greedy=args.greedy, seed=args.seed,
        improvement_factor=args.improvement_factor, max_iterations=args.max_iterations,
        candidates=CandidateStrategy.parse(args.candidates),
    )
    result = solve_sosfl(C, args.f, cfg)
    _emit(result.to_dict(), args.json)
    return EXIT_OK


def _cmd_solve_kmeans(args) -> int:
    P = read_points_csv(args.input)
    cfg = BicriteriaConfig(
        k=args.k, epsilon=args.epsilon, swap_cap=args.swap_cap, greedy=args.greedy, seed=args.seed,
        improvement_factor=args.improvement_factor, max_iterations=args.max_iterations,
        initializer=args.initializer, candidates=CandidateStrategy.parse(args.candidates),
    )
    result = solve_kmeans_bicriteria(P, cfg)
    _emit(result.to_dict(), args.json)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    points = read_points_csv(args.input)
    if args.mode == "sosfl":
        if args.f is None:
            raise InvalidInputError("--f is required for --mode sosfl")
        result = exact_sosfl(points, args.f)
    else:
        if args.k is None:
            raise InvalidInputError("--k is required for --mode kmeans")
        result = exact_kmeans(points, args.k)
    _emit(result.to_dict(), args.json)
    return EXIT_OK


def _partition_params(args) -> PartitionParams:
    return PartitionParams(
        alpha=args.alpha, gamma=args.gamma, beta=args.beta,
        separator=SeparatorParams(radius_jitter_seed=args.seed),
    )


def _cmd_partition(args) -> int:
    L = read_points_csv(args.local)
    O = read_points_csv(args.global_)
    out = run_partition(L, O, args.epsilon, _partition_params(args))
    payload = out.to_dict()
    failed = False
    if args.check:
        C = read_points_csv(args.clients or args.local)
        report = verify_partition(C, out, seed=args.seed)
        payload["check"] = report.to_dict()
        failed = not report.passed
    _emit(payload, args.json)
    if failed:
        raise InvariantViolation("partition check failed")
    return EXIT_OK


def _cmd_separator(args) -> int:
    X = read_points_csv(args.input)
    result = separate(X, args.mu, SeparatorParams(radius_jitter_seed=args.seed))
    contract = verify_contract(X, result, sample_queries(X, args.queries, args.seed + 1))
    payload = result.to_dict()
    payload.update({
        "violations": contract.violations,
        "worst_ratio": contract.worst_ratio,
        "vacuous_inside": contract.vacuous_inside,
        "vacuous_outside": contract.vacuous_outside,
    })
    _emit(payload, args.json)
    if not contract.passed:
        raise InvariantViolation(f"separator contract violated at {contract.violations} queries")
    return EXIT_OK


def _cmd_verify(args) -> int:
    L = read_points_csv(args.local)
    O = read_points_csv(args.global_)
    C = read_points_csv(args.clients) if args.clients else None
    report = verify(L, O, args.epsilon, C=C, params=_partition_params(args), k=args.k,
                    queries=args.queries)
    _emit(report.to_dict(), args.json)
    report.raise_for_failures()
    return EXIT_OK


def _cmd_experiment(args) -> int:
    config = load_config(args.config)
    report = run_experiment(config, threads=args.threads)
    _emit(report.to_dict(), args.json)
    if args.csv:
        write_csv(report, args.csv)
    report.raise_for_failures()
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as e:
        raise InvalidInputError(f"bad --sizes {args.sizes!r}") from e
    rows = run_bench(sizes, d=args.d, repeats=args.repeats, seed=args.seed,
                     swap_cap=args.swap_cap)
    frame = bench_frame(rows)
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.csv, index=False)
    else:
        frame.to_csv(sys.stdout, index=False)
    return EXIT_OK


def _add_search_flags(p: argparse.ArgumentParser, epsilon: float) -> None:
    settings = get_settings()
    p.add_argument("--input", required=True, help="points CSV")
    p.add_argument("--epsilon", type=float, default=epsilon)
    p.add_argument("--swap-cap", type=int, default=settings.default_swap_cap)
    p.add_argument("--candidates", default="auto",
                   help="subset:K | sampled:NxS | grid:R | clients | auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--greedy", action="store_true", help="accept any strict improvement")
    p.add_argument("--improvement-factor", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=settings.max_iterations)
    p.add_argument("--json", default=None, help="write the result here instead of stdout")


def _add_partition_flags(p: argparse.ArgumentParser) -> None:
    defaults = PartitionParams()
    p.add_argument("--local", required=True, help="local solution CSV")
    p.add_argument("--global", dest="global_", required=True, help="global solution CSV")
    p.add_argument("--clients", default=None, help="clients CSV for the certificate checks")
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=defaults.gamma)
    p.add_argument("--alpha", type=float, default=defaults.alpha)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geoclust", description="Local search clustering and its analysis checks")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a seeded instance")
    p.add_argument("--generator", default="uniform_box",
                   choices=["uniform_box", "gaussian_mixture", "grid_plus_noise"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--box-size", type=float, default=1.0)
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--spread", type=float, default=0.05)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_gen)

    p = sub.add_parser("solve-sosfl", help="local search for sum-of-squares facility location")
    _add_search_flags(p, epsilon=0.5)
    p.add_argument("--f", type=float, required=True, help="facility opening cost")
    p.set_defaults(handler=_cmd_solve_sosfl)

    p = sub.add_parser("solve-kmeans", help="bicriteria local search for k-means")
    _add_search_flags(p, epsilon=0.2)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--initializer", default="singleswap_surrogate",
                   choices=["singleswap_surrogate", "d2_seeding"])
    p.set_defaults(handler=_cmd_solve_kmeans)

    p = sub.add_parser("oracle", help="exact brute-force optimum for tiny instances")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=["sosfl", "kmeans"], required=True)
    p.add_argument("--f", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(handler=_cmd_oracle)

    p = sub.add_parser("partition", help="run PARTITION on a local and a global solution")
    _add_partition_flags(p)
    p.add_argument("--check", action="store_true", help="also run the observation and certificate checks")
    p.set_defaults(handler=_cmd_partition)

    p = sub.add_parser("separator", help="compute a ball separator and check its contract")
    p.add_argument("--input", required=True)
    p.add_argument("--mu", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries", type=int, default=10_000)
    p.add_argument("--json", default=None)
    p.set_defaults(handler=_cmd_separator)

    p = sub.add_parser("verify", help="run every partition and grouping checker")
    _add_partition_flags(p)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--queries", type=int, default=1000)
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("experiment", help="run a TOML experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--json", default=None)
    p.add_argument("--csv", default=None, help="per-row CSV including wall times")
    p.add_argument("--threads", type=int, default=None, help="defaults to GEOCLUST_THREADS")
    p.set_defaults(handler=_cmd_experiment)

    p = sub.add_parser("bench", help="time both solvers over generated instances")
    p.add_argument("--sizes", default="8,16,32")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--swap-cap", type=int, default=2)
    p.add_argument("--csv", default=None)
    p.set_defaults(handler=_cmd_bench)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level or settings.effective_log_level)
        handler: Callable[[Any], int] = args.handler
        return handler(args)
    except Exception as e:
        code = exit_code_for(e)
        logger.error("command failed", error=str(e), exit_code=code)
        sys.stderr.write(f"geoclust: error: {e}\n")
        return code


if __name__ == "__main__":
    sys.exit(main())
