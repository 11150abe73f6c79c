"""
geoclust

Local search for sum-of-squares facility location and bicriteria k-means in
Euclidean space, together with the ball separator, PARTITION, balanced grouping
and exact oracles used to check the local-search guarantees on real instances.

Version: 1.0.0
"""

__version__ = "1.0.0"
__author__ = "geoclust developers"
__description__ = "Geometric local search clustering with analysis checkers"
__license__ = "MIT"
__created__ = "2026-10-19T00:00:00Z"

from .candidates import CandidateSet, CandidateStrategy
from .config import GeoclustConfig, GeoclustSettings, get_settings
from .exceptions import (
    GeoclustError,
    GroupingError,
    InvalidInputError,
    LemmaViolationError,
    PartitionError,
    SeparatorError,
)
from .geometry import CostBreakdown, kmeans_cost, sosfl_cost, sq_dist
from .grouping import GroupedCollection, group_parts, verify_grouping
from .instances import InstanceSpec, gen_instance
from .log import configure_logging, get_logger
from .oracle import OracleResult, exact_kmeans, exact_sosfl
from .partition import PartitionOutput, PartitionParams, run_partition, verify_partition
from .separator import SeparatorParams, SeparatorResult, separate, verify_contract
from .solver_kmeans import BicriteriaConfig, solve_kmeans_bicriteria
from .solver_sosfl import LocalSearchConfig, SolveResult, find_improving_swap, solve_sosfl

__all__ = [
    "BicriteriaConfig",
    "CandidateSet",
    "CandidateStrategy",
    "CostBreakdown",
    "GeoclustConfig",
    "GeoclustError",
    "GeoclustSettings",
    "GroupedCollection",
    "GroupingError",
    "InstanceSpec",
    "InvalidInputError",
    "LemmaViolationError",
    "LocalSearchConfig",
    "OracleResult",
    "PartitionError",
    "PartitionOutput",
    "PartitionParams",
    "SeparatorError",
    "SeparatorParams",
    "SeparatorResult",
    "SolveResult",
    "configure_logging",
    "exact_kmeans",
    "exact_sosfl",
    "find_improving_swap",
    "gen_instance",
    "get_logger",
    "get_settings",
    "group_parts",
    "kmeans_cost",
    "run_partition",
    "separate",
    "solve_kmeans_bicriteria",
    "solve_sosfl",
    "sosfl_cost",
    "sq_dist",
    "verify_contract",
    "verify_grouping",
    "verify_partition",
]

# Package metadata
PACKAGE_INFO = {
    "name": "geoclust",
    "version": __version__,
    "author": __author__,
    "description": __description__,
    "license": __license__,
    "created": __created__,
    "problems": [
        "sosfl",
        "kmeans",
    ],
    "checkers": [
        "separator_contract",
        "observation",
        "reassignment_certificates",
        "grouping",
        "oracle_ratio",
    ],
    "candidate_strategies": [
        "subset",
        "sampled",
        "grid",
        "clients",
        "auto",
    ],
}


def get_package_info():
    """Get package information"""
    return PACKAGE_INFO.copy()


def get_version():
    """Get current version"""
    return __version__


def get_author():
    """Get package author"""
    return __author__


configure_logging(get_settings().effective_log_level)
logger = get_logger(__name__)
logger.info(f"geoclust v{__version__} initialized", author=__author__)
