"""
geoclust Test Suite

Tests for the geometry kernel, separator, PARTITION and its checkers, grouping,
candidate sets, both local-search solvers, the exact oracles, the experiment
harness, the CLI and the MCP tool server.
"""

from pathlib import Path

import pytest

__all__ = [
    "run_all_tests",
    "run_fast_tests",
    "TEST_CONFIG",
    "SAMPLE_POINTS",
    "get_points",
]

# Test configuration
TEST_CONFIG = {
    "configs_dir": Path(__file__).resolve().parent.parent / "configs",
    "test_categories": [
        "unit",
        "integration",
        "slow",
        "server",
        "cli",
        "analysis",
    ],
}

# Sample point sets used across the suite
SAMPLE_POINTS = {
    "pair_1d": [[0.0], [1.0]],
    "four_1d": [[0.0], [2.0], [3.0], [5.0]],
    "triangle": [[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]],
    "square": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
    "two_clusters": [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]],
}


def get_points(name="pair_1d"):
    """Get a sample point set by name"""
    return SAMPLE_POINTS.get(name, SAMPLE_POINTS["pair_1d"])


def run_all_tests():
    """Run all test suites, slow acceptance runs included"""
    return pytest.main(["tests/", "-v", "--cov=geoclust", "--cov=server"])


def run_fast_tests():
    """Run everything except the acceptance-scale suites"""
    return pytest.main(["tests/", "-v", "-m", "not slow"])
