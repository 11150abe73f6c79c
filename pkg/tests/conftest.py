"""
Shared fixtures
"""

import numpy as np
import pytest

from geoclust.instances import InstanceSpec, gen_instance
from geoclust.partition import PartitionParams, run_partition

from . import get_points


@pytest.fixture
def pair_1d():
    """Clients 0 and 1 on the line"""
    return np.array(get_points("pair_1d"))


@pytest.fixture
def four_1d():
    """P = 0, 2, 3, 5 on the line"""
    return np.array(get_points("four_1d"))


@pytest.fixture
def uniform_400():
    """400 uniform points in the unit square, seed 7"""
    return gen_instance(InstanceSpec(n=400, d=2, seed=7))


@pytest.fixture(scope="module")
def partition_instance():
    """|L| = |O| = 200 in the plane, 150 clients, eps = 0.5 and mu = 16"""
    L = gen_instance(InstanceSpec(n=200, d=2, seed=11))
    O = gen_instance(InstanceSpec(n=200, d=2, seed=12))
    C = gen_instance(InstanceSpec(n=150, d=2, seed=13))
    params = PartitionParams(gamma=4.0)
    out = run_partition(L, O, 0.5, params)
    return {"L": L, "O": O, "C": C, "params": params, "out": out}


@pytest.fixture
def write_points(tmp_path):
    """Write rows to a CSV under tmp_path and return its path"""

    def _write(rows, name="points.csv", header=True):
        path = tmp_path / name
        lines = []
        if header:
            lines.append(",".join(f"x{j}" for j in range(len(rows[0]))))
        lines.extend(",".join(repr(float(v)) for v in row) for row in rows)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write
