"""
Seeded random instance generators.
"""

import math
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .geometry import PointSet, as_point_set, write_points_csv
from .log import get_logger

logger = get_logger(__name__)


class InstanceSpec(BaseModel):
    """Generator name, size and parameters; fully determined by the seed"""

    model_config = ConfigDict(frozen=True)

    generator: Literal["uniform_box", "gaussian_mixture", "grid_plus_noise"] = "uniform_box"
    n: int = Field(ge=1)
    d: int = Field(default=2, ge=1)
    seed: int = 0
    box_size: float = Field(default=1.0, gt=0)
    components: int = Field(default=3, ge=1)
    spread: float = Field(default=0.05, ge=0)
    noise: float = Field(default=0.01, ge=0)

    @property
    def instance_id(self) -> str:
        return f"{self.generator}-n{self.n}-d{self.d}-s{self.seed}"


def _uniform_box(spec: InstanceSpec, rng: np.random.Generator) -> np.ndarray:
    return rng.random((spec.n, spec.d)) * spec.box_size


def _gaussian_mixture(spec: InstanceSpec, rng: np.random.Generator) -> np.ndarray:
    centers = rng.random((spec.components, spec.d)) * spec.box_size
    labels = rng.integers(spec.components, size=spec.n)
    offsets = rng.normal(scale=spec.spread * spec.box_size, size=(spec.n, spec.d))
    return centers[labels] + offsets


def _grid_plus_noise(spec: InstanceSpec, rng: np.random.Generator) -> np.ndarray:
    side = max(1, math.ceil(spec.n ** (1.0 / spec.d) - 1e-9))
    cells = np.indices((side,) * spec.d).reshape(spec.d, -1).T[: spec.n]
    step = spec.box_size / side
    jitter = rng.normal(scale=spec.noise * spec.box_size, size=(spec.n, spec.d))
    return (cells + 0.5) * step + jitter


_GENERATORS = {
    "uniform_box": _uniform_box,
    "gaussian_mixture": _gaussian_mixture,
    "grid_plus_noise": _grid_plus_noise,
}


def gen_instance(spec: InstanceSpec, path: Optional[Union[str, Path]] = None) -> PointSet:
    """Generate the points of spec; also written as CSV when a path is given"""
    rng = np.random.default_rng(spec.seed)
    points = as_point_set(_GENERATORS[spec.generator](spec, rng))
    if path is not None:
        write_points_csv(points, path)
        logger.info("instance written", instance=spec.instance_id, path=str(path))
    return points
