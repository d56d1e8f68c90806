"""Heuristic ground labeling for pretraining.

Points are hashed into a horizontal orthogonal grid; a cell is ground when
the mean, spread, and standard deviation of its heights all fall under their
thresholds. Every point inherits its cell's binary label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import ConfigError, EmptyInputError
from .labels import GROUND, NON_GROUND, PointLabels


@dataclass(frozen=True)
class AutoLabelConfig:
    """Grid size and height thresholds, all in meters.

    ``max_height_mean`` is relative to the sensor origin and is typically
    negative (ground lies below the sensor; the default assumes a mount
    about 1.7 m up).
    """

    cell_size: float = 0.5
    max_height_mean: float = -1.4
    max_height_spread: float = 0.15
    max_height_stddev: float = 0.05

    def __post_init__(self):
        if self.cell_size <= 0 or self.max_height_spread <= 0 or self.max_height_stddev <= 0:
            raise ConfigError("cell_size and height thresholds must be positive")


def auto_label(cloud: PointCloud, cfg: AutoLabelConfig = AutoLabelConfig()) -> PointLabels:
    """Label every point ground/non-ground by thresholding per-cell height stats."""
    n = len(cloud)
    if n == 0:
        raise EmptyInputError("cannot auto-label an empty cloud")
    ix = np.floor(cloud.forward.astype(np.float64) / cfg.cell_size).astype(np.int64)
    iy = np.floor(cloud.left.astype(np.float64) / cfg.cell_size).astype(np.int64)
    _, inv = np.unique(np.stack([ix, iy]), axis=1, return_inverse=True)
    up = cloud.up.astype(np.float64)
    counts = np.bincount(inv)
    mean = np.bincount(inv, weights=up) / counts
    sq = np.bincount(inv, weights=up * up) / counts
    std = np.sqrt(np.maximum(sq - mean * mean, 0.0))
    hi = np.full(counts.shape, -np.inf)
    lo = np.full(counts.shape, np.inf)
    np.maximum.at(hi, inv, up)
    np.minimum.at(lo, inv, up)
    ground_cell = (
        (mean <= cfg.max_height_mean)
        & (hi - lo <= cfg.max_height_spread)
        & (std <= cfg.max_height_stddev)
    )
    out = np.where(ground_cell[inv], GROUND, NON_GROUND).astype(np.uint8)
    return PointLabels(out, cloud.frame_id)
