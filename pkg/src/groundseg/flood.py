"""Seed-flood ground annotation over the bin grid.

A seed marks one occupied cell as ground; the flood walks the ring in both
circular directions, stopping just before the first breakpoint (a step
higher than ``t1`` against the previous cell or ``t2`` against the seed) or
at an unoccupied cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import CH_HEIGHT, BinGrid, DenseFrame
from .errors import ConfigError, InvalidSeedError, StateError
from .labels import GROUND, NON_GROUND, UNLABELED, PointLabels

__all__ = [
    "FloodConfig", "SeedPoint", "PointLabels", "GROUND", "NON_GROUND",
    "UNLABELED", "flood_ring", "apply_seeds", "toggle_points",
]


@dataclass(frozen=True)
class FloodConfig:
    """Height thresholds in meters: ``t1`` per step, ``t2`` against the seed."""

    t1: float = 0.03
    t2: float = 0.07

    def __post_init__(self):
        if not 0 < self.t1 <= self.t2:
            raise ConfigError("thresholds must satisfy 0 < t1 <= t2")


@dataclass(frozen=True)
class SeedPoint:
    """Cell-resolution seed: one (ring, azimuth column) of the bin grid."""

    ring: int
    column: int


def flood_ring(heights: np.ndarray, occupied: np.ndarray, seed_col: int,
               cfg: FloodConfig) -> set[int]:
    """Flood outward from a seed cell along one circular ring.

    Returns the set of flooded column indices, seed included. A candidate
    cell breaks the walk (and is itself excluded) when its height differs
    from the previous cell by more than ``t1`` or from the seed by more than
    ``t2``; unoccupied cells break the walk too. The two directional walks
    stop when they meet.
    """
    heights = np.asarray(heights, dtype=np.float64)
    occupied = np.asarray(occupied, dtype=bool)
    n = len(heights)
    seed_col = int(seed_col)
    if not 0 <= seed_col < n:
        raise IndexError(f"seed column {seed_col} out of range for {n} cells")
    if not occupied[seed_col]:
        raise InvalidSeedError(f"seed cell {seed_col} is unoccupied")
    h_seed = heights[seed_col]
    flooded = {seed_col}
    for step in (1, -1):
        prev = seed_col
        c = (seed_col + step) % n
        while c not in flooded:
            if not occupied[c]:
                break
            if abs(heights[c] - heights[prev]) > cfg.t1:
                break
            if abs(heights[c] - h_seed) > cfg.t2:
                break
            flooded.add(c)
            prev = c
            c = (c + step) % n
    return flooded


def apply_seeds(grid: BinGrid, frame: DenseFrame, seeds, cfg: FloodConfig,
                base: PointLabels) -> PointLabels:
    """Flood every seed on its ring and mark the flooded cells' points GROUND.

    Labels outside flooded cells are preserved; the result is independent of
    seed order. The frame must be unnormalized (floods compare raw heights).
    """
    if frame.normalized:
        raise StateError("flooding needs raw heights; pass an unnormalized frame")
    if len(base) != grid.num_points:
        raise ValueError(f"{len(base)} labels for {grid.num_points} points")
    out = np.array(base.labels)
    for seed in seeds:
        r, c = int(seed.ring), int(seed.column)
        if not (0 <= r < grid.num_rings and 0 <= c < grid.num_columns):
            raise IndexError(f"seed ({r}, {c}) outside the {grid.shape} grid")
        cols = flood_ring(frame.values[CH_HEIGHT, r], frame.occupancy[r], c, cfg)
        for col in cols:
            out[grid.cell_indices(r, col)] = GROUND
    return PointLabels(out, base.frame_id)


def toggle_points(labels: PointLabels, indices, value: int) -> PointLabels:
    """Set exactly the listed point indices to ``value``."""
    if value not in (GROUND, NON_GROUND, UNLABELED):
        raise ValueError(f"invalid label value {value}")
    idx = np.asarray(sorted(indices), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= len(labels)):
        raise IndexError("point index out of range")
    out = np.array(labels.labels)
    out[idx] = value
    return PointLabels(out, labels.frame_id)
