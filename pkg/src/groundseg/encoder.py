"""Sparse-to-dense polar encoding of point clouds.

A cloud is partitioned into polar bins (one per ring and azimuth column),
each occupied bin is summarized by the per-channel mean of its points, empty
bins are filled by linear interpolation, and the result is normalized for
network input: height divided by a fixed constant, depth log-rescaled.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import labels as lbl
from .cloud import Point, PointCloud, UNASSIGNED_RING
from .errors import (
    ConfigError,
    DegeneratePointError,
    EmptyFrameError,
    MalformedFileError,
    MissingRingError,
    ShapeError,
    StateError,
)

CH_HEIGHT = 0
CH_DEPTH = 1
CH_INTENSITY = 2
NUM_CHANNELS = 3

# Depth values are floored here before the log rescale; zero-range returns
# are sensor noise and log(0) is undefined.
DEPTH_FLOOR = 0.01

_GSF_MAGIC = b"GSF1"


@dataclass(frozen=True)
class EncoderConfig:
    """Geometry of the dense frame.

    ``bin_width_deg`` is the azimuth extent of one column; columns must tile
    the full circle exactly. ``max_range`` limits evaluation only (``None``
    means unlimited) and does not affect encoding.
    """

    bin_width_deg: float = 1.0
    num_rings: int = 64
    height_norm: float = 3.0
    max_range: float | None = 60.0

    def __post_init__(self):
        if self.bin_width_deg <= 0:
            raise ConfigError("bin_width_deg must be positive")
        cols = 360.0 / self.bin_width_deg
        if abs(cols - round(cols)) > 1e-9:
            raise ConfigError(
                f"{self.bin_width_deg} deg columns do not tile 360 degrees"
            )
        if self.height_norm <= 0:
            raise ConfigError("height_norm must be positive")
        if self.num_rings < 1:
            raise ConfigError("num_rings must be positive")

    @property
    def num_columns(self) -> int:
        return round(360.0 / self.bin_width_deg)


@dataclass
class BinGrid:
    """Partition of a cloud's points into ring x azimuth-column cells.

    Stored in CSR form: ``sorted_indices`` lists point indices grouped by
    flat cell id, ``starts`` delimits each cell's run. ``point_cell`` maps
    every point to its flat cell id (-1 for skipped degenerate points).
    """

    num_rings: int
    num_columns: int
    point_cell: np.ndarray
    sorted_indices: np.ndarray
    starts: np.ndarray
    skipped: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.num_rings, self.num_columns)

    @property
    def num_points(self) -> int:
        return len(self.point_cell)

    def cell_indices(self, ring: int, column: int) -> np.ndarray:
        f = ring * self.num_columns + column
        return self.sorted_indices[self.starts[f]:self.starts[f + 1]]

    def counts(self) -> np.ndarray:
        return np.diff(self.starts).reshape(self.shape)


@dataclass
class DenseFrame:
    """Dense multi-channel image of one cloud.

    ``values`` is (channel, ring, column) with channels (height, depth,
    intensity); ``occupancy`` marks cells backed by real measurements rather
    than interpolation. Frames are immutable once built.
    """

    values: np.ndarray
    occupancy: np.ndarray
    normalized: bool = False
    frame_id: str = ""

    def __post_init__(self):
        self.values = np.array(self.values, dtype=np.float64)
        self.occupancy = np.array(self.occupancy, dtype=bool)
        if self.values.ndim != 3 or self.values.shape[0] != NUM_CHANNELS:
            raise ShapeError(f"expected (3, rings, columns) values, got {self.values.shape}")
        if self.occupancy.shape != self.values.shape[1:]:
            raise ShapeError("occupancy shape does not match values")
        if not np.isfinite(self.values).all():
            raise ValueError("non-finite cell values")
        self.values.flags.writeable = False
        self.occupancy.flags.writeable = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1:]


@dataclass
class LabelGrid:
    """Per-cell binary target with a validity mask.

    ``labeled`` is False for empty cells and cells whose points are all
    UNLABELED; those are excluded from the training loss.
    """

    ground: np.ndarray
    labeled: np.ndarray

    def __post_init__(self):
        self.ground = np.asarray(self.ground, dtype=bool)
        self.labeled = np.asarray(self.labeled, dtype=bool)
        if self.ground.shape != self.labeled.shape:
            raise ShapeError("ground/labeled shape mismatch")

    @property
    def shape(self) -> tuple[int, int]:
        return self.ground.shape


def polar_cone(p: Point, cfg: EncoderConfig) -> int:
    """Azimuth column index of a point."""
    if p.forward == 0.0 and p.left == 0.0:
        raise DegeneratePointError("azimuth undefined at the sensor axis")
    az = math.degrees(math.atan2(p.left, p.forward))
    return int(math.floor((az + 180.0) / cfg.bin_width_deg)) % cfg.num_columns


def bin_points(cloud: PointCloud, cfg: EncoderConfig) -> BinGrid:
    """Partition a cloud into polar bins.

    Every point with a valid ring lands in exactly one cell; points with an
    undefined azimuth are skipped and counted in ``skipped``.
    """
    n = len(cloud)
    ncols = cfg.num_columns
    ncells = cfg.num_rings * ncols
    if n == 0:
        return BinGrid(cfg.num_rings, ncols,
                       point_cell=np.empty(0, dtype=np.int64),
                       sorted_indices=np.empty(0, dtype=np.int64),
                       starts=np.zeros(ncells + 1, dtype=np.int64),
                       skipped=0)
    if (cloud.ring == UNASSIGNED_RING).any():
        raise MissingRingError("all points must carry ring indices before binning")
    if int(cloud.ring.max()) >= cfg.num_rings:
        raise ShapeError(
            f"cloud has ring {int(cloud.ring.max())} but the grid has {cfg.num_rings} rows"
        )
    az = cloud.azimuths_deg()
    cols = np.floor((az + 180.0) / cfg.bin_width_deg).astype(np.int64) % ncols
    flat = cloud.ring.astype(np.int64) * ncols + cols
    degenerate = (cloud.forward == 0.0) & (cloud.left == 0.0)
    flat[degenerate] = -1
    valid = np.flatnonzero(flat >= 0)
    order = valid[np.argsort(flat[valid], kind="stable")]
    counts = np.bincount(flat[valid], minlength=ncells)
    starts = np.zeros(ncells + 1, dtype=np.int64)
    np.cumsum(counts, out=starts[1:])
    return BinGrid(cfg.num_rings, ncols, point_cell=flat,
                   sorted_indices=order, starts=starts,
                   skipped=int(degenerate.sum()))


def encode_frame(cloud: PointCloud, cfg: EncoderConfig) -> tuple[DenseFrame, BinGrid]:
    """Encode a cloud into a dense frame of per-bin channel means.

    Occupied cells carry the arithmetic mean of their points' (height, range,
    intensity); empty cells are filled by ``interpolate_empty``. The result
    is not yet normalized.
    """
    grid = bin_points(cloud, cfg)
    ncells = cfg.num_rings * cfg.num_columns
    valid = np.flatnonzero(grid.point_cell >= 0)
    flat = grid.point_cell[valid]
    counts = np.bincount(flat, minlength=ncells).astype(np.float64)
    occ = counts > 0
    vals = np.zeros((NUM_CHANNELS, ncells))
    channels = (
        cloud.up.astype(np.float64)[valid],
        cloud.horizontal_ranges()[valid],
        cloud.intensity.astype(np.float64)[valid],
    )
    for ch, data in enumerate(channels):
        sums = np.bincount(flat, weights=data, minlength=ncells)
        np.divide(sums, counts, out=vals[ch], where=occ)
    shape = (cfg.num_rings, cfg.num_columns)
    frame = DenseFrame(vals.reshape((NUM_CHANNELS,) + shape), occ.reshape(shape),
                       normalized=False, frame_id=cloud.frame_id)
    return interpolate_empty(frame), grid


def interpolate_empty(frame: DenseFrame) -> DenseFrame:
    """Fill empty cells by linear interpolation from occupied ones.

    Rows are treated as circular and interpolated between their nearest
    occupied cells; rows with no occupied cell are interpolated vertically
    per column between the nearest non-empty rows (clamped at the borders).
    Occupied cells and the occupancy mask are untouched, so the operation is
    idempotent.
    """
    occ = frame.occupancy
    if not occ.any():
        raise EmptyFrameError("cannot interpolate a frame with zero occupied cells")
    nrows, ncols = frame.shape
    vals = np.array(frame.values)
    grid_x = np.arange(ncols, dtype=np.float64)
    row_has = occ.any(axis=1)
    for r in np.flatnonzero(row_has):
        idx = np.flatnonzero(occ[r])
        if idx.size == ncols:
            continue
        empty = ~occ[r]
        xp = np.concatenate(([idx[-1] - ncols], idx, [idx[0] + ncols]))
        for ch in range(NUM_CHANNELS):
            fp = vals[ch, r, idx]
            fp = np.concatenate(([fp[-1]], fp, [fp[0]]))
            vals[ch, r, empty] = np.interp(grid_x, xp, fp)[empty]
    hollow = np.flatnonzero(~row_has)
    if hollow.size:
        src = np.flatnonzero(row_has)
        pos = np.searchsorted(src, hollow)
        lo = src[np.clip(pos - 1, 0, src.size - 1)]
        hi = src[np.clip(pos, 0, src.size - 1)]
        span = np.where(hi > lo, hi - lo, 1).astype(np.float64)
        t = ((hollow - lo) / span)[:, None]
        for ch in range(NUM_CHANNELS):
            vals[ch, hollow, :] = (1.0 - t) * vals[ch, lo, :] + t * vals[ch, hi, :]
    return DenseFrame(vals, occ, frame.normalized, frame.frame_id)


def normalize(frame: DenseFrame, cfg: EncoderConfig) -> DenseFrame:
    """Rescale channels for network input: height/H, log depth, raw intensity."""
    if frame.normalized:
        raise StateError("frame is already normalized")
    vals = np.array(frame.values)
    vals[CH_HEIGHT] /= cfg.height_norm
    vals[CH_DEPTH] = np.log(np.maximum(vals[CH_DEPTH], DEPTH_FLOOR))
    return DenseFrame(vals, frame.occupancy, True, frame.frame_id)


def labels_to_grid(point_labels: lbl.PointLabels, grid: BinGrid) -> LabelGrid:
    """Aggregate per-point labels to per-cell targets by majority vote.

    Ties and empty cells vote non-ground; cells that contain no labeled
    point at all (and empty cells) are masked out of the loss.
    """
    if len(point_labels) != grid.num_points:
        raise ShapeError(
            f"{len(point_labels)} labels for {grid.num_points} points"
        )
    ncells = grid.num_rings * grid.num_columns
    valid = np.flatnonzero(grid.point_cell >= 0)
    flat = grid.point_cell[valid]
    counts = np.bincount(flat, minlength=ncells)
    ground_votes = np.bincount(
        flat, weights=(point_labels.labels[valid] == lbl.GROUND), minlength=ncells)
    known = np.bincount(
        flat, weights=(point_labels.labels[valid] != lbl.UNLABELED), minlength=ncells)
    ground = ground_votes * 2 > counts
    labeled = known > 0
    shape = (grid.num_rings, grid.num_columns)
    return LabelGrid(ground.reshape(shape), labeled.reshape(shape))


def grid_to_point_probs(probs, grid: BinGrid, cloud: PointCloud) -> np.ndarray:
    """Project per-cell ground probabilities back onto the points.

    Each point inherits the probability of its cell; points skipped at
    binning time get 0. ``probs`` may be a probability-map object exposing
    ``p_ground`` or a bare (rings, columns) array.
    """
    p = np.asarray(getattr(probs, "p_ground", probs), dtype=np.float64)
    if p.shape != grid.shape:
        raise ShapeError(f"probability shape {p.shape} != grid shape {grid.shape}")
    if len(cloud) != grid.num_points:
        raise ShapeError(f"cloud has {len(cloud)} points but the grid indexes {grid.num_points}")
    out = np.zeros(grid.num_points)
    valid = grid.point_cell >= 0
    out[valid] = p.ravel()[grid.point_cell[valid]]
    return out


def frame_bytes(frame: DenseFrame) -> bytes:
    nrows, ncols = frame.shape
    header = _GSF_MAGIC + struct.pack("<III", nrows, ncols, NUM_CHANNELS)
    return (header
            + frame.values.astype("<f4").tobytes()
            + frame.occupancy.astype(np.uint8).tobytes()
            + bytes([1 if frame.normalized else 0]))


def save_frame(frame: DenseFrame, path: str | Path) -> None:
    Path(path).write_bytes(frame_bytes(frame))


def load_frame(path: str | Path) -> DenseFrame:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 16 or blob[:4] != _GSF_MAGIC:
        raise MalformedFileError(f"{path}: not a dense-frame file")
    nrows, ncols, nch = struct.unpack("<III", blob[4:16])
    if nch != NUM_CHANNELS:
        raise MalformedFileError(f"{path}: expected {NUM_CHANNELS} channels, got {nch}")
    cells = nrows * ncols
    expect = 16 + 4 * nch * cells + cells + 1
    if len(blob) != expect:
        raise MalformedFileError(f"{path}: expected {expect} bytes, got {len(blob)}")
    vals = np.frombuffer(blob, dtype="<f4", count=nch * cells, offset=16)
    occ = np.frombuffer(blob, dtype=np.uint8, count=cells, offset=16 + 4 * nch * cells)
    return DenseFrame(vals.astype(np.float64).reshape(nch, nrows, ncols),
                      occ.reshape(nrows, ncols).astype(bool),
                      normalized=bool(blob[-1]), frame_id=path.stem)
