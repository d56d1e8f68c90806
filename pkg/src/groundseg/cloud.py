"""Point-cloud loading, ring derivation, and the canonical in-memory cloud.

Axis convention: ``forward``/``left``/``up`` with the sensor at the origin.
KITTI velodyne files store ``(x, y, z, intensity)`` with z pointing up, which
maps directly onto ``(forward, left, up, intensity)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedFileError, RingOverflowError

log = logging.getLogger(__name__)

UNASSIGNED_RING = -1

_STRIDES = {"xyzi": 16, "xyzir": 20}


@dataclass(frozen=True)
class Point:
    """One LiDAR return."""

    forward: float
    left: float
    up: float
    intensity: float
    ring: int = UNASSIGNED_RING


@dataclass
class PointCloud:
    """An ordered set of returns backed by column arrays.

    Order is the acquisition order of the source file; ring derivation
    depends on it. Arrays are frozen after construction so clouds can be
    shared across threads.
    """

    forward: np.ndarray
    left: np.ndarray
    up: np.ndarray
    intensity: np.ndarray
    ring: np.ndarray
    num_rings: int = 64
    frame_id: str = ""

    def __post_init__(self):
        self.forward = np.array(self.forward, dtype=np.float32)
        self.left = np.array(self.left, dtype=np.float32)
        self.up = np.array(self.up, dtype=np.float32)
        self.intensity = np.clip(np.array(self.intensity, dtype=np.float32), 0.0, 1.0)
        self.ring = np.array(self.ring, dtype=np.int32)
        n = len(self.forward)
        if not all(len(a) == n for a in (self.left, self.up, self.intensity, self.ring)):
            raise ValueError("column arrays differ in length")
        numeric = (np.stack([self.forward, self.left, self.up, self.intensity])
                   if n else np.empty((4, 0)))
        if not np.isfinite(numeric).all():
            raise ValueError("non-finite values are not admitted past parsing")
        assigned = self.ring[self.ring != UNASSIGNED_RING]
        if assigned.size and int(assigned.max()) >= self.num_rings:
            raise ValueError(
                f"ring {int(assigned.max())} out of range for {self.num_rings} rings"
            )
        for a in (self.forward, self.left, self.up, self.intensity, self.ring):
            a.flags.writeable = False

    def __len__(self) -> int:
        return len(self.forward)

    def point(self, i: int) -> Point:
        return Point(
            float(self.forward[i]),
            float(self.left[i]),
            float(self.up[i]),
            float(self.intensity[i]),
            int(self.ring[i]),
        )

    def horizontal_ranges(self) -> np.ndarray:
        """Euclidean norm of (forward, left) per point."""
        return np.hypot(self.forward.astype(np.float64), self.left.astype(np.float64))

    def azimuths_deg(self) -> np.ndarray:
        """Horizontal angle per point, degrees in (-180, 180]."""
        return np.degrees(np.arctan2(self.left.astype(np.float64), self.forward.astype(np.float64)))

    def rings_assigned(self) -> bool:
        return len(self) > 0 and bool((self.ring != UNASSIGNED_RING).all())


def horizontal_range(p: Point) -> float:
    """Euclidean norm of (forward, left)."""
    return math.hypot(p.forward, p.left)


def load_kitti_bin(path: str | Path, layout: str = "xyzi",
                   num_rings: int = 64) -> PointCloud:
    """Parse a KITTI-style velodyne ``.bin`` file.

    ``layout`` is ``"xyzi"`` (4 float32 per point, ring left unassigned) or
    ``"xyzir"`` (5 float32, fifth value truncated to an integer ring index).
    Intensity is clamped to [0, 1]; points with non-finite coordinates are
    dropped with a counted warning.
    """
    path = Path(path)
    if layout not in _STRIDES:
        raise ValueError(f"unknown layout {layout!r}")
    size = path.stat().st_size
    if size % _STRIDES[layout]:
        raise MalformedFileError(
            f"{path}: {size} bytes is not a multiple of the "
            f"{_STRIDES[layout]}-byte {layout} record stride"
        )
    raw = np.fromfile(path, dtype=np.float32)
    rec = raw.reshape(-1, _STRIDES[layout] // 4)
    finite = np.isfinite(rec).all(axis=1)
    dropped = int((~finite).sum())
    if dropped:
        log.warning("%s: dropped %d points with non-finite values", path, dropped)
        rec = rec[finite]
    if layout == "xyzir":
        ring = rec[:, 4].astype(np.int32)
    else:
        ring = np.full(len(rec), UNASSIGNED_RING, dtype=np.int32)
    return PointCloud(
        forward=rec[:, 0],
        left=rec[:, 1],
        up=rec[:, 2],
        intensity=rec[:, 3],
        ring=ring,
        num_rings=num_rings,
        frame_id=path.stem,
    )


def xyzir_bytes(cloud: PointCloud) -> bytes:
    """Serialize a cloud as little-endian float32 ``(x, y, z, i, ring)`` records."""
    rec = np.empty((len(cloud), 5), dtype="<f4")
    rec[:, 0] = cloud.forward
    rec[:, 1] = cloud.left
    rec[:, 2] = cloud.up
    rec[:, 3] = cloud.intensity
    rec[:, 4] = cloud.ring
    return rec.tobytes()


def save_xyzir(cloud: PointCloud, path: str | Path) -> None:
    Path(path).write_bytes(xyzir_bytes(cloud))


def derive_rings(cloud: PointCloud) -> PointCloud:
    """Assign ring indices by counting azimuth wraps along the scan order.

    The ring counter increments whenever the azimuth jumps by more than 180
    degrees between consecutive points (one full-revolution wrap per beam).
    Points that already carry a ring index keep it. Idempotent.
    """
    if len(cloud) == 0 or cloud.rings_assigned():
        return cloud
    az = cloud.azimuths_deg()
    wraps = np.abs(np.diff(az)) > 180.0
    scanned = np.concatenate([[0], np.cumsum(wraps)]).astype(np.int32)
    if int(scanned.max()) >= cloud.num_rings:
        raise RingOverflowError(
            f"{int(scanned.max()) + 1} rings derived but the sensor has "
            f"{cloud.num_rings}; wrong layout assumption?"
        )
    ring = np.where(cloud.ring == UNASSIGNED_RING, scanned, cloud.ring)
    return PointCloud(
        forward=cloud.forward,
        left=cloud.left,
        up=cloud.up,
        intensity=cloud.intensity,
        ring=ring,
        num_rings=cloud.num_rings,
        frame_id=cloud.frame_id,
    )
