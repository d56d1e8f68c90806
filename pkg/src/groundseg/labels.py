"""Per-point tri-state labels and the ``.gsl`` label file format."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MalformedFileError

NON_GROUND = 0
GROUND = 1
UNLABELED = 255

_GSL_MAGIC = b"GSL1"
_GSL_VERSION = 1


@dataclass
class PointLabels:
    """Tri-state label per point of one frame.

    ``labels`` holds NON_GROUND (0), GROUND (1), or UNLABELED (255).
    Export binarization maps UNLABELED to NON_GROUND.
    """

    labels: np.ndarray
    frame_id: str = ""

    def __post_init__(self):
        self.labels = np.array(self.labels, dtype=np.uint8)
        bad = ~np.isin(self.labels, (NON_GROUND, GROUND, UNLABELED))
        if bad.any():
            raise ValueError(f"invalid label byte {int(self.labels[bad][0])}")

    def __len__(self) -> int:
        return len(self.labels)

    def binary(self) -> np.ndarray:
        """Boolean ground mask; UNLABELED counts as non-ground."""
        return self.labels == GROUND

    def labeled_fraction(self) -> float:
        if len(self) == 0:
            return 0.0
        return float((self.labels != UNLABELED).mean())

    @classmethod
    def unlabeled(cls, count: int, frame_id: str = "") -> "PointLabels":
        return cls(np.full(count, UNLABELED, dtype=np.uint8), frame_id)


def labels_bytes(labels: PointLabels) -> bytes:
    header = _GSL_MAGIC + struct.pack("<II4x", _GSL_VERSION, len(labels))
    return header + labels.labels.tobytes()


def save_labels(labels: PointLabels, path: str | Path) -> None:
    Path(path).write_bytes(labels_bytes(labels))


def load_labels(path: str | Path) -> PointLabels:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 16 or blob[:4] != _GSL_MAGIC:
        raise MalformedFileError(f"{path}: not a label file")
    version, count = struct.unpack("<II", blob[4:12])
    if version != _GSL_VERSION:
        raise MalformedFileError(f"{path}: unsupported label file version {version}")
    if len(blob) != 16 + count:
        raise MalformedFileError(
            f"{path}: expected {16 + count} bytes for {count} points, got {len(blob)}"
        )
    return PointLabels(np.frombuffer(blob, dtype=np.uint8, offset=16), path.stem)
