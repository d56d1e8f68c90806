"""Dataset manifests with a reproducible train/eval split."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

TRAIN = "train"
EVAL = "eval"


def split_frames(frames, split_seed: int, split_ratio: float = 0.7
                 ) -> dict[str, str]:
    """Assign every frame to train or eval.

    A pure function of (sorted frame ids, seed, ratio): the sorted list is
    permuted with a seeded generator and the first ``ratio`` share trains.
    """
    if not 0 < split_ratio < 1:
        raise ConfigError("split_ratio must lie strictly between 0 and 1")
    ordered = sorted(frames)
    if len(set(ordered)) != len(ordered):
        raise ConfigError("duplicate frame ids in manifest")
    perm = np.random.default_rng(split_seed).permutation(len(ordered))
    n_train = int(round(split_ratio * len(ordered)))
    train_ids = {ordered[i] for i in perm[:n_train]}
    return {f: (TRAIN if f in train_ids else EVAL) for f in ordered}


@dataclass
class RunManifest:
    """Frame list plus the seeded split assignment."""

    root: Path
    frames: list[str]
    split_seed: int = 0
    split_ratio: float = 0.7
    split: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.root = Path(self.root)
        self.frames = sorted(self.frames)
        self.split = split_frames(self.frames, self.split_seed, self.split_ratio)

    def train_frames(self) -> list[str]:
        return [f for f in self.frames if self.split[f] == TRAIN]

    def eval_frames(self) -> list[str]:
        return [f for f in self.frames if self.split[f] == EVAL]

    def bin_path(self, frame: str) -> Path:
        return self.root / f"{frame}.bin"

    @classmethod
    def from_dir(cls, root: str | Path, split_seed: int = 0,
                 split_ratio: float = 0.7) -> "RunManifest":
        root = Path(root)
        frames = sorted(p.stem for p in root.glob("*.bin"))
        return cls(root, frames, split_seed, split_ratio)

    def save(self, path: str | Path) -> None:
        doc = {
            "root": str(self.root),
            "frames": self.frames,
            "split_seed": self.split_seed,
            "split_ratio": self.split_ratio,
            "split": self.split,
        }
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        doc = json.loads(Path(path).read_text())
        manifest = cls(Path(doc["root"]), doc["frames"],
                       int(doc.get("split_seed", 0)),
                       float(doc.get("split_ratio", 0.7)))
        stored = doc.get("split")
        if stored and stored != manifest.split:
            raise ConfigError(f"{path}: stored split does not match its seed and ratio")
        return manifest
