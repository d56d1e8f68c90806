#!/usr/bin/env python3
"""Write a synthetic dataset to disk in the layout the CLI expects.

Produces <out>/bins/*.bin (XYZIR records), <out>/labels/*.gsl with the
exact ground truth, and <out>/manifest.json with a seeded 70:30 split.
"""

import argparse
from pathlib import Path

from groundseg.cloud import save_xyzir
from groundseg.labels import save_labels
from groundseg.manifest import RunManifest
from groundseg.synthetic import ScannerConfig, generate_scene


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--frames", type=int, default=70)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--azimuth-steps", type=int, default=1800)
    ap.add_argument("--split-seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    bins = out / "bins"
    labels = out / "labels"
    bins.mkdir(parents=True, exist_ok=True)
    labels.mkdir(parents=True, exist_ok=True)
    scanner = ScannerConfig(azimuth_steps=args.azimuth_steps)
    for i in range(args.frames):
        cloud, truth = generate_scene(args.seed + i, scanner)
        save_xyzir(cloud, bins / f"{cloud.frame_id}.bin")
        save_labels(truth, labels / f"{cloud.frame_id}.gsl")
        if (i + 1) % 10 == 0:
            print(f"{i + 1}/{args.frames} frames")
    RunManifest.from_dir(bins, split_seed=args.split_seed).save(out / "manifest.json")
    print(f"wrote {args.frames} frames under {out}")


if __name__ == "__main__":
    main()
