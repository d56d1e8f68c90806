#!/usr/bin/env python3
"""Train a topology on synthetic scenes and report held-out PR metrics.

The in-memory twin of the CLI pipeline: generate scenes, encode, train,
evaluate per point with a range mask. Useful for topology comparisons
without touching disk.
"""

import argparse
import time

from groundseg import encoder, evaluate, nn
from groundseg.synthetic import generate_scene


def prepare(seed_lo, count, cfg):
    out = []
    for i in range(count):
        cloud, labels = generate_scene(seed_lo + i)
        frame, grid = encoder.encode_frame(cloud, cfg)
        target = encoder.labels_to_grid(labels, grid)
        mask = frame.occupancy & target.labeled
        out.append((cloud, labels, grid, encoder.normalize(frame, cfg), target, mask))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--topology", default=nn.L05_DECONV, choices=nn.TOPOLOGY_NAMES)
    ap.add_argument("--train-frames", type=int, default=50)
    ap.add_argument("--eval-frames", type=int, default=20)
    ap.add_argument("--iterations", type=int, default=300)
    ap.add_argument("--learning-rate", type=float, default=0.02)
    ap.add_argument("--batch-size", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-range", type=float, default=60.0)
    args = ap.parse_args()

    cfg = encoder.EncoderConfig()
    t0 = time.perf_counter()
    train_set = prepare(1000, args.train_frames, cfg)
    held_out = prepare(2000, args.eval_frames, cfg)
    print(f"prepared {args.train_frames}+{args.eval_frames} frames "
          f"in {time.perf_counter() - t0:.0f}s")

    train_cfg = nn.TrainConfig(learning_rate=args.learning_rate,
                               iterations=args.iterations,
                               batch_size=args.batch_size, rng_seed=args.seed)
    net = nn.build_topology(args.topology, args.seed)
    t0 = time.perf_counter()
    net, history = nn.train(net, [(f, t, m) for _, _, _, f, t, m in train_set],
                            train_cfg)
    print(f"trained {args.iterations} iterations in {time.perf_counter() - t0:.0f}s, "
          f"final loss {history[-1]:.4f}")

    pooled = []
    for cloud, labels, grid, frame, _, _ in held_out:
        scores = encoder.grid_to_point_probs(nn.forward(net, frame), grid, cloud)
        pooled.append((scores, labels.binary(),
                       evaluate.range_mask(cloud, args.max_range)))
    curve = evaluate.pooled_pr_curve(pooled)
    print(evaluate.format_report({
        "ap": evaluate.average_precision(curve),
        "best_f_score": evaluate.best_f_score(curve),
    }), end="")


if __name__ == "__main__":
    main()
