"""Command-line entry point: encode, autolabel, train, infer, eval, serve.

Every option can also come from a ``--config`` file of ``key = value``
lines (keys match the long flag names with dashes as underscores); explicit
flags win. Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import logging
import socket
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import autolabel as al
from . import encoder, evaluate, labels as lbl, nn
from .cloud import derive_rings, load_kitti_bin
from .errors import GroundSegError
from .manifest import RunManifest

log = logging.getLogger("groundseg")


def _read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GroundSegError(f"{path}: bad config line {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip().strip('"')
    return out


class _Options:
    """Flag-wins resolution between parsed args and the config file."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = _read_config(getattr(args, "config", None))

    def get(self, key: str, default, cast=None):
        value = getattr(self.args, key, None)
        if value is None:
            raw = self.config.get(key)
            if raw is None:
                return default
            value = raw
        if cast is not None and value is not None:
            return cast(value)
        return value


def _max_range(text) -> float | None:
    if isinstance(text, str) and text.lower() in ("none", "unlimited"):
        return None
    return float(text)


def _encoder_config(opt: _Options) -> encoder.EncoderConfig:
    return encoder.EncoderConfig(
        bin_width_deg=opt.get("bin_width", 1.0, float),
        num_rings=opt.get("rings", 64, int),
        height_norm=opt.get("height_norm", 3.0, float),
        max_range=opt.get("max_range", 60.0, _max_range),
    )


def _collect_bins(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    if path.is_dir():
        return sorted(path.glob("*.bin"))
    raise GroundSegError(f"{path}: no such file or directory")


def _run_per_frame(paths, jobs: int, work) -> list[tuple[Path, Exception]]:
    """Apply ``work`` to every path, collecting per-file failures."""
    failures = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for path, exc in zip(paths, pool.map(lambda p: _trap(work, p), paths)):
                if exc is not None:
                    failures.append((path, exc))
    else:
        for path in paths:
            exc = _trap(work, path)
            if exc is not None:
                failures.append((path, exc))
    for path, exc in failures:
        log.error("%s: %s", path, exc)
    return failures


def _trap(work, path) -> Exception | None:
    try:
        work(path)
        return None
    except Exception as exc:  # noqa: BLE001 - reported per file
        return exc


def _load_cloud(path: Path, layout: str, num_rings: int):
    return derive_rings(load_kitti_bin(path, layout, num_rings))


def cmd_encode(args) -> int:
    opt = _Options(args)
    cfg = _encoder_config(opt)
    layout = opt.get("layout", "xyzi")
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    bins = _collect_bins(Path(args.input))
    if not bins:
        log.warning("0 frames found under %s", args.input)
        return 0

    def work(path: Path):
        frame, _ = encoder.encode_frame(_load_cloud(path, layout, cfg.num_rings), cfg)
        encoder.save_frame(frame, out_dir / f"{path.stem}.gsf")

    failures = _run_per_frame(bins, opt.get("jobs", 1, int), work)
    log.info("encoded %d/%d frames", len(bins) - len(failures), len(bins))
    return 1 if failures else 0


def cmd_autolabel(args) -> int:
    opt = _Options(args)
    cfg = al.AutoLabelConfig(
        cell_size=opt.get("cell_size", 0.5, float),
        max_height_mean=opt.get("height_mean", -1.4, float),
        max_height_spread=opt.get("height_spread", 0.15, float),
        max_height_stddev=opt.get("height_stddev", 0.05, float),
    )
    layout = opt.get("layout", "xyzi")
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    bins = _collect_bins(Path(args.input))
    if not bins:
        log.warning("0 frames found under %s", args.input)
        return 0

    def work(path: Path):
        cloud = load_kitti_bin(path, layout)
        lbl.save_labels(al.auto_label(cloud, cfg), out_dir / f"{path.stem}.gsl")

    failures = _run_per_frame(bins, opt.get("jobs", 1, int), work)
    log.info("labeled %d/%d frames", len(bins) - len(failures), len(bins))
    return 1 if failures else 0


def cmd_train(args) -> int:
    opt = _Options(args)
    cfg = _encoder_config(opt)
    layout = opt.get("layout", "xyzi")
    manifest = RunManifest.load(args.manifest)
    label_dir = Path(args.labels)
    frames = manifest.train_frames()
    missing = [f for f in frames if not (label_dir / f"{f}.gsl").exists()]
    if missing:
        log.error("missing labels for %d frames: %s", len(missing), ", ".join(missing))
        return 1

    dataset = []
    for stem in frames:
        cloud = _load_cloud(manifest.bin_path(stem), layout, cfg.num_rings)
        frame, grid = encoder.encode_frame(cloud, cfg)
        point_labels = lbl.load_labels(label_dir / f"{stem}.gsl")
        target = encoder.labels_to_grid(point_labels, grid)
        mask = frame.occupancy & target.labeled
        dataset.append((encoder.normalize(frame, cfg), target, mask))

    seed = opt.get("seed", 0, int)
    train_cfg = nn.TrainConfig(
        learning_rate=opt.get("learning_rate", 0.01, float),
        momentum=opt.get("momentum", 0.9, float),
        batch_size=opt.get("batch_size", 4, int),
        iterations=opt.get("iterations", 1000, int),
        lr_decay=opt.get("lr_decay", 0.1, float),
        rng_seed=seed,
        log_every=opt.get("log_every", 50, int),
    )
    net = nn.build_topology(args.topology, seed)
    init = nn.load_model(args.pretrain) if args.pretrain else None
    trained, history = nn.train(net, dataset, train_cfg, init)
    nn.save_model(trained, args.output)
    if history:
        log.info("final loss %.6f", history[-1])
    log.info("wrote %s", args.output)
    return 0


def cmd_infer(args) -> int:
    opt = _Options(args)
    cfg = _encoder_config(opt)
    layout = opt.get("layout", "xyzi")
    threshold = opt.get("threshold", 0.5, float)
    model = nn.load_model(args.model)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores_dir = Path(args.scores) if args.scores else None
    if scores_dir:
        scores_dir.mkdir(parents=True, exist_ok=True)
    bins = _collect_bins(Path(args.input))
    if not bins:
        log.warning("0 frames found under %s", args.input)
        return 0

    def work(path: Path):
        cloud = _load_cloud(path, layout, cfg.num_rings)
        frame, grid = encoder.encode_frame(cloud, cfg)
        probs = nn.forward(model, encoder.normalize(frame, cfg))
        scores = encoder.grid_to_point_probs(probs, grid, cloud)
        out = np.where(scores >= threshold, lbl.GROUND, lbl.NON_GROUND).astype(np.uint8)
        lbl.save_labels(lbl.PointLabels(out, path.stem), out_dir / f"{path.stem}.gsl")
        if scores_dir:
            np.savetxt(scores_dir / f"{path.stem}.csv", scores, fmt="%.17g")

    failures = _run_per_frame(bins, opt.get("jobs", 1, int), work)
    log.info("inferred %d/%d frames", len(bins) - len(failures), len(bins))
    return 1 if failures else 0


def cmd_eval(args) -> int:
    opt = _Options(args)
    layout = opt.get("layout", "xyzi")
    max_range = opt.get("max_range", 60.0, _max_range)
    gt_dir = Path(args.gt)
    cloud_dir = Path(args.clouds)
    stems = sorted(p.stem for p in gt_dir.glob("*.gsl"))
    if not stems:
        log.error("no ground-truth labels under %s", gt_dir)
        return 1
    if args.scores:
        pred_dir, suffix = Path(args.scores), ".csv"
    else:
        pred_dir, suffix = Path(args.pred), ".gsl"
    pred_stems = sorted(p.stem for p in pred_dir.glob(f"*{suffix}"))
    if pred_stems != stems:
        log.error("prediction frames %s do not match ground-truth frames %s",
                  pred_stems, stems)
        return 1

    pooled = []
    for stem in stems:
        truth = lbl.load_labels(gt_dir / f"{stem}.gsl").binary()
        if args.scores:
            scores = np.loadtxt(pred_dir / f"{stem}.csv", ndmin=1)
        else:
            scores = lbl.load_labels(pred_dir / f"{stem}.gsl").binary().astype(np.float64)
        cloud = load_kitti_bin(cloud_dir / f"{stem}.bin", layout)
        if len(cloud) != len(truth) or len(scores) != len(truth):
            log.error("%s: cloud/prediction/truth lengths disagree", stem)
            return 1
        pooled.append((scores, truth, evaluate.range_mask(cloud, max_range)))

    curve = evaluate.pooled_pr_curve(pooled)
    fixed = evaluate.fixed_operating_points(
        curve,
        opt.get("target_recall", 0.992, float),
        opt.get("target_precision", 0.924, float),
    )
    report = evaluate.format_report({
        "ap": evaluate.average_precision(curve),
        "best_f_score": evaluate.best_f_score(curve),
        "precision_at_recall": fixed.precision_at_recall,
        "recall_at_precision": fixed.recall_at_precision,
    })
    sys.stdout.write(report)
    if args.curve:
        evaluate.write_curve_csv(curve, args.curve)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    opt = _Options(args)
    data_dir = Path(args.data_dir)
    if not data_dir.is_dir():
        log.error("%s: data directory does not exist", data_dir)
        return 1
    app = create_app(data_dir, encoder_cfg=_encoder_config(opt),
                     layout=opt.get("layout", "xyzi"))
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((opt.get("host", "127.0.0.1"), opt.get("port", 8000, int)))
    print(f"serving on port {sock.getsockname()[1]}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return 0


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value option file; flags win")
    sub.add_argument("--jobs", type=int, help="parallel workers for per-frame work")
    sub.add_argument("--seed", type=int, help="seed for weight init, shuffling, splits")
    sub.add_argument("--layout", choices=("xyzi", "xyzir"), help="point record layout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groundseg",
                                     description="LiDAR ground segmentation toolkit")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("encode", help="encode .bin clouds into .gsf dense frames")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p.add_argument("--rings", type=int)
    _common(p)
    p.set_defaults(func=cmd_encode)

    p = subs.add_parser("autolabel", help="heuristic ground labels for pretraining")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--cell-size", dest="cell_size", type=float)
    p.add_argument("--height-mean", dest="height_mean", type=float)
    p.add_argument("--height-spread", dest="height_spread", type=float)
    p.add_argument("--height-stddev", dest="height_stddev", type=float)
    _common(p)
    p.set_defaults(func=cmd_autolabel)

    p = subs.add_parser("train", help="train a topology on labeled frames")
    p.add_argument("--manifest", required=True)
    p.add_argument("--topology", required=True, choices=nn.TOPOLOGY_NAMES)
    p.add_argument("--labels", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--pretrain")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--lr-decay", dest="lr_decay", type=float)
    p.add_argument("--log-every", dest="log_every", type=int)
    _common(p)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("infer", help="per-point ground labels from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--scores", help="also write per-point score files here")
    p.add_argument("--threshold", type=float)
    _common(p)
    p.set_defaults(func=cmd_infer)

    p = subs.add_parser("eval", help="PR metrics of predictions against truth")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--scores", help="directory of per-point score files")
    group.add_argument("--pred", help="directory of predicted .gsl labels")
    p.add_argument("--gt", required=True)
    p.add_argument("--clouds", required=True, help=".bin frames for the range mask")
    p.add_argument("--max-range", dest="max_range",
                   help="meters, or 'none' for unlimited")
    p.add_argument("--curve", help="write threshold,precision,recall CSV here")
    p.add_argument("--target-recall", dest="target_recall", type=float)
    p.add_argument("--target-precision", dest="target_precision", type=float)
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("serve", help="run the annotation HTTP server")
    p.add_argument("--data-dir", dest="data_dir", required=True)
    p.add_argument("--port", type=int)
    p.add_argument("--host")
    _common(p)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GroundSegError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    except Exception:  # noqa: BLE001 - internal failure
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
