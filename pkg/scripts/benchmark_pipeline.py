#!/usr/bin/env python3
"""Wall-clock sanity numbers: encoding and per-topology inference speed."""

import time

from groundseg import encoder, nn
from groundseg.synthetic import ScannerConfig, SceneConfig, generate_scene


def best_of(fn, n=5):
    times = []
    for _ in range(n):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    cfg = encoder.EncoderConfig()
    cloud, _ = generate_scene(0, ScannerConfig(azimuth_steps=1875),
                              SceneConfig(ramp_probability=0.0))
    print(f"frame: {len(cloud)} points")
    print(f"encode:    {best_of(lambda: encoder.encode_frame(cloud, cfg)) * 1e3:7.1f} ms")
    frame, _ = encoder.encode_frame(cloud, cfg)
    norm = encoder.normalize(frame, cfg)
    for name in nn.TOPOLOGY_NAMES:
        net = nn.build_topology(name, 0)
        dt = best_of(lambda: nn.forward(net, norm), 3)
        print(f"{name:24s} {dt * 1e3:7.1f} ms per frame")


if __name__ == "__main__":
    main()
