import numpy as np
import pytest

from groundseg.cloud import PointCloud


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_cloud(forward, left, up, intensity=None, ring=None, num_rings=64,
               frame_id="test") -> PointCloud:
    forward = np.asarray(forward, dtype=np.float64)
    n = len(forward)
    if intensity is None:
        intensity = np.full(n, 0.5)
    if ring is None:
        ring = np.zeros(n, dtype=np.int32)
    return PointCloud(forward=forward, left=left, up=up, intensity=intensity,
                      ring=ring, num_rings=num_rings, frame_id=frame_id)


def random_cloud(rng, n=400, num_rings=8, r_lo=1.0, r_hi=50.0) -> PointCloud:
    """Points at safe ranges with rings assigned, no degenerate azimuths."""
    radius = rng.uniform(r_lo, r_hi, n)
    az = rng.uniform(-np.pi, np.pi, n)
    return make_cloud(
        forward=radius * np.cos(az),
        left=radius * np.sin(az),
        up=rng.uniform(-2.0, 2.0, n),
        intensity=rng.uniform(0.0, 1.0, n),
        ring=rng.integers(0, num_rings, n).astype(np.int32),
        num_rings=num_rings,
    )
