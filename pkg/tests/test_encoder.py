import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_cloud, random_cloud
from groundseg import labels as lbl
from groundseg.cloud import Point, UNASSIGNED_RING
from groundseg.encoder import (
    CH_DEPTH,
    CH_HEIGHT,
    CH_INTENSITY,
    DenseFrame,
    EncoderConfig,
    bin_points,
    encode_frame,
    grid_to_point_probs,
    interpolate_empty,
    labels_to_grid,
    load_frame,
    normalize,
    polar_cone,
    save_frame,
)
from groundseg.errors import (
    ConfigError,
    DegeneratePointError,
    EmptyFrameError,
    MalformedFileError,
    MissingRingError,
    ShapeError,
    StateError,
)

CFG = EncoderConfig()
SMALL = EncoderConfig(bin_width_deg=10.0, num_rings=8)


def test_config_validation():
    assert CFG.num_columns == 360
    assert SMALL.num_columns == 36
    with pytest.raises(ConfigError):
        EncoderConfig(bin_width_deg=7.0)  # 360/7 is not an integer
    with pytest.raises(ConfigError):
        EncoderConfig(height_norm=0.0)


@pytest.mark.parametrize("forward,left,col", [
    (1.0, 0.0, 180),
    (0.0, 1.0, 270),
    (-1.0, 0.0, 0),
])
def test_polar_cone_examples(forward, left, col):
    assert polar_cone(Point(forward, left, 0, 0.5), CFG) == col


def test_polar_cone_degenerate():
    with pytest.raises(DegeneratePointError):
        polar_cone(Point(0.0, 0.0, 1.0, 0.5), CFG)


def cloud_at(azimuths_deg, rings, ups=None, ranges=None, intensity=None, num_rings=64):
    a = np.radians(np.asarray(azimuths_deg, dtype=np.float64))
    r = np.ones(len(a)) if ranges is None else np.asarray(ranges, dtype=np.float64)
    return make_cloud(r * np.cos(a), r * np.sin(a),
                      np.zeros(len(a)) if ups is None else ups,
                      intensity=intensity,
                      ring=np.asarray(rings, dtype=np.int32), num_rings=num_rings)


def test_bin_points_same_cell():
    cloud = cloud_at([10.2, 10.7], [5, 5])
    grid = bin_points(cloud, CFG)
    assert grid.cell_indices(5, 190).tolist() == [0, 1]
    assert grid.counts().sum() == 2


def test_bin_points_empty_cloud():
    grid = bin_points(make_cloud([], [], [], intensity=[], ring=np.array([], np.int32)), CFG)
    assert grid.counts().sum() == 0


def test_bin_points_one_per_ring():
    cloud = cloud_at([0.0] * 64, np.arange(64))
    grid = bin_points(cloud, CFG)
    counts = grid.counts()
    assert (counts[:, 180] == 1).all()
    assert counts.sum() == 64


def test_bin_points_missing_ring():
    cloud = make_cloud([1.0], [0.0], [0.0], ring=np.array([UNASSIGNED_RING], np.int32))
    with pytest.raises(MissingRingError):
        bin_points(cloud, CFG)


def test_bin_points_skips_degenerate():
    cloud = make_cloud([1.0, 0.0], [0.0, 0.0], [0.0, 0.0],
                       ring=np.zeros(2, np.int32))
    grid = bin_points(cloud, CFG)
    assert grid.skipped == 1
    assert grid.counts().sum() == 1


def test_encode_cell_mean():
    cloud = cloud_at([0.0, 0.0], [1, 1], ups=[1.0, 2.0], ranges=[4.0, 6.0],
                     intensity=[0.2, 0.4])
    frame, _ = encode_frame(cloud, CFG)
    cell = frame.values[:, 1, 180]
    assert cell[CH_HEIGHT] == pytest.approx(1.5)
    assert cell[CH_DEPTH] == pytest.approx(5.0)
    assert cell[CH_INTENSITY] == pytest.approx(0.3)


def test_encode_single_point_identity():
    cloud = cloud_at([45.0], [2], ups=[-1.3], ranges=[7.0], intensity=[0.9])
    frame, _ = encode_frame(cloud, CFG)
    cell = frame.values[:, 2, 225]
    assert cell[CH_HEIGHT] == pytest.approx(-1.3, abs=1e-6)
    assert cell[CH_DEPTH] == pytest.approx(7.0, abs=1e-6)
    assert cell[CH_INTENSITY] == pytest.approx(0.9, abs=1e-6)
    assert not frame.normalized


def test_encode_hollow_row_interpolated_vertically():
    az = np.arange(36) * 10.0 - 175.0
    cloud = cloud_at(np.concatenate([az, az]), [0] * 36 + [2] * 36,
                     ranges=[10.0] * 36 + [12.0] * 36, num_rings=3)
    frame, _ = encode_frame(cloud, EncoderConfig(bin_width_deg=10.0, num_rings=3))
    assert frame.values[CH_DEPTH, 1] == pytest.approx(np.full(36, 11.0))
    assert not frame.occupancy[1].any()


def frame_from(values, occupancy, normalized=False):
    return DenseFrame(np.asarray(values, dtype=np.float64),
                      np.asarray(occupancy, dtype=bool), normalized)


def row_frame(row_values, row_occ):
    vals = np.tile(np.asarray(row_values, dtype=np.float64), (3, 1, 1))
    return frame_from(vals, np.asarray(row_occ, dtype=bool)[None, :])


def test_interpolate_row_midpoint():
    occ = np.zeros(6, bool)
    occ[[0, 2]] = True
    vals = np.zeros(6)
    vals[0], vals[2] = 10.0, 14.0
    frame = interpolate_empty(row_frame(vals, occ))
    assert frame.values[0, 0, 1] == pytest.approx(12.0)


def test_interpolate_single_occupied_constant():
    occ = np.zeros(5, bool)
    occ[3] = True
    vals = np.zeros(5)
    vals[3] = 7.0
    frame = interpolate_empty(row_frame(vals, occ))
    assert frame.values[0, 0] == pytest.approx(np.full(5, 7.0))


def test_interpolate_circular_wrap():
    occ = np.zeros(360, bool)
    occ[[358, 2]] = True
    vals = np.zeros(360)
    vals[358], vals[2] = 2.0, 6.0
    frame = interpolate_empty(row_frame(vals, occ))
    assert frame.values[0, 0, 0] == pytest.approx(4.0)
    assert frame.values[0, 0, 359] == pytest.approx(3.0)
    assert frame.values[0, 0, 1] == pytest.approx(5.0)


def test_interpolate_requires_occupied_cell():
    with pytest.raises(EmptyFrameError):
        interpolate_empty(frame_from(np.zeros((3, 2, 4)), np.zeros((2, 4), bool)))


def test_normalize_examples():
    vals = np.zeros((3, 1, 3))
    vals[CH_HEIGHT, 0] = [3.0, 1.5, -3.0]
    vals[CH_DEPTH, 0] = [1.0, np.e, 10.0]
    vals[CH_INTENSITY, 0] = [0.3, 0.4, 0.5]
    frame = normalize(frame_from(vals, np.ones((1, 3), bool)), CFG)
    assert frame.values[CH_HEIGHT, 0].tolist() == pytest.approx([1.0, 0.5, -1.0])
    assert frame.values[CH_DEPTH, 0] == pytest.approx([0.0, 1.0, np.log(10.0)])
    assert frame.values[CH_INTENSITY, 0].tolist() == [0.3, 0.4, 0.5]
    assert frame.normalized
    with pytest.raises(StateError):
        normalize(frame, CFG)


def test_labels_to_grid_majority_and_masks():
    cloud = cloud_at([0.0, 0.0, 0.0, 90.0, 90.0, 135.0], [0, 0, 0, 0, 0, 0],
                     num_rings=1)
    cfg = EncoderConfig(bin_width_deg=45.0, num_rings=1)
    grid = bin_points(cloud, cfg)
    points = lbl.PointLabels(np.array(
        [lbl.GROUND, lbl.GROUND, lbl.NON_GROUND,   # col 4: majority ground
         lbl.GROUND, lbl.NON_GROUND,               # col 6: tie -> non-ground
         lbl.UNLABELED], np.uint8))                # col 7: masked out
    out = labels_to_grid(points, grid)
    assert out.ground[0, 4] and out.labeled[0, 4]
    assert not out.ground[0, 6] and out.labeled[0, 6]
    assert not out.ground[0, 7] and not out.labeled[0, 7]
    assert not out.labeled[0, 0]  # empty cell masked out


def test_labels_to_grid_length_mismatch():
    cloud = cloud_at([0.0], [0], num_rings=1)
    grid = bin_points(cloud, EncoderConfig(bin_width_deg=45.0, num_rings=1))
    with pytest.raises(ShapeError):
        labels_to_grid(lbl.PointLabels(np.zeros(3, np.uint8)), grid)


def test_grid_to_point_probs():
    cloud = make_cloud([1.0, 0.0, -1.0], [0.0, 0.0, 0.0], [0.0] * 3,
                       ring=np.array([3, 0, 1], np.int32))
    grid = bin_points(cloud, CFG)
    probs = np.zeros((64, 360))
    probs[3, 180] = 0.7
    out = grid_to_point_probs(probs, grid, cloud)
    assert out[0] == 0.7
    assert out[1] == 0.0  # degenerate point
    assert out[2] == 0.0
    ones = grid_to_point_probs(np.ones((64, 360)), grid, cloud)
    assert ones.tolist() == [1.0, 0.0, 1.0]
    with pytest.raises(ShapeError):
        grid_to_point_probs(np.ones((4, 4)), grid, cloud)


def test_frame_file_round_trip(tmp_path, rng):
    cloud = random_cloud(rng, 300, num_rings=8)
    frame, _ = encode_frame(cloud, SMALL)
    path = tmp_path / "f.gsf"
    save_frame(frame, path)
    back = load_frame(path)
    assert back.values == pytest.approx(frame.values.astype(np.float32), abs=0)
    assert np.array_equal(back.occupancy, frame.occupancy)
    assert back.normalized == frame.normalized


def test_frame_file_truncation(tmp_path):
    cloud = cloud_at([0.0], [0], num_rings=1)
    frame, _ = encode_frame(cloud, EncoderConfig(bin_width_deg=45.0, num_rings=1))
    path = tmp_path / "f.gsf"
    save_frame(frame, path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(MalformedFileError):
        load_frame(path)


# -- randomized properties --------------------------------------------------

@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_partition_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 300))
    cloud = random_cloud(rng, n, num_rings=8)
    grid = bin_points(cloud, SMALL)
    assert grid.counts().sum() + grid.skipped == len(cloud)
    seen = np.zeros(len(cloud), bool)
    for r in range(SMALL.num_rings):
        for c in range(SMALL.num_columns):
            idx = grid.cell_indices(r, c)
            assert not seen[idx].any()
            seen[idx] = True
            assert (cloud.ring[idx] == r).all()
    assert seen.sum() == len(cloud) - grid.skipped


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_mean_property(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(1, 250)), num_rings=8)
    frame, grid = encode_frame(cloud, SMALL)
    ranges = cloud.horizontal_ranges()
    for r in range(SMALL.num_rings):
        for c in range(SMALL.num_columns):
            idx = grid.cell_indices(r, c)
            if idx.size == 0:
                assert not frame.occupancy[r, c]
                continue
            assert abs(frame.values[CH_HEIGHT, r, c] - cloud.up[idx].mean()) < 1e-6
            assert abs(frame.values[CH_DEPTH, r, c] - ranges[idx].mean()) < 1e-6
            assert abs(frame.values[CH_INTENSITY, r, c] - cloud.intensity[idx].mean()) < 1e-6


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_interpolation_idempotent(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(1, 150)), num_rings=8)
    frame, _ = encode_frame(cloud, SMALL)
    again = interpolate_empty(frame)
    assert np.array_equal(again.values, frame.values)
    assert np.array_equal(again.occupancy, frame.occupancy)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_normalization_invertible(seed):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, int(rng.integers(1, 250)), num_rings=8)
    frame, _ = encode_frame(cloud, SMALL)
    norm = normalize(frame, SMALL)
    occ = frame.occupancy
    raw_depth = frame.values[CH_DEPTH][occ]
    raw_height = frame.values[CH_HEIGHT][occ]
    assert np.exp(norm.values[CH_DEPTH][occ]) == pytest.approx(raw_depth, abs=1e-6)
    assert norm.values[CH_HEIGHT][occ] * SMALL.height_norm == pytest.approx(
        raw_height, abs=1e-9)


def test_polar_cone_column_count(rng):
    cloud = random_cloud(rng, 2000, num_rings=8)
    grid = bin_points(cloud, EncoderConfig(bin_width_deg=1.0, num_rings=8))
    assert grid.num_columns == 360
    cols = grid.point_cell[grid.point_cell >= 0] % 360
    assert cols.min() >= 0 and cols.max() < 360


@given(k=st.integers(min_value=-40, max_value=40))
@settings(max_examples=30, deadline=None)
def test_rotational_equivariance(k):
    # one point per bin, rotated by k whole columns; radii kept small enough
    # that float32 coordinate rounding stays below the tolerance
    rng = np.random.default_rng(99)
    rings = np.arange(8).repeat(36)
    base_az = np.tile(np.arange(36) * 10.0 - 175.0, 8)
    ranges = rng.uniform(2, 8, rings.size)
    ups = rng.uniform(-2, 0, rings.size)
    cloud = cloud_at(base_az, rings, ups=ups, ranges=ranges, num_rings=8)
    rot = cloud_at(base_az + k * 10.0, rings, ups=ups, ranges=ranges, num_rings=8)
    f0, _ = encode_frame(cloud, SMALL)
    f1, _ = encode_frame(rot, SMALL)
    assert np.allclose(np.roll(f0.values, k, axis=2), f1.values, atol=1e-6)
    assert np.array_equal(np.roll(f0.occupancy, k, axis=1), f1.occupancy)
