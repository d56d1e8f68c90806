import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_cloud
from groundseg.errors import DegenerateTruthError, ShapeError
from groundseg.evaluate import (
    PRCurve,
    average_precision,
    best_f_score,
    fixed_operating_points,
    format_report,
    pooled_pr_curve,
    pr_curve,
    range_mask,
    write_curve_csv,
)
from oracles import average_precision_oracle, best_f_oracle, pr_points_oracle


def test_range_mask():
    cloud = make_cloud([59.9, 60.1, 5.0], [0.0, 0.0, 0.0], [0.0] * 3)
    assert range_mask(cloud, 60.0).tolist() == [True, False, True]
    assert range_mask(cloud, None).tolist() == [True, True, True]


def test_perfect_predictor():
    truth = np.array([1, 0, 1, 1, 0], bool)
    curve = pr_curve(truth.astype(float), truth)
    assert any(p == 1.0 and r == 1.0 for _, p, r in curve.points())
    assert average_precision(curve) == pytest.approx(1.0)
    assert best_f_score(curve) == pytest.approx(1.0)


def test_constant_predictor_balanced():
    truth = np.array([1, 0, 1, 0], bool)
    scores = np.full(4, 0.5)
    curve = pr_curve(scores, truth)
    by_t = {t: (p, r) for t, p, r in curve.points()}
    assert by_t[0.5] == (0.5, 1.0)
    assert by_t[1.0] == (1.0, 0.0)  # zero predictions: precision defined 1
    assert average_precision(curve) == pytest.approx(0.5)
    assert best_f_score(curve) == pytest.approx(2 * 0.5 * 1.0 / 1.5)


def test_inverted_predictor():
    truth = np.array([1, 1, 0, 0], bool)
    curve = pr_curve(1.0 - truth.astype(float), truth)
    for t, p, r in curve.points():
        if t > 0 and r == 0:
            predicted = curve.tp[curve.thresholds == t] + curve.fp[curve.thresholds == t]
            if predicted > 0:
                assert p == 0.0


def test_pr_requires_positive():
    with pytest.raises(DegenerateTruthError):
        pr_curve(np.array([0.2, 0.4]), np.array([False, False]))
    with pytest.raises(DegenerateTruthError):
        pr_curve(np.array([0.2, 0.4]), np.array([True, False]),
                 mask=np.array([False, True]))


def test_pr_shape_checks():
    with pytest.raises(ShapeError):
        pr_curve(np.zeros(3), np.zeros(2, bool))


def test_recall_non_increasing(rng):
    scores = rng.random(200)
    truth = rng.random(200) > 0.6
    curve = pr_curve(scores, truth)
    assert (np.diff(curve.recalls) <= 1e-15).all()


def test_best_f_harmonic_mean():
    curve = PRCurve(thresholds=np.array([0.2, 0.8]),
                    precisions=np.array([0.5, 1.0]),
                    recalls=np.array([1.0, 0.2]),
                    tp=np.array([10, 2]), fp=np.array([10, 0]),
                    positive_count=10, negative_count=10)
    assert best_f_score(curve) == pytest.approx(2 / 3)


def test_fixed_operating_points():
    truth = np.array([1, 0, 1, 1, 0], bool)
    perfect = pr_curve(truth.astype(float), truth)
    points = fixed_operating_points(perfect, 0.992, 0.924)
    assert points.precision_at_recall == pytest.approx(1.0)
    assert points.recall_at_precision == pytest.approx(1.0)

    balanced = pr_curve(np.full(4, 0.5), np.array([1, 0, 1, 0], bool))
    points = fixed_operating_points(balanced, 0.5, 0.9)
    # the only precision >= 0.9 comes from the empty-prediction endpoint,
    # which does not count as an attainable operating point
    assert points.recall_at_precision is None
    assert points.precision_at_recall == pytest.approx(0.5)


def test_fixed_point_direct_lookup():
    scores = np.array([0.9, 0.8, 0.1])
    truth = np.array([1, 1, 0], bool)
    curve = pr_curve(scores, truth)
    points = fixed_operating_points(curve, 1.0, 0.5)
    assert points.precision_at_recall == pytest.approx(1.0)


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=80, deadline=None)
def test_matches_bruteforce_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 60))
    scores = rng.choice([0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0], n)
    truth = rng.random(n) > 0.5
    if not truth.any():
        truth[0] = True
    curve = pr_curve(scores, truth)
    expected = pr_points_oracle(scores.tolist(), truth.tolist())
    got = [(t, p, r) for t, p, r in curve.points()]
    assert len(got) == len(expected)
    for (t0, p0, r0), (t1, p1, r1, _) in zip(got, expected):
        assert t0 == t1
        assert abs(p0 - p1) < 1e-12
        assert abs(r0 - r1) < 1e-12
    assert abs(average_precision(curve) - average_precision_oracle(
        scores.tolist(), truth.tolist())) < 1e-12
    assert abs(best_f_score(curve) - best_f_oracle(
        scores.tolist(), truth.tolist())) < 1e-12


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_score_order_invariance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 80))
    scores = rng.uniform(0.05, 0.95, n)
    truth = rng.random(n) > 0.5
    if not truth.any():
        truth[0] = True
    base = pr_curve(scores, truth)
    for transform in (np.square, lambda s: 0.5 + s / 2.1, lambda s: s ** 3):
        moved = pr_curve(transform(scores), truth)
        assert set(zip(base.precisions, base.recalls)) == set(
            zip(moved.precisions, moved.recalls))


def test_mask_restriction_to_perfect_subset_never_lowers_ap(rng):
    scores = rng.random(300)
    truth = rng.random(300) > 0.5
    full = average_precision(pr_curve(scores, truth))
    perfect = (scores >= 0.5) == truth
    perfect[np.flatnonzero(truth)[0]] = True  # keep at least one positive
    sub = average_precision(pr_curve(scores, truth, mask=perfect))
    assert sub >= full - 1e-12


def test_pooling_equals_concatenation(rng):
    frames = []
    for _ in range(4):
        s = rng.random(50)
        t = rng.random(50) > 0.4
        frames.append((s, t, None))
    pooled = pooled_pr_curve(frames)
    direct = pr_curve(np.concatenate([f[0] for f in frames]),
                      np.concatenate([f[1] for f in frames]))
    assert np.array_equal(pooled.thresholds, direct.thresholds)
    assert np.array_equal(pooled.precisions, direct.precisions)
    assert np.array_equal(pooled.recalls, direct.recalls)


def test_report_format():
    text = format_report({"ap": 0.9954321, "recall_at_precision": None})
    assert text == "ap\t0.995432\nrecall_at_precision\tnone\n"


def test_curve_csv(tmp_path):
    truth = np.array([1, 0], bool)
    curve = pr_curve(np.array([0.9, 0.1]), truth)
    out = tmp_path / "curve.csv"
    write_curve_csv(curve, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "threshold,precision,recall"
    assert len(lines) == len(curve) + 1
