import warnings

import numpy as np
import pytest

from sglst.boxes import BoundingBox
from sglst.evaluation import (
    DEFAULT_THRESHOLDS,
    SuccessCurve,
    TrackRun,
    auc,
    ope_run,
    overlap,
    overlaps,
    success_curve,
    summarize,
)
from sglst.io import SequenceSpec, read_gray


def raster_iou(a, b, res=1.0):
    """Count grid cells of side ``res`` whose centers fall inside each box."""
    lo = min(a[0], b[0], a[1], b[1]) - 1
    hi = max(a[0] + a[2], b[0] + b[2], a[1] + a[3], b[1] + b[3]) + 1
    g = np.arange(lo, hi, res) + res / 2
    X, Y = np.meshgrid(g, g)

    def mask(r):
        return (X >= r[0]) & (X < r[0] + r[2]) & (Y >= r[1]) & (Y < r[1] + r[3])

    ma, mb = mask(a), mask(b)
    return (ma & mb).sum() / (ma | mb).sum()


class TestOverlap:
    def test_identical(self):
        assert overlap((3, 4, 10, 20), (3, 4, 10, 20)) == 1.0

    def test_disjoint(self):
        assert overlap((0, 0, 10, 10), (20, 20, 5, 5)) == 0.0

    def test_half_shift(self):
        assert overlap((0, 0, 10, 10), (5, 0, 10, 10)) == 1 / 3
        assert raster_iou((0, 0, 10, 10), (5, 0, 10, 10)) == 1 / 3

    def test_integer_boxes_match_raster(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = np.concatenate([rng.integers(0, 20, 2), rng.integers(1, 15, 2)])
            b = np.concatenate([rng.integers(0, 20, 2), rng.integers(1, 15, 2)])
            assert overlap(a, b) == pytest.approx(raster_iou(a, b), abs=1e-12)

    def test_real_boxes_within_quantum(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            a = np.concatenate([rng.uniform(0, 10, 2), rng.uniform(2, 10, 2)])
            b = np.concatenate([rng.uniform(0, 10, 2), rng.uniform(2, 10, 2)])
            assert abs(overlap(a, b) - raster_iou(a, b, res=0.02)) < 0.02

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(2)
        A = np.column_stack([rng.uniform(-5, 5, (500, 2)), rng.uniform(0.1, 8, (500, 2))])
        B = np.column_stack([rng.uniform(-5, 5, (500, 2)), rng.uniform(0.1, 8, (500, 2))])
        s1, s2 = overlaps(A, B), overlaps(B, A)
        np.testing.assert_array_equal(s1, s2)
        assert np.all((s1 >= 0) & (s1 <= 1))
        np.testing.assert_array_equal(overlaps(A, A), 1.0)

    def test_zero_area_warns(self):
        with pytest.warns(RuntimeWarning):
            assert overlap((0, 0, 0, 5), (0, 0, 5, 5)) == 0.0

    def test_accepts_bounding_box(self):
        assert overlap(BoundingBox(0, 0, 10, 10), BoundingBox(5, 0, 10, 10)) == 1 / 3


class TestSuccessCurve:
    def test_single_threshold(self):
        assert success_curve([1.0, 0.4], [0.5]).fractions[0] == 0.5

    def test_strict_at_one(self):
        c = success_curve(np.ones(10))
        assert np.all(c.fractions[:-1] == 1.0)
        assert c.fractions[-1] == 0.0
        assert len(c.thresholds) == 21

    def test_matches_recount(self):
        rng = np.random.default_rng(0)
        s = rng.uniform(size=137)
        s[:5] = [0.0, 0.05, 0.5, 1.0, 0.95]
        c = success_curve(s)
        for t, f in zip(DEFAULT_THRESHOLDS, c.fractions):
            count = 0
            for x in s:
                if x > t:
                    count += 1
            assert f == count / len(s)

    def test_non_increasing(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            c = success_curve(rng.uniform(size=rng.integers(1, 50)))
            assert np.all(np.diff(c.fractions) <= 0)

    def test_empty(self):
        with pytest.raises(ValueError):
            success_curve([])


class TestAuc:
    def test_constants(self):
        t = DEFAULT_THRESHOLDS
        assert auc(SuccessCurve(t, np.ones(21))) == pytest.approx(1.0, abs=1e-15)
        assert auc(SuccessCurve(t, np.zeros(21))) == 0.0

    def test_hand_trapezoid(self):
        # rectangle [0, 0.5] at height 1 plus a triangle of area 0.25
        value = auc(SuccessCurve(np.array([0.0, 0.5, 1.0]), np.array([1.0, 1.0, 0.0])))
        assert value == pytest.approx(0.5 * 1.0 + 0.5 * (1.0 + 0.0) / 2, abs=1e-15)
        assert value == pytest.approx(0.75, abs=1e-15)

    def test_bounded(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            assert 0 <= auc(success_curve(rng.uniform(size=30))) <= 1


class TestRunSummary:
    def test_nan_rows_excluded(self):
        gt = np.array([[0, 0, 10, 10], [np.nan] * 4, [0, 0, 10, 10]])
        run = TrackRun("x", np.array([[0, 0, 10, 10]] * 3), gt)
        with pytest.warns(RuntimeWarning, match="excluded"):
            summ = summarize(run)
        assert summ["n_scored"] == 2 and summ["mean_overlap"] == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            TrackRun("x", np.zeros((2, 4)), np.zeros((3, 4)))


class _Oracle:
    def __init__(self, gt):
        self.gt = gt

    def fit(self, frame, box):
        self.i = 0
        return self

    def predict(self, frame):
        self.i += 1
        return BoundingBox(*self.gt[self.i])


class _Frozen:
    def fit(self, frame, box):
        self.box = box
        return self

    def predict(self, frame):
        return self.box


class TestOpe:
    def test_perfect_stub(self, synth20):
        run, summ = ope_run(synth20, _Oracle(synth20.groundtruth))
        assert summ["mean_overlap"] == 1.0
        assert summ["auc"] == pytest.approx(1 - 0.05 / 2, abs=1e-12)
        np.testing.assert_array_equal(run.results[0], run.groundtruth[0])

    def test_frozen_stub_worse_than_tracker(self, synth20):
        from sglst.tracker import SGLSTTracker

        frames = [read_gray(p) for p in synth20.frames]
        _, frozen = ope_run(synth20, _Frozen(), frames)
        tr = SGLSTTracker(n_particles=100, n_templates=5, max_iters=50)
        _, ours = ope_run(synth20, tr, frames)
        assert frozen["mean_overlap"] < ours["mean_overlap"]

    def test_missing_first_gt(self, synth20):
        seq = SequenceSpec("bad", synth20.frames, np.full((1, 4), np.nan))
        with pytest.raises(ValueError):
            ope_run(seq, _Frozen())

    def test_short_gt_warns(self, synth20):
        seq = SequenceSpec("short", synth20.frames[:4], synth20.groundtruth[:2])
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            run, summ = ope_run(seq, _Frozen())
        assert summ["n_scored"] == 2
        assert any("excluded" in str(x.message) for x in w)
