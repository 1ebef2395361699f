"""Overlap score, success curves, AUC and one-pass evaluation."""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .boxes import BoundingBox

__all__ = [
    "DEFAULT_THRESHOLDS",
    "SuccessCurve",
    "TrackRun",
    "overlap",
    "overlaps",
    "success_curve",
    "auc",
    "summarize",
    "ope_run",
]

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = np.linspace(0.0, 1.0, 21)


def overlaps(results, groundtruth):
    """Row-wise intersection-over-union of ``(N, 4)`` arrays of ``x, y, w, h``.

    Rows with a non-positive area give 0; NaN rows give NaN.
    """
    a = np.atleast_2d(np.asarray(results, dtype=float))
    b = np.atleast_2d(np.asarray(groundtruth, dtype=float))
    if a.shape != b.shape or a.shape[-1] != 4:
        raise ValueError(f"box arrays must both be (N, 4), got {a.shape} and {b.shape}")
    ix = np.minimum(a[:, 0] + a[:, 2], b[:, 0] + b[:, 2]) - np.maximum(a[:, 0], b[:, 0])
    iy = np.minimum(a[:, 1] + a[:, 3], b[:, 1] + b[:, 3]) - np.maximum(a[:, 1], b[:, 1])
    inter = np.maximum(ix, 0.0) * np.maximum(iy, 0.0)
    # areas from the same corner differences as the intersection, so that
    # identical boxes give exactly 1
    area_a = ((a[:, 0] + a[:, 2]) - a[:, 0]) * ((a[:, 1] + a[:, 3]) - a[:, 1])
    area_b = ((b[:, 0] + b[:, 2]) - b[:, 0]) * ((b[:, 1] + b[:, 3]) - b[:, 1])
    degenerate = (a[:, 2] <= 0) | (a[:, 3] <= 0) | (b[:, 2] <= 0) | (b[:, 3] <= 0)
    union = area_a + area_b - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(degenerate, 0.0, inter / np.where(degenerate, 1.0, union))
    return np.clip(s, 0.0, 1.0)


def overlap(r_t, r_g):
    """Area IoU of two boxes given as ``BoundingBox`` or ``(x, y, w, h)``."""
    a = np.asarray(tuple(r_t), dtype=float)
    b = np.asarray(tuple(r_g), dtype=float)
    if min(a[2], a[3], b[2], b[3]) <= 0:
        warnings.warn("zero-area box in overlap; scoring 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(overlaps(a, b)[0])


@dataclass
class SuccessCurve:
    thresholds: np.ndarray
    fractions: np.ndarray


def success_curve(scores, thresholds=None):
    """Fraction of frames whose overlap is strictly above each threshold."""
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size == 0:
        raise ValueError("no overlap scores to evaluate")
    t = DEFAULT_THRESHOLDS if thresholds is None else np.asarray(thresholds, dtype=float)
    if np.any(np.diff(t) < 0):
        raise ValueError("thresholds must be ascending")
    fractions = (scores[None, :] > t[:, None]).mean(axis=1)
    return SuccessCurve(t.copy(), fractions)


def auc(curve):
    """Trapezoidal area under a success curve."""
    return float(np.trapezoid(curve.fractions, curve.thresholds))


@dataclass
class TrackRun:
    name: str
    results: np.ndarray
    groundtruth: np.ndarray
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.results = np.asarray(self.results, dtype=float).reshape(-1, 4)
        self.groundtruth = np.asarray(self.groundtruth, dtype=float).reshape(-1, 4)
        if len(self.results) != len(self.groundtruth):
            raise ValueError("results and ground truth differ in length")

    def overlaps(self):
        """Per-frame overlap; NaN where ground truth is missing."""
        valid = np.all(np.isfinite(self.groundtruth), axis=1)
        s = np.full(len(self.results), np.nan)
        if valid.any():
            s[valid] = overlaps(self.results[valid], self.groundtruth[valid])
        return s


def summarize(run, thresholds=None):
    """Mean overlap, success curve and AUC over frames with ground truth."""
    s = run.overlaps()
    valid = np.isfinite(s)
    if not valid.all():
        warnings.warn(f"{run.name}: {int((~valid).sum())} frame(s) without ground truth "
                      "excluded from metrics", RuntimeWarning, stacklevel=2)
    curve = success_curve(s[valid], thresholds)
    return {
        "sequence": run.name,
        "n_frames": int(len(s)),
        "n_scored": int(valid.sum()),
        "mean_overlap": float(np.mean(s[valid])),
        "auc": auc(curve),
        "curve": curve,
    }


def ope_run(sequence, tracker, frames=None):
    """One-pass evaluation of ``tracker`` on ``sequence``.

    The tracker is initialized with ``tracker.fit(frame0, gt0)`` and advanced
    with ``tracker.predict(frame)``. ``frames`` may supply decoded images;
    otherwise they are read from the sequence's file list.

    Returns
    -------
    run : TrackRun
    summary : dict
    """
    from .io import read_gray

    gt = np.asarray(sequence.groundtruth, dtype=float)
    if len(gt) == 0 or not np.all(np.isfinite(gt[0])):
        raise ValueError(f"{sequence.name}: frame 0 has no ground truth")
    n = len(sequence.frames)
    get = (lambda i: frames[i]) if frames is not None else (lambda i: read_gray(sequence.frames[i]))
    init_box = BoundingBox(*gt[0])
    tracker.fit(get(0), init_box)
    results = [tuple(init_box)]
    for i in range(1, n):
        results.append(tuple(tracker.predict(get(i))))
        if i % 50 == 0:
            logger.info("%s: frame %d/%d", sequence.name, i, n)
    full_gt = np.full((n, 4), np.nan)
    full_gt[:min(n, len(gt))] = gt[:n]
    run = TrackRun(sequence.name, np.array(results), full_gt)
    return run, summarize(run)
