"""Particle-filter tracker scored by group-sparse local patch codes."""

import copy
import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_gray_image, check_positive_int
from .boxes import BoundingBox
from .features import PatchFeatureExtractor
from .io import crop_warp_batch
from .pooling import aligned_mass, alignment_pool, likelihood_from_codes
from .solver import Dictionary, SolverConfig, precompute, solve_batch

__all__ = [
    "TrackerConfig",
    "TemplateSet",
    "TrackerState",
    "SGLSTTracker",
    "init",
    "propagate",
    "resample",
    "alignment_pool",
    "candidate_likelihood",
    "score_candidates",
    "step",
    "update_templates",
    "particles_to_boxes",
]

logger = logging.getLogger(__name__)

SCALE_MIN, SCALE_MAX = 0.2, 5.0


@dataclass(frozen=True)
class TrackerConfig:
    n_particles: int = 400
    n_templates: int = 10
    sigma_xy: float = 4.0
    sigma_s: float = 0.02
    lam: float = 0.1
    mu: float = 0.1
    max_iters: int = 100
    tol: float = 1e-4
    features: str = "intensity"
    tau: float = 0.85
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.n_particles, "n_particles")
        check_positive_int(self.n_templates, "n_templates")
        if self.sigma_xy < 0 or self.sigma_s < 0:
            raise ValueError("motion noise must be nonnegative")

    @property
    def solver(self):
        return SolverConfig(lam=self.lam, mu=self.mu, max_iters=self.max_iters, tol=self.tol)


@dataclass
class TemplateSet:
    """``k`` template crops with features ``(k, d, l)`` and positive weights.

    Slot 0 holds the first-frame crop and is never replaced.
    """

    crops: np.ndarray
    features: np.ndarray
    weights: np.ndarray

    @property
    def k(self):
        return self.features.shape[0]

    @property
    def l(self):
        return self.features.shape[2]

    def dictionary(self):
        k, d, l = self.features.shape
        return Dictionary(self.features.transpose(1, 0, 2).reshape(d, k * l), l, k)


@dataclass
class TrackerState:
    config: TrackerConfig
    extractor: PatchFeatureExtractor
    templates: TemplateSet
    dictionary: Dictionary
    precomputation: object
    particles: np.ndarray  # (n, 3): cx, cy, scale
    weights: np.ndarray
    base_size: tuple  # (w0, h0)
    box: BoundingBox
    frame_index: int
    rng: np.random.Generator
    lost: bool = False
    last_code: np.ndarray = None


def particles_to_boxes(particles, base_size):
    w = particles[:, 2] * base_size[0]
    h = particles[:, 2] * base_size[1]
    return np.column_stack([particles[:, 0] - w / 2.0, particles[:, 1] - h / 2.0, w, h])


def _extractor_for(cfg):
    return PatchFeatureExtractor(kind=cfg.features).fit()


def init(first_frame, init_box, cfg):
    """Build templates, dictionary, factorization and particles from frame 0."""
    frame = check_gray_image(first_frame, "first_frame")
    box = init_box if isinstance(init_box, BoundingBox) else BoundingBox(*init_box)
    H, W = frame.shape
    if not box.inside(W, H):
        raise ValueError(f"initial box {tuple(box)} is outside the {W}x{H} frame")
    rng = np.random.default_rng(cfg.seed)
    extractor = _extractor_for(cfg)
    k = cfg.n_templates

    offsets = np.zeros((k, 2))
    if k > 1:
        offsets[1:] = rng.integers(-2, 3, size=(k - 1, 2))
    boxes = np.tile(box.as_array(), (k, 1))
    boxes[:, :2] += offsets
    boxes[:, 0] = np.clip(boxes[:, 0], 0.0, max(W - box.w, 0.0))
    boxes[:, 1] = np.clip(boxes[:, 1], 0.0, max(H - box.h, 0.0))
    boxes[0] = box.as_array()
    crops = crop_warp_batch(frame, boxes, extractor.region_size)
    feats = extractor.transform(crops)
    templates = TemplateSet(crops, feats, np.full(k, 1.0 / k))
    dictionary = templates.dictionary()
    pre = precompute(dictionary, cfg.solver)

    cx, cy = box.center
    n = cfg.n_particles
    particles = np.tile([cx, cy, 1.0], (n, 1))
    return TrackerState(cfg, extractor, templates, dictionary, pre, particles,
                        np.full(n, 1.0 / n), (box.w, box.h), box, 0, rng)


def propagate(particles, cfg, rng):
    """Gaussian random walk on center, log-normal walk on scale."""
    p = np.array(particles, dtype=float)
    n = len(p)
    noise = rng.standard_normal((n, 3))
    p[:, 0] += cfg.sigma_xy * noise[:, 0]
    p[:, 1] += cfg.sigma_xy * noise[:, 1]
    p[:, 2] *= np.exp(cfg.sigma_s * noise[:, 2])
    p[:, 2] = np.clip(p[:, 2], SCALE_MIN, SCALE_MAX)
    return p


def resample(particles, weights, rng):
    """Systematic resampling with one uniform offset."""
    w = np.asarray(weights, dtype=float)
    n = len(w)
    positions = (rng.random() + np.arange(n)) / n
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, positions, side="right")
    return np.array(particles)[np.minimum(idx, n - 1)]


def candidate_likelihood(X, D, pre, cfg):
    """Pooled likelihood of one ``d x l`` candidate and its solver diagnostics."""
    solver_cfg = cfg.solver if isinstance(cfg, TrackerConfig) else cfg
    codes, diag = solve_batch(np.asarray(X, dtype=float)[None], pre, solver_cfg)
    return float(likelihood_from_codes(codes[0], D.l, D.k)), diag


def score_candidates(feats, state):
    """Codes and likelihoods for a stack of candidate features ``(n, d, l)``."""
    codes, diag = solve_batch(feats, state.precomputation, state.config.solver)
    lik = likelihood_from_codes(codes, state.dictionary.l, state.dictionary.k)
    return codes, lik, diag


def update_templates(state, result_crop, result_features, result_code):
    """Similarity-gated template replacement and weight update.

    If the result's best cosine similarity to any template is below ``tau``,
    the lowest-weight template other than slot 0 is replaced by the result
    and given the median weight, and the dictionary is refactored. Every
    weight is then scaled by ``1 + aligned mass`` of its block in the
    winning code and the weights are renormalized.
    """
    tpl = state.templates
    cfg = state.config
    k = tpl.k
    flat = tpl.features.reshape(k, -1)
    r = np.asarray(result_features).ravel()
    norms = np.linalg.norm(flat, axis=1) * np.linalg.norm(r)
    sims = np.where(norms > 0, flat @ r / np.where(norms > 0, norms, 1.0), 0.0)
    replaced = None
    if k > 1 and sims.max() < cfg.tau:
        replaced = 1 + int(np.argmin(tpl.weights[1:]))
        median = float(np.median(tpl.weights))
        tpl.crops[replaced] = result_crop
        tpl.features[replaced] = result_features
        tpl.weights[replaced] = median
        state.dictionary = tpl.dictionary()
        state.precomputation = precompute(state.dictionary, cfg.solver)
    mass = aligned_mass(result_code, tpl.l, k).sum(axis=-1)
    tpl.weights *= 1.0 + mass
    tpl.weights /= tpl.weights.sum()
    return replaced


def step(state, frame):
    """Advance the tracker by one frame; returns ``(box, state)``.

    The state is updated in place and also returned.
    """
    frame = check_gray_image(frame, "frame")
    cfg = state.config
    H, W = frame.shape
    particles = propagate(state.particles, cfg, state.rng)
    boxes = particles_to_boxes(particles, state.base_size)
    visible = ((boxes[:, 0] < W) & (boxes[:, 1] < H)
               & (boxes[:, 0] + boxes[:, 2] > 0) & (boxes[:, 1] + boxes[:, 3] > 0))
    lik = np.full(len(particles), -np.inf)
    state.frame_index += 1
    if not visible.any():
        logger.warning("frame %d: no candidate overlaps the frame; keeping previous box",
                       state.frame_index)
        state.lost = True
        state.particles = particles
        state.weights = np.full(len(particles), 1.0 / len(particles))
        return state.box, state

    vis = np.flatnonzero(visible)
    crops = crop_warp_batch(frame, boxes[vis], state.extractor.region_size)
    feats = state.extractor.transform(crops)
    codes, lik_vis, _ = score_candidates(feats, state)
    lik[vis] = lik_vis
    best_local = int(np.argmax(lik_vis))  # first max: lowest index wins ties
    best = int(vis[best_local])
    state.box = BoundingBox(*boxes[best])
    state.lost = False
    state.last_code = codes[best_local]

    w = np.where(np.isfinite(lik), np.maximum(lik, 0.0), 0.0)
    total = w.sum()
    w = w / total if total > 0 else np.full(len(w), 1.0 / len(w))
    state.particles = resample(particles, w, state.rng)
    state.weights = np.full(len(particles), 1.0 / len(particles))
    update_templates(state, crops[best_local], feats[best_local], codes[best_local])
    return state.box, state


class SGLSTTracker(BaseEstimator):
    """Tracker estimator built on group-sparse patch coding.

    ``fit(first_frame, init_box)`` initializes the appearance model and
    particles; each ``predict(frame)`` call advances one frame and returns the
    selected ``BoundingBox``.

    Parameters
    ----------
    n_particles, n_templates : int
    sigma_xy : float
        Per-frame std of the center random walk, pixels.
    sigma_s : float
        Per-frame std of the log-scale random walk.
    lam, mu, max_iters, tol
        Solver settings.
    features : {"intensity", "hog"}
    tau : float
        Cosine similarity below which a template is replaced.
    random_state : int
    """

    def __init__(self, n_particles=400, n_templates=10, sigma_xy=4.0, sigma_s=0.02,
                 lam=0.1, mu=0.1, max_iters=100, tol=1e-4, features="intensity",
                 tau=0.85, random_state=0):
        self.n_particles = n_particles
        self.n_templates = n_templates
        self.sigma_xy = sigma_xy
        self.sigma_s = sigma_s
        self.lam = lam
        self.mu = mu
        self.max_iters = max_iters
        self.tol = tol
        self.features = features
        self.tau = tau
        self.random_state = random_state

    def _config(self):
        return TrackerConfig(
            n_particles=self.n_particles, n_templates=self.n_templates,
            sigma_xy=self.sigma_xy, sigma_s=self.sigma_s, lam=self.lam, mu=self.mu,
            max_iters=self.max_iters, tol=self.tol, features=self.features,
            tau=self.tau, seed=self.random_state)

    def fit(self, first_frame, init_box):
        self.state_ = init(first_frame, init_box, self._config())
        return self

    def predict(self, frame):
        check_is_fitted(self, "state_")
        box, self.state_ = step(self.state_, frame)
        return box

    def track(self, frames, init_box):
        """Run over an iterable of frames; the first one initializes."""
        it = iter(frames)
        first = next(it)
        self.fit(first, init_box)
        init_box = self.state_.box
        return [init_box] + [self.predict(f) for f in it]

    def clone_state(self):
        return copy.deepcopy(self.state_)
