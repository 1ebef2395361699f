"""Synthetic moving-square sequences with exact ground truth."""

from pathlib import Path

import numpy as np
from scipy import ndimage

from .io import format_boxes, load_sequence, write_gray

__all__ = ["synth_trajectory", "make_texture", "render_frame", "synth_sequence"]


def synth_trajectory(n_frames, sigma, frame_size=160, target_size=32, seed=0, margin=4):
    """Top-left corners of a square doing a Gaussian random walk.

    A step that would leave ``[margin, frame_size - target_size - margin]`` is
    negated, so every per-axis displacement has magnitude ``|N(0, sigma^2)|``.

    Returns
    -------
    boxes : ndarray, shape (n_frames, 4), 0-based ``x, y, w, h``
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    lo, hi = float(margin), float(frame_size - target_size - margin)
    if hi <= lo:
        raise ValueError("frame too small for the target")
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[1])
    steps = sigma * rng.standard_normal((n_frames, 2))
    pos = np.empty((n_frames, 2))
    pos[0] = (lo + hi) / 2.0
    for t in range(1, n_frames):
        nxt = pos[t - 1] + steps[t]
        out = (nxt < lo) | (nxt > hi)
        nxt[out] = pos[t - 1][out] - steps[t][out]
        pos[t] = np.clip(nxt, lo, hi)
    return np.column_stack([pos, np.full((n_frames, 2), float(target_size))])


def make_texture(target_size=32, seed=0, cell=8):
    """Blocky bright texture with values in [0.45, 1]."""
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[0])
    n = -(-target_size // cell)
    coarse = rng.uniform(0.45, 1.0, size=(n, n))
    return np.kron(coarse, np.ones((cell, cell)))[:target_size, :target_size]


def render_frame(box, texture, frame_size, rng, background=0.2, noise=0.08):
    """Noisy dark background with ``texture`` pasted at a sub-pixel position."""
    img = np.clip(background + noise * rng.standard_normal((frame_size, frame_size)), 0.0, 1.0)
    x, y, w, h = box
    cols = np.arange(int(np.floor(x)), int(np.ceil(x + w)) + 1)
    rows = np.arange(int(np.floor(y)), int(np.ceil(y + h)) + 1)
    cols = cols[(cols + 0.5 >= x) & (cols + 0.5 < x + w) & (cols >= 0) & (cols < frame_size)]
    rows = rows[(rows + 0.5 >= y) & (rows + 0.5 < y + h) & (rows >= 0) & (rows < frame_size)]
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    vals = ndimage.map_coordinates(texture, [rr - y, cc - x], order=1, mode="nearest")
    img[rr, cc] = vals
    return img


def synth_sequence(out_dir, n_frames=100, sigma=2.0, seed=0, frame_size=160, target_size=32):
    """Render a sequence in OTB layout under ``out_dir`` and load it back."""
    out = Path(out_dir)
    (out / "img").mkdir(parents=True, exist_ok=True)
    boxes = synth_trajectory(n_frames, sigma, frame_size, target_size, seed)
    texture = make_texture(target_size, seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
    width = max(4, len(str(n_frames)))
    for t, box in enumerate(boxes):
        write_gray(out / "img" / f"{t + 1:0{width}d}.png",
                   render_frame(box, texture, frame_size, rng))
    (out / "groundtruth_rect.txt").write_text(format_boxes(boxes))
    return load_sequence(out)
