"""Patch-grid extraction and per-patch descriptors (intensity, HOG)."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_gray_image

__all__ = [
    "PatchGridConfig",
    "HogParams",
    "INTENSITY_GRID",
    "HOG_GRID",
    "extract_patch_grid",
    "intensity_features",
    "hog_descriptor",
    "hog_features",
    "PatchFeatureExtractor",
    "rgb_to_gray",
]


@dataclass(frozen=True)
class PatchGridConfig:
    """Square region split into overlapping square patches."""

    region_size: int = 32
    patch_size: int = 16
    stride: int = 8

    def __post_init__(self):
        if min(self.region_size, self.patch_size, self.stride) < 1:
            raise ValueError("region_size, patch_size and stride must be >= 1")
        if self.patch_size > self.region_size:
            raise ValueError("patch_size exceeds region_size")
        if (self.region_size - self.patch_size) % self.stride:
            raise ValueError("(region_size - patch_size) must be divisible by stride")

    @property
    def per_side(self):
        return (self.region_size - self.patch_size) // self.stride + 1

    @property
    def n_patches(self):
        return self.per_side ** 2

    def offsets(self):
        """(row, col) top-left offsets in row-major order."""
        steps = [i * self.stride for i in range(self.per_side)]
        return [(r, c) for r in steps for c in steps]


INTENSITY_GRID = PatchGridConfig(32, 16, 8)
HOG_GRID = PatchGridConfig(64, 32, 16)


@dataclass(frozen=True)
class HogParams:
    """HOG layout. Defaults give 7x7 blocks x 4 bins = 196 dims on a 32x32 patch."""

    cell_size: int = 4
    block_cells: int = 2
    block_stride: int = 4
    n_bins: int = 4
    eps: float = 1e-5

    def __post_init__(self):
        if self.block_stride % self.cell_size:
            raise ValueError("block_stride must be a multiple of cell_size")
        if min(self.cell_size, self.block_cells, self.block_stride, self.n_bins) < 1:
            raise ValueError("HOG parameters must be positive")

    def blocks_per_side(self, patch_size):
        if patch_size % self.cell_size:
            raise ValueError("patch_size must be a multiple of cell_size")
        n_cells = patch_size // self.cell_size
        if n_cells < self.block_cells:
            raise ValueError("patch too small for one block")
        return (n_cells - self.block_cells) // (self.block_stride // self.cell_size) + 1

    def dimension(self, patch_size=32):
        return self.blocks_per_side(patch_size) ** 2 * self.n_bins


def rgb_to_gray(rgb):
    """Luminance ``0.299 R + 0.587 G + 0.114 B`` of an ``(H, W, 3)`` array."""
    rgb = np.asarray(rgb, dtype=float)
    return rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114


def _patch_stack(regions, grid):
    # (n, R, R) -> (n, l, P, P), row-major grid order
    if regions.shape[1:] != (grid.region_size, grid.region_size):
        raise ValueError(
            f"region must be {grid.region_size}x{grid.region_size}, got "
            f"{regions.shape[1]}x{regions.shape[2]}")
    P, S = grid.patch_size, grid.stride
    win = sliding_window_view(regions, (P, P), axis=(1, 2))[:, ::S, ::S]
    n, a, b = win.shape[:3]
    return win.reshape(n, a * b, P, P)


def extract_patch_grid(region, cfg):
    """Return the ``l`` patches of ``region`` as a list, top-left first."""
    region = check_gray_image(region, "region")
    return list(_patch_stack(region[None], cfg)[0])


def _normalize_columns(F):
    # F: (n, d, l); zero columns stay zero and are flagged
    norms = np.sqrt(np.einsum("ndl,ndl->nl", F, F))
    degenerate = norms == 0
    safe = np.where(degenerate, 1.0, norms)
    return F / safe[:, None, :], degenerate


def _intensity_batch(regions, grid):
    patches = _patch_stack(regions, grid)
    n, l = patches.shape[:2]
    F = patches.reshape(n, l, -1).transpose(0, 2, 1)
    return _normalize_columns(F)


def intensity_features(region, grid=INTENSITY_GRID):
    """Vectorized, column-normalized gray-level patches.

    Returns
    -------
    X : ndarray, shape (patch_size**2, l)
    degenerate : ndarray of bool, shape (l,)
        True where the patch was all zero and its column was left at zero.
    """
    region = check_gray_image(region, "region")
    X, degenerate = _intensity_batch(region[None], grid)
    return X[0], degenerate[0]


def _hog_batch(patches, params):
    # patches: (N, P, P) -> (N, dim); block-normalized, not column-normalized
    N, P, _ = patches.shape
    padded = np.pad(patches, ((0, 0), (1, 1), (1, 1)), mode="edge")
    gx = padded[:, 1:-1, 2:] - padded[:, 1:-1, :-2]
    gy = padded[:, 2:, 1:-1] - padded[:, :-2, 1:-1]
    mag = np.hypot(gx, gy)
    B = params.n_bins
    pos = np.mod(np.arctan2(gy, gx), np.pi) / (np.pi / B)
    base = np.floor(pos)
    frac = pos - base
    lo = base.astype(int) % B
    hi = (lo + 1) % B
    bins = np.arange(B)
    votes = (mag * (1.0 - frac))[..., None] * (lo[..., None] == bins)
    votes += (mag * frac)[..., None] * (hi[..., None] == bins)

    cs = params.cell_size
    nc = P // cs
    cells = votes.reshape(N, nc, cs, nc, cs, B).sum(axis=(2, 4))
    bc = params.block_cells
    step = params.block_stride // cs
    nb = params.blocks_per_side(P)
    blocks = np.zeros((N, nb, nb, B))
    for i in range(bc):
        for j in range(bc):
            blocks += cells[:, i:i + step * (nb - 1) + 1:step, j:j + step * (nb - 1) + 1:step]
    norm = np.sqrt(np.sum(blocks ** 2, axis=-1, keepdims=True) + params.eps ** 2)
    return (blocks / norm).reshape(N, -1)


def hog_descriptor(patch, params=HogParams()):
    """HOG descriptor of one gray patch.

    Centered ``[-1, 0, 1]`` gradients with replicated borders, unsigned
    orientations split linearly between the two nearest bin centers
    ``b * pi / n_bins``, per-cell pooling, block sums and L2 normalization
    ``v / sqrt(||v||^2 + eps^2)``.
    """
    patch = check_gray_image(patch, "patch")
    if patch.shape[0] != patch.shape[1]:
        raise ValueError("HOG patch must be square")
    return _hog_batch(patch[None], params)[0]


def _hog_features_batch(regions, grid, params):
    patches = _patch_stack(regions, grid)
    n, l, P, _ = patches.shape
    desc = _hog_batch(patches.reshape(n * l, P, P), params)
    F = desc.reshape(n, l, -1).transpose(0, 2, 1)
    return _normalize_columns(F)


def hog_features(region, grid=HOG_GRID, params=HogParams()):
    """Per-patch HOG descriptors, column-normalized; see ``intensity_features``."""
    region = check_gray_image(region, "region")
    X, degenerate = _hog_features_batch(region[None], grid, params)
    return X[0], degenerate[0]


class PatchFeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer from square gray regions to patch feature matrices.

    Parameters
    ----------
    kind : {"intensity", "hog"}
    grid : PatchGridConfig or None
        Defaults to 32/16/8 for intensity and 64/32/16 for HOG.
    hog_params : HogParams or None

    ``transform`` maps an array of shape ``(n, R, R)`` to ``(n, d, l)``; the
    per-column degeneracy mask of the last call is kept in ``degenerate_``.
    """

    def __init__(self, kind="intensity", grid=None, hog_params=None):
        self.kind = kind
        self.grid = grid
        self.hog_params = hog_params

    def _resolved(self):
        if self.kind not in ("intensity", "hog"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        default = INTENSITY_GRID if self.kind == "intensity" else HOG_GRID
        return self.grid or default, self.hog_params or HogParams()

    @property
    def region_size(self):
        return self._resolved()[0].region_size

    @property
    def n_patches(self):
        return self._resolved()[0].n_patches

    @property
    def n_features(self):
        grid, hp = self._resolved()
        if self.kind == "intensity":
            return grid.patch_size ** 2
        return hp.dimension(grid.patch_size)

    def fit(self, X=None, y=None):
        self._resolved()
        return self

    def transform(self, X):
        regions = np.asarray(X, dtype=float)
        if regions.ndim == 2:
            regions = regions[None]
        if regions.ndim != 3 or not np.all(np.isfinite(regions)):
            raise ValueError("expected finite regions of shape (n, R, R)")
        regions = np.clip(regions, 0.0, 1.0)
        grid, hp = self._resolved()
        if self.kind == "intensity":
            F, self.degenerate_ = _intensity_batch(regions, grid)
        else:
            F, self.degenerate_ = _hog_features_batch(regions, grid, hp)
        return F
