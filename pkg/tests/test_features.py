import math

import numpy as np
import pytest

from sglst.features import (
    HOG_GRID,
    INTENSITY_GRID,
    HogParams,
    PatchFeatureExtractor,
    PatchGridConfig,
    extract_patch_grid,
    hog_descriptor,
    hog_features,
    intensity_features,
    rgb_to_gray,
)


def reference_hog(patch, cell=4, block=2, stride_cells=1, bins=4, eps=1e-5):
    """Scalar-loop HOG used as an oracle for the vectorized implementation."""
    P = patch.shape[0]

    def px(r, c):
        return patch[min(max(r, 0), P - 1), min(max(c, 0), P - 1)]

    nc = P // cell
    hist = [[[0.0] * bins for _ in range(nc)] for _ in range(nc)]
    for r in range(P):
        for c in range(P):
            gx = px(r, c + 1) - px(r, c - 1)
            gy = px(r + 1, c) - px(r - 1, c)
            mag = math.sqrt(gx * gx + gy * gy)
            ang = math.atan2(gy, gx) % math.pi
            pos = ang / (math.pi / bins)
            b0 = int(math.floor(pos))
            f = pos - b0
            hist[r // cell][c // cell][b0 % bins] += mag * (1 - f)
            hist[r // cell][c // cell][(b0 + 1) % bins] += mag * f
    out = []
    nb = (nc - block) // stride_cells + 1
    for bi in range(nb):
        for bj in range(nb):
            v = [0.0] * bins
            for i in range(block):
                for j in range(block):
                    for b in range(bins):
                        v[b] += hist[bi * stride_cells + i][bj * stride_cells + j][b]
            norm = math.sqrt(sum(x * x for x in v) + eps * eps)
            out.extend(x / norm for x in v)
    return np.array(out)


class TestGrid:
    def test_defaults(self):
        assert INTENSITY_GRID.n_patches == 9
        assert HOG_GRID.n_patches == 9
        assert INTENSITY_GRID.offsets()[:3] == [(0, 0), (0, 8), (0, 16)]

    def test_count_formula_exhaustive(self):
        for R in range(1, 65):
            for P in range(1, R + 1):
                for S in range(1, R + 1):
                    if (R - P) % S:
                        continue
                    windows = sum(1 for r in range(0, R - P + 1) for c in range(0, R - P + 1)
                                  if r % S == 0 and c % S == 0)
                    assert PatchGridConfig(R, P, S).n_patches == ((R - P) // S + 1) ** 2
                    assert windows == ((R - P) // S + 1) ** 2

    @pytest.mark.parametrize("args", [(32, 40, 8), (32, 16, 5), (0, 1, 1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            PatchGridConfig(*args)

    def test_patches_are_crops(self):
        region = np.random.default_rng(0).uniform(size=(32, 32))
        patches = extract_patch_grid(region, INTENSITY_GRID)
        assert len(patches) == 9
        for p, (r, c) in zip(patches, INTENSITY_GRID.offsets()):
            np.testing.assert_array_equal(p, region[r:r + 16, c:c + 16])

    def test_wrong_region_size(self):
        with pytest.raises(ValueError):
            intensity_features(np.zeros((30, 30)))


class TestIntensity:
    def test_shape_and_norm(self):
        region = np.random.default_rng(1).uniform(size=(32, 32))
        X, degenerate = intensity_features(region)
        assert X.shape == (256, 9)
        assert not degenerate.any()
        np.testing.assert_allclose(np.linalg.norm(X, axis=0), 1.0, atol=1e-10)

    def test_zero_region_degenerate(self):
        X, degenerate = intensity_features(np.zeros((32, 32)))
        assert degenerate.all()
        assert np.all(X == 0)

    def test_scale_invariance(self):
        region = np.random.default_rng(2).uniform(0, 0.5, size=(32, 32))
        a, _ = intensity_features(region)
        b, _ = intensity_features(1.7 * region)
        np.testing.assert_allclose(a, b, atol=1e-15)

    def test_not_shift_invariant(self):
        region = np.random.default_rng(2).uniform(0, 0.5, size=(32, 32))
        a, _ = intensity_features(region)
        b, _ = intensity_features(region + 0.3)
        assert np.abs(a - b).max() > 1e-3

    def test_non_finite(self):
        bad = np.zeros((32, 32))
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            intensity_features(bad)


class TestHog:
    def test_dimension(self):
        assert HogParams().dimension(32) == 196
        assert hog_descriptor(np.zeros((32, 32))).shape == (196,)

    def test_uniform_is_zero(self):
        d = hog_descriptor(np.full((32, 32), 0.4))
        assert np.all(np.isfinite(d))
        assert np.all(d == 0)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_reference(self, seed):
        patch = np.random.default_rng(seed).uniform(size=(32, 32))
        np.testing.assert_allclose(hog_descriptor(patch), reference_hog(patch), atol=1e-12)

    def test_vertical_edge(self):
        patch = np.zeros((32, 32))
        patch[:, 16:] = 1.0
        d = hog_descriptor(patch)
        ref = reference_hog(patch)
        np.testing.assert_allclose(d, ref, atol=1e-12)
        per_bin = d.reshape(-1, 4).sum(axis=0)
        # horizontal gradient -> orientation 0 -> bin 0
        assert per_bin.argmax() == 0
        assert per_bin[0] > 0.99 * per_bin.sum()

    def test_brightness_shift_invariance(self):
        patch = np.random.default_rng(5).uniform(0, 0.5, size=(32, 32))
        np.testing.assert_allclose(hog_descriptor(patch), hog_descriptor(patch + 0.25),
                                   atol=1e-10)

    def test_features_shape(self):
        region = np.random.default_rng(3).uniform(size=(64, 64))
        X, degenerate = hog_features(region)
        assert X.shape == (196, 9)
        assert not degenerate.any()
        np.testing.assert_allclose(np.linalg.norm(X, axis=0), 1.0, atol=1e-10)

    def test_uniform_region_degenerate(self):
        X, degenerate = hog_features(np.full((64, 64), 0.5))
        assert degenerate.all()
        assert np.all(X == 0)

    def test_crop_equivalence(self):
        rng = np.random.default_rng(4)
        frame = rng.uniform(size=(100, 100))
        top, left = 7, 13
        region = frame[top:top + 64, left:left + 64]
        X, _ = hog_features(region)
        for r, (dr, dc) in enumerate(HOG_GRID.offsets()):
            patch = frame[top + dr:top + dr + 32, left + dc:left + dc + 32]
            d = hog_descriptor(patch)
            np.testing.assert_allclose(X[:, r], d / np.linalg.norm(d), atol=1e-10)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            HogParams(cell_size=4, block_stride=6)
        with pytest.raises(ValueError):
            HogParams().dimension(30)


class TestExtractor:
    def test_batch_matches_single(self):
        rng = np.random.default_rng(6)
        regions = rng.uniform(size=(3, 32, 32))
        F = PatchFeatureExtractor().transform(regions)
        assert F.shape == (3, 256, 9)
        for i in range(3):
            np.testing.assert_array_equal(F[i], intensity_features(regions[i])[0])

    def test_hog_kind(self):
        ex = PatchFeatureExtractor(kind="hog")
        assert (ex.region_size, ex.n_patches, ex.n_features) == (64, 9, 196)
        regions = np.random.default_rng(7).uniform(size=(2, 64, 64))
        F = ex.transform(regions)
        np.testing.assert_allclose(F[1], hog_features(regions[1])[0], atol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PatchFeatureExtractor(kind="sift").fit()

    def test_get_params(self):
        assert PatchFeatureExtractor(kind="hog").get_params()["kind"] == "hog"


def test_rgb_to_gray():
    rgb = np.zeros((2, 2, 3))
    rgb[..., 0] = 1.0
    np.testing.assert_allclose(rgb_to_gray(rgb), 0.299)
    np.testing.assert_allclose(rgb_to_gray(np.ones((1, 1, 3))), 1.0)
