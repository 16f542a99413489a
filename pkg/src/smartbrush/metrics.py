"""Image-quality metrics: windowed SSIM, Frechet distance and FID plumbing.

Metrics operate on channel-last numpy images (``(H, W)`` or ``(H, W, C)``)
in ``[0, 1]``; feature clouds are ``(n_samples, dim)`` float arrays.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import GameMap
from .dataset import SplitScore, material_intersection
from .losses import FeatureExtractor, default_extractor

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

EIGENVALUE_FLOOR = -1e-6


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    kern = np.outer(g, g)
    return kern / kern.sum()


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    window_size: int = SSIM_WINDOW,
    sigma: float = SSIM_SIGMA,
    k1: float = SSIM_K1,
    k2: float = SSIM_K2,
    data_range: float = 1.0,
) -> float:
    """Mean structural similarity over valid Gaussian windows and channels."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[:, :, None]
        b = b[:, :, None]
    if a.shape[0] < window_size or a.shape[1] < window_size:
        raise ValueError(f"image {a.shape[:2]} smaller than {window_size}x{window_size} window")

    kern = _gaussian_kernel(window_size, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    def windowed_mean(img: np.ndarray) -> np.ndarray:
        win = sliding_window_view(img, (window_size, window_size))
        return np.tensordot(win, kern, axes=([2, 3], [0, 1]))

    values = []
    for c in range(a.shape[2]):
        ac, bc = a[:, :, c], b[:, :, c]
        mu_a = windowed_mean(ac)
        mu_b = windowed_mean(bc)
        var_a = windowed_mean(ac * ac) - mu_a**2
        var_b = windowed_mean(bc * bc) - mu_b**2
        cov = windowed_mean(ac * bc) - mu_a * mu_b
        num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
        den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
        values.append(num / den)
    return float(np.mean(values))


def _sqrtm_psd(mat: np.ndarray, label: str) -> np.ndarray:
    sym = (mat + mat.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    if vals.min() < EIGENVALUE_FLOOR:
        raise ValueError(
            f"matrix square root failed for {label}: min eigenvalue {vals.min():.3e}, "
            f"max {vals.max():.3e} (matrix not PSD after symmetrization)"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(features_a: np.ndarray, features_b: np.ndarray) -> float:
    """Frechet distance between Gaussian fits of two feature clouds.

    ``|mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2})`` with the matrix root
    taken through an eigendecomposition of the symmetrized product.
    """
    fa = np.asarray(features_a, dtype=np.float64)
    fb = np.asarray(features_b, dtype=np.float64)
    if fa.ndim != 2 or fb.ndim != 2:
        raise ValueError("feature sets must be 2-D (n_samples, dim)")
    if fa.shape[1] != fb.shape[1]:
        raise ValueError(f"feature dimension mismatch: {fa.shape[1]} vs {fb.shape[1]}")
    if fa.shape[0] < 2 or fb.shape[0] < 2:
        raise ValueError("need at least 2 samples per feature set")

    mu_a, mu_b = fa.mean(axis=0), fb.mean(axis=0)
    cov_a = np.atleast_2d(np.cov(fa, rowvar=False))
    cov_b = np.atleast_2d(np.cov(fb, rowvar=False))

    root_a = _sqrtm_psd(cov_a, "cov_a")
    inner = root_a @ cov_b @ root_a
    sym = (inner + inner.T) / 2.0
    vals = np.linalg.eigvalsh(sym)
    if vals.min() < EIGENVALUE_FLOOR:
        raise ValueError(
            f"matrix square root failed for cov product: min eigenvalue {vals.min():.3e}, "
            f"max {vals.max():.3e}"
        )
    trace_root = np.sqrt(np.clip(vals, 0.0, None)).sum()

    diff = mu_a - mu_b
    fd = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * trace_root)
    return max(fd, 0.0)


def _image_to_chw(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image[None]
    return np.moveaxis(image, -1, 0)


def image_features(images: list[np.ndarray], extractor: FeatureExtractor) -> np.ndarray:
    """Feature cloud (n, d) for a list of channel-last images."""
    return np.stack([extractor.feature_vector(_image_to_chw(im)) for im in images])


def fid(images_a: list[np.ndarray], images_b: list[np.ndarray], extractor: FeatureExtractor | None = None) -> float:
    """Frechet distance of extractor features over two image sets."""
    if not images_a or not images_b:
        raise ValueError("image sets must be non-empty")
    channels = 1 if np.asarray(images_a[0]).ndim == 2 else np.asarray(images_a[0]).shape[-1]
    extractor = extractor or default_extractor(channels)
    return frechet_distance(image_features(images_a, extractor), image_features(images_b, extractor))


def chunk_am_features(game_map: GameMap, extractor: FeatureExtractor) -> np.ndarray:
    """Per-chunk global-AM crops embedded as one feature vector each."""
    rows = []
    for coord in sorted(game_map.grid):
        y0, y1, x0, x1 = game_map.chunk_pixel_box(coord)
        rows.append(extractor.feature_vector(_image_to_chw(game_map.global_am[y0:y1, x0:x1])))
    return np.stack(rows)


def chunk_tile_features(game_map: GameMap, extractor: FeatureExtractor) -> np.ndarray:
    """Per-chunk tile-mask features: each tile embedded separately, then
    pooled (mean) into one vector per chunk."""
    rows = []
    for coord in sorted(game_map.grid):
        chunk = game_map.grid[coord]
        per_tile = [extractor.feature_vector(tile.pixels[None]) for tile in chunk.tiles]
        rows.append(np.mean(per_tile, axis=0))
    return np.stack(rows)


def map_pair_score(
    map_a: GameMap,
    map_b: GameMap,
    am_extractor: FeatureExtractor | None = None,
    tile_extractor: FeatureExtractor | None = None,
) -> SplitScore:
    """Split score for one map pair: AM FID, tile FID, material Jaccard."""
    am_extractor = am_extractor or default_extractor(3)
    tile_extractor = tile_extractor or default_extractor(1)
    fid_am = frechet_distance(chunk_am_features(map_a, am_extractor), chunk_am_features(map_b, am_extractor))
    fid_tiles = frechet_distance(
        chunk_tile_features(map_a, tile_extractor), chunk_tile_features(map_b, tile_extractor)
    )
    return SplitScore(fid_am, fid_tiles, material_intersection(map_a, map_b))


def load_image_dir(path: str | Path) -> dict[str, np.ndarray]:
    """All PNG images in a directory as channel-last float arrays, by stem."""
    from .bundle import _load_rgb8

    images = {}
    for file in sorted(Path(path).glob("*.png")):
        images[file.stem] = _load_rgb8(file)
    if not images:
        raise ValueError(f"no .png images found in {path}")
    return images


def evaluate_dirs(
    pred_dir: str | Path,
    gt_dir: str | Path,
    metric_names: tuple[str, ...] = ("fid", "ssim"),
    extractor: FeatureExtractor | None = None,
) -> dict[str, float]:
    """Compare two directories of renders: FID over the sets, SSIM pairwise
    on matching file names."""
    preds = load_image_dir(pred_dir)
    gts = load_image_dir(gt_dir)
    results: dict[str, float] = {}
    for name in metric_names:
        if name == "fid":
            results["fid"] = fid(list(preds.values()), list(gts.values()), extractor)
        elif name == "ssim":
            common = sorted(set(preds) & set(gts))
            if not common:
                raise ValueError("no matching file names between pred and gt dirs")
            results["ssim"] = float(np.mean([ssim(preds[k], gts[k]) for k in common]))
        else:
            raise ValueError(f"unknown metric: {name!r}")
    return results
