"""Deterministic exemplar-copy inpainting baseline.

Runs the whole pipeline without any training: masked pixels are filled
channel by channel with best-matching patches copied from the unmasked
source region (7x7 patches, raster-scan fill order, SSD matching).  Fully
masked inputs fall back to a template-guided dominant-material fill driven
by the context stack's match-score planes.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core import TILES_PER_CHUNK
from . import GeneratorModel, MaskedChunkInput

PATCH = 7
HALF = PATCH // 2


def _source_patches(plane: np.ndarray, known: np.ndarray) -> np.ndarray | None:
    """Candidate source patches, flattened to (n, 49).

    Prefers patches lying entirely in known territory; falls back to patches
    with a known center pixel when no clean patch exists.
    """
    if plane.shape[0] < PATCH or plane.shape[1] < PATCH:
        return None
    windows = sliding_window_view(plane, (PATCH, PATCH)).reshape(-1, PATCH * PATCH)
    known_counts = sliding_window_view(known.astype(np.float32), (PATCH, PATCH)).reshape(
        -1, PATCH * PATCH
    ).sum(axis=1)
    fully_valid = known_counts == PATCH * PATCH
    if fully_valid.any():
        return np.ascontiguousarray(windows[fully_valid], dtype=np.float32)
    centers = known[HALF:-HALF, HALF:-HALF].reshape(-1)
    if centers.any():
        return np.ascontiguousarray(windows[centers], dtype=np.float32)
    return None


def exemplar_inpaint_plane(plane: np.ndarray, brush: np.ndarray) -> np.ndarray | None:
    """Fill brush-masked pixels of one plane by exemplar patch copying.

    Returns None when no source patch exists (nothing unmasked to copy from).
    """
    side_y, side_x = plane.shape
    out = np.asarray(plane, dtype=np.float32).copy()
    unfilled = np.asarray(brush) > 0
    if not unfilled.any():
        return out

    known = ~unfilled
    sources = _source_patches(out, known)
    if sources is None:
        return None

    sources_sq = sources**2
    known = known.copy()
    flat_unfilled = unfilled.reshape(-1)
    pointer = 0
    total = flat_unfilled.size

    while True:
        remaining = np.flatnonzero(flat_unfilled[pointer:])
        if remaining.size == 0:
            break
        pointer += int(remaining[0])
        y, x = divmod(pointer, side_x)

        # Weighted SSD of the (partially known) template around (y, x)
        # against every source patch; out-of-bounds and unknown cells get
        # weight zero.
        y0, y1 = max(0, y - HALF), min(side_y, y + HALF + 1)
        x0, x1 = max(0, x - HALF), min(side_x, x + HALF + 1)
        sub_known = known[y0:y1, x0:x1]
        sub_vals = out[y0:y1, x0:x1]
        wy0, wx0 = y0 - (y - HALF), x0 - (x - HALF)
        wy1, wx1 = wy0 + sub_known.shape[0], wx0 + sub_known.shape[1]
        block_w = np.zeros((PATCH, PATCH), dtype=np.float32)
        block_v = np.zeros((PATCH, PATCH), dtype=np.float32)
        block_w[wy0:wy1, wx0:wx1] = sub_known
        block_v[wy0:wy1, wx0:wx1] = sub_vals * sub_known
        weights = block_w.reshape(-1)
        values = block_v.reshape(-1)

        if weights.sum() == 0:
            best = 0
        else:
            ssd = sources_sq @ weights - 2.0 * (sources @ (weights * values))
            best = int(np.argmin(ssd))
        patch = sources[best].reshape(PATCH, PATCH)

        # Stamp every still-unfilled pixel covered by the matched patch.
        target_unfilled = ~known[y0:y1, x0:x1]
        out[y0:y1, x0:x1][target_unfilled] = patch[wy0:wy1, wx0:wx1][target_unfilled]
        known[y0:y1, x0:x1] = True
        flat_unfilled.reshape(side_y, side_x)[y0:y1, x0:x1] = False

    return out


def dominant_material_fill(masked: MaskedChunkInput) -> np.ndarray:
    """One-hot tile stack giving full weight to the chunk's dominant
    material.

    Dominance uses the same statistic as the material ranking: the mean of
    each template score plane's top decile; ties fall to the lowest tile
    index.
    """
    templates = masked.context.templates
    flat = templates.reshape(TILES_PER_CHUNK, -1)
    k = max(1, int(np.ceil(flat.shape[1] * 0.1)))
    top = np.partition(flat, flat.shape[1] - k, axis=1)[:, flat.shape[1] - k :]
    winner = int(np.argmax(top.mean(axis=1)))
    out = np.zeros_like(masked.tiles)
    out[winner] = 1.0
    return out


class BaselineGenerator(GeneratorModel):
    """Training-free generator: exemplar copy for partial masks, dominant
    material fill for complete ones."""

    kind = "baseline"

    def generate(self, masked: MaskedChunkInput, seed: int = 0) -> np.ndarray:
        brush = masked.brush > 0
        if brush.all():
            filled = dominant_material_fill(masked)
        else:
            planes = [exemplar_inpaint_plane(plane, brush) for plane in masked.tiles]
            if any(p is None for p in planes):
                filled = dominant_material_fill(masked)  # no usable sources
            else:
                filled = np.stack(planes)
        return np.where(brush[None], filled, masked.tiles)
