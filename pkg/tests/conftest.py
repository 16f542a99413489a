"""Shared synthetic-map fixtures.

Tile weights are quantized to the 8-bit grid so bundle round trips are
byte-exact, and the global albedo map is assembled from the blended chunk
renders so template matching has real signal to find.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from smartbrush.core import Chunk, GameMap, Material, MaterialSet, TileMask, blend_chunk

OBJECT_NAMES = ("buildings", "roads", "trees", "water")

MATERIAL_COLORS = {
    "m0_grass": (0.20, 0.55, 0.15),
    "m1_stone": (0.55, 0.55, 0.55),
    "m2_soil": (0.45, 0.30, 0.15),
    "m3_sand": (0.85, 0.75, 0.45),
    "m4_snow": (0.95, 0.95, 0.97),
    "m5_water": (0.10, 0.25, 0.60),
    "m6_road": (0.25, 0.25, 0.28),
    "m7_moss": (0.35, 0.45, 0.20),
}


def q8(arr: np.ndarray) -> np.ndarray:
    """Snap values to the 8-bit grid used by the bundle format."""
    return (np.round(np.asarray(arr, dtype=np.float64) * 255.0) / 255.0).astype(np.float32)


def noise_texture(rng: np.random.Generator, base_color, size: int, amp: float = 0.15) -> np.ndarray:
    base = np.asarray(base_color, dtype=np.float64)
    noise = ndimage.gaussian_filter(rng.standard_normal((size, size)), sigma=1.5)
    noise = noise / (np.abs(noise).max() + 1e-9)
    tex = base[None, None, :] + amp * noise[:, :, None]
    return q8(np.clip(tex, 0.0, 1.0))


def stripe_texture(color_a, color_b, size: int, period: int = 8) -> np.ndarray:
    xs = np.arange(size)
    stripe = ((xs // (period // 2)) % 2).astype(np.float64)
    tex = np.outer(np.ones(size), stripe)[:, :, None] * (
        np.asarray(color_b) - np.asarray(color_a)
    ) + np.asarray(color_a)
    return q8(np.clip(tex, 0.0, 1.0))


def smooth_weight_fields(rng: np.random.Generator, side: int, count: int = 8) -> np.ndarray:
    """(count, side, side) non-negative fields summing to 1 per pixel,
    quantized to the 8-bit grid afterwards."""
    fields = np.stack(
        [ndimage.gaussian_filter(rng.standard_normal((side, side)), sigma=side / 6) for _ in range(count)]
    )
    fields = np.exp(3.0 * fields / (np.abs(fields).max() + 1e-9))
    fields /= fields.sum(axis=0, keepdims=True)
    return q8(fields)


def build_test_map(
    tile_size: int = 32,
    grid: tuple[int, int] = (2, 2),
    seed: int = 0,
    name: str = "fixture",
    category: str = "natural",
    material_ids: list[str] | None = None,
) -> GameMap:
    rng = np.random.default_rng(seed)
    ids = material_ids or list(MATERIAL_COLORS)
    materials = MaterialSet(
        [Material(mid, noise_texture(rng, MATERIAL_COLORS[mid], tile_size)) for mid in ids]
    )

    chunks = {}
    for y in range(grid[1]):
        for x in range(grid[0]):
            weights = smooth_weight_fields(rng, tile_size)
            chunks[(x, y)] = Chunk(
                (x, y), [TileMask(ids[i], weights[i]) for i in range(8)]
            )

    w, h = grid
    extent = (h * tile_size, w * tile_size)
    global_am = np.zeros(extent + (3,), dtype=np.float32)
    for (x, y), chunk in chunks.items():
        render = blend_chunk(chunk, materials).pixels
        global_am[y * tile_size : (y + 1) * tile_size, x * tile_size : (x + 1) * tile_size] = render
    global_am = q8(global_am)

    yy = np.linspace(0.2, 0.8, extent[0])[:, None]
    height = q8(np.clip(yy + 0.1 * rng.standard_normal(extent), 0.0, 1.0))

    object_masks = {}
    for i, obj in enumerate(OBJECT_NAMES):
        blob = ndimage.gaussian_filter(rng.standard_normal(extent), sigma=4.0)
        object_masks[obj] = (blob > np.quantile(blob, 0.85)).astype(np.float32)

    game_map = GameMap(
        grid=chunks,
        materials=materials,
        global_am=global_am,
        height_map=height,
        object_masks=object_masks,
        tile_size=tile_size,
        grid_size=grid,
        name=name,
        category=category,
    )
    game_map.validate()
    return game_map


@pytest.fixture
def toy_map() -> GameMap:
    return build_test_map(tile_size=32, grid=(2, 2), seed=0)


@pytest.fixture
def small_map() -> GameMap:
    return build_test_map(tile_size=16, grid=(2, 2), seed=1)
