"""Template-guided color coherence: dominant-material identification by
normalized cross-correlation against the global albedo map, and assembly of
the conditioning stack fed to generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .core import Chunk, Coord, GameMap, MaterialSet, TILES_PER_CHUNK

TEMPLATE_SWATCH_SIZE = 32
TOP_DECILE = 0.10


def template_match(material_texture: np.ndarray, global_am_region: np.ndarray) -> np.ndarray:
    """Normalized cross-correlation coefficient of a texture against every
    valid offset of a region.

    Both inputs are mean-subtracted; each window is normalized by its own
    standard deviation, so scores land in [-1, 1].  Windows (or templates)
    with zero variance score 0.
    """
    tex = np.asarray(material_texture, dtype=np.float64)
    reg = np.asarray(global_am_region, dtype=np.float64)
    if tex.ndim == 2:
        tex = tex[:, :, None]
    if reg.ndim == 2:
        reg = reg[:, :, None]
    if tex.shape[2] != reg.shape[2]:
        raise ValueError(f"channel mismatch: texture {tex.shape[2]} vs region {reg.shape[2]}")
    th, tw, _ = tex.shape
    rh, rw, _ = reg.shape
    if th > rh or tw > rw:
        raise ValueError(f"texture {tex.shape[:2]} larger than region {reg.shape[:2]}")

    n = tex.size
    t0 = tex - tex.mean()
    t_norm = np.sqrt((t0**2).sum())

    num = np.zeros((rh - th + 1, rw - tw + 1))
    for c in range(tex.shape[2]):
        num += signal.correlate(reg[:, :, c], t0[:, :, c], mode="valid", method="auto")

    win_sum = _box_sum(reg.sum(axis=2), th, tw)
    win_sq = _box_sum((reg**2).sum(axis=2), th, tw)
    win_norm = np.sqrt(np.clip(win_sq - win_sum**2 / n, 0.0, None))

    denom = win_norm * t_norm
    scores = np.where(denom > 1e-12, num / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(scores, -1.0, 1.0)


def _box_sum(img: np.ndarray, th: int, tw: int) -> np.ndarray:
    """Sliding-window sums via an integral image; output covers valid offsets."""
    h, w = img.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    ii[1:, 1:] = img.cumsum(axis=0).cumsum(axis=1)
    return ii[th:, tw:] - ii[:-th, tw:] - ii[th:, :-tw] + ii[:-th, :-tw]


def _resize_plane(plane: np.ndarray, height: int, width: int) -> np.ndarray:
    if plane.shape[:2] == (height, width):
        return plane.astype(np.float64)
    factors = (height / plane.shape[0], width / plane.shape[1])
    if plane.ndim == 3:
        factors = factors + (1,)
    return ndimage.zoom(plane.astype(np.float64), factors, order=1, mode="nearest", grid_mode=True)


def material_swatch(texture: np.ndarray, region_side: int) -> np.ndarray:
    """Material texture downsampled to the matching swatch size.

    The cap bounds matching cost; textures already at or below the cap are
    used as-is (upsampling would fabricate detail).
    """
    side = min(TEMPLATE_SWATCH_SIZE, region_side, texture.shape[0], texture.shape[1])
    return _resize_plane(texture, side, side)


@dataclass(frozen=True)
class MaterialRanking:
    """Chunk materials ordered by template-match dominance."""

    entries: tuple[tuple[str, float], ...]  # (material_id, mean top-decile score)

    def __post_init__(self) -> None:
        scores = [s for _, s in self.entries]
        if any(scores[i] < scores[i + 1] for i in range(len(scores) - 1)):
            raise ValueError("ranking entries must be sorted by descending score")

    @property
    def dominant(self) -> str:
        return self.entries[0][0]

    def score(self, material_id: str) -> float:
        for mid, s in self.entries:
            if mid == material_id:
                return s
        raise KeyError(material_id)


def _top_decile_mean(scores: np.ndarray) -> float:
    flat = scores.reshape(-1)
    k = max(1, int(np.ceil(flat.size * TOP_DECILE)))
    top = np.partition(flat, flat.size - k)[flat.size - k :]
    return float(top.mean())


def score_planes(
    material_ids: list[str],
    materials: MaterialSet,
    region: np.ndarray,
) -> np.ndarray:
    """Per-material NCC score planes resampled to the region size.

    Returns (len(material_ids), H, W); duplicate ids share one computation.
    """
    h, w = region.shape[:2]
    cache: dict[str, np.ndarray] = {}
    planes = np.zeros((len(material_ids), h, w), dtype=np.float32)
    for i, mid in enumerate(material_ids):
        if mid not in cache:
            swatch = material_swatch(materials[mid].texture, min(h, w))
            raw = template_match(swatch, region)
            cache[mid] = np.clip(_resize_plane(raw, h, w), -1.0, 1.0).astype(np.float32)
        planes[i] = cache[mid]
    return planes


def rank_materials(chunk: Chunk, materials: MaterialSet, global_am_region: np.ndarray) -> MaterialRanking:
    """Rank a chunk's materials by the mean of the top decile of their
    template-match scores; ties broken lexicographically by id."""
    unique_ids = list(dict.fromkeys(chunk.material_ids))
    planes = score_planes(unique_ids, materials, global_am_region)
    scored = [(mid, _top_decile_mean(planes[i])) for i, mid in enumerate(unique_ids)]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return MaterialRanking(tuple(scored))


@dataclass
class ContextStack:
    """Aligned conditioning planes cropped to one chunk (or composite) extent."""

    global_am: np.ndarray  # (H, W, 3)
    height: np.ndarray  # (H, W)
    object_masks: dict[str, np.ndarray]  # name -> (H, W)
    templates: np.ndarray  # (8, H, W) score planes aligned with tile order
    ranking: MaterialRanking | None = None
    material_ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        shape = self.height.shape
        if self.global_am.shape[:2] != shape:
            raise ValueError("context planes misaligned: global_am")
        for name, plane in self.object_masks.items():
            if plane.shape != shape:
                raise ValueError(f"context planes misaligned: object {name!r}")
        if self.templates.shape != (TILES_PER_CHUNK,) + shape:
            raise ValueError(
                f"templates must be ({TILES_PER_CHUNK}, H, W), got {self.templates.shape}"
            )
        if self.templates.size and (self.templates.min() < -1.0 or self.templates.max() > 1.0):
            raise ValueError("template score planes must lie in [-1, 1]")

    @property
    def plane_count(self) -> int:
        return 3 + 1 + len(self.object_masks) + TILES_PER_CHUNK

    def as_planes(self) -> np.ndarray:
        """(C, H, W) float32 stack: AM, height, objects (name-sorted), templates."""
        parts = [np.moveaxis(self.global_am, -1, 0), self.height[None]]
        for name in sorted(self.object_masks):
            parts.append(self.object_masks[name][None])
        parts.append(self.templates)
        return np.concatenate(parts).astype(np.float32)


def build_context_for_box(
    game_map: GameMap,
    box: tuple[int, int, int, int],
    material_ids: list[str],
    ranking: MaterialRanking | None = None,
) -> ContextStack:
    """Context stack for an arbitrary pixel box (y0, y1, x0, x1)."""
    y0, y1, x0, x1 = box
    region = game_map.global_am[y0:y1, x0:x1]
    return ContextStack(
        global_am=region.copy(),
        height=game_map.height_map[y0:y1, x0:x1].copy(),
        object_masks={
            name: plane[y0:y1, x0:x1].copy() for name, plane in game_map.object_masks.items()
        },
        templates=score_planes(material_ids, game_map.materials, region),
        ranking=ranking,
        material_ids=list(material_ids),
    )


def build_context(game_map: GameMap, coord: Coord, ranking: MaterialRanking | None = None) -> ContextStack:
    """Conditioning stack for one chunk: cropped global planes plus
    per-material template score planes in tile order."""
    if coord not in game_map.grid:
        raise KeyError(f"coord {coord} not in map grid")
    chunk = game_map.grid[coord]
    box = game_map.chunk_pixel_box(coord)
    if ranking is None:
        y0, y1, x0, x1 = box
        ranking = rank_materials(chunk, game_map.materials, game_map.global_am[y0:y1, x0:x1])
    return build_context_for_box(game_map, box, chunk.material_ids, ranking)
