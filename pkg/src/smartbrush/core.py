"""Domain types for multi-material maps and the blend renderer.

Array conventions used across the package:

* tile masks, brush masks and other single-channel planes are float32
  arrays of shape ``(side, side)`` with values in ``[0, 1]``
* RGB images are float32 arrays of shape ``(H, W, 3)`` in ``[0, 1]``
* channel stacks fed to generators are ``(C, H, W)``
* chunk coordinates are ``(x, y)`` integer pairs, ``(0, 0)`` top-left;
  pixel access is row-major ``array[y, x]``
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

TILES_PER_CHUNK = 8
DEFAULT_TILE_SIZE = 128

Coord = tuple[int, int]


class MapFormatError(ValueError):
    """A map bundle or in-memory map violates the format invariants."""


def _check_unit_range(arr: np.ndarray, what: str) -> None:
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{what} values must lie in [0, 1]")


@dataclass
class TileMask:
    """Single-channel blend-weight plane for one material of a chunk."""

    material_id: str
    pixels: np.ndarray  # (side, side) float32 in [0, 1]

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise ValueError(f"tile mask must be square, got {self.pixels.shape}")
        _check_unit_range(self.pixels, "tile mask")

    @property
    def side(self) -> int:
        return self.pixels.shape[0]

    def copy(self) -> "TileMask":
        return TileMask(self.material_id, self.pixels.copy())


@dataclass
class Material:
    """Named RGB texture referenced by tile masks."""

    id: str
    texture: np.ndarray  # (H, W, 3) float32 in [0, 1]

    def __post_init__(self) -> None:
        self.texture = np.asarray(self.texture, dtype=np.float32)
        if self.texture.ndim != 3 or self.texture.shape[2] != 3:
            raise ValueError(f"material texture must be (H, W, 3), got {self.texture.shape}")
        _check_unit_range(self.texture, "material texture")


class MaterialSet:
    """Ordered collection of materials with unique ids."""

    def __init__(self, materials: list[Material] | None = None):
        self._materials: dict[str, Material] = {}
        for m in materials or []:
            self.add(m)

    def add(self, material: Material) -> None:
        if material.id in self._materials:
            raise MapFormatError(f"material id collision: {material.id!r}")
        self._materials[material.id] = material

    def __getitem__(self, material_id: str) -> Material:
        try:
            return self._materials[material_id]
        except KeyError:
            raise KeyError(f"unresolved material id: {material_id!r}") from None

    def __contains__(self, material_id: str) -> bool:
        return material_id in self._materials

    def __len__(self) -> int:
        return len(self._materials)

    def __iter__(self):
        return iter(self._materials.values())

    @property
    def ids(self) -> list[str]:
        return list(self._materials)


@dataclass
class Chunk:
    """Unit of generation: a grid cell holding exactly 8 tile masks."""

    coord: Coord
    tiles: list[TileMask]

    def __post_init__(self) -> None:
        self.coord = (int(self.coord[0]), int(self.coord[1]))
        if len(self.tiles) != TILES_PER_CHUNK:
            raise MapFormatError(
                f"chunk tile count must be {TILES_PER_CHUNK}, got {len(self.tiles)}"
            )
        sides = {t.side for t in self.tiles}
        if len(sides) != 1:
            raise ValueError(f"chunk tiles disagree on size: {sorted(sides)}")

    @property
    def side(self) -> int:
        return self.tiles[0].side

    @property
    def material_ids(self) -> list[str]:
        return [t.material_id for t in self.tiles]

    def tile_stack(self) -> np.ndarray:
        """Tiles as an (8, side, side) float32 stack."""
        return np.stack([t.pixels for t in self.tiles])

    def copy(self) -> "Chunk":
        return Chunk(self.coord, [t.copy() for t in self.tiles])


@dataclass
class BlendedImage:
    """RGB render of a chunk or region."""

    pixels: np.ndarray  # (H, W, 3) float32 in [0, 1]

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"blended image must be (H, W, 3), got {self.pixels.shape}")


@dataclass
class GameMap:
    """Chunk grid plus the shared conditioning planes of the whole map."""

    grid: dict[Coord, Chunk]
    materials: MaterialSet
    global_am: np.ndarray  # (grid_h*tile, grid_w*tile, 3)
    height_map: np.ndarray  # (grid_h*tile, grid_w*tile), 16-bit source normalized
    object_masks: dict[str, np.ndarray] = field(default_factory=dict)
    tile_size: int = DEFAULT_TILE_SIZE
    grid_size: Coord = (0, 0)  # (width, height) in chunks
    name: str = ""
    category: str = ""

    def __post_init__(self) -> None:
        if self.grid_size == (0, 0) and self.grid:
            xs = [c[0] for c in self.grid]
            ys = [c[1] for c in self.grid]
            self.grid_size = (max(xs) + 1, max(ys) + 1)
        self.global_am = np.asarray(self.global_am, dtype=np.float32)
        self.height_map = np.asarray(self.height_map, dtype=np.float32)

    def validate(self) -> None:
        w, h = self.grid_size
        extent = (h * self.tile_size, w * self.tile_size)
        if self.global_am.shape[:2] != extent:
            raise MapFormatError(
                f"global_am shape {self.global_am.shape[:2]} does not cover grid extent {extent}"
            )
        if self.height_map.shape != extent:
            raise MapFormatError(
                f"height map shape {self.height_map.shape} does not cover grid extent {extent}"
            )
        for name, plane in self.object_masks.items():
            if plane.shape != extent:
                raise MapFormatError(f"object mask {name!r} shape {plane.shape} != {extent}")
        for coord, chunk in self.grid.items():
            if not (0 <= coord[0] < w and 0 <= coord[1] < h):
                raise MapFormatError(f"chunk coord {coord} outside grid {self.grid_size}")
            if chunk.side != self.tile_size:
                raise MapFormatError(
                    f"chunk {coord} tile side {chunk.side} != tile size {self.tile_size}"
                )
            for mid in chunk.material_ids:
                if mid not in self.materials:
                    raise MapFormatError(f"chunk {coord} references unknown material {mid!r}")

    def chunk_pixel_box(self, coord: Coord) -> tuple[int, int, int, int]:
        """(y0, y1, x0, x1) pixel extent of a chunk inside the global planes."""
        x, y = coord
        ts = self.tile_size
        return y * ts, (y + 1) * ts, x * ts, (x + 1) * ts

    def copy(self) -> "GameMap":
        return GameMap(
            grid={c: ch.copy() for c, ch in self.grid.items()},
            materials=self.materials,
            global_am=self.global_am.copy(),
            height_map=self.height_map.copy(),
            object_masks={k: v.copy() for k, v in self.object_masks.items()},
            tile_size=self.tile_size,
            grid_size=self.grid_size,
            name=self.name,
            category=self.category,
        )


def _material_plane(material: Material, side: int) -> np.ndarray:
    """Material texture resampled to the chunk's tile size (nearest)."""
    tex = material.texture
    if tex.shape[0] == side and tex.shape[1] == side:
        return tex
    ys = (np.arange(side) * tex.shape[0] // side).clip(0, tex.shape[0] - 1)
    xs = (np.arange(side) * tex.shape[1] // side).clip(0, tex.shape[1] - 1)
    return tex[np.ix_(ys, xs)]


def blend_chunk(chunk: Chunk, materials: MaterialSet) -> BlendedImage:
    """Render a chunk as the weight-blended sum of its material textures.

    Per pixel the output is ``sum_i T_i(x, y) * M_i(x, y)`` clamped to [0, 1].
    """
    side = chunk.side
    out = np.zeros((side, side, 3), dtype=np.float32)
    for tile in chunk.tiles:
        tex = _material_plane(materials[tile.material_id], side)
        out += tile.pixels[:, :, None] * tex
    np.clip(out, 0.0, 1.0, out=out)
    return BlendedImage(out)


def normalize_weights(chunk: Chunk, dominant: int | None = None) -> Chunk:
    """Rescale tile weights so they sum to 1 per pixel.

    Pixels whose weights sum to zero get weight 1 on the dominant tile.  When
    no dominant index is supplied the tile with the largest total weight is
    used (callers with template-matching context can pass a better choice).
    """
    stack = chunk.tile_stack().astype(np.float64)
    sums = stack.sum(axis=0)
    if dominant is None:
        dominant = int(np.argmax(stack.sum(axis=(1, 2))))
    if not 0 <= dominant < TILES_PER_CHUNK:
        raise ValueError(f"dominant tile index {dominant} out of range")
    zero = sums == 0.0
    safe = np.where(zero, 1.0, sums)
    stack = stack / safe
    stack[:, zero] = 0.0
    stack[dominant, zero] = 1.0
    return Chunk(
        chunk.coord,
        [
            TileMask(t.material_id, stack[i].astype(np.float32))
            for i, t in enumerate(chunk.tiles)
        ],
    )


def apply_brush(chunk: Chunk, brush: np.ndarray) -> Chunk:
    """Zero all tile weights under the brush; the input chunk is untouched."""
    brush = np.asarray(brush)
    if brush.shape != (chunk.side, chunk.side):
        raise ValueError(
            f"brush shape {brush.shape} does not match tile size {chunk.side}"
        )
    keep = brush == 0
    return Chunk(
        chunk.coord,
        [TileMask(t.material_id, np.where(keep, t.pixels, 0.0)) for t in chunk.tiles],
    )


def snapshot_chunks(game_map: GameMap, coords: list[Coord]) -> dict[Coord, Chunk]:
    """Deep copies of the named chunks, for undo stacks."""
    return {c: copy.deepcopy(game_map.grid[c]) for c in coords}


def weight_sum_stats(chunk: Chunk) -> dict[str, float]:
    """Raw per-pixel weight-sum statistics.

    Authored data is not guaranteed to sum to 1, so pipelines normalize
    defensively; these diagnostics record what the data actually carried.
    """
    sums = chunk.tile_stack().astype(np.float64).sum(axis=0)
    return {
        "min": float(sums.min()),
        "mean": float(sums.mean()),
        "max": float(sums.max()),
    }
