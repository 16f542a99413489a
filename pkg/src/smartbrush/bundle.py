"""On-disk map bundle format.

Layout::

    <bundle>/
      manifest.json          grid size, tile size, material table, chunk list
      chunks/<x>_<y>/tile_<k>.png   8-bit grayscale, k in 0..7
      materials/<id>.png     8-bit RGB
      global_am.png          8-bit RGB
      height.png             16-bit grayscale
      objects/<name>.png     binary (stored as 8-bit 0/255)

Weights are float in memory and 8-bit on disk, so save followed by load is
exact for mask data already quantized to the 8-bit grid.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    Chunk,
    GameMap,
    MapFormatError,
    Material,
    MaterialSet,
    TILES_PER_CHUNK,
    TileMask,
)

FORMAT_VERSION = 1


def _save_gray8(arr: np.ndarray, path: Path) -> None:
    data = np.round(np.asarray(arr, dtype=np.float64) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path)


def _load_gray8(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float32) / 255.0


def _save_rgb8(arr: np.ndarray, path: Path) -> None:
    data = np.round(np.asarray(arr, dtype=np.float64) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)


def _load_rgb8(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0


def _save_gray16(arr: np.ndarray, path: Path) -> None:
    data = np.round(np.asarray(arr, dtype=np.float64) * 65535.0).astype(np.uint16)
    Image.fromarray(data).save(path)


def _load_gray16(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        data = np.asarray(im, dtype=np.float64)
    return (data / 65535.0).astype(np.float32)


def save_map_bundle(game_map: GameMap, path: str | Path) -> None:
    """Write a map to a bundle directory (created if missing)."""
    game_map.validate()
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "materials").mkdir(exist_ok=True)
    (root / "objects").mkdir(exist_ok=True)

    chunk_entries = []
    for coord in sorted(game_map.grid):
        chunk = game_map.grid[coord]
        cdir = root / "chunks" / f"{coord[0]}_{coord[1]}"
        cdir.mkdir(parents=True, exist_ok=True)
        for k, tile in enumerate(chunk.tiles):
            _save_gray8(tile.pixels, cdir / f"tile_{k}.png")
        chunk_entries.append(
            {"x": coord[0], "y": coord[1], "materials": chunk.material_ids}
        )

    for material in game_map.materials:
        _save_rgb8(material.texture, root / "materials" / f"{material.id}.png")

    _save_rgb8(game_map.global_am, root / "global_am.png")
    _save_gray16(game_map.height_map, root / "height.png")
    for name, plane in game_map.object_masks.items():
        _save_gray8(plane, root / "objects" / f"{name}.png")

    manifest = {
        "format_version": FORMAT_VERSION,
        "name": game_map.name,
        "category": game_map.category,
        "grid": {"width": game_map.grid_size[0], "height": game_map.grid_size[1]},
        "tile_size": game_map.tile_size,
        "materials": game_map.materials.ids,
        "chunks": chunk_entries,
        "objects": sorted(game_map.object_masks),
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_map_bundle(path: str | Path) -> GameMap:
    """Read a bundle directory back into a GameMap."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise MapFormatError(f"missing manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise MapFormatError(f"unsupported bundle format_version: {version!r}")

    materials = MaterialSet()
    for mid in manifest["materials"]:
        tex_path = root / "materials" / f"{mid}.png"
        if not tex_path.exists():
            raise MapFormatError(f"missing material texture: {tex_path}")
        materials.add(Material(mid, _load_rgb8(tex_path)))

    grid: dict[tuple[int, int], Chunk] = {}
    for entry in manifest["chunks"]:
        coord = (int(entry["x"]), int(entry["y"]))
        cdir = root / "chunks" / f"{coord[0]}_{coord[1]}"
        mids = entry["materials"]
        if len(mids) != TILES_PER_CHUNK:
            raise MapFormatError(
                f"chunk tile count: chunk {coord} lists {len(mids)} tiles"
            )
        tiles = []
        for k, mid in enumerate(mids):
            tile_path = cdir / f"tile_{k}.png"
            if not tile_path.exists():
                raise MapFormatError(f"chunk tile count: missing {tile_path}")
            try:
                pixels = _load_gray8(tile_path)
            except OSError as exc:
                raise MapFormatError(f"unreadable image {tile_path}: {exc}") from exc
            tiles.append(TileMask(mid, pixels))
        grid[coord] = Chunk(coord, tiles)

    object_masks = {}
    for name in manifest.get("objects", []):
        object_masks[name] = _load_gray8(root / "objects" / f"{name}.png")

    game_map = GameMap(
        grid=grid,
        materials=materials,
        global_am=_load_rgb8(root / "global_am.png"),
        height_map=_load_gray16(root / "height.png"),
        object_masks=object_masks,
        tile_size=int(manifest["tile_size"]),
        grid_size=(int(manifest["grid"]["width"]), int(manifest["grid"]["height"])),
        name=manifest.get("name", ""),
        category=manifest.get("category", ""),
    )
    game_map.validate()
    return game_map
