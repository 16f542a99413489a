"""Template matching, material ranking and context-stack assembly."""

import numpy as np
import pytest

from smartbrush.coherence import (
    ContextStack,
    build_context,
    rank_materials,
    template_match,
)
from smartbrush.core import Chunk, Material, MaterialSet, TileMask, blend_chunk

from conftest import OBJECT_NAMES, build_test_map


def ncc_oracle(texture, region):
    """Direct double-loop normalized cross-correlation."""
    if texture.ndim == 2:
        texture = texture[:, :, None]
        region = region[:, :, None]
    th, tw, _ = texture.shape
    rh, rw, _ = region.shape
    t0 = texture - texture.mean()
    t_norm = np.sqrt((t0**2).sum())
    out = np.zeros((rh - th + 1, rw - tw + 1))
    for oy in range(out.shape[0]):
        for ox in range(out.shape[1]):
            win = region[oy : oy + th, ox : ox + tw]
            w0 = win - win.mean()
            w_norm = np.sqrt((w0**2).sum())
            denom = w_norm * t_norm
            out[oy, ox] = (w0 * t0).sum() / denom if denom > 1e-12 else 0.0
    return np.clip(out, -1, 1)


class TestTemplateMatch:
    def test_tiled_copies_score_one(self):
        rng = np.random.default_rng(0)
        tex = rng.uniform(size=(4, 4, 3))
        region = np.tile(tex, (3, 3, 1))
        scores = template_match(tex, region)
        for oy in (0, 4, 8):
            for ox in (0, 4, 8):
                assert scores[oy, ox] == pytest.approx(1.0, abs=1e-9)

    def test_negated_texture_scores_minus_one(self):
        rng = np.random.default_rng(1)
        tex = rng.uniform(0.1, 0.9, size=(5, 5, 3))
        region = 1.0 - tex
        scores = template_match(tex, region)
        assert scores[0, 0] == pytest.approx(-1.0, abs=1e-9)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(2)
        tex = rng.uniform(size=(3, 3, 3))
        region = rng.uniform(size=(5, 5, 3))
        assert np.allclose(template_match(tex, region), ncc_oracle(tex, region), atol=1e-9)

    def test_matches_oracle_grayscale(self):
        rng = np.random.default_rng(3)
        tex = rng.uniform(size=(4, 4))
        region = rng.uniform(size=(9, 7))
        assert np.allclose(template_match(tex, region), ncc_oracle(tex, region), atol=1e-9)

    def test_invariant_to_constant_shift_and_scale(self):
        rng = np.random.default_rng(4)
        tex = rng.uniform(0.2, 0.6, size=(4, 4))
        region = rng.uniform(0.2, 0.6, size=(8, 8))
        base = template_match(tex, region)
        shifted = template_match(tex + 0.3, region + 0.3)
        scaled = template_match(tex * 1.7, region * 0.4)
        assert np.allclose(base, shifted, atol=1e-9)
        assert np.allclose(base, scaled, atol=1e-9)

    def test_zero_variance_window_scores_zero(self):
        tex = np.random.default_rng(5).uniform(size=(3, 3))
        region = np.full((6, 6), 0.5)
        assert (template_match(tex, region) == 0.0).all()

    def test_texture_larger_than_region(self):
        with pytest.raises(ValueError, match="larger"):
            template_match(np.zeros((8, 8, 3)), np.zeros((4, 4, 3)))

    def test_scores_bounded(self):
        rng = np.random.default_rng(6)
        scores = template_match(rng.uniform(size=(4, 4, 3)), rng.uniform(size=(12, 12, 3)))
        assert scores.min() >= -1.0 and scores.max() <= 1.0


def single_material_map(render_id, size=32):
    """A map whose AM region is rendered purely from one material."""
    game_map = build_test_map(tile_size=size, grid=(1, 1), seed=10)
    ids = list(game_map.materials.ids)
    chunk = game_map.grid[(0, 0)]
    for i, tile in enumerate(chunk.tiles):
        tile.pixels = np.full((size, size), 1.0 if ids[i] == render_id else 0.0, np.float32)
    game_map.global_am = blend_chunk(chunk, game_map.materials).pixels
    return game_map


class TestRankMaterials:
    def test_pure_render_ranks_first(self):
        game_map = single_material_map("m2_soil")
        chunk = game_map.grid[(0, 0)]
        ranking = rank_materials(chunk, game_map.materials, game_map.global_am)
        assert ranking.dominant == "m2_soil"

    def test_identical_textures_tie_lexicographic(self):
        tex = np.random.default_rng(3).uniform(size=(16, 16, 3)).astype(np.float32)
        materials = MaterialSet(
            [Material("zeta", tex.copy()), Material("alpha", tex.copy())]
            + [
                Material(f"filler{i}", np.random.default_rng(i + 10).uniform(size=(16, 16, 3)).astype(np.float32))
                for i in range(6)
            ]
        )
        ids = ["zeta", "alpha"] + [f"filler{i}" for i in range(6)]
        tiles = [TileMask(mid, np.zeros((16, 16), np.float32)) for mid in ids]
        chunk = Chunk((0, 0), tiles)
        region = np.tile(tex, (2, 2, 1))
        ranking = rank_materials(chunk, materials, region)
        assert ranking.entries[0][0] == "alpha"
        assert ranking.entries[1][0] == "zeta"
        assert ranking.entries[0][1] == pytest.approx(ranking.entries[1][1])

    def test_blend_dominance_order(self):
        game_map = build_test_map(tile_size=32, grid=(1, 1), seed=20)
        chunk = game_map.grid[(0, 0)]
        grass, stone = "m0_grass", "m1_stone"
        for tile in chunk.tiles:
            if tile.material_id == grass:
                tile.pixels = np.full((32, 32), 0.7, np.float32)
            elif tile.material_id == stone:
                tile.pixels = np.full((32, 32), 0.3, np.float32)
            else:
                tile.pixels = np.zeros((32, 32), np.float32)
        game_map.global_am = blend_chunk(chunk, game_map.materials).pixels
        ranking = rank_materials(chunk, game_map.materials, game_map.global_am)
        ids = [mid for mid, _ in ranking.entries]
        assert ids.index(grass) < ids.index(stone)

    def test_fuzzed_single_material_renders(self):
        rng = np.random.default_rng(30)
        for trial in range(5):
            size = 24
            textures = []
            # keep drawing until the textures are pairwise distinguishable
            while len(textures) < 8:
                cand = rng.uniform(size=(size, size, 3)).astype(np.float32)
                if all(
                    ncc_oracle(cand, other).max() < 0.9 for other in textures
                ):
                    textures.append(cand)
            materials = MaterialSet([Material(f"t{i}", tex) for i, tex in enumerate(textures)])
            target = int(rng.integers(8))
            tiles = [
                TileMask(f"t{i}", np.full((size, size), 1.0 if i == target else 0.0, np.float32))
                for i in range(8)
            ]
            chunk = Chunk((0, 0), tiles)
            region = blend_chunk(chunk, materials).pixels
            ranking = rank_materials(chunk, materials, region)
            assert ranking.dominant == f"t{target}", f"trial {trial}"


class TestBuildContext:
    def test_plane_count(self, toy_map):
        stack = build_context(toy_map, (0, 0))
        assert stack.plane_count == 3 + 1 + len(OBJECT_NAMES) + 8
        assert stack.as_planes().shape == (stack.plane_count, 32, 32)

    def test_deterministic(self, toy_map):
        a = build_context(toy_map, (1, 0))
        b = build_context(toy_map, (1, 0))
        assert np.array_equal(a.as_planes(), b.as_planes())

    def test_edge_chunk_full_size(self, toy_map):
        stack = build_context(toy_map, (1, 1))
        assert stack.global_am.shape == (32, 32, 3)
        assert stack.templates.shape == (8, 32, 32)

    def test_out_of_bounds_coord(self, toy_map):
        with pytest.raises(KeyError):
            build_context(toy_map, (9, 9))

    def test_ranking_attached(self, toy_map):
        stack = build_context(toy_map, (0, 1))
        assert stack.ranking is not None
        assert len(stack.ranking.entries) == len(set(toy_map.grid[(0, 1)].material_ids))

    def test_misaligned_planes_rejected(self):
        with pytest.raises(ValueError, match="misaligned"):
            ContextStack(
                global_am=np.zeros((8, 8, 3)),
                height=np.zeros((9, 9)),
                object_masks={},
                templates=np.zeros((8, 9, 9)),
            )
