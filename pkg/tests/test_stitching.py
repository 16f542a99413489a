"""Adjacency analysis, transition masks, stitching, border smoothing and the
full multi-chunk pipeline."""

import itertools

import numpy as np
import pytest

from smartbrush.core import Chunk, GameMap, Material, MaterialSet, TileMask, blend_chunk
from smartbrush.generators.baseline import BaselineGenerator
from smartbrush.stitching import (
    AdjacentPair,
    Direction,
    find_adjacent_pairs,
    gaussian_material_smoothing,
    generate_region,
    make_transition_mask,
    mask_intersection,
    seam_score,
    stitch_pair,
)

from conftest import build_test_map, q8


def ones(side=32):
    return np.ones((side, side), np.float32)


def zeros(side=32):
    return np.zeros((side, side), np.float32)


def pair_h(a=(0, 0), b=(1, 0), intersecting=True):
    return AdjacentPair(a, b, Direction.HORIZONTAL, intersecting)


class TestFindAdjacentPairs:
    def test_horizontal_pair(self):
        pairs = find_adjacent_pairs({(3, 4): ones(), (4, 4): ones()})
        assert len(pairs) == 1
        assert pairs[0].a == (3, 4) and pairs[0].b == (4, 4)
        assert pairs[0].direction is Direction.HORIZONTAL

    def test_diagonal_excluded(self):
        assert find_adjacent_pairs({(0, 0): ones(), (1, 1): ones()}) == []

    def test_two_by_two_block(self):
        coords = {(x, y): ones() for x in range(2) for y in range(2)}
        pairs = find_adjacent_pairs(coords)
        assert len(pairs) == 4
        horizontal = [p for p in pairs if p.direction is Direction.HORIZONTAL]
        vertical = [p for p in pairs if p.direction is Direction.VERTICAL]
        assert len(horizontal) == 2 and len(vertical) == 2

    def test_exhaustive_enumeration_oracle(self):
        rng = np.random.default_rng(0)
        coords = set()
        while len(coords) < 7:
            coords.add((int(rng.integers(4)), int(rng.integers(4))))
        brushed = {c: ones(8) for c in coords}
        pairs = find_adjacent_pairs(brushed)
        # oracle: check the predicate over every unordered coordinate pair
        expected = set()
        for a, b in itertools.combinations(sorted(coords), 2):
            dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
            if (dx, dy) in {(1, 0), (0, 1)}:
                expected.add((a, b))
        assert {(p.a, p.b) for p in pairs} == expected
        # canonical ordering and uniqueness
        assert all(p.a < p.b for p in pairs)
        assert len({(p.a, p.b) for p in pairs}) == len(pairs)

    def test_invalid_pair_construction(self):
        with pytest.raises(ValueError):
            AdjacentPair((0, 0), (1, 1), Direction.HORIZONTAL, False)
        with pytest.raises(ValueError):
            AdjacentPair((1, 0), (0, 0), Direction.HORIZONTAL, False)


class TestMaskIntersection:
    def test_full_masks_intersect(self):
        assert mask_intersection(pair_h(), ones(), ones())

    def test_far_edges_do_not(self):
        a, b = zeros(), zeros()
        a[:, :2] = 1.0  # far edge of the left chunk
        b[:, -2:] = 1.0  # far edge of the right chunk
        assert not mask_intersection(pair_h(), a, b)

    def test_offset_overlap_matches_bruteforce_scan(self):
        a, b = zeros(), zeros()
        a[0:3, -4:] = 1.0  # rows 0-2 at the shared border
        b[2:6, :4] = 1.0  # rows 2-5, overlapping at row 2
        band = 4
        result = mask_intersection(pair_h(), a, b, band)
        # brute force: scan every border-adjacent pixel pair position
        hit = False
        for y in range(32):
            in_a = any(a[y, 32 - d - 1] for d in range(band))
            in_b = any(b[y, d] for d in range(band))
            if in_a and in_b:
                hit = True
        assert result == hit == True

    def test_no_overlap_along_edge(self):
        a, b = zeros(), zeros()
        a[0:3, -4:] = 1.0
        b[10:12, :4] = 1.0  # touches the border but at disjoint rows
        assert not mask_intersection(pair_h(), a, b)

    def test_vertical_direction(self):
        p = AdjacentPair((0, 0), (0, 1), Direction.VERTICAL, False)
        a, b = zeros(), zeros()
        a[-2:, 5:9] = 1.0  # bottom edge of the upper chunk
        b[:2, 7:11] = 1.0  # top edge of the lower chunk, overlapping columns
        assert mask_intersection(p, a, b)


class TestTransitionMask:
    def test_empty_brushes_give_empty_mask(self):
        tm = make_transition_mask(Direction.HORIZONTAL, 32, 16, 8, zeros(), zeros())
        assert not tm.mask.any()

    def test_full_brushes_give_inscribed_circle(self):
        ts = 32
        tm = make_transition_mask(Direction.HORIZONTAL, ts, ts / 2, ts / 2, ones(), ones())
        ys, xs = np.mgrid[0:ts, 0:ts]
        circle = ((ys + 0.5 - ts / 2) ** 2 + (xs + 0.5 - ts / 2) ** 2) <= (ts / 2) ** 2
        assert np.array_equal(tm.mask > 0, circle)

    @pytest.mark.parametrize("rx,ry", [(16, 16), (24, 16), (28, 20)])
    def test_pixel_count_matches_area(self, rx, ry):
        ts = 64
        tm = make_transition_mask(Direction.HORIZONTAL, ts, rx, ry, ones(ts), ones(ts))
        area = np.pi * rx * ry
        assert tm.mask.sum() == pytest.approx(area, rel=0.05)

    def test_covers_shared_edge_when_brushed(self):
        ts = 32
        tm = make_transition_mask(Direction.HORIZONTAL, ts, ts / 2, ts / 4, ones(), ones())
        border_cols = tm.mask[:, ts // 2 - 1 : ts // 2 + 1]
        assert border_cols.any(axis=1).sum() == ts  # every edge row covered

    def test_degenerate_axes_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            make_transition_mask(Direction.HORIZONTAL, 32, 0, 8, ones(), ones())
        with pytest.raises(ValueError, match="degenerate"):
            make_transition_mask(Direction.VERTICAL, 32, 8, 40, ones(), ones())


def constant_pair_map(value_a=0.8, value_b=0.2, tile=32):
    """2x1 map where tile 0 of each chunk is a shared material at different
    constant weights; other tiles are zero."""
    rng = np.random.default_rng(9)
    ids = [f"mat{i}" for i in range(8)]
    materials = MaterialSet(
        [Material(mid, q8(rng.uniform(0.2, 0.8, (tile, tile, 3)))) for mid in ids]
    )
    def chunk_at(coord, value):
        tiles = [TileMask(ids[0], np.full((tile, tile), value, np.float32))]
        tiles += [TileMask(mid, np.zeros((tile, tile), np.float32)) for mid in ids[1:]]
        return Chunk(coord, tiles)

    grid = {(0, 0): chunk_at((0, 0), value_a), (1, 0): chunk_at((1, 0), value_b)}
    game_map = GameMap(
        grid=grid,
        materials=materials,
        global_am=q8(rng.uniform(size=(tile, 2 * tile, 3))),
        height_map=q8(rng.uniform(size=(tile, 2 * tile))),
        object_masks={},
        tile_size=tile,
        grid_size=(2, 1),
    )
    game_map.validate()
    return game_map


class TestStitchPair:
    def test_empty_transition_mask_is_noop(self):
        game_map = constant_pair_map()
        before = {c: ch.tile_stack() for c, ch in game_map.grid.items()}
        stitch_pair(game_map, pair_h(), BaselineGenerator(), zeros(), zeros())
        for coord, stack in before.items():
            assert np.array_equal(game_map.grid[coord].tile_stack(), stack)

    def test_pixels_outside_mask_unchanged(self):
        game_map = constant_pair_map()
        before = {c: ch.tile_stack() for c, ch in game_map.grid.items()}
        stitch_pair(game_map, pair_h(), BaselineGenerator(), ones(), ones())
        ts = game_map.tile_size
        tm = make_transition_mask(Direction.HORIZONTAL, ts, ts / 2, ts / 4, ones(), ones())
        left_mask, right_mask = tm.mask[:, : ts // 2], tm.mask[:, ts // 2 :]
        after_a = game_map.grid[(0, 0)].tile_stack()
        after_b = game_map.grid[(1, 0)].tile_stack()
        # chunk a: only its right half under the left part of the ellipse may change
        untouched_a = np.ones((ts, ts), bool)
        untouched_a[:, ts // 2 :] = left_mask == 0
        assert np.array_equal(after_a[:, untouched_a], before[(0, 0)][:, untouched_a])
        untouched_b = np.ones((ts, ts), bool)
        untouched_b[:, : ts // 2] = right_mask == 0
        assert np.array_equal(after_b[:, untouched_b], before[(1, 0)][:, untouched_b])

    def test_constant_step_max_gradient_decreases(self):
        game_map = constant_pair_map(0.8, 0.2)
        ts = game_map.tile_size
        def max_border_gradient():
            a = game_map.grid[(0, 0)].tiles[0].pixels
            b = game_map.grid[(1, 0)].tiles[0].pixels
            return float(np.abs(a[:, -1] - b[:, 0]).max())
        pre = max_border_gradient()
        stitch_pair(game_map, pair_h(), BaselineGenerator(), ones(), ones())
        post = max_border_gradient()
        assert pre == pytest.approx(0.6)
        assert post < pre

    def test_disjoint_materials_noop(self):
        game_map = constant_pair_map()
        for tile in game_map.grid[(1, 0)].tiles:
            tile.material_id = tile.material_id + "x"
        for mid in list(game_map.materials.ids):
            game_map.materials.add(Material(mid + "x", game_map.materials[mid].texture))
        before = {c: ch.tile_stack() for c, ch in game_map.grid.items()}
        stitch_pair(game_map, pair_h(), BaselineGenerator(), ones(), ones())
        for coord, stack in before.items():
            assert np.array_equal(game_map.grid[coord].tile_stack(), stack)


class TestGaussianSmoothing:
    def make_chunk(self, side=32):
        tiles = [TileMask("solo", np.ones((side, side), np.float32))]
        tiles += [TileMask(f"m{i}", np.full((side, side), 0.3, np.float32)) for i in range(7)]
        return Chunk((0, 0), tiles)

    def test_border_weights_exactly_zero(self):
        out = gaussian_material_smoothing(self.make_chunk(), {"solo"}, "right")
        assert (out.tiles[0].pixels[:, -1] == 0.0).all()

    def test_depth_at_band_unchanged(self):
        chunk = self.make_chunk()
        band = chunk.side // 4
        out = gaussian_material_smoothing(chunk, {"solo"}, "right")
        assert np.array_equal(
            out.tiles[0].pixels[:, : chunk.side - band], chunk.tiles[0].pixels[:, : chunk.side - band]
        )

    def test_monotone_profile(self):
        out = gaussian_material_smoothing(self.make_chunk(), {"solo"}, "left")
        profile = out.tiles[0].pixels[5, :]
        assert (np.diff(profile) >= -1e-7).all()
        assert profile[0] == 0.0

    def test_other_materials_untouched(self):
        chunk = self.make_chunk()
        out = gaussian_material_smoothing(chunk, {"solo"}, "top")
        for i in range(1, 8):
            assert np.array_equal(out.tiles[i].pixels, chunk.tiles[i].pixels)

    def test_all_border_sides(self):
        for side_name in ("left", "right", "top", "bottom"):
            out = gaussian_material_smoothing(self.make_chunk(), {"solo"}, side_name)
            px = out.tiles[0].pixels
            edge = {
                "left": px[:, 0],
                "right": px[:, -1],
                "top": px[0, :],
                "bottom": px[-1, :],
            }[side_name]
            assert (edge == 0.0).all()

    def test_unknown_material_rejected(self):
        with pytest.raises(ValueError, match="unknown material"):
            gaussian_material_smoothing(self.make_chunk(), {"ghost"}, "left")

    def test_band_larger_than_tile_rejected(self):
        with pytest.raises(ValueError, match="band"):
            gaussian_material_smoothing(self.make_chunk(), {"solo"}, "left", band=99)


class TestSeamScore:
    def test_two_tone_seam_scores_one(self):
        game_map = constant_pair_map(1.0, 1.0)
        black = np.zeros((32, 32, 3), np.float32)
        white = np.ones((32, 32, 3), np.float32)
        game_map.materials["mat0"].texture = black
        game_map.grid[(1, 0)].tiles[0].material_id = "mat1"
        game_map.materials["mat1"].texture = white
        assert seam_score(game_map, pair_h()) == pytest.approx(1.0)

    def test_continuous_render_near_interior_gradient(self):
        # a cyclic texture keeps the render continuous across the border
        game_map = constant_pair_map(1.0, 1.0)
        side = 32
        xs = np.arange(side)
        wave = (0.5 + 0.4 * np.sin(2 * np.pi * xs / side)).astype(np.float32)
        game_map.materials["mat0"].texture = np.tile(wave[None, :, None], (side, 1, 3))
        seam = seam_score(game_map, pair_h())
        render = blend_chunk(game_map.grid[(0, 0)], game_map.materials).pixels
        interior = float(np.abs(np.diff(render, axis=1)).mean())
        assert seam < 3 * interior

    def test_nonnegative(self, toy_map):
        pairs = find_adjacent_pairs({c: ones() for c in toy_map.grid})
        for pair in pairs:
            assert seam_score(toy_map, pair) >= 0.0


def exclusive_pair_map(seed=0, tile=32):
    """2x1 map with one exclusive material per chunk and seven shared ones;
    the albedo map points each chunk's dominance at its exclusive material."""
    rng = np.random.default_rng(seed)
    shared_ids = [f"shared{i}" for i in range(7)]
    from conftest import noise_texture

    materials = MaterialSet(
        [
            Material("left_only", noise_texture(rng, (0.2, 0.6, 0.2), tile)),
            Material("right_only", noise_texture(rng, (0.6, 0.3, 0.2), tile)),
        ]
        + [
            Material(mid, noise_texture(rng, tuple(rng.uniform(0.2, 0.8, 3)), tile))
            for mid in shared_ids
        ]
    )

    def chunk_at(coord, exclusive):
        ids = [exclusive] + shared_ids
        weights = np.zeros((8, tile, tile), np.float32)
        weights[0] = 1.0
        return Chunk(coord, [TileMask(mid, weights[i]) for i, mid in enumerate(ids)])

    grid = {(0, 0): chunk_at((0, 0), "left_only"), (1, 0): chunk_at((1, 0), "right_only")}
    global_am = np.concatenate(
        [materials["left_only"].texture, materials["right_only"].texture], axis=1
    )
    game_map = GameMap(
        grid=grid,
        materials=materials,
        global_am=global_am,
        height_map=q8(rng.uniform(size=(tile, 2 * tile))),
        object_masks={},
        tile_size=tile,
        grid_size=(2, 1),
    )
    game_map.validate()
    return game_map


class TestGenerateRegion:
    def test_single_chunk_reduces_to_generator_call(self, toy_map):
        from smartbrush.coherence import build_context
        from smartbrush.generators import make_masked_input
        from smartbrush.stitching import _chunk_seed

        brush = np.zeros((32, 32), np.float32)
        brush[8:20, 8:20] = 1.0
        generator = BaselineGenerator()

        expected_ctx = build_context(toy_map, (0, 0))
        masked = make_masked_input(toy_map.grid[(0, 0)], brush, expected_ctx)
        expected = generator.generate(masked, seed=_chunk_seed(0, (0, 0)))

        generate_region(toy_map, {(0, 0): brush}, generator, seed=0)
        assert np.array_equal(toy_map.grid[(0, 0)].tile_stack(), expected)

    def test_non_adjacent_chunks_independent(self):
        brush = np.zeros((32, 32), np.float32)
        brush[4:16, 4:16] = 1.0
        joint = build_test_map(seed=3)
        generate_region(joint, {(0, 0): brush, (1, 1): brush}, BaselineGenerator(), seed=5)
        for coord in [(0, 0), (1, 1)]:
            solo = build_test_map(seed=3)
            generate_region(solo, {coord: brush}, BaselineGenerator(), seed=5)
            assert np.array_equal(
                joint.grid[coord].tile_stack(), solo.grid[coord].tile_stack()
            ), coord

    def test_deterministic(self):
        brush = np.ones((32, 32), np.float32)
        a = build_test_map(seed=4)
        b = build_test_map(seed=4)
        generate_region(a, {(0, 0): brush, (1, 0): brush}, BaselineGenerator(), seed=9)
        generate_region(b, {(0, 0): brush, (1, 0): brush}, BaselineGenerator(), seed=9)
        for coord in a.grid:
            assert np.array_equal(a.grid[coord].tile_stack(), b.grid[coord].tile_stack())

    def test_complete_pair_ablation_improves_seam(self):
        brush = np.ones((32, 32), np.float32)
        brushed = {(0, 0): brush, (1, 0): brush}

        without = exclusive_pair_map(seed=0)
        generate_region(without, dict(brushed), BaselineGenerator(), seed=1, with_stitching=False)
        score_without = seam_score(without, pair_h())

        full = exclusive_pair_map(seed=0)
        generate_region(full, dict(brushed), BaselineGenerator(), seed=1, with_stitching=True)
        score_full = seam_score(full, pair_h())

        assert score_full < score_without

    def test_report_structure(self, toy_map):
        brush = np.ones((32, 32), np.float32)
        report = {}
        generate_region(
            toy_map, {(0, 0): brush, (1, 0): brush}, BaselineGenerator(), seed=0, report=report
        )
        assert len(report["pairs"]) == 1
        entry = report["pairs"][0]
        assert entry["a"] == [0, 0] and entry["b"] == [1, 0]
        assert entry["intersecting"] is True
        assert entry["seam_after"] >= 0.0
        assert "0,0" in report["chunk_seconds"]

    def test_unknown_coord_rejected(self, toy_map):
        with pytest.raises(KeyError):
            generate_region(toy_map, {(7, 7): ones()}, BaselineGenerator())

    def test_bad_brush_shape_rejected(self, toy_map):
        with pytest.raises(ValueError, match="tile size"):
            generate_region(toy_map, {(0, 0): ones(16)}, BaselineGenerator())
