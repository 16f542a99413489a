"""Brush-mask synthesis, mask-mode classification and train/test splitting."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import GameMap

MEDIUM_THRESHOLD = 0.30
MAX_MASK_ATTEMPTS = 1000

# Stroke parameters, stated for the default 128 px tile and scaled linearly
# for other sides so toy tests stay in the same coverage bands.
STROKE_RADIUS_RANGE = (8, 48)
STROKE_COUNT_RANGE = (1, 8)


class MaskMode(enum.Enum):
    MEDIUM = "medium"
    HARD = "hard"
    COMPLETE = "complete"


def classify_mask_mode(brush: np.ndarray) -> MaskMode:
    """Classify a binary brush mask by coverage.

    Coverage below 30% is Medium, full coverage is Complete, everything in
    between (the 0.30 boundary included) is Hard.
    """
    brush = np.asarray(brush)
    coverage = float(np.mean(brush != 0))
    if coverage >= 1.0:
        return MaskMode.COMPLETE
    if coverage < MEDIUM_THRESHOLD:
        return MaskMode.MEDIUM
    return MaskMode.HARD


def _stamp_disk(mask: np.ndarray, cy: float, cx: float, radius: float) -> None:
    side = mask.shape[0]
    y0 = max(0, int(cy - radius) - 1)
    y1 = min(side, int(cy + radius) + 2)
    x0 = max(0, int(cx - radius) - 1)
    x1 = min(side, int(cx + radius) + 2)
    if y1 <= y0 or x1 <= x0:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    hit = (ys - cy) ** 2 + (xs - cx) ** 2 <= radius**2
    mask[y0:y1, x0:x1][hit] = 1.0


def _random_stroke_mask(rng: np.random.Generator, side: int, strokes: int, walk_len: int) -> np.ndarray:
    """Union of free-form strokes: random walks of disks with varying radii."""
    scale = side / 128.0
    r_lo = max(1.0, STROKE_RADIUS_RANGE[0] * scale)
    r_hi = max(r_lo + 1.0, STROKE_RADIUS_RANGE[1] * scale)
    mask = np.zeros((side, side), dtype=np.float32)
    for _ in range(strokes):
        y = rng.uniform(0, side)
        x = rng.uniform(0, side)
        radius = rng.uniform(r_lo, r_hi)
        angle = rng.uniform(0, 2 * np.pi)
        step = max(1.0, radius / 2.0)
        for _ in range(walk_len):
            _stamp_disk(mask, y, x, radius)
            angle += rng.uniform(-1.0, 1.0)
            y = np.clip(y + step * np.sin(angle), 0, side - 1)
            x = np.clip(x + step * np.cos(angle), 0, side - 1)
            radius = np.clip(radius + rng.uniform(-1.5, 1.5) * scale, r_lo, r_hi)
    return mask


def generate_random_mask(mode: MaskMode, seed: int, side: int) -> np.ndarray:
    """Deterministic stochastic brush mask whose coverage satisfies the mode.

    Resamples until the coverage lands in the mode's range and raises after
    1000 failed attempts.
    """
    if side < 8:
        raise ValueError(f"mask side must be >= 8, got {side}")
    if mode is MaskMode.COMPLETE:
        return np.ones((side, side), dtype=np.float32)

    mode_tag = {MaskMode.MEDIUM: 0, MaskMode.HARD: 1}[mode]
    rng = np.random.default_rng([seed, side, mode_tag])
    for _ in range(MAX_MASK_ATTEMPTS):
        if mode is MaskMode.MEDIUM:
            strokes = int(rng.integers(1, 4))
            walk_len = int(rng.integers(2, max(3, side // 8)))
        else:
            strokes = int(rng.integers(3, STROKE_COUNT_RANGE[1] + 1))
            walk_len = int(rng.integers(side // 4, side))
        mask = _random_stroke_mask(rng, side, strokes, walk_len)
        if mask.max() == 0.0:
            continue
        if classify_mask_mode(mask) is mode:
            return mask
    raise RuntimeError(f"mask generation failed to hit {mode} coverage in {MAX_MASK_ATTEMPTS} attempts")


def material_intersection(map_a: GameMap, map_b: GameMap) -> float:
    """Jaccard similarity of the two maps' material id sets."""
    a = set(map_a.materials.ids)
    b = set(map_b.materials.ids)
    if not a and not b:
        raise ValueError("material intersection undefined for two empty material sets")
    return len(a & b) / len(a | b)


@dataclass(frozen=True)
class SplitScore:
    """Similarity score of one map pair: mean of two FID terms and the
    material-set intersection percentage."""

    fid_global_am: float
    fid_tiles: float
    p_material: float

    def __post_init__(self) -> None:
        if self.fid_global_am < 0 or self.fid_tiles < 0:
            raise ValueError("FID terms must be non-negative")
        if not 0.0 <= self.p_material <= 1.0:
            raise ValueError("p_material must lie in [0, 1]")

    @property
    def s(self) -> float:
        return (self.fid_global_am + self.fid_tiles + self.p_material) / 3.0


def split_score(fid_global: float, fid_tiles: float, p_material: float) -> SplitScore:
    return SplitScore(fid_global, fid_tiles, p_material)


@dataclass
class LabeledMap:
    map_id: str
    category: str
    game_map: GameMap


@dataclass
class SplitResult:
    train: list[str]
    test: list[str]
    scores: dict[tuple[str, str], SplitScore]


ScoreFn = Callable[[GameMap, GameMap], SplitScore]


def _default_score_fn() -> ScoreFn:
    from .metrics import map_pair_score  # local import: metrics pulls in torch

    return map_pair_score


def pairwise_scores(
    maps: Sequence[LabeledMap], score_fn: ScoreFn | None = None
) -> dict[tuple[str, str], SplitScore]:
    """Split scores for every same-category map pair, keyed by sorted ids."""
    score_fn = score_fn or _default_score_fn()
    scores: dict[tuple[str, str], SplitScore] = {}
    by_category: dict[str, list[LabeledMap]] = {}
    for m in maps:
        by_category.setdefault(m.category, []).append(m)
    for members in by_category.values():
        for a, b in itertools.combinations(sorted(members, key=lambda m: m.map_id), 2):
            scores[(a.map_id, b.map_id)] = score_fn(a.game_map, b.game_map)
    return scores


def propose_split(
    maps: Sequence[LabeledMap],
    per_category: int,
    score_fn: ScoreFn | None = None,
    scores: dict[tuple[str, str], SplitScore] | None = None,
) -> SplitResult:
    """Pick the most-similar pairs per category and split each across sets.

    Pairs are chosen greedily by ascending score without reusing a map; the
    lexicographically smaller member of each chosen pair goes to train, the
    other to test.  Everything unchosen lands in train.
    """
    ids = [m.map_id for m in maps]
    if len(set(ids)) != len(ids):
        raise ValueError("map ids must be unique")
    by_category: dict[str, list[LabeledMap]] = {}
    for m in maps:
        by_category.setdefault(m.category, []).append(m)
    for cat, members in by_category.items():
        if len(members) < 2:
            raise ValueError(f"category {cat!r} has fewer than 2 maps")

    if scores is None:
        scores = pairwise_scores(maps, score_fn)

    test: list[str] = []
    used: set[str] = set()
    for cat in sorted(by_category):
        member_ids = {m.map_id for m in by_category[cat]}
        cat_pairs = [
            (score.s, pair)
            for pair, score in scores.items()
            if pair[0] in member_ids and pair[1] in member_ids
        ]
        cat_pairs.sort(key=lambda item: (item[0], item[1]))
        picked = 0
        for _, (a, b) in cat_pairs:
            if picked >= per_category:
                break
            if a in used or b in used:
                continue
            used.update((a, b))
            test.append(b)  # a < b by construction: smaller id trains
            picked += 1
    train = [m.map_id for m in maps if m.map_id not in test]
    return SplitResult(train=train, test=test, scores=scores)
