"""Pluggable chunk generators: deterministic exemplar baseline, toy
two-stage GAN, and toy latent-diffusion, all behind one contract."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..coherence import ContextStack
from ..core import Chunk, TILES_PER_CHUNK


@dataclass
class MaskedChunkInput:
    """Generator input: brush-masked tile stack plus conditioning planes."""

    tiles: np.ndarray  # (8, side, side), zeroed under the brush
    brush: np.ndarray  # (side, side) binary
    context: ContextStack

    def __post_init__(self) -> None:
        self.tiles = np.asarray(self.tiles, dtype=np.float32)
        self.brush = np.asarray(self.brush, dtype=np.float32)
        if self.tiles.ndim != 3 or self.tiles.shape[0] != TILES_PER_CHUNK:
            raise ValueError(f"tiles must be (8, side, side), got {self.tiles.shape}")
        if self.brush.shape != self.tiles.shape[1:]:
            raise ValueError(
                f"brush {self.brush.shape} does not match tiles {self.tiles.shape[1:]}"
            )
        if self.context.height.shape != self.brush.shape:
            raise ValueError("context planes do not match tile dimensions")
        masked = self.brush > 0
        if self.tiles[:, masked].any():
            raise ValueError("masked pixels must be zeroed in the tile stack")

    @property
    def side(self) -> int:
        return self.tiles.shape[1]


def make_masked_input(chunk: Chunk, brush: np.ndarray, context: ContextStack) -> MaskedChunkInput:
    """Zero the chunk's tiles under the brush and bundle the generator input."""
    brush = np.asarray(brush, dtype=np.float32)
    stack = chunk.tile_stack()
    stack = np.where(brush[None] > 0, np.float32(0.0), stack)
    return MaskedChunkInput(tiles=stack, brush=brush, context=context)


@dataclass(frozen=True)
class GeneratorConfig:
    """Layer sizing shared by the toy neural generators.

    Fully convolutional, so ``tile_side`` only pins the checkpoint metadata;
    inference accepts any side divisible by 4.
    """

    tile_side: int = 32
    tile_channels: int = TILES_PER_CHUNK
    context_channels: int = 16  # 3 AM + 1 height + 4 objects + 8 templates
    base_width: int = 16
    attention_dim: int = 32
    latent_channels: int = 4
    denoiser_width: int = 32
    diffusion_steps: int = 50
    init_seed: int = 0


class GeneratorModel:
    """Contract implemented by every chunk generator."""

    kind: str = "abstract"

    def generate(self, masked: MaskedChunkInput, seed: int = 0) -> np.ndarray:
        """Produce an (8, side, side) tile stack; pixels where the brush is 0
        must be returned bit-identical to the input."""
        raise NotImplementedError


def resolve_generator(choice: str, config: GeneratorConfig | None = None) -> GeneratorModel:
    """Build a generator from a CLI/service choice string.

    ``baseline`` gives the deterministic exemplar generator; ``brushgan`` and
    ``brushcldm`` give freshly initialized toy models; anything else is read
    as a checkpoint path.
    """
    from .baseline import BaselineGenerator
    from .brushgan import ToyBrushGAN
    from .checkpoint import load_checkpoint
    from .diffusion import ToyBrushCLDM

    if choice == "baseline":
        return BaselineGenerator()
    if choice == "brushgan":
        return ToyBrushGAN(config or GeneratorConfig())
    if choice == "brushcldm":
        return ToyBrushCLDM(config or GeneratorConfig())
    path = Path(choice)
    if path.exists():
        return load_checkpoint(path)
    raise ValueError(f"unknown generator {choice!r} (not a name or checkpoint path)")


__all__ = [
    "GeneratorConfig",
    "GeneratorModel",
    "MaskedChunkInput",
    "make_masked_input",
    "resolve_generator",
]
