"""Toy two-stage gated-convolution generator with progressive freezing and
cross-attention context injection, plus its training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..dataset import MaskMode, generate_random_mask
from ..losses import LossWeights, default_extractor, perceptual_loss
from . import GeneratorConfig, GeneratorModel, MaskedChunkInput
from .layers import (
    GatedConv2d,
    PatchDiscriminator,
    cross_attention,
    init_parameters,
    load_parameter_vector,
    parameter_slices,
    parameter_vector,
)


class _GatedAutoencoder(nn.Module):
    """Gated-conv encoder/decoder producing an 8-channel tile stack.

    When built with a context dimension, cross-attention over the context
    branch tokens is fused into the bottleneck.
    """

    def __init__(self, config: GeneratorConfig, with_context: bool):
        super().__init__()
        w = config.base_width
        in_ch = config.tile_channels + 1  # tiles + brush plane
        self.down1 = GatedConv2d(in_ch, w, stride=2)
        self.down2 = GatedConv2d(w, 2 * w, stride=2)
        self.mid = GatedConv2d(2 * w, 2 * w)
        self.up1 = GatedConv2d(2 * w, w)
        self.up2 = GatedConv2d(w, w)
        self.head = nn.Conv2d(w, config.tile_channels, 3, padding=1)
        self.with_context = with_context
        if with_context:
            d = config.attention_dim
            self.ctx1 = nn.Conv2d(config.context_channels, w, 3, stride=2, padding=1)
            self.ctx2 = nn.Conv2d(w, d, 3, stride=2, padding=1)
            self.proj_q = nn.Linear(2 * w, d)
            self.proj_k = nn.Linear(d, d)
            self.proj_v = nn.Linear(d, 2 * w)

    def bottleneck_context(self, feats: torch.Tensor, context: torch.Tensor) -> torch.Tensor:
        """Cross-attend bottleneck tokens (queries) over context tokens."""
        b, c, h, w = feats.shape
        ctx = torch.tanh(self.ctx2(torch.tanh(self.ctx1(context))))
        fused = []
        for i in range(b):
            q = self.proj_q(feats[i].reshape(c, h * w).T)
            tokens = ctx[i].reshape(ctx.shape[1], -1).T
            out = cross_attention(q, self.proj_k(tokens), self.proj_v(tokens))
            fused.append(out.T.reshape(c, h, w))
        return feats + torch.stack(fused)

    def forward(self, x: torch.Tensor, context: torch.Tensor | None = None) -> torch.Tensor:
        h = self.down1(x)
        h = self.down2(h)
        h = self.mid(h)
        if self.with_context:
            if context is None:
                raise ValueError("context planes required for the fine autoencoder")
            h = self.bottleneck_context(h, context)
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        h = self.up1(h)
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        h = self.up2(h)
        return torch.sigmoid(self.head(h))


class ToyBrushGAN(GeneratorModel):
    """Coarse autoencoder for structure, fine autoencoder for detail with the
    context branch attended into its bottleneck."""

    kind = "brushgan"

    def __init__(self, config: GeneratorConfig | None = None):
        self.config = config or GeneratorConfig()
        self.coarse = _GatedAutoencoder(self.config, with_context=False)
        self.fine = _GatedAutoencoder(self.config, with_context=True)
        self.discriminator = PatchDiscriminator(self.config.tile_channels + 1)
        self._modules = nn.ModuleDict(
            {"coarse": self.coarse, "fine": self.fine, "discriminator": self.discriminator}
        )
        init_parameters(self._modules, self.config.init_seed)

    def parameter_vector(self) -> np.ndarray:
        return parameter_vector(self._modules)

    def parameter_slices(self):
        return parameter_slices(self._modules)

    def load_parameter_vector(self, vector: np.ndarray) -> None:
        load_parameter_vector(self._modules, vector)

    def forward_tensors(
        self, tiles: torch.Tensor, brush: torch.Tensor, context: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Batched forward: returns raw coarse output and composited fine
        output.  tiles (B, 8, s, s), brush (B, 1, s, s), context (B, C, s, s)."""
        x = torch.cat([tiles, brush], dim=1)
        coarse = self.coarse(x)
        coarse_comp = torch.where(brush > 0, coarse, tiles)
        fine = self.fine(torch.cat([coarse_comp, brush], dim=1), context)
        fine_comp = torch.where(brush > 0, fine, tiles)
        return coarse, fine_comp

    def generate(self, masked: MaskedChunkInput, seed: int = 0) -> np.ndarray:
        _, fine = brushgan_forward(self, masked)
        return np.where(masked.brush[None] > 0, fine, masked.tiles)


def brushgan_forward(model: ToyBrushGAN, masked: MaskedChunkInput) -> tuple[np.ndarray, np.ndarray]:
    """Run both stages; the fine stage comes back composited with the input
    outside the brush."""
    if masked.side % 4 != 0:
        raise ValueError("tile side must be divisible by 4")
    planes = masked.context.as_planes()
    if planes.shape[0] != model.config.context_channels:
        raise ValueError(
            f"context has {planes.shape[0]} planes, model expects {model.config.context_channels}"
        )
    tiles = torch.from_numpy(masked.tiles).unsqueeze(0)
    brush = torch.from_numpy(masked.brush).reshape(1, 1, masked.side, masked.side)
    context = torch.from_numpy(planes).unsqueeze(0)
    with torch.no_grad():
        coarse, fine = model.forward_tensors(tiles, brush, context)
    return coarse.squeeze(0).numpy(), fine.squeeze(0).numpy()


def patch_discriminator_scores(model: ToyBrushGAN, tiles: np.ndarray, brush: np.ndarray) -> np.ndarray:
    """Patch realism score map for an 8-channel stack plus brush plane."""
    x = torch.from_numpy(
        np.concatenate([np.asarray(tiles, np.float32), np.asarray(brush, np.float32)[None]])
    )
    with torch.no_grad():
        return model.discriminator(x).squeeze(0).numpy()


@dataclass
class TrainSample:
    """One training example: ground-truth tiles plus conditioning planes."""

    tiles: np.ndarray  # (8, s, s)
    context_planes: np.ndarray  # (C, s, s)


@dataclass
class TrainResult:
    """Loss curves plus the coarse parameter snapshot taken when phase 2
    started, so callers can verify the freeze held bit-exactly."""

    history: dict[str, list[float]]
    coarse_at_freeze: np.ndarray | None = None


@dataclass
class TrainSchedule:
    """Two-phase schedule: coarse-only epochs, then fine epochs with the
    coarse generator frozen.  One epoch is one full-batch step; the phase
    boundary defaults to an even split."""

    coarse_epochs: int = 100
    fine_epochs: int = 100
    coarse_lr: float = 0.1
    fine_lr: float = 0.05
    disc_lr: float = 0.05
    momentum: float = 0.9
    clip_norm: float = 1.0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    adv_weight: float = 0.01
    mask_seed: int = 0


# Curriculum ratios once all mask modes are unlocked.
CURRICULUM_FULL_RATIOS = (0.5, 0.3, 0.2)


def sample_curriculum_masks(
    rng: np.random.Generator, count: int, side: int, epoch: int, total_epochs: int
) -> list[np.ndarray]:
    """Progressive-difficulty mask sampling: medium only in the first third
    of training, medium/hard in the second, all three modes afterwards."""
    frac = epoch / max(1, total_epochs)
    if frac < 1 / 3:
        modes = [MaskMode.MEDIUM]
        probs = [1.0]
    elif frac < 2 / 3:
        modes = [MaskMode.MEDIUM, MaskMode.HARD]
        weights = CURRICULUM_FULL_RATIOS[:2]
        probs = [w / sum(weights) for w in weights]
    else:
        modes = [MaskMode.MEDIUM, MaskMode.HARD, MaskMode.COMPLETE]
        probs = list(CURRICULUM_FULL_RATIOS)
    masks = []
    for _ in range(count):
        mode = modes[int(rng.choice(len(modes), p=probs))]
        masks.append(generate_random_mask(mode, int(rng.integers(1 << 31)), side))
    return masks


def train_brushgan(
    model: ToyBrushGAN, dataset: list[TrainSample], schedule: TrainSchedule
) -> TrainResult:
    """Progressive training: phase 1 fits the coarse stage with MSE; phase 2
    freezes it bit-exactly and trains the fine stage with MSE, perceptual and
    hinge adversarial losses against the patch discriminator."""
    if not dataset:
        raise ValueError("training dataset is empty")
    side = dataset[0].tiles.shape[-1]
    targets = torch.from_numpy(np.stack([s.tiles for s in dataset]).astype(np.float32))
    contexts = torch.from_numpy(np.stack([s.context_planes for s in dataset]).astype(np.float32))
    rng = np.random.default_rng(schedule.mask_seed)
    total_epochs = schedule.coarse_epochs + schedule.fine_epochs
    history: dict[str, list[float]] = {
        "coarse_mse": [],
        "fine_mse": [],
        "fine_perceptual": [],
        "fine_adversarial": [],
        "disc": [],
    }

    def masked_batch(epoch: int) -> tuple[torch.Tensor, torch.Tensor]:
        masks = sample_curriculum_masks(rng, len(dataset), side, epoch, total_epochs)
        brush = torch.from_numpy(np.stack(masks).astype(np.float32)).unsqueeze(1)
        tiles = torch.where(brush > 0, torch.zeros(()), targets)
        return tiles, brush

    coarse_params = list(model.coarse.parameters())
    opt_coarse = torch.optim.SGD(coarse_params, lr=schedule.coarse_lr, momentum=schedule.momentum)
    for epoch in range(schedule.coarse_epochs):
        tiles, brush = masked_batch(epoch)
        opt_coarse.zero_grad()
        coarse = model.coarse(torch.cat([tiles, brush], dim=1))
        loss = ((coarse - targets) ** 2).mean()
        if not torch.isfinite(loss):
            raise RuntimeError(f"NaN coarse loss at epoch {epoch}: inspect learning rate")
        loss.backward()
        torch.nn.utils.clip_grad_norm_(coarse_params, schedule.clip_norm)
        opt_coarse.step()
        history["coarse_mse"].append(float(loss.item()))

    # Phase 2: coarse is frozen; only fine + discriminator parameters move.
    for p in coarse_params:
        p.requires_grad_(False)
    frozen_coarse = parameter_vector(model.coarse).copy()

    fine_params = list(model.fine.parameters())
    disc_params = list(model.discriminator.parameters())
    opt_fine = torch.optim.SGD(fine_params, lr=schedule.fine_lr, momentum=schedule.momentum)
    opt_disc = torch.optim.SGD(disc_params, lr=schedule.disc_lr, momentum=schedule.momentum)
    extractor = default_extractor(model.config.tile_channels)
    w = schedule.loss_weights

    for epoch in range(schedule.fine_epochs):
        tiles, brush = masked_batch(schedule.coarse_epochs + epoch)
        _, fine_comp = model.forward_tensors(tiles, brush, contexts)

        opt_disc.zero_grad()
        d_real = model.discriminator(torch.cat([targets, brush], dim=1))
        d_fake = model.discriminator(torch.cat([fine_comp.detach(), brush], dim=1))
        disc_loss = F.relu(1.0 - d_real).mean() + F.relu(1.0 + d_fake).mean()
        disc_loss.backward()
        torch.nn.utils.clip_grad_norm_(disc_params, schedule.clip_norm)
        opt_disc.step()

        opt_fine.zero_grad()
        mse = ((fine_comp - targets) ** 2).mean()
        perc = sum(
            perceptual_loss(fine_comp[i], targets[i], extractor) for i in range(len(dataset))
        ) / len(dataset)
        adv = -model.discriminator(torch.cat([fine_comp, brush], dim=1)).mean()
        gen_loss = w.mse * mse + w.perceptual * perc + schedule.adv_weight * adv
        if not torch.isfinite(gen_loss):
            raise RuntimeError(
                f"NaN fine loss at epoch {epoch}: mse={mse.item()} perc={perc.item()} adv={adv.item()}"
            )
        gen_loss.backward()
        torch.nn.utils.clip_grad_norm_(fine_params, schedule.clip_norm)
        opt_fine.step()

        history["fine_mse"].append(float(mse.item()))
        history["fine_perceptual"].append(float(perc.item()))
        history["fine_adversarial"].append(float(adv.item()))
        history["disc"].append(float(disc_loss.item()))

    if not np.array_equal(parameter_vector(model.coarse), frozen_coarse):
        raise RuntimeError("coarse parameters changed during phase 2")
    for p in coarse_params:
        p.requires_grad_(True)
    return TrainResult(history=history, coarse_at_freeze=frozen_coarse)
