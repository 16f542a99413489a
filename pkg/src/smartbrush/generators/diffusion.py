"""Toy latent-diffusion generator: noise schedule, forward/reverse steps,
and a small conditioned denoiser with a zero-convolution hint branch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..losses import focal_frequency_loss
from . import GeneratorConfig, GeneratorModel, MaskedChunkInput
from .layers import init_parameters, load_parameter_vector, parameter_slices, parameter_vector


@dataclass(frozen=True)
class NoiseSchedule:
    """Monotone beta schedule with derived cumulative alpha products."""

    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.size == 0:
            raise ValueError("schedule needs at least one step")
        if betas.min() <= 0.0 or betas.max() >= 1.0:
            raise ValueError("betas must lie in (0, 1)")
        if np.any(np.diff(betas) < 0):
            raise ValueError("betas must be non-decreasing")

    @classmethod
    def linear(cls, steps: int, beta_start: float = 1e-4, beta_end: float = 0.02) -> "NoiseSchedule":
        return cls(tuple(np.linspace(beta_start, beta_end, steps)))

    @property
    def steps(self) -> int:
        return len(self.betas)

    def beta(self, t: int) -> float:
        self._check_t(t)
        return self.betas[t - 1]

    def alpha_bar(self, t: int) -> float:
        """Cumulative product of (1 - beta) up to step t; alpha_bar(0) = 1."""
        if t == 0:
            return 1.0
        self._check_t(t)
        return float(np.prod(1.0 - np.asarray(self.betas[:t], dtype=np.float64)))

    def _check_t(self, t: int) -> None:
        if not 1 <= t <= self.steps:
            raise ValueError(f"step t={t} out of range [1, {self.steps}]")


def _seeded_normal(shape: tuple[int, ...], seed_parts: list[int], like=None) -> np.ndarray | torch.Tensor:
    noise = np.random.default_rng(seed_parts).standard_normal(shape)
    if isinstance(like, torch.Tensor):
        return torch.from_numpy(noise).to(like.dtype)
    return noise.astype(np.asarray(like).dtype if like is not None else np.float64)


def diffusion_forward(x0, t: int, schedule: NoiseSchedule, seed: int):
    """Noising step: ``x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps`` with
    seed-deterministic Gaussian noise.  Returns (x_t, noise)."""
    abar = schedule.alpha_bar(t)
    noise = _seeded_normal(tuple(np.shape(x0)), [seed, t], like=x0)
    x_t = np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * noise
    return x_t, noise


def diffusion_reverse_step(x_t, t: int, predicted_noise, schedule: NoiseSchedule, seed: int):
    """Ancestral denoising step; no noise is injected at t=1."""
    beta = schedule.beta(t)
    abar_t = schedule.alpha_bar(t)
    abar_prev = schedule.alpha_bar(t - 1)
    mean = (x_t - (beta / np.sqrt(1.0 - abar_t)) * predicted_noise) / np.sqrt(1.0 - beta)
    if t == 1:
        return mean
    sigma = np.sqrt(beta * (1.0 - abar_prev) / (1.0 - abar_t))
    z = _seeded_normal(tuple(np.shape(x_t)), [seed, t, 0xD1F], like=x_t)
    return mean + sigma * z


class _LatentAutoencoder(nn.Module):
    """One-stride-2 encoder/decoder pair mapping 8 tiles to a latent grid at
    half the spatial resolution."""

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        w = config.base_width
        self.enc1 = nn.Conv2d(config.tile_channels, w, 3, stride=2, padding=1)
        self.enc2 = nn.Conv2d(w, config.latent_channels, 3, padding=1)
        self.dec1 = nn.Conv2d(config.latent_channels, w, 3, padding=1)
        self.dec2 = nn.Conv2d(w, w, 3, padding=1)
        self.head = nn.Conv2d(w, config.tile_channels, 3, padding=1)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        return self.enc2(torch.tanh(self.enc1(x)))

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        h = torch.tanh(self.dec1(z))
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        h = torch.tanh(self.dec2(h))
        return torch.sigmoid(self.head(h))


class _HintNetwork(nn.Module):
    """Conditioning embedder: strides tuned so context planes land on the
    latent grid, fused through a zero-initialized projection."""

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        w = config.base_width
        self.conv1 = nn.Conv2d(config.context_channels, w, 3, stride=2, padding=1)
        self.conv2 = nn.Conv2d(w, config.latent_channels, 3, padding=1)
        self.zero_proj = nn.Conv2d(config.latent_channels, config.latent_channels, 1)

    def forward(self, context: torch.Tensor) -> torch.Tensor:
        h = torch.tanh(self.conv1(context))
        return self.zero_proj(self.conv2(h))

    def zero_init(self) -> None:
        with torch.no_grad():
            self.zero_proj.weight.zero_()
            self.zero_proj.bias.zero_()


class _Denoiser(nn.Module):
    """Small conv net predicting the noise in a latent, conditioned on the
    latent-masked input (plus hint) and a normalized timestep channel."""

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        w = config.denoiser_width
        in_ch = config.latent_channels * 2 + 1
        self.conv1 = nn.Conv2d(in_ch, w, 3, padding=1)
        self.conv2 = nn.Conv2d(w, w, 3, padding=1)
        self.head = nn.Conv2d(w, config.latent_channels, 3, padding=1)

    def forward(self, x_t: torch.Tensor, cond: torch.Tensor, t_frac: float) -> torch.Tensor:
        t_plane = torch.full_like(x_t[:, :1], t_frac)
        h = torch.cat([x_t, cond, t_plane], dim=1)
        h = torch.tanh(self.conv1(h))
        h = torch.tanh(self.conv2(h))
        return self.head(h)


class ToyBrushCLDM(GeneratorModel):
    """Latent-diffusion brush: encode, denoise over T steps conditioned on
    the latent-masked input and hint branch, decode, composite."""

    kind = "brushcldm"

    def __init__(self, config: GeneratorConfig | None = None):
        self.config = config or GeneratorConfig()
        self.autoencoder = _LatentAutoencoder(self.config)
        self.hint = _HintNetwork(self.config)
        self.denoiser = _Denoiser(self.config)
        self._modules = nn.ModuleDict(
            {"autoencoder": self.autoencoder, "hint": self.hint, "denoiser": self.denoiser}
        )
        init_parameters(self._modules, self.config.init_seed)
        self.hint.zero_init()
        self.schedule = NoiseSchedule.linear(self.config.diffusion_steps)

    def parameter_vector(self) -> np.ndarray:
        return parameter_vector(self._modules)

    def parameter_slices(self):
        return parameter_slices(self._modules)

    def load_parameter_vector(self, vector: np.ndarray) -> None:
        load_parameter_vector(self._modules, vector)

    def conditioning(self, masked: MaskedChunkInput) -> torch.Tensor:
        tiles = torch.from_numpy(masked.tiles).unsqueeze(0)
        context = torch.from_numpy(masked.context.as_planes()).unsqueeze(0)
        with torch.no_grad():
            return self.autoencoder.encode(tiles) + self.hint(context)

    def generate(self, masked: MaskedChunkInput, seed: int = 0) -> np.ndarray:
        if masked.side % 2 != 0:
            raise ValueError("tile side must be even for the latent grid")
        cond = self.conditioning(masked)
        steps = self.schedule.steps
        shape = (1, self.config.latent_channels, masked.side // 2, masked.side // 2)
        x = torch.from_numpy(
            np.random.default_rng([seed, 0xC1D]).standard_normal(shape)
        ).to(torch.float32)
        with torch.no_grad():
            for t in range(steps, 0, -1):
                eps_hat = self.denoiser(x, cond, t / steps)
                x = diffusion_reverse_step(x, t, eps_hat, self.schedule, seed)
            decoded = self.autoencoder.decode(x).squeeze(0).numpy()
        return np.where(masked.brush[None] > 0, decoded, masked.tiles)


@dataclass
class CLDMTrainSchedule:
    autoencoder_epochs: int = 100
    denoiser_epochs: int = 100
    lr: float = 0.02
    momentum: float = 0.9
    clip_norm: float = 1.0
    ffl_weight: float = 0.1
    mask_seed: int = 0


def train_brushcldm(model: ToyBrushCLDM, dataset, schedule: CLDMTrainSchedule):
    """Two-phase toy training: autoencoder reconstruction (MSE + focal
    frequency), then denoiser noise-prediction MSE on encoded latents."""
    from .brushgan import sample_curriculum_masks  # shared curriculum sampler

    if not dataset:
        raise ValueError("training dataset is empty")
    history: dict[str, list[float]] = {"autoencoder": [], "denoiser": []}
    targets = torch.from_numpy(np.stack([s.tiles for s in dataset]))
    contexts = torch.from_numpy(np.stack([s.context_planes for s in dataset]))

    ae_params = list(model.autoencoder.parameters())
    opt_ae = torch.optim.SGD(ae_params, lr=schedule.lr, momentum=schedule.momentum)
    for epoch in range(schedule.autoencoder_epochs):
        opt_ae.zero_grad()
        recon = model.autoencoder.decode(model.autoencoder.encode(targets))
        loss = ((recon - targets) ** 2).mean()
        for i in range(targets.shape[0]):
            loss = loss + schedule.ffl_weight * focal_frequency_loss(
                targets[i], recon[i]
            ) / targets.shape[0]
        if not torch.isfinite(loss):
            raise RuntimeError(f"NaN autoencoder loss at epoch {epoch}")
        loss.backward()
        torch.nn.utils.clip_grad_norm_(ae_params, schedule.clip_norm)
        opt_ae.step()
        history["autoencoder"].append(float(loss.item()))

    den_params = list(model.denoiser.parameters()) + list(model.hint.parameters())
    opt_den = torch.optim.SGD(den_params, lr=schedule.lr, momentum=schedule.momentum)
    rng = np.random.default_rng(schedule.mask_seed)
    side = dataset[0].tiles.shape[-1]
    for epoch in range(schedule.denoiser_epochs):
        masks = sample_curriculum_masks(
            rng, len(dataset), side, epoch, schedule.denoiser_epochs
        )
        masked = targets * torch.from_numpy(
            (1.0 - np.stack(masks)).astype(np.float32)
        ).unsqueeze(1)
        with torch.no_grad():
            latents = model.autoencoder.encode(targets)
        cond = model.autoencoder.encode(masked) + model.hint(contexts)
        t = int(rng.integers(1, model.schedule.steps + 1))
        x_t, noise = diffusion_forward(latents, t, model.schedule, seed=int(rng.integers(1 << 31)))
        opt_den.zero_grad()
        eps_hat = model.denoiser(x_t, cond, t / model.schedule.steps)
        loss = ((eps_hat - noise) ** 2).mean()
        if not torch.isfinite(loss):
            raise RuntimeError(f"NaN denoiser loss at epoch {epoch}")
        loss.backward()
        torch.nn.utils.clip_grad_norm_(den_params, schedule.clip_norm)
        opt_den.step()
        history["denoiser"].append(float(loss.item()))
    return history
