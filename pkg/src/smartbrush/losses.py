"""Loss functions for generator training and evaluation.

All losses accept either numpy arrays or torch tensors shaped ``(C, H, W)``
(or ``(H, W)`` for single-channel data).  Torch inputs keep their autograd
graph so callers can backpropagate; numpy inputs are promoted to float64 and
the loss comes back as a plain float.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

DEFAULT_EXTRACTOR_SEED = 17
DEFAULT_EXTRACTOR_WIDTHS = (8, 16, 32)


def _to_tensor(x) -> tuple[torch.Tensor, bool]:
    if isinstance(x, torch.Tensor):
        t = x
        was_torch = True
    else:
        t = torch.from_numpy(np.asarray(x, dtype=np.float64))
        was_torch = False
    if t.dim() == 2:
        t = t.unsqueeze(0)
    if t.dim() != 3:
        raise ValueError(f"expected (C, H, W) or (H, W), got shape {tuple(t.shape)}")
    return t, was_torch


def _pair(gt, gen) -> tuple[torch.Tensor, torch.Tensor, bool]:
    t_gt, torch_a = _to_tensor(gt)
    t_gen, torch_b = _to_tensor(gen)
    if t_gt.shape != t_gen.shape:
        raise ValueError(f"shape mismatch: {tuple(t_gt.shape)} vs {tuple(t_gen.shape)}")
    if t_gt.dtype != t_gen.dtype:
        common = torch.promote_types(t_gt.dtype, t_gen.dtype)
        t_gt, t_gen = t_gt.to(common), t_gen.to(common)
    return t_gt, t_gen, torch_a or torch_b


def _ret(value: torch.Tensor, keep_tensor: bool):
    return value if keep_tensor else float(value.detach().item())


class FeatureExtractor:
    """Fixed random convolution stack used by style/perceptual losses and FID.

    Stands in for a pretrained perceptual network at desk scale: three
    stride-2 conv layers with tanh activations, weights drawn once from the
    given seed and immutable afterwards.  Pluggable: anything exposing
    ``features(x) -> list[Tensor]`` and ``layer_weights`` works in its place.
    """

    def __init__(
        self,
        in_channels: int = 3,
        widths: tuple[int, ...] = DEFAULT_EXTRACTOR_WIDTHS,
        kernel: int = 3,
        stride: int = 2,
        seed: int = DEFAULT_EXTRACTOR_SEED,
        layer_weights: tuple[float, ...] | None = None,
    ):
        rng = np.random.default_rng(seed)
        self.in_channels = in_channels
        self.stride = stride
        self.kernel = kernel
        self.layer_weights = tuple(layer_weights or (1.0,) * len(widths))
        if len(self.layer_weights) != len(widths):
            raise ValueError("layer_weights must match layer count")
        self._weights: list[torch.Tensor] = []
        prev = in_channels
        for width in widths:
            fan_in = prev * kernel * kernel
            w = rng.standard_normal((width, prev, kernel, kernel)) / np.sqrt(fan_in)
            self._weights.append(torch.from_numpy(w))
            prev = width

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Per-layer activations for a (C, H, W) or (B, C, H, W) input."""
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        if x.shape[1] != self.in_channels:
            raise ValueError(f"extractor expects {self.in_channels} channels, got {x.shape[1]}")
        outs = []
        for w in self._weights:
            x = torch.tanh(F.conv2d(x, w.to(x.dtype), stride=self.stride, padding=self.kernel // 2))
            outs.append(x.squeeze(0) if squeeze else x)
        return outs

    def feature_vector(self, x) -> np.ndarray:
        """Flat descriptor (per-layer channel means) for Frechet statistics."""
        t, _ = _to_tensor(x)
        with torch.no_grad():
            feats = self.features(t)
            parts = [f.mean(dim=(-2, -1)).reshape(-1) for f in feats]
            return torch.cat(parts).numpy().astype(np.float64)


class IdentityExtractor:
    """Single layer returning the input unchanged; collapses perceptual loss
    to plain MSE and makes style loss depend only on the raw Gram matrix."""

    layer_weights = (1.0,)

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        return [x]

    def feature_vector(self, x) -> np.ndarray:
        t, _ = _to_tensor(x)
        return t.detach().reshape(-1).numpy().astype(np.float64)


@dataclass(frozen=True)
class LossWeights:
    """Term weights for the combined loss: MSE, perceptual, focal-frequency,
    style, in that order."""

    mse: float = 1.0
    perceptual: float = 0.1
    ffl: float = 0.1
    style: float = 0.05

    def __post_init__(self) -> None:
        values = (self.mse, self.perceptual, self.ffl, self.style)
        if any(v < 0 for v in values):
            raise ValueError("loss weights must be non-negative")
        if all(v == 0 for v in values):
            raise ValueError("at least one loss weight must be positive")


def mse_loss(gt, gen):
    t_gt, t_gen, keep = _pair(gt, gen)
    return _ret(((t_gen - t_gt) ** 2).mean(), keep)


def spectrum_weight(f_gt: torch.Tensor, f_gen: torch.Tensor, alpha: float) -> torch.Tensor:
    """Focal weight matrix: magnitude of the spectral error raised to alpha,
    re-normalized to max 1 per channel and detached from the graph."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha == 0:
        return torch.ones(f_gt.shape, dtype=f_gt.real.dtype)
    with torch.no_grad():
        w = (f_gt - f_gen).abs() ** alpha
        peak = w.reshape(w.shape[0], -1).max(dim=1).values
        peak = torch.where(peak > 0, peak, torch.ones_like(peak))
        return w / peak[:, None, None]


def focal_frequency_loss(gt, gen, alpha: float = 1.0):
    """Weighted squared spectral error under a unitary 2-D DFT.

    Per channel: ``(1 / MN) * sum_uv w(u, v) |F_gt - F_gen|^2`` with the
    focal weight emphasizing the hardest frequencies; channels averaged.
    """
    t_gt, t_gen, keep = _pair(gt, gen)
    f_gt = torch.fft.fft2(t_gt, norm="ortho")
    f_gen = torch.fft.fft2(t_gen, norm="ortho")
    w = spectrum_weight(f_gt, f_gen, alpha)
    m, n = t_gt.shape[-2:]
    diff_sq = (f_gt - f_gen).abs() ** 2
    per_channel = (w * diff_sq).sum(dim=(-2, -1)) / (m * n)
    return _ret(per_channel.mean(), keep)


def gram_matrix(features) -> np.ndarray | torch.Tensor:
    """Channel correlation matrix ``G_ij = sum_hw f_i(h, w) f_j(h, w)``."""
    t, keep = _to_tensor(features)
    flat = t.reshape(t.shape[0], -1)
    g = flat @ flat.T
    return g if keep else g.detach().numpy()


def style_loss(gen, gt, extractor=None):
    """Layer-weighted squared Frobenius distance between Gram matrices."""
    extractor = extractor or default_extractor(1 if np.asarray(gen).ndim == 2 else np.asarray(gen).shape[0])
    t_gt, t_gen, keep = _pair(gt, gen)
    feats_gen = extractor.features(t_gen)
    feats_gt = extractor.features(t_gt)
    total = None
    for w_l, f_gen, f_gt in zip(extractor.layer_weights, feats_gen, feats_gt):
        c, h, wdt = f_gen.shape
        g_gen = f_gen.reshape(c, -1) @ f_gen.reshape(c, -1).T
        g_gt = f_gt.reshape(c, -1) @ f_gt.reshape(c, -1).T
        term = w_l * ((g_gen - g_gt) ** 2).sum() / (4.0 * c**2 * h**2 * wdt**2)
        total = term if total is None else total + term
    return _ret(total, keep)


def perceptual_loss(gen, gt, extractor=None):
    """Mean squared feature difference per layer, summed over layers."""
    extractor = extractor or default_extractor(1 if np.asarray(gen).ndim == 2 else np.asarray(gen).shape[0])
    t_gt, t_gen, keep = _pair(gt, gen)
    total = None
    for f_gen, f_gt in zip(extractor.features(t_gen), extractor.features(t_gt)):
        term = ((f_gen - f_gt) ** 2).mean()
        total = term if total is None else total + term
    return _ret(total, keep)


def total_loss(gen, gt, weights: LossWeights | None = None, extractor=None, alpha: float = 1.0):
    """Weighted combination of MSE, perceptual, focal-frequency and style
    terms.  Returns (total, breakdown) with each term reported unweighted."""
    weights = weights or LossWeights()
    t_gt, t_gen, keep = _pair(gt, gen)
    extractor = extractor or default_extractor(t_gen.shape[0])
    breakdown = {
        "mse": mse_loss(t_gt, t_gen),
        "perceptual": perceptual_loss(t_gen, t_gt, extractor),
        "ffl": focal_frequency_loss(t_gt, t_gen, alpha),
        "style": style_loss(t_gen, t_gt, extractor),
    }
    total = (
        weights.mse * breakdown["mse"]
        + weights.perceptual * breakdown["perceptual"]
        + weights.ffl * breakdown["ffl"]
        + weights.style * breakdown["style"]
    )
    if keep:
        return total, breakdown
    return float(total.detach().item()), {k: float(v.detach().item()) for k, v in breakdown.items()}


_extractor_cache: dict[int, FeatureExtractor] = {}


def default_extractor(in_channels: int) -> FeatureExtractor:
    """Shared seed-pinned extractor per channel count."""
    if in_channels not in _extractor_cache:
        _extractor_cache[in_channels] = FeatureExtractor(in_channels=in_channels)
    return _extractor_cache[in_channels]


# Keep the frozen default weights importable for training configs.
DEFAULT_LOSS_WEIGHTS = LossWeights()
