"""Neural building blocks: gated convolution, cross-attention, the patch
discriminator, and deterministic parameter plumbing shared by the toy models."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn


def gated_conv(
    x: torch.Tensor,
    feature_weights: torch.Tensor,
    gate_weights: torch.Tensor,
    feature_bias: torch.Tensor | None = None,
    gate_bias: torch.Tensor | None = None,
    stride: int = 1,
    padding: int | str = "same",
    activation=F.elu,
) -> torch.Tensor:
    """Convolution modulated per location and channel by a learned gate:
    ``activation(conv_f(x)) * sigmoid(conv_g(x))``."""
    if feature_weights.shape[1] != x.shape[-3]:
        raise ValueError(
            f"feature weights expect {feature_weights.shape[1]} channels, got {x.shape[-3]}"
        )
    if gate_weights.shape != feature_weights.shape:
        raise ValueError("gate weights must match feature weight shape")
    if padding == "same":
        padding = feature_weights.shape[-1] // 2
    squeeze = x.dim() == 3
    if squeeze:
        x = x.unsqueeze(0)
    feat = F.conv2d(x, feature_weights, feature_bias, stride=stride, padding=padding)
    gate = F.conv2d(x, gate_weights, gate_bias, stride=stride, padding=padding)
    out = activation(feat) * torch.sigmoid(gate)
    return out.squeeze(0) if squeeze else out


class GatedConv2d(nn.Module):
    """Module wrapper around :func:`gated_conv` with owned weights."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int = 3, stride: int = 1, activation=F.elu):
        super().__init__()
        self.conv_f = nn.Conv2d(in_channels, out_channels, kernel, stride=stride, padding=kernel // 2)
        self.conv_g = nn.Conv2d(in_channels, out_channels, kernel, stride=stride, padding=kernel // 2)
        self.activation = activation

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.activation(self.conv_f(x)) * torch.sigmoid(self.conv_g(x))


def cross_attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    """Scaled dot-product attention: ``softmax(Q K^T / sqrt(d_k)) V``.

    ``q`` is (n_q, d_k), ``k`` is (n_k, d_k), ``v`` is (n_k, d_v); the result
    is (n_q, d_v) with row-stochastic attention weights.
    """
    if q.dim() != 2 or k.dim() != 2 or v.dim() != 2:
        raise ValueError("q, k, v must be 2-D (tokens, features)")
    if q.shape[1] != k.shape[1]:
        raise ValueError(f"query dim {q.shape[1]} != key dim {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"key count {k.shape[0]} != value count {v.shape[0]}")
    d_k = q.shape[1]
    logits = q @ k.T / np.sqrt(d_k)
    weights = torch.softmax(logits, dim=1)
    return weights @ v


class PatchDiscriminator(nn.Module):
    """Stack of stride-2 convolutions scoring realism per receptive-field
    patch; input is the 8-channel tile stack concatenated with the brush."""

    def __init__(self, in_channels: int = 9, widths: tuple[int, ...] = (16, 32, 64)):
        super().__init__()
        layers = []
        prev = in_channels
        for width in widths:
            layers.append(nn.Conv2d(prev, width, 3, stride=2, padding=1))
            prev = width
        self.convs = nn.ModuleList(layers)
        self.head = nn.Conv2d(prev, 1, 1)
        self.downsamples = len(widths)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.2)
        x = self.head(x)
        return x.squeeze(0) if squeeze else x


def init_parameters(module: nn.Module, seed: int) -> None:
    """Fill parameters deterministically from a numpy RNG, by sorted name;
    weights get fan-in-scaled normals, biases zero."""
    rng = np.random.default_rng(seed)
    for name, param in sorted(module.named_parameters(), key=lambda item: item[0]):
        if param.dim() <= 1:
            values = np.zeros(param.shape, dtype=np.float64)
        else:
            fan_in = int(np.prod(param.shape[1:]))
            values = rng.standard_normal(tuple(param.shape)) / np.sqrt(fan_in)
        with torch.no_grad():
            param.copy_(torch.from_numpy(values).to(param.dtype))


def parameter_slices(module: nn.Module) -> list[tuple[str, tuple[int, ...], int]]:
    """(name, shape, offset) table over the flattened parameter vector."""
    table = []
    offset = 0
    for name, param in sorted(module.named_parameters(), key=lambda item: item[0]):
        shape = tuple(param.shape)
        table.append((name, shape, offset))
        offset += param.numel()
    return table


def parameter_vector(module: nn.Module) -> np.ndarray:
    parts = [
        param.detach().reshape(-1).numpy().astype(np.float32)
        for _, param in sorted(module.named_parameters(), key=lambda item: item[0])
    ]
    if not parts:
        return np.zeros(0, dtype=np.float32)
    return np.concatenate(parts)


def load_parameter_vector(module: nn.Module, vector: np.ndarray) -> None:
    vector = np.asarray(vector, dtype=np.float32)
    expected = sum(p.numel() for _, p in module.named_parameters())
    if vector.size != expected:
        raise ValueError(f"parameter vector length {vector.size} != expected {expected}")
    offset = 0
    for _, param in sorted(module.named_parameters(), key=lambda item: item[0]):
        count = param.numel()
        chunk = vector[offset : offset + count].reshape(tuple(param.shape))
        with torch.no_grad():
            param.copy_(torch.from_numpy(chunk.copy()).to(param.dtype))
        offset += count
