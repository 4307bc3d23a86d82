"""Fully convolutional band-prediction network.

Seventeen 3x3 convolution layers at 64 channels, batch-normalized and
rectified in the hidden layers, mapping one input plane to five band
planes. No pooling or striding, so the network is translation
equivariant by construction and accepts any spatial size; the receptive
field is 35x35. The sixth band is never predicted: it is reconstructed
downstream as input minus the predicted sum, which makes the full
6-band output reconstruct the input exactly.
"""

from __future__ import annotations

import torch
from torch import nn

__all__ = ["TVSpecNet", "ARCH_SPEC"]

ARCH_SPEC = {
    "depth": 17,
    "channels": 64,
    "kernel": 3,
    "out_bands": 5,
    "batch_norm": True,
    "receptive_field": 35,
}


class TVSpecNet(nn.Module):
    """DnCNN-shaped regressor from an image to its first five bands."""

    def __init__(self, depth: int = 17, channels: int = 64, out_bands: int = 5):
        super().__init__()
        if depth < 3:
            raise ValueError("depth must be at least 3 (first, hidden, last)")
        layers: list[nn.Module] = [
            nn.Conv2d(1, channels, 3, padding=1, bias=True),
            nn.ReLU(inplace=True),
        ]
        for _ in range(depth - 2):
            layers.append(nn.Conv2d(channels, channels, 3, padding=1, bias=False))
            layers.append(nn.BatchNorm2d(channels))
            layers.append(nn.ReLU(inplace=True))
        layers.append(nn.Conv2d(channels, out_bands, 3, padding=1, bias=True))
        self.body = nn.Sequential(*layers)
        self.depth = depth
        self.out_bands = out_bands

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValueError(f"expected (batch, 1, h, w) input, got {tuple(x.shape)}")
        return self.body(x)


def receptive_field(depth: int = 17, kernel: int = 3) -> int:
    return depth * (kernel - 1) + 1
