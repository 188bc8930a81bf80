"""Reconstruction backbones: a U-Net and a lighter down-up CNN
("didn_lite") with local residual blocks and a global residual.

Both map a 2-channel real image to a 2-channel real image of the same
spatial size, padding internally so any input survives the pooling depth.
When ``conditioned`` they expose a single AdaIN site at the bottleneck;
the (gamma, beta) pair is supplied by the caller per forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .conditioning import ConditioningParams, adain

__all__ = ["BackboneConfig", "UNet", "DIDNLite", "build_backbone", "count_params"]


@dataclass
class BackboneConfig:
    kind: str = "unet"  # "unet" | "didn_lite"
    init_channels: int = 32
    num_pools: int = 4
    conditioned: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("unet", "didn_lite"):
            raise ValueError(f"unknown backbone kind {self.kind!r}")
        if self.init_channels < 1 or self.num_pools < 1:
            raise ValueError("init_channels and num_pools must be positive")


class ConvBlock(nn.Module):
    """Two 3x3 conv + instance-norm + LeakyReLU stages."""

    def __init__(self, in_chans: int, out_chans: int):
        super().__init__()
        self.layers = nn.Sequential(
            nn.Conv2d(in_chans, out_chans, 3, padding=1, bias=False),
            nn.InstanceNorm2d(out_chans),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(out_chans, out_chans, 3, padding=1, bias=False),
            nn.InstanceNorm2d(out_chans),
            nn.LeakyReLU(0.2, inplace=True),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


class TransposeConvBlock(nn.Module):
    def __init__(self, in_chans: int, out_chans: int):
        super().__init__()
        self.layers = nn.Sequential(
            nn.ConvTranspose2d(in_chans, out_chans, 2, stride=2, bias=False),
            nn.InstanceNorm2d(out_chans),
            nn.LeakyReLU(0.2, inplace=True),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


def _pad_to_multiple(x: torch.Tensor, multiple: int):
    h, w = x.shape[-2:]
    pad_h = (-h) % multiple
    pad_w = (-w) % multiple
    if pad_h or pad_w:
        x = F.pad(x, (0, pad_w, 0, pad_h), mode="reflect")
    return x, (h, w)


def _check_spatial(x: torch.Tensor, num_pools: int) -> None:
    if x.ndim != 4 or x.shape[1] != 2:
        raise ValueError(f"expected [B, 2, H, W] input, got {tuple(x.shape)}")
    if min(x.shape[-2:]) < 2**num_pools:
        raise ValueError(
            f"spatial size {tuple(x.shape[-2:])} is too small for "
            f"{num_pools} pooling levels"
        )


class UNet(nn.Module):
    """U-Net with ``num_pools`` pooling levels and channels doubling per
    level; the full-scale setting is init_channels=32, num_pools=4."""

    def __init__(self, config: BackboneConfig):
        super().__init__()
        if config.kind != "unet":
            raise ValueError("config.kind must be 'unet'")
        self.config = config
        ch = config.init_channels

        self.down_layers = nn.ModuleList([ConvBlock(2, ch)])
        for _ in range(config.num_pools - 1):
            self.down_layers.append(ConvBlock(ch, ch * 2))
            ch *= 2
        self.bottleneck = ConvBlock(ch, ch * 2)
        self.cond_channels = ch * 2

        self.up_transpose = nn.ModuleList()
        self.up_layers = nn.ModuleList()
        for _ in range(config.num_pools - 1):
            self.up_transpose.append(TransposeConvBlock(ch * 2, ch))
            self.up_layers.append(ConvBlock(ch * 2, ch))
            ch //= 2
        self.up_transpose.append(TransposeConvBlock(ch * 2, ch))
        self.up_layers.append(
            nn.Sequential(ConvBlock(ch * 2, ch), nn.Conv2d(ch, 2, 1))
        )

    def forward(
        self, x: torch.Tensor, cond: ConditioningParams | None = None
    ) -> torch.Tensor:
        _check_spatial(x, self.config.num_pools)
        if cond is not None and not self.config.conditioned:
            raise ValueError("backbone was built without a conditioning site")
        out, orig = _pad_to_multiple(x, 2**self.config.num_pools)

        skips = []
        for layer in self.down_layers:
            out = layer(out)
            skips.append(out)
            out = F.avg_pool2d(out, 2)

        out = self.bottleneck(out)
        if cond is not None:
            out = adain(out, cond)

        for up, conv in zip(self.up_transpose, self.up_layers):
            out = up(out)
            out = conv(torch.cat((out, skips.pop()), dim=1))
        return out[..., : orig[0], : orig[1]]


class ResidualUnit(nn.Module):
    """conv-norm-relu-conv-norm with a local skip connection."""

    def __init__(self, chans: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(chans, chans, 3, padding=1, bias=False),
            nn.InstanceNorm2d(chans),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(chans, chans, 3, padding=1, bias=False),
            nn.InstanceNorm2d(chans),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.body(x)


class DIDNLite(nn.Module):
    """Down-up CNN: strided-conv downscaling, residual units at the
    bottom, transpose-conv upscaling.  Stands in for the heavier iterative
    down-up architecture.

    The block predicts a correction; the global residual around it comes
    from the unrolled update ``x - f(x)`` (an internal skip on top of that
    collapses the iterate at initialization and stalls training)."""

    def __init__(self, config: BackboneConfig, num_residual_units: int = 2):
        super().__init__()
        if config.kind != "didn_lite":
            raise ValueError("config.kind must be 'didn_lite'")
        self.config = config
        ch = config.init_channels
        self.head = nn.Conv2d(2, ch, 3, padding=1)

        downs = []
        for _ in range(config.num_pools):
            downs.append(
                nn.Sequential(
                    nn.Conv2d(ch, ch * 2, 3, stride=2, padding=1, bias=False),
                    nn.InstanceNorm2d(ch * 2),
                    nn.LeakyReLU(0.2, inplace=True),
                )
            )
            ch *= 2
        self.downs = nn.ModuleList(downs)
        self.body = nn.Sequential(
            *(ResidualUnit(ch) for _ in range(num_residual_units))
        )
        self.cond_channels = ch

        ups = []
        for _ in range(config.num_pools):
            ups.append(TransposeConvBlock(ch, ch // 2))
            ch //= 2
        self.ups = nn.ModuleList(ups)
        self.tail = nn.Conv2d(ch, 2, 3, padding=1)

    def forward(
        self, x: torch.Tensor, cond: ConditioningParams | None = None
    ) -> torch.Tensor:
        _check_spatial(x, self.config.num_pools)
        if cond is not None and not self.config.conditioned:
            raise ValueError("backbone was built without a conditioning site")
        out, orig = _pad_to_multiple(x, 2**self.config.num_pools)
        out = self.head(out)
        for down in self.downs:
            out = down(out)
        out = self.body(out)
        if cond is not None:
            out = adain(out, cond)
        for up in self.ups:
            out = up(out)
        out = self.tail(out)
        return out[..., : orig[0], : orig[1]]


def build_backbone(config: BackboneConfig) -> nn.Module:
    if config.kind == "unet":
        return UNet(config)
    return DIDNLite(config)


def count_params(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
