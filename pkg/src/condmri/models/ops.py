"""Torch mirrors of the centered orthonormal FFT pair, plus the
complex <-> two-channel-real bijection used at the network boundary.

These live in the differentiable graph; the numpy versions in
:mod:`condmri.transforms` are the reference implementations and the two are
cross-checked in the test suite.
"""

from __future__ import annotations

import torch

__all__ = ["fft2c_t", "ifft2c_t", "complex_to_channels", "channels_to_complex"]

_AXES = (-2, -1)


def fft2c_t(img: torch.Tensor) -> torch.Tensor:
    """Centered orthonormal 2D FFT over the trailing two dims."""
    return torch.fft.fftshift(
        torch.fft.fft2(torch.fft.ifftshift(img, dim=_AXES), dim=_AXES, norm="ortho"),
        dim=_AXES,
    )


def ifft2c_t(ksp: torch.Tensor) -> torch.Tensor:
    """Centered orthonormal 2D inverse FFT over the trailing two dims."""
    return torch.fft.fftshift(
        torch.fft.ifft2(torch.fft.ifftshift(ksp, dim=_AXES), dim=_AXES, norm="ortho"),
        dim=_AXES,
    )


def complex_to_channels(x: torch.Tensor) -> torch.Tensor:
    """Complex [..., H, W] -> real [..., 2, H, W] (channel 0 = Re, 1 = Im)."""
    if not x.is_complex():
        raise ValueError("expected a complex tensor")
    return torch.stack((x.real, x.imag), dim=-3)


def channels_to_complex(x: torch.Tensor) -> torch.Tensor:
    """Real [..., 2, H, W] -> complex [..., H, W]; inverse of
    :func:`complex_to_channels`."""
    if x.shape[-3] != 2:
        raise ValueError(f"expected 2 channels, got {x.shape[-3]}")
    return torch.complex(x[..., 0, :, :], x[..., 1, :, :])
