"""Data-consistency step: blend predicted k-space with the acquired
measurement under weight lambda, return an image-domain iterate.

At sampled locations the blended k-space is
``lambda * F(x) + (1 - lambda) * y``; unsampled locations keep the network
prediction ``F(x)``.  ``lambda = 0`` is hard data consistency (measurements
replace the prediction), ``lambda = 1`` ignores the measurement entirely.

The step is differentiable in both the image iterate and lambda, so
gradients reach the hypernetwork path when lambda is a tensor.
"""

from __future__ import annotations

import numpy as np
import torch

from ..transforms import SamplingMask
from .ops import fft2c_t, ifft2c_t

__all__ = ["mask_tensor", "check_lambda", "dc_step"]


def mask_tensor(
    mask: "SamplingMask | torch.Tensor | np.ndarray",
    device: torch.device | None = None,
) -> torch.Tensor:
    """Boolean column mask as a tensor broadcastable over [..., H, W]."""
    if isinstance(mask, SamplingMask):
        t = torch.from_numpy(mask.columns.astype(bool))
    elif isinstance(mask, np.ndarray):
        t = torch.from_numpy(mask.astype(bool))
    else:
        t = mask.bool()
    if device is not None:
        t = t.to(device)
    return t


def check_lambda(lam: "float | torch.Tensor") -> None:
    value = float(lam.detach() if isinstance(lam, torch.Tensor) else lam)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {value}")


def dc_step(
    x_half: torch.Tensor,
    y: torch.Tensor,
    mask: "SamplingMask | torch.Tensor | np.ndarray",
    lam: "float | torch.Tensor",
) -> torch.Tensor:
    """One DC application: k-space blend followed by the inverse FFT.

    Args:
        x_half: complex image iterate [..., H, W].
        y: zero-filled measured k-space [..., H, W] (complex).
        mask: Cartesian column mask (vector [W] or full grid).
        lam: blend weight in [0, 1]; may be a tensor to keep it in the
            autograd graph.

    Returns:
        Complex image iterate of the same shape as ``x_half``.
    """
    if x_half.shape[-2:] != y.shape[-2:]:
        raise ValueError(
            f"image/k-space shape mismatch: {tuple(x_half.shape[-2:])} vs "
            f"{tuple(y.shape[-2:])}"
        )
    check_lambda(lam)
    m = mask_tensor(mask, device=x_half.device)
    if m.shape[-1] != y.shape[-1]:
        raise ValueError(
            f"mask width {m.shape[-1]} does not match k-space width "
            f"{y.shape[-1]}"
        )
    k_pred = fft2c_t(x_half)
    blended = lam * k_pred + (1.0 - lam) * y
    return ifft2c_t(torch.where(m, blended, k_pred))
