"""Differentiable reconstruction loss: l1 + SSIM on magnitude images.

The torch SSIM here uses the exact Gaussian taps of
:func:`condmri.metrics.gaussian_window` and the same valid-window
statistics, so ``1 - ssim`` in the loss matches the evaluation metric.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

from . import metrics

__all__ = ["magnitude_t", "ssim_t", "recon_loss"]


def magnitude_t(x: torch.Tensor) -> torch.Tensor:
    """Magnitude of a complex tensor with a backward-safe zero (real
    tensors pass through unchanged)."""
    if x.is_complex():
        return torch.sqrt(x.real**2 + x.imag**2 + 1e-24)
    return x


def _window_tensor(dtype: torch.dtype, device) -> torch.Tensor:
    w = metrics.gaussian_window()
    return torch.from_numpy(w).to(dtype=dtype, device=device).reshape(1, 1, *w.shape)


def ssim_t(
    x: torch.Tensor,
    ref: torch.Tensor,
    data_range: "float | torch.Tensor",
) -> torch.Tensor:
    """Differentiable mean local SSIM between real-valued [H,W] or
    [B,H,W] magnitude images."""
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(ref.shape)}")
    if x.ndim == 2:
        x, ref = x.unsqueeze(0), ref.unsqueeze(0)
    x, ref = x.unsqueeze(1), ref.unsqueeze(1)  # [B,1,H,W]
    if min(x.shape[-2:]) < metrics.SSIM_WINDOW:
        raise ValueError("image smaller than the SSIM window")
    w = _window_tensor(x.dtype, x.device)

    mu_x = F.conv2d(x, w)
    mu_y = F.conv2d(ref, w)
    var_x = F.conv2d(x * x, w) - mu_x**2
    var_y = F.conv2d(ref * ref, w) - mu_y**2
    cov = F.conv2d(x * ref, w) - mu_x * mu_y

    c1 = (metrics.SSIM_K1 * data_range) ** 2
    c2 = (metrics.SSIM_K2 * data_range) ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return (num / den).mean()


def recon_loss(
    x_hat: torch.Tensor,
    x_gt: torch.Tensor,
    weights: tuple[float, float] = (1.0, 1.0),
) -> torch.Tensor:
    """``w_l1 * mean|m_hat - m_gt| + w_ssim * (1 - SSIM(m_hat, m_gt))`` on
    magnitude images; zero iff the magnitudes agree everywhere."""
    if x_hat.shape != x_gt.shape:
        raise ValueError(f"shape mismatch: {tuple(x_hat.shape)} vs {tuple(x_gt.shape)}")
    w_l1, w_ssim = weights
    m_hat = magnitude_t(x_hat)
    m_gt = magnitude_t(x_gt)
    loss = w_l1 * (m_hat - m_gt).abs().mean()
    if w_ssim != 0.0:
        data_range = float(m_gt.detach().max())
        if data_range <= 0:
            data_range = 1.0  # both images blank; SSIM term is then exact 1
        loss = loss + w_ssim * (1.0 - ssim_t(m_hat, m_gt, data_range))
    return loss
