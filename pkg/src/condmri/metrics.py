"""PSNR and SSIM on magnitude images.

SSIM follows the standard windowed definition: an 11x11 Gaussian window
(sigma 1.5), k1 = 0.01, k2 = 0.03, population statistics, averaged over all
fully-valid window positions.  The same Gaussian taps are reused by the
differentiable torch version in :mod:`condmri.losses` so the training loss
and the evaluation metric agree.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

__all__ = ["magnitude", "psnr", "ssim", "gaussian_window", "PSNR_CAP_DB"]

PSNR_CAP_DB = 100.0  # identical images report inf; aggregates cap at this

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def magnitude(x: np.ndarray) -> np.ndarray:
    """Magnitude image as float64 (real input passes through as-is)."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.abs(x).astype(np.float64)
    return x.astype(np.float64)


def psnr(x: np.ndarray, ref: np.ndarray, data_range: float | None = None) -> float:
    """Peak signal-to-noise ratio in dB between magnitude images.

    ``data_range`` defaults to the peak of the reference magnitude.
    Identical inputs return ``inf``; aggregate statistics cap that at
    :data:`PSNR_CAP_DB`.
    """
    mx, mref = magnitude(x), magnitude(ref)
    if mx.shape != mref.shape:
        raise ValueError(f"shape mismatch: {mx.shape} vs {mref.shape}")
    if data_range is None:
        data_range = float(mref.max())
    if data_range <= 0:
        raise ValueError(f"data_range must be positive, got {data_range}")
    mse = float(np.mean((mx - mref) ** 2))
    if mse == 0.0:
        return float("inf")
    return 20.0 * np.log10(data_range) - 10.0 * np.log10(mse)


def cap_psnr(value: float, cap: float = PSNR_CAP_DB) -> float:
    return min(value, cap)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 2D Gaussian taps used for local SSIM statistics."""
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma**2))
    g /= g.sum()
    return np.outer(g, g)


def ssim(
    x: np.ndarray,
    ref: np.ndarray,
    data_range: float | None = None,
    window: int = SSIM_WINDOW,
    sigma: float = SSIM_SIGMA,
    k1: float = SSIM_K1,
    k2: float = SSIM_K2,
) -> float:
    """Mean local SSIM between magnitude images (symmetric in x and ref)."""
    mx, mref = magnitude(x), magnitude(ref)
    if mx.shape != mref.shape:
        raise ValueError(f"shape mismatch: {mx.shape} vs {mref.shape}")
    if min(mx.shape) < window:
        raise ValueError(
            f"image {mx.shape} is smaller than the {window}x{window} SSIM window"
        )
    if data_range is None:
        data_range = float(max(mx.max(), mref.max()))
    if data_range <= 0:
        raise ValueError(f"data_range must be positive, got {data_range}")

    w = gaussian_window(window, sigma)
    mu_x = convolve2d(mx, w, mode="valid")
    mu_y = convolve2d(mref, w, mode="valid")
    xx = convolve2d(mx * mx, w, mode="valid")
    yy = convolve2d(mref * mref, w, mode="valid")
    xy = convolve2d(mx * mref, w, mode="valid")
    var_x = xx - mu_x**2
    var_y = yy - mu_y**2
    cov = xy - mu_x * mu_y

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))
