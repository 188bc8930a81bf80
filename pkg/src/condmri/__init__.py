"""condmri: noise-robust unrolled MRI reconstruction with a
lambda-conditioned hypernetwork.

The package covers the full loop: k-space simulation (FFT, Cartesian masks,
noise), the unrolled data-consistency reconstruction models with AdaIN
lambda conditioning, lambda-sampling schedules for training, the training
loop itself, a PSNR/SSIM robustness grid, and a small HTTP service for
interactive lambda tuning.
"""

from . import data, evaluate, losses, metrics, models, scheduler, training, transforms
from .transforms import (
    KSpaceSlice,
    NoiseSpec,
    SamplingMask,
    add_noise,
    apply_mask,
    fft2c,
    ifft2c,
    make_cartesian_mask,
    zero_filled_recon,
)

__version__ = "0.1.0"

__all__ = [
    "KSpaceSlice",
    "NoiseSpec",
    "SamplingMask",
    "add_noise",
    "apply_mask",
    "data",
    "evaluate",
    "fft2c",
    "ifft2c",
    "losses",
    "make_cartesian_mask",
    "metrics",
    "models",
    "scheduler",
    "training",
    "transforms",
    "zero_filled_recon",
]
