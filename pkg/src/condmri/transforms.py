"""Centered orthonormal Fourier operators, Cartesian undersampling masks,
and k-space noise injection.

The acquisition model throughout the package is

    y = M . F(x) (+ complex Gaussian noise at the acquired positions),

where ``F`` is the centered orthonormal 2D Fourier transform and ``M`` a
binary Cartesian column mask.  All functions here are pure; randomness is
always driven by an explicit seed.

Conventions:
    * k-space is stored on the full grid with unsampled entries equal to
      exactly zero (``KSpaceSlice``).
    * The DC component sits at ``(H // 2, W // 2)``; masks describe which
      *columns* (phase-encode lines) are acquired.
    * ``norm="ortho"`` on both directions, so Parseval holds symmetrically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "fft2c",
    "ifft2c",
    "SamplingMask",
    "make_cartesian_mask",
    "KSpaceSlice",
    "apply_mask",
    "NoiseSpec",
    "add_noise",
    "zero_filled_recon",
]


def _require_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")


def fft2c(img: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2D FFT, image domain -> k-space.

    numpy's ``fft2`` places the DC component in the corner; MRI convention
    puts it at the grid center, hence the ifftshift/fftshift sandwich:

        image -> ifftshift -> fft2(ortho) -> fftshift -> k-space

    Energy preserving: ``sum |fft2c(x)|^2 == sum |x|^2``.
    """
    img = np.asarray(img)
    if img.ndim < 2:
        raise ValueError(f"expected a 2D grid, got ndim={img.ndim}")
    _require_finite(img, "image")
    axes = (-2, -1)
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(img, axes=axes), axes=axes, norm="ortho"),
        axes=axes,
    )


def ifft2c(ksp: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2D inverse FFT, exact inverse of :func:`fft2c`."""
    ksp = np.asarray(ksp)
    if ksp.ndim < 2:
        raise ValueError(f"expected a 2D grid, got ndim={ksp.ndim}")
    _require_finite(ksp, "k-space")
    axes = (-2, -1)
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(ksp, axes=axes), axes=axes, norm="ortho"),
        axes=axes,
    )


@dataclass(frozen=True, eq=False)
class SamplingMask:
    """Binary Cartesian column mask, broadcast over rows.

    ``columns[j] == 1`` means phase-encode line ``j`` is acquired.  The
    complement ``1 - M`` selects the unsampled lines.
    """

    columns: np.ndarray  # uint8 vector [W]
    accel: float
    center_frac: float
    seed: int | None = None

    def __post_init__(self) -> None:
        cols = np.asarray(self.columns, dtype=np.uint8)
        if cols.ndim != 1:
            raise ValueError("mask columns must be a 1D vector")
        if not np.all((cols == 0) | (cols == 1)):
            raise ValueError("mask columns must be binary")
        object.__setattr__(self, "columns", cols)

    @property
    def width(self) -> int:
        return int(self.columns.shape[0])

    @property
    def num_sampled(self) -> int:
        return int(self.columns.sum())

    @property
    def complement(self) -> np.ndarray:
        """The unsampled-line indicator ``1 - M``."""
        return (1 - self.columns).astype(np.uint8)

    def as_grid(self, num_rows: int) -> np.ndarray:
        """Full [H, W] float mask (column vector broadcast over rows)."""
        return np.broadcast_to(
            self.columns.astype(np.float64)[None, :], (num_rows, self.width)
        ).copy()

    def sampled_columns(self) -> np.ndarray:
        return np.flatnonzero(self.columns)

    def to_json(self) -> str:
        """One-line JSON record of the mask."""
        return json.dumps(
            {
                "width": self.width,
                "accel": self.accel,
                "center_frac": self.center_frac,
                "seed": self.seed,
                "columns": [int(j) for j in self.sampled_columns()],
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "SamplingMask":
        rec = json.loads(line)
        cols = np.zeros(rec["width"], dtype=np.uint8)
        cols[rec["columns"]] = 1
        return cls(
            columns=cols,
            accel=rec["accel"],
            center_frac=rec["center_frac"],
            seed=rec["seed"],
        )


def center_block(width: int, center_frac: float) -> tuple[int, int]:
    """[start, stop) of the always-sampled center column block."""
    num_center = int(np.floor(center_frac * width))
    start = (width - num_center + 1) // 2
    return start, start + num_center


def make_cartesian_mask(
    num_rows: int,
    num_cols: int,
    accel: float,
    center_frac: float,
    seed: int,
) -> SamplingMask:
    """Random Cartesian column mask with a fully sampled center block.

    Exactly ``round(W / accel)`` columns are sampled: the
    ``floor(center_frac * W)`` centermost columns always, the rest drawn
    uniformly without replacement from the periphery.  Deterministic given
    ``seed``.
    """
    if num_rows <= 0 or num_cols <= 0:
        raise ValueError("grid dimensions must be positive")
    if not 0 < center_frac < 1:
        raise ValueError(f"center_frac must lie in (0, 1), got {center_frac}")
    if accel < 1:
        raise ValueError(f"acceleration must be >= 1, got {accel}")

    num_total = int(round(num_cols / accel))
    start, stop = center_block(num_cols, center_frac)
    num_center = stop - start
    if num_total < num_center:
        raise ValueError(
            f"infeasible mask: center block of {num_center} columns exceeds "
            f"the sampling budget of {num_total} (W={num_cols}, accel={accel})"
        )

    columns = np.zeros(num_cols, dtype=np.uint8)
    columns[start:stop] = 1
    periphery = np.setdiff1d(np.arange(num_cols), np.arange(start, stop))
    rng = np.random.default_rng(seed)
    extra = rng.choice(periphery, size=num_total - num_center, replace=False)
    columns[extra] = 1
    return SamplingMask(
        columns=columns, accel=accel, center_frac=center_frac, seed=seed
    )


@dataclass(frozen=True, eq=False)
class KSpaceSlice:
    """Zero-filled k-space measurement plus the mask that produced it."""

    data: np.ndarray  # complex [H, W], zero at unsampled positions
    mask: SamplingMask

    def __post_init__(self) -> None:
        if self.data.ndim != 2:
            raise ValueError("k-space data must be 2D")
        if self.data.shape[-1] != self.mask.width:
            raise ValueError(
                f"k-space width {self.data.shape[-1]} does not match mask "
                f"width {self.mask.width}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


def apply_mask(ksp: np.ndarray, mask: SamplingMask) -> KSpaceSlice:
    """Zero out unsampled columns: ``y = M . k``."""
    ksp = np.asarray(ksp)
    if ksp.ndim != 2:
        raise ValueError("k-space data must be 2D")
    if ksp.shape[-1] != mask.width:
        raise ValueError(
            f"k-space width {ksp.shape[-1]} does not match mask width "
            f"{mask.width}"
        )
    data = ksp * mask.columns[None, :]
    return KSpaceSlice(data=data, mask=mask)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive complex Gaussian noise: N(0, sigma^2) per real/imag part."""

    sigma: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")


def add_noise(ksp: KSpaceSlice, spec: NoiseSpec) -> KSpaceSlice:
    """Corrupt the acquired k-space lines with complex Gaussian noise.

    Noise is drawn i.i.d. over the full grid and the mask re-applied, which
    is equivalent to corrupting only the acquired positions.  Bit-identical
    output for identical ``NoiseSpec``.
    """
    if spec.sigma == 0:
        return KSpaceSlice(data=ksp.data.copy(), mask=ksp.mask)
    rng = np.random.default_rng(spec.seed)
    shape = ksp.data.shape
    noise = rng.normal(0.0, spec.sigma, shape) + 1j * rng.normal(
        0.0, spec.sigma, shape
    )
    data = (ksp.data + noise) * ksp.mask.columns[None, :]
    return KSpaceSlice(data=data, mask=ksp.mask)


def zero_filled_recon(ksp: KSpaceSlice) -> np.ndarray:
    """Naive baseline: inverse FFT of the zero-filled k-space."""
    return ifft2c(ksp.data)
