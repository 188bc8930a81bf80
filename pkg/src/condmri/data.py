"""Synthetic phantom generation, FastMRI-layout ingestion, preprocessing,
and the on-disk dataset container.

A dataset on disk is a JSON manifest plus one binary blob file of
length-prefixed records.  Record byte layout (little endian):

    offset  size        field
    0       4           magic b"CMRD"
    4       1           version (currently 1)
    5       4           H  (uint32)
    9       4           W  (uintint32)
    13      8*H*W       fully sampled k-space, complex64, row major
    13+8HW  ceil(W/8)   mask column bitmap, bit (j % 8) of byte (j // 8)

The k-space blob is the source of truth; the groundtruth image is always
rederived as ``ifft2c(kspace_full)`` so the image/k-space consistency
invariant holds by construction.

Synthetic phantoms are piecewise-smooth random ellipse scenes with a smooth
phase, intensity in [0, 1].  ``make_dataset`` scales them down to raw-scan
magnitudes (``signal_scale``) so the standard noise levels sigma = 1e-5 ..
1e-4 span high to low SNR exactly as they do on raw scanner data.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .seeding import stable_seed
from .transforms import SamplingMask, fft2c, ifft2c, make_cartesian_mask

__all__ = [
    "DataError",
    "DatasetRecord",
    "generate_phantom",
    "standardize_image",
    "preprocess_volume",
    "load_fastmri_volume",
    "make_dataset",
    "Dataset",
    "DEFAULT_SIGNAL_SCALE",
]

MAGIC = b"CMRD"
CONTAINER_VERSION = 1
TARGET_SIZE = 320
EDGE_SLICES = 5  # slices dropped from each end of a volume
DEFAULT_SIGNAL_SCALE = 2.5e-4


class DataError(RuntimeError):
    """Malformed dataset input or container."""


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    """One slice: fully sampled k-space, its mask, and bookkeeping."""

    id: str
    kspace_full: np.ndarray  # complex64 [H, W]
    mask: SamplingMask
    split: str = "train"
    provenance: str = "synthetic"

    @property
    def shape(self) -> tuple[int, int]:
        return self.kspace_full.shape  # type: ignore[return-value]

    @property
    def image_gt(self) -> np.ndarray:
        """Groundtruth image, rederived from the stored k-space."""
        return ifft2c(self.kspace_full.astype(np.complex128))


def generate_phantom(size: int, seed: int) -> np.ndarray:
    """Random piecewise-smooth complex phantom, intensity in [0, 1].

    A handful of random ellipses on a soft background, lightly blurred,
    with a smooth low-order polynomial phase.  Deterministic given seed.
    """
    if size < 16:
        raise ValueError(f"phantom size must be >= 16, got {size}")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[-1 : 1 : size * 1j, -1 : 1 : size * 1j]

    mag = np.zeros((size, size))
    # enclosing "anatomy" ellipse plus internal structures
    n_inner = int(rng.integers(4, 9))
    ellipses = [(0.0, 0.0, 0.9, rng.uniform(0.6, 0.85), rng.uniform(0, np.pi), 1.0)]
    for _ in range(n_inner):
        ellipses.append(
            (
                rng.uniform(-0.45, 0.45),
                rng.uniform(-0.45, 0.45),
                rng.uniform(0.08, 0.45),
                rng.uniform(0.08, 0.45),
                rng.uniform(0, np.pi),
                rng.uniform(-0.6, 0.8),
            )
        )
    for cx, cy, a, b, angle, value in ellipses:
        c, s = np.cos(angle), np.sin(angle)
        xr = c * (xx - cx) + s * (yy - cy)
        yr = -s * (xx - cx) + c * (yy - cy)
        mag[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value

    mag = ndimage.gaussian_filter(mag, sigma=size / 128.0)
    mag = np.clip(mag, 0.0, None)
    peak = mag.max()
    if peak > 0:
        mag = mag / peak  # intensity in [0, 1]

    coeffs = rng.uniform(-np.pi / 4, np.pi / 4, size=6)
    phase = (
        coeffs[0]
        + coeffs[1] * xx
        + coeffs[2] * yy
        + coeffs[3] * xx * yy
        + coeffs[4] * xx**2
        + coeffs[5] * yy**2
    )
    return (mag * np.exp(1j * phase)).astype(np.complex128)


def _bilinear_resize(arr: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    th, tw = out_shape
    h, w = arr.shape
    rows = (np.arange(th) + 0.5) * h / th - 0.5
    cols = (np.arange(tw) + 0.5) * w / tw - 0.5
    grid = np.meshgrid(rows, cols, indexing="ij")
    return ndimage.map_coordinates(arr, grid, order=1, mode="nearest")


def standardize_image(img: np.ndarray, target: int = TARGET_SIZE) -> np.ndarray:
    """Center-crop to square aspect, then bilinear-rescale magnitude and
    phase to ``target x target``.  A no-op for already conforming images,
    hence idempotent."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise DataError(f"expected a 2D slice, got shape {img.shape}")
    h, w = img.shape
    if (h, w) == (target, target):
        return img
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    cropped = img[top : top + side, left : left + side]
    mag = _bilinear_resize(np.abs(cropped), (target, target))
    phase = _bilinear_resize(np.angle(cropped), (target, target))
    return mag * np.exp(1j * phase)


def preprocess_volume(
    slices: "list[np.ndarray] | np.ndarray", target: int = TARGET_SIZE
) -> list[np.ndarray]:
    """Drop the first and last five slices (no content), then standardize
    the survivors' geometry.  Fewer than 11 slices yields an empty list."""
    slices = list(slices)
    if len(slices) == 0:
        raise DataError("empty volume")
    if len(slices) <= 2 * EDGE_SLICES:
        return []
    kept = slices[EDGE_SLICES : len(slices) - EDGE_SLICES]
    return [standardize_image(s, target) for s in kept]


def load_fastmri_volume(
    path,
    accel: float = 4.0,
    center_frac: float = 0.08,
    seed: int = 0,
    target: int = TARGET_SIZE,
    split: str = "train",
) -> list[DatasetRecord]:
    """Read one singlecoil HDF5 volume (``kspace`` dataset, [S, H, W]
    complex) into preprocessed records, one per retained slice."""
    import h5py

    path = Path(path)
    if not path.exists():
        raise DataError(f"no such volume: {path}")
    with h5py.File(path, "r") as f:
        if "kspace" not in f:
            raise DataError(f"{path}: missing 'kspace' dataset")
        ksp = f["kspace"][()]
    if ksp.ndim != 3:
        raise DataError(f"{path}: expected rank-3 kspace [slices, H, W], got rank {ksp.ndim}")
    if not np.iscomplexobj(ksp):
        raise DataError(f"{path}: kspace dtype {ksp.dtype} is not complex")

    images = [ifft2c(k.astype(np.complex128)) for k in ksp]
    processed = preprocess_volume(images, target)
    records = []
    stem = path.stem
    for i, img in enumerate(processed):
        slice_id = f"{stem}_s{i + EDGE_SLICES:03d}"
        mask = make_cartesian_mask(
            target, target, accel, center_frac, seed=stable_seed(seed, slice_id)
        )
        records.append(
            DatasetRecord(
                id=slice_id,
                kspace_full=fft2c(img).astype(np.complex64),
                mask=mask,
                split=split,
                provenance="fastmri",
            )
        )
    return records


def _mask_bitmap(mask: SamplingMask) -> bytes:
    bits = np.packbits(mask.columns.astype(bool), bitorder="little")
    return bits.tobytes()


def _bitmap_to_columns(raw: bytes, width: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    return bits[:width].astype(np.uint8)


def _encode_record(rec: DatasetRecord) -> bytes:
    h, w = rec.kspace_full.shape
    ksp = np.ascontiguousarray(rec.kspace_full.astype("<c8"))
    return b"".join(
        (
            MAGIC,
            struct.pack("<B", CONTAINER_VERSION),
            struct.pack("<II", h, w),
            ksp.tobytes(),
            _mask_bitmap(rec.mask),
        )
    )


def _decode_record(buf: bytes, meta: dict) -> DatasetRecord:
    if buf[:4] != MAGIC:
        raise DataError("bad record magic; container is corrupt")
    version = buf[4]
    if version != CONTAINER_VERSION:
        raise DataError(f"unsupported container version {version}")
    h, w = struct.unpack_from("<II", buf, 5)
    start = 13
    n = h * w * 8
    ksp = np.frombuffer(buf[start : start + n], dtype="<c8").reshape(h, w)
    columns = _bitmap_to_columns(buf[start + n : start + n + (w + 7) // 8], w)
    mask_meta = meta["mask"]
    mask = SamplingMask(
        columns=columns,
        accel=mask_meta["accel"],
        center_frac=mask_meta["center_frac"],
        seed=mask_meta["seed"],
    )
    return DatasetRecord(
        id=meta["id"],
        kspace_full=ksp.copy(),
        mask=mask,
        split=meta["split"],
        provenance=meta.get("provenance", "synthetic"),
    )


def _split_names(n_fracs: int) -> list[str]:
    if n_fracs == 1:
        return ["train"]
    if n_fracs == 2:
        return ["train", "val"]
    if n_fracs == 3:
        return ["train", "val", "test"]
    raise ValueError("at most three split fractions are supported")


class Dataset:
    """Read-only view over a persisted dataset (manifest + blob file)."""

    def __init__(self, manifest_path):
        self.manifest_path = Path(manifest_path)
        if not self.manifest_path.exists():
            raise DataError(f"no such manifest: {manifest_path}")
        with open(self.manifest_path) as f:
            self.manifest = json.load(f)
        if self.manifest.get("format") != "condmri-dataset":
            raise DataError(f"{manifest_path} is not a condmri dataset manifest")
        self.blob_path = self.manifest_path.parent / self.manifest["blob"]
        if not self.blob_path.exists():
            raise DataError(f"missing blob file: {self.blob_path}")
        self._index = {rec["id"]: rec for rec in self.manifest["records"]}

    @property
    def meta(self) -> dict:
        return self.manifest.get("meta", {})

    def ids(self, split: str | None = None) -> list[str]:
        return [
            rec["id"]
            for rec in self.manifest["records"]
            if split is None or rec["split"] == split
        ]

    def __len__(self) -> int:
        return len(self.manifest["records"])

    def get(self, record_id: str) -> DatasetRecord:
        if record_id not in self._index:
            raise DataError(f"unknown record id {record_id!r}")
        meta = self._index[record_id]
        with open(self.blob_path, "rb") as f:
            f.seek(meta["offset"])
            buf = f.read(meta["length"])
        return _decode_record(buf, meta)

    def records(self, split: str | None = None) -> list[DatasetRecord]:
        return [self.get(i) for i in self.ids(split)]


def write_dataset(records: list[DatasetRecord], out_dir, meta: dict | None = None) -> Path:
    """Persist records to ``out_dir`` (manifest.json + records.bin);
    returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    blob_name = "records.bin"
    entries = []
    with open(out_dir / blob_name, "wb") as blob:
        for rec in records:
            encoded = _encode_record(rec)
            entries.append(
                {
                    "id": rec.id,
                    "offset": blob.tell(),
                    "length": len(encoded),
                    "split": rec.split,
                    "provenance": rec.provenance,
                    "mask": json.loads(rec.mask.to_json()),
                }
            )
            blob.write(encoded)
    manifest = {
        "format": "condmri-dataset",
        "version": CONTAINER_VERSION,
        "blob": blob_name,
        "meta": meta or {},
        "records": entries,
    }
    manifest_path = out_dir / "manifest.json"
    tmp = manifest_path.with_suffix(".json.tmp")
    with open(tmp, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    tmp.replace(manifest_path)
    return manifest_path


def make_dataset(
    n: int,
    size: int,
    accel: float,
    center_frac: float,
    seed: int,
    split_fractions: tuple[float, ...] = (0.8, 0.2),
    out_dir=None,
    signal_scale: float = DEFAULT_SIGNAL_SCALE,
) -> "Dataset | list[DatasetRecord]":
    """Deterministic synthetic dataset of ``n`` phantom slices with
    per-slice masks, split by shuffling slice (= volume) ids.

    If ``out_dir`` is given the dataset is persisted and a :class:`Dataset`
    handle returned; otherwise the records are returned in memory.
    """
    if abs(sum(split_fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {split_fractions}")
    names = _split_names(len(split_fractions))

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    counts = [int(round(f * n)) for f in split_fractions]
    counts[-1] = n - sum(counts[:-1])
    if min(counts) < 0:
        raise ValueError("split fractions produce a negative bucket")
    split_of = {}
    cursor = 0
    for name, count in zip(names, counts):
        for idx in order[cursor : cursor + count]:
            split_of[int(idx)] = name
        cursor += count

    records = []
    for i in range(n):
        slice_id = f"phantom{i:05d}"
        phantom = generate_phantom(size, seed=stable_seed(seed, "img", slice_id))
        mask = make_cartesian_mask(
            size, size, accel, center_frac, seed=stable_seed(seed, "mask", slice_id)
        )
        records.append(
            DatasetRecord(
                id=slice_id,
                kspace_full=fft2c(phantom * signal_scale).astype(np.complex64),
                mask=mask,
                split=split_of[i],
                provenance="synthetic",
            )
        )

    if out_dir is None:
        return records
    manifest = write_dataset(
        records,
        out_dir,
        meta={
            "n": n,
            "size": size,
            "accel": accel,
            "center_frac": center_frac,
            "seed": seed,
            "split_fractions": list(split_fractions),
            "signal_scale": signal_scale,
        },
    )
    return Dataset(manifest)
