"""Robustness evaluation: the (model x lambda x sigma) metric grid.

For every noise level sigma, each test slice is corrupted exactly once with
a seed derived from (base seed, slice id, sigma); every model and every
lambda then sees the identical corrupted measurement.  That fairness
invariant is enforced by hashing the corrupted inputs per grid cell and
checking the hash across models.

Reports are emitted as CSV (metric columns only, byte-stable across
identical runs) and JSON (full rows including runtimes, plus cell hashes).
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from . import metrics
from .data import Dataset, DatasetRecord
from .models.unrolled import ZeroFilledModel, load_checkpoint
from .seeding import stable_seed
from .transforms import KSpaceSlice, NoiseSpec, add_noise, apply_mask

__all__ = [
    "MetricRow",
    "MetricReport",
    "evaluate_grid",
    "report_to_csv",
    "report_to_json",
    "plot_report",
    "reconstruct_slice",
]

CSV_COLUMNS = ("model", "lambda", "sigma", "psnr_db", "ssim", "n_slices")


@dataclass
class MetricRow:
    model: str
    lam: float
    sigma: float
    psnr_db: float
    ssim: float
    n_slices: int
    runtime_s: float


@dataclass
class MetricReport:
    rows: list[MetricRow]
    meta: dict

    def row(self, model: str, lam: float, sigma: float) -> MetricRow:
        for r in self.rows:
            if r.model == model and r.lam == lam and r.sigma == sigma:
                return r
        raise KeyError(f"no row for ({model}, {lam}, {sigma})")


def reconstruct_slice(
    model: torch.nn.Module,
    ksp: KSpaceSlice,
    lam: float,
) -> np.ndarray:
    """Run one slice through a model, numpy in / numpy out.

    Parameterized models run at their weight precision (complex64 for
    float32 weights); parameterless pseudo-models keep double precision so
    bypass oracles stay exact."""
    param = next(iter(model.parameters()), None)
    if param is None or param.dtype == torch.float64:
        np_dtype = np.complex128
    else:
        np_dtype = np.complex64
    y = torch.from_numpy(ksp.data.astype(np_dtype))
    m = torch.from_numpy(ksp.mask.columns.astype(bool))
    with torch.no_grad():
        recon = model(y, m, lam)
    return recon.numpy()


def _resolve_models(models: dict) -> dict:
    resolved = {}
    for name, entry in models.items():
        if entry == "zero_filled":
            resolved[name] = ZeroFilledModel()
        elif isinstance(entry, (str, Path)):
            model, _ = load_checkpoint(entry)
            resolved[name] = model
        else:
            resolved[name] = entry
        resolved[name].eval()
    return resolved


def _cell_hash(corrupted: "list[KSpaceSlice]") -> str:
    h = hashlib.sha256()
    for ksp in corrupted:
        h.update(np.ascontiguousarray(ksp.data.astype("<c16")).tobytes())
    return h.hexdigest()


def evaluate_grid(
    models: dict,
    lambda_grid: "list[float]",
    sigma_grid: "list[float]",
    dataset: "Dataset | list[DatasetRecord]",
    split: str = "test",
    seed: int = 0,
) -> MetricReport:
    """Evaluate every model at every (lambda, sigma) grid cell.

    ``models`` maps a display name to a checkpoint path, a loaded model, or
    the string ``"zero_filled"``.  Models without a lambda path (zero-filled,
    enhancement baselines) still produce one row per lambda so the grid stays
    complete; their metrics are constant across lambda.
    """
    if not lambda_grid or not sigma_grid:
        raise ValueError("lambda and sigma grids must be nonempty")
    for lam in lambda_grid:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda {lam} outside [0, 1]")

    records = (
        dataset.records(split) if isinstance(dataset, Dataset) else [
            r for r in dataset if r.split == split
        ]
    )
    if not records:
        raise ValueError(f"no records in split {split!r}")
    resolved = _resolve_models(models)

    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)  # keep reports bit-deterministic
    try:
        gts = [r.image_gt for r in records]
        drs = [float(np.abs(gt).max()) for gt in gts]
        measured = [apply_mask(r.kspace_full.astype(np.complex128), r.mask) for r in records]

        rows: list[MetricRow] = []
        cell_hashes: dict[str, str] = {}
        for sigma in sigma_grid:
            corrupted = [
                add_noise(
                    ksp,
                    NoiseSpec(sigma=sigma, seed=stable_seed(seed, rec.id, sigma)),
                )
                for rec, ksp in zip(records, measured)
            ]
            cell_hashes[repr(sigma)] = _cell_hash(corrupted)
            for name, model in resolved.items():
                for lam in lambda_grid:
                    t0 = time.monotonic()
                    psnrs, ssims = [], []
                    for rec, ksp, gt, dr in zip(records, corrupted, gts, drs):
                        x_hat = reconstruct_slice(model, ksp, lam)
                        psnrs.append(metrics.cap_psnr(metrics.psnr(x_hat, gt, dr)))
                        ssims.append(metrics.ssim(x_hat, gt, dr))
                    rows.append(
                        MetricRow(
                            model=name,
                            lam=float(lam),
                            sigma=float(sigma),
                            psnr_db=float(np.mean(psnrs)),
                            ssim=float(np.mean(ssims)),
                            n_slices=len(records),
                            runtime_s=time.monotonic() - t0,
                        )
                    )
    finally:
        torch.set_num_threads(n_threads)

    expected = len(resolved) * len(lambda_grid) * len(sigma_grid)
    assert len(rows) == expected, "incomplete metric grid"
    meta = {
        "seed": seed,
        "split": split,
        "n_slices": len(records),
        "lambda_grid": [float(v) for v in lambda_grid],
        "sigma_grid": [float(v) for v in sigma_grid],
        "models": sorted(resolved),
        "cell_input_hashes": cell_hashes,
    }
    return MetricReport(rows=rows, meta=meta)


def report_to_csv(report: MetricReport, path) -> Path:
    """CSV with the metric columns only; runtimes stay in the JSON report
    so identical seeds yield byte-identical CSV files."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for r in report.rows:
            writer.writerow(
                [r.model, repr(r.lam), repr(r.sigma), repr(r.psnr_db), repr(r.ssim), r.n_slices]
            )
    return path


def report_to_json(report: MetricReport, path) -> Path:
    path = Path(path)
    payload = {"meta": report.meta, "rows": [asdict(r) for r in report.rows]}
    with open(path, "w") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
    return path


def plot_report(report: MetricReport, path) -> Path:
    """PSNR-vs-sigma curves, one panel per model, one line per lambda."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    model_names = sorted({r.model for r in report.rows})
    lambdas = sorted({r.lam for r in report.rows})
    sigmas = sorted({r.sigma for r in report.rows})

    fig, axes = plt.subplots(
        1, len(model_names), figsize=(4.2 * len(model_names), 3.6), squeeze=False
    )
    for ax, name in zip(axes[0], model_names):
        for lam in lambdas:
            psnrs = [report.row(name, lam, s).psnr_db for s in sigmas]
            ax.plot(sigmas, psnrs, marker="o", label=f"lambda={lam:g}")
        ax.set_xscale("log")
        ax.set_xlabel("noise sigma")
        ax.set_ylabel("PSNR (dB)")
        ax.set_title(name)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
