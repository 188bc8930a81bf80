"""Training loop: Adam with a stepped learning rate, per-step lambda
sampling, optional input-noise augmentation, JSONL logging and per-epoch
checkpointing.

The log contains one record per optimization step and one summary per
epoch.  Wall-clock timings are deliberately kept out of the log records so
that two runs with identical seeds produce identical logs in deterministic
mode; timing lives in the returned :class:`TrainResult`.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import metrics
from .data import Dataset, DatasetRecord
from .losses import recon_loss
from .models.backbones import BackboneConfig
from .models.unrolled import (
    EnhancementModel,
    UnrolledConfig,
    UnrolledModel,
    save_checkpoint,
)
from .scheduler import ScheduleState, sample_lambda
from .transforms import KSpaceSlice, NoiseSpec, add_noise, apply_mask

__all__ = ["TrainConfig", "TrainResult", "TrainingDiverged", "lr_at_epoch", "train"]


class TrainingDiverged(RuntimeError):
    """Non-finite loss; a diagnostic snapshot was written."""

    def __init__(self, message: str, snapshot_path: str):
        super().__init__(message)
        self.snapshot_path = snapshot_path


@dataclass
class TrainConfig:
    lr: float = 1e-3
    lr_gamma: float = 0.5
    lr_step_epochs: int = 15
    epochs: int = 100
    batch_size: int = 4
    loss_weights: tuple[float, float] = (1.0, 1.0)
    augment_noise: tuple[float, float] | None = None  # uniform (sigma_lo, sigma_hi)
    scheduler: ScheduleState = field(default_factory=ScheduleState)
    seed: int = 0
    val_lambda: float = 0.1  # lambda used for model selection
    deterministic: bool = True

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0 < self.lr_gamma <= 1:
            raise ValueError("lr_gamma must lie in (0, 1]")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.augment_noise is not None:
            lo, hi = self.augment_noise
            if not 0 <= lo <= hi:
                raise ValueError(f"bad augment_noise range {self.augment_noise}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["loss_weights"] = list(self.loss_weights)
        if self.augment_noise is not None:
            d["augment_noise"] = list(self.augment_noise)
        return d


@dataclass
class TrainResult:
    out_dir: Path
    log_path: Path
    checkpoints: list[Path]
    best_checkpoint: Path
    best_val_psnr: float
    final_val_psnr: float
    final_val_ssim: float
    seconds: float


def lr_at_epoch(epoch: int, cfg: TrainConfig) -> float:
    """Stepped schedule: ``lr * gamma ** floor(epoch / step)``."""
    if epoch < 0:
        raise ValueError("epoch must be nonnegative")
    return cfg.lr * cfg.lr_gamma ** (epoch // cfg.lr_step_epochs)


def _measured(rec: DatasetRecord) -> KSpaceSlice:
    return apply_mask(rec.kspace_full.astype(np.complex128), rec.mask)


def _validate(model, records, measured, lam, batch_size):
    model.eval()
    psnrs, ssims = [], []
    with torch.no_grad():
        for start in range(0, len(records), batch_size):
            chunk = records[start : start + batch_size]
            ys = torch.from_numpy(
                np.stack([measured[r.id].data for r in chunk]).astype(np.complex64)
            )
            ms = torch.from_numpy(
                np.stack([r.mask.columns.astype(bool) for r in chunk])
            ).unsqueeze(1)
            recon = model(ys, ms, lam).numpy()
            for rec, x_hat in zip(chunk, recon):
                gt = rec.image_gt
                dr = float(np.abs(gt).max())
                psnrs.append(metrics.cap_psnr(metrics.psnr(x_hat, gt, dr)))
                ssims.append(metrics.ssim(x_hat, gt, dr))
    model.train()
    return float(np.mean(psnrs)), float(np.mean(ssims))


def train(
    dataset: "Dataset | list[DatasetRecord]",
    model_cfg: "UnrolledConfig | BackboneConfig",
    train_cfg: TrainConfig,
    out_dir,
) -> TrainResult:
    """Train a reconstruction model on the dataset's train split.

    Per step: draw lambda from the scheduler, optionally corrupt the
    measured k-space with sigma ~ U(augment_noise), run the model at that
    lambda, and take one Adam step on the l1 + SSIM loss.  Validation
    PSNR/SSIM (at ``val_lambda``, no noise) is logged per epoch; the best
    validation checkpoint is kept alongside the per-epoch ones.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_dir = out_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    log_path = out_dir / "train_log.jsonl"

    if train_cfg.deterministic:
        torch.set_num_threads(1)
    torch.manual_seed(train_cfg.seed)
    rng = np.random.default_rng(train_cfg.seed)

    if isinstance(model_cfg, UnrolledConfig):
        model = UnrolledModel(model_cfg)
    elif isinstance(model_cfg, BackboneConfig):
        model = EnhancementModel(model_cfg)
    else:
        raise TypeError(f"unsupported model config type {type(model_cfg).__name__}")
    model.train()

    records = dataset.records("train") if isinstance(dataset, Dataset) else [
        r for r in dataset if r.split == "train"
    ]
    val_records = dataset.records("val") if isinstance(dataset, Dataset) else [
        r for r in dataset if r.split == "val"
    ]
    if not records:
        raise ValueError("dataset has no training records")
    measured = {r.id: _measured(r) for r in records + val_records}
    gts = {r.id: r.image_gt for r in records}

    optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.lr, betas=(0.9, 0.999))

    start_time = time.monotonic()
    checkpoints: list[Path] = []
    best_psnr = -np.inf
    best_path = ckpt_dir / "best.pt"
    global_step = 0
    val_psnr = val_ssim = float("nan")

    with open(log_path, "w") as log:

        def emit(record: dict) -> None:
            log.write(json.dumps(record, sort_keys=True) + "\n")

        emit(
            {
                "type": "config",
                "train": train_cfg.to_dict(),
                "scheduler": asdict(train_cfg.scheduler),
                "n_train": len(records),
                "n_val": len(val_records),
            }
        )

        for epoch in range(train_cfg.epochs):
            lr = lr_at_epoch(epoch, train_cfg)
            for group in optimizer.param_groups:
                group["lr"] = lr
            sched_state = train_cfg.scheduler.at_epoch(epoch)

            order = rng.permutation(len(records))
            epoch_losses = []
            for start in range(0, len(order), train_cfg.batch_size):
                idx = order[start : start + train_cfg.batch_size]
                batch = [records[i] for i in idx]

                lam = sample_lambda(sched_state, rng)
                assert 0.0 <= lam <= 1.0, f"scheduler emitted lambda {lam}"

                sigma_aug = 0.0
                if train_cfg.augment_noise is not None:
                    lo, hi = train_cfg.augment_noise
                    sigma_aug = float(rng.uniform(lo, hi))
                ys = []
                for rec in batch:
                    ksp = measured[rec.id]
                    if sigma_aug > 0.0:
                        ksp = add_noise(
                            ksp,
                            NoiseSpec(sigma=sigma_aug, seed=int(rng.integers(2**63))),
                        )
                    ys.append(ksp.data)
                y = torch.from_numpy(np.stack(ys).astype(np.complex64))
                m = torch.from_numpy(
                    np.stack([r.mask.columns.astype(bool) for r in batch])
                ).unsqueeze(1)
                gt = torch.from_numpy(
                    np.stack([gts[r.id] for r in batch]).astype(np.complex64)
                )

                optimizer.zero_grad()
                recon = model(y, m, lam)
                loss = recon_loss(recon, gt, train_cfg.loss_weights)
                if not torch.isfinite(loss):
                    snap = out_dir / "diagnostic_snapshot.pt"
                    torch.save(
                        {
                            "epoch": epoch,
                            "step": global_step,
                            "lam": lam,
                            "lr": lr,
                            "sigma_aug": sigma_aug,
                            "y": y,
                            "mask": m,
                            "gt": gt,
                        },
                        snap,
                    )
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch} step {global_step} "
                        f"(lambda={lam:.4f}, lr={lr:g}); snapshot at {snap}",
                        str(snap),
                    )
                loss.backward()
                optimizer.step()

                emit(
                    {
                        "type": "step",
                        "epoch": epoch,
                        "step": global_step,
                        "lam": lam,
                        "sigma_aug": sigma_aug,
                        "loss": float(loss.detach()),
                        "lr": lr,
                    }
                )
                epoch_losses.append(float(loss.detach()))
                global_step += 1

            if val_records:
                val_psnr, val_ssim = _validate(
                    model, val_records, measured, train_cfg.val_lambda,
                    train_cfg.batch_size,
                )
            emit(
                {
                    "type": "epoch",
                    "epoch": epoch,
                    "mean_loss": float(np.mean(epoch_losses)),
                    "val_psnr": val_psnr,
                    "val_ssim": val_ssim,
                    "lr": lr,
                }
            )

            ckpt_path = ckpt_dir / f"epoch_{epoch:03d}.pt"
            meta = {
                "epoch": epoch,
                "val_psnr": val_psnr,
                "val_ssim": val_ssim,
                "train_config": train_cfg.to_dict(),
            }
            save_checkpoint(model, ckpt_path, meta=meta)
            checkpoints.append(ckpt_path)
            if val_records and val_psnr > best_psnr:
                best_psnr = val_psnr
                save_checkpoint(model, best_path, meta=meta)

    if not val_records:
        save_checkpoint(model, best_path, meta={"epoch": train_cfg.epochs - 1})
        best_psnr = float("nan")

    return TrainResult(
        out_dir=out_dir,
        log_path=log_path,
        checkpoints=checkpoints,
        best_checkpoint=best_path,
        best_val_psnr=float(best_psnr),
        final_val_psnr=float(val_psnr),
        final_val_ssim=float(val_ssim),
        seconds=time.monotonic() - start_time,
    )
