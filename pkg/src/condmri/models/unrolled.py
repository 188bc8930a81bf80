"""Unrolled reconstruction models and checkpoint IO.

``UnrolledModel`` alternates a backbone refinement with the DC blend for T
cascades:

    x^0       = ifft2c(M . y)                      (zero-filled init)
    x^{t+1/2} = x^t - f_t(x^t)                     (backbone residual)
    x^{t+1}   = dc_step(x^{t+1/2}, y, M, lambda)

When conditioned, a hypernetwork turns lambda into per-cascade AdaIN
(gamma, beta) fed to each backbone's bottleneck, and the same lambda is used
in every DC step.

``EnhancementModel`` is the no-DC baseline: a single backbone pass on the
zero-filled image, lambda unused.  ``ZeroFilledModel`` is the naive
pseudo-model used as an evaluation floor.

Inputs are normalized per slice by the peak zero-filled magnitude before
entering the backbones and rescaled on the way out; the DC blend is linear
in (x, y) jointly so the contracts are unaffected.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import torch
from torch import nn

from .backbones import BackboneConfig, build_backbone
from .conditioning import CascadeHypernet, HypernetConfig
from .dc import check_lambda, dc_step, mask_tensor
from .ops import channels_to_complex, complex_to_channels, ifft2c_t

__all__ = [
    "UnrolledConfig",
    "UnrolledModel",
    "EnhancementModel",
    "ZeroFilledModel",
    "build_model",
    "model_config_to_dict",
    "model_from_dict",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointError",
]

CHECKPOINT_FORMAT = "condmri-checkpoint"


class CheckpointError(RuntimeError):
    """Unreadable checkpoint or config/state mismatch."""


@dataclass
class UnrolledConfig:
    """Cascade count T, weight sharing, per-cascade backbone template and
    lambda conditioning.  T = 0 degenerates to the zero-filled init (testing
    only)."""

    T: int = 5
    share_weights: bool = False
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    conditioned: bool = False
    hypernet: HypernetConfig = field(default_factory=HypernetConfig)
    normalize: bool = True

    def __post_init__(self) -> None:
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        # the backbone's conditioning site follows the model-level switch
        self.backbone.conditioned = self.conditioned


def _as_batched_complex(y: torch.Tensor) -> tuple[torch.Tensor, bool]:
    if not y.is_complex():
        raise ValueError("measured k-space must be a complex tensor")
    if y.ndim == 2:
        return y.unsqueeze(0), True
    if y.ndim == 3:
        return y, False
    raise ValueError(f"expected [H,W] or [B,H,W] k-space, got {tuple(y.shape)}")


def _peak_magnitude(x: torch.Tensor) -> torch.Tensor:
    scale = x.abs().amax(dim=(-2, -1), keepdim=True).detach()
    return scale.clamp_min(torch.finfo(scale.dtype).tiny)


class UnrolledModel(nn.Module):
    kind = "unrolled"

    def __init__(self, config: UnrolledConfig):
        super().__init__()
        self.config = config
        n_backbones = 1 if config.share_weights else max(config.T, 1)
        self.backbones = nn.ModuleList(
            build_backbone(config.backbone) for _ in range(n_backbones)
        )
        if config.conditioned:
            self.hypernet = CascadeHypernet(
                num_cascades=max(config.T, 1),
                channels=self.backbones[0].cond_channels,
                config=config.hypernet,
            )
        else:
            self.hypernet = None

    def forward(
        self,
        y: torch.Tensor,
        mask,
        lam: "float | torch.Tensor",
    ) -> torch.Tensor:
        check_lambda(lam)
        y, squeeze = _as_batched_complex(y)
        m = mask_tensor(mask, device=y.device)
        y = y * m
        x = ifft2c_t(y)
        if self.config.T == 0:
            return x.squeeze(0) if squeeze else x

        cond = self.hypernet(lam) if self.hypernet is not None else None
        if self.config.normalize:
            scale = _peak_magnitude(x)
            x = x / scale
            y = y / scale
        else:
            scale = None

        for t in range(self.config.T):
            backbone = self.backbones[0 if self.config.share_weights else t]
            f = channels_to_complex(backbone(complex_to_channels(x), cond[t] if cond else None))
            x = dc_step(x - f, y, m, lam)

        if scale is not None:
            x = x * scale
        return x.squeeze(0) if squeeze else x


class EnhancementModel(nn.Module):
    """Image-enhancement baseline: one backbone pass on the zero-filled
    reconstruction, no DC module, lambda ignored."""

    kind = "enhancement"

    def __init__(self, backbone: BackboneConfig | None = None, normalize: bool = True):
        super().__init__()
        self.config = backbone or BackboneConfig()
        if self.config.conditioned:
            raise ValueError("the enhancement baseline has no lambda path")
        self.normalize = normalize
        self.backbone = build_backbone(self.config)

    def forward(self, y: torch.Tensor, mask, lam=None) -> torch.Tensor:
        y, squeeze = _as_batched_complex(y)
        m = mask_tensor(mask, device=y.device)
        x = ifft2c_t(y * m)
        scale = _peak_magnitude(x) if self.normalize else None
        if scale is not None:
            x = x / scale
        x = channels_to_complex(self.backbone(complex_to_channels(x)))
        if scale is not None:
            x = x * scale
        return x.squeeze(0) if squeeze else x


class ZeroFilledModel(nn.Module):
    """ifft2c(M . y); the lambda argument is accepted and ignored."""

    kind = "zero_filled"

    def __init__(self):
        super().__init__()
        self.config = None

    def forward(self, y: torch.Tensor, mask, lam=None) -> torch.Tensor:
        y, squeeze = _as_batched_complex(y)
        m = mask_tensor(mask, device=y.device)
        x = ifft2c_t(y * m)
        return x.squeeze(0) if squeeze else x


def build_model(kind: str, config=None) -> nn.Module:
    if kind == "unrolled":
        return UnrolledModel(config or UnrolledConfig())
    if kind == "enhancement":
        return EnhancementModel(config)
    if kind == "zero_filled":
        return ZeroFilledModel()
    raise ValueError(f"unknown model kind {kind!r}")


def model_config_to_dict(model: nn.Module) -> dict:
    if isinstance(model, UnrolledModel):
        cfg = asdict(model.config)
        cfg["hypernet"]["layer_dims"] = list(cfg["hypernet"]["layer_dims"])
        return {"model": "unrolled", "config": cfg}
    if isinstance(model, EnhancementModel):
        return {
            "model": "enhancement",
            "config": {"backbone": asdict(model.config), "normalize": model.normalize},
        }
    if isinstance(model, ZeroFilledModel):
        return {"model": "zero_filled", "config": {}}
    raise ValueError(f"cannot serialize model of type {type(model).__name__}")


def _build_dataclass(cls, data: dict, where: str):
    import dataclasses

    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise CheckpointError(f"unknown {where} config keys: {', '.join(unknown)}")
    return cls(**data)


def model_from_dict(spec: dict) -> nn.Module:
    kind = spec.get("model")
    cfg = dict(spec.get("config", {}))
    if kind == "zero_filled":
        return ZeroFilledModel()
    if kind == "enhancement":
        backbone = _build_dataclass(BackboneConfig, dict(cfg.pop("backbone", {})), "backbone")
        normalize = cfg.pop("normalize", True)
        if cfg:
            raise CheckpointError(f"unknown model config keys: {', '.join(sorted(cfg))}")
        return EnhancementModel(backbone, normalize=normalize)
    if kind == "unrolled":
        backbone = _build_dataclass(BackboneConfig, dict(cfg.pop("backbone", {})), "backbone")
        hyper_raw = dict(cfg.pop("hypernet", {}))
        if "layer_dims" in hyper_raw:
            hyper_raw["layer_dims"] = tuple(hyper_raw["layer_dims"])
        hypernet = _build_dataclass(HypernetConfig, hyper_raw, "hypernet")
        cfg = {**cfg, "backbone": backbone, "hypernet": hypernet}
        return UnrolledModel(_build_dataclass(UnrolledConfig, cfg, "unrolled"))
    raise CheckpointError(f"unknown model kind {kind!r}")


def save_checkpoint(model: nn.Module, path, meta: dict | None = None) -> None:
    """Single-file archive: all parameter tensors plus the model config as
    embedded JSON.  Written atomically (temp file + rename)."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": 1,
        "model_json": json.dumps(model_config_to_dict(model), sort_keys=True),
        "state_dict": model.state_dict(),
        "meta": meta or {},
    }
    path = os.fspath(path)
    tmp = path + ".tmp"
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path, map_location="cpu") -> tuple[nn.Module, dict]:
    """Rebuild the model from a checkpoint; returns (model, info) where
    info holds the config dict, the embedded JSON string and any metadata.

    Deterministic-mode outputs reproduce bit-exactly because state tensors
    round-trip unchanged."""
    try:
        payload = torch.load(path, map_location=map_location, weights_only=False)
    except Exception as exc:  # noqa: BLE001 - surface as a checkpoint error
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a condmri checkpoint")
    spec = json.loads(payload["model_json"])
    model = model_from_dict(spec)
    try:
        missing, unexpected = model.load_state_dict(payload["state_dict"], strict=False)
    except RuntimeError as exc:  # tensor shape mismatch within matching keys
        raise CheckpointError(f"checkpoint/config mismatch: {exc}") from exc
    if missing or unexpected:
        raise CheckpointError(
            "checkpoint/config mismatch; "
            f"missing keys: {sorted(missing)}, unexpected keys: {sorted(unexpected)}"
        )
    model.eval()
    info = {
        "spec": spec,
        "model_json": payload["model_json"],
        "meta": payload.get("meta", {}),
    }
    return model, info
