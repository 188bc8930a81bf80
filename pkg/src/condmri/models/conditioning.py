"""Lambda-conditioned hypernetwork and adaptive instance normalization.

A small MLP embeds the scalar DC weight lambda into per-cascade scale and
shift vectors (gamma, beta).  Each conditioned backbone applies those through
AdaIN at its bottleneck: standardize every feature channel by its own
instance statistics, then rescale by gamma and shift by beta.

Each cascade owns an independent MLP by default; a shared trunk with
per-cascade heads is available for ablation.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .dc import check_lambda

__all__ = ["ConditioningParams", "HypernetConfig", "CascadeHypernet", "adain"]

ADAIN_EPS = 1e-5

_ACTIVATIONS = {
    "relu": nn.ReLU,
    "leaky_relu": lambda: nn.LeakyReLU(0.2),
    "tanh": nn.Tanh,
    "gelu": nn.GELU,
}


@dataclass
class ConditioningParams:
    """Per-cascade AdaIN modulation: scale gamma and shift beta, one value
    per feature channel."""

    gamma: torch.Tensor  # [C]
    beta: torch.Tensor  # [C]

    def __post_init__(self) -> None:
        if self.gamma.shape != self.beta.shape:
            raise ValueError("gamma and beta must have identical shapes")

    @property
    def channels(self) -> int:
        return int(self.gamma.shape[-1])


@dataclass
class HypernetConfig:
    """MLP trunk dimensions (first must be 1: scalar lambda input) and the
    per-cascade head size ``2 * C``."""

    layer_dims: tuple[int, ...] = (1, 64, 64, 64)
    activation: str = "relu"
    shared_trunk: bool = False

    def __post_init__(self) -> None:
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if self.layer_dims[0] != 1:
            raise ValueError("hypernet input dimension must be 1 (scalar lambda)")
        if any(d <= 0 for d in self.layer_dims):
            raise ValueError("hypernet layer dims must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def _mlp_trunk(cfg: HypernetConfig) -> nn.Sequential:
    layers: list[nn.Module] = []
    for d_in, d_out in zip(cfg.layer_dims[:-1], cfg.layer_dims[1:]):
        layers.append(nn.Linear(d_in, d_out))
        layers.append(_ACTIVATIONS[cfg.activation]())
    return nn.Sequential(*layers)


class CascadeHypernet(nn.Module):
    """Maps lambda to one (gamma, beta) pair per unroll cascade.

    ``heads[i]`` emits ``2 * C`` values (C scales then C shifts) for cascade
    ``i``.  With ``shared_trunk=False`` every cascade also gets its own MLP
    trunk.
    """

    def __init__(
        self,
        num_cascades: int,
        channels: int,
        config: HypernetConfig | None = None,
    ) -> None:
        super().__init__()
        if num_cascades < 1:
            raise ValueError("need at least one cascade")
        if channels < 1:
            raise ValueError("conditioned channel count must be positive")
        self.config = config or HypernetConfig()
        self.num_cascades = num_cascades
        self.channels = channels
        hidden = self.config.layer_dims[-1]
        n_trunks = 1 if self.config.shared_trunk else num_cascades
        self.trunks = nn.ModuleList(_mlp_trunk(self.config) for _ in range(n_trunks))
        self.heads = nn.ModuleList(
            nn.Linear(hidden, 2 * channels) for _ in range(num_cascades)
        )
        # start near the identity modulation (gamma ~ 1, beta ~ 0) so early
        # training is not destabilized by random feature rescaling
        with torch.no_grad():
            for head in self.heads:
                head.bias[:channels] += 1.0

    def forward(self, lam: "float | torch.Tensor") -> list[ConditioningParams]:
        check_lambda(lam)
        ref = self.heads[0].weight
        if isinstance(lam, torch.Tensor):
            x = lam.to(ref.dtype).reshape(1, 1)
        else:
            x = torch.tensor([[lam]], dtype=ref.dtype, device=ref.device)
        params = []
        for i in range(self.num_cascades):
            trunk = self.trunks[0 if self.config.shared_trunk else i]
            out = self.heads[i](trunk(x)).reshape(-1)
            params.append(
                ConditioningParams(gamma=out[: self.channels], beta=out[self.channels :])
            )
        return params


def adain(
    z: torch.Tensor,
    params: ConditioningParams,
    eps: float = ADAIN_EPS,
) -> torch.Tensor:
    """Adaptive instance normalization of a feature map.

    Per channel: standardize by the instance mean and population std over
    the spatial extent of *this* input, then apply the conditional affine:

        z' = gamma * (z - mu) / (std + eps) + beta

    ``eps > 0`` keeps constant channels finite (they come out as exactly
    beta).  Works on [C, h, w] or [B, C, h, w].
    """
    if z.ndim not in (3, 4):
        raise ValueError(f"expected [C,h,w] or [B,C,h,w], got ndim={z.ndim}")
    channels = z.shape[-3]
    if channels != params.channels:
        raise ValueError(
            f"feature map has {channels} channels but conditioning provides "
            f"{params.channels}"
        )
    mu = z.mean(dim=(-2, -1), keepdim=True)
    var = z.var(dim=(-2, -1), unbiased=False, keepdim=True)
    # tiny floor keeps the backward pass finite on constant channels without
    # perturbing the (std + eps) contract
    std = torch.sqrt(var + 1e-24)
    shape = (channels, 1, 1)
    gamma = params.gamma.reshape(shape).to(z.dtype)
    beta = params.beta.reshape(shape).to(z.dtype)
    return gamma * (z - mu) / (std + eps) + beta
