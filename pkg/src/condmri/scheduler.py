"""Lambda-sampling strategies for training.

Four strategies are available through :class:`ScheduleState`:

* ``fixed(v)``: always return ``v``.
* ``uniform``: U(0, 1).
* ``cosine_literal``: ``cos(pi * floor(e / phi)) + eps_scale * eta`` with
  ``eta ~ N(0, 1)``.  With phi = 100 and a 100-epoch run the floor makes the
  cosine term constant; shipped verbatim anyway.
* ``cosine_annealed``: ``0.5 * (1 + cos(pi * min(e, phi) / phi)) +
  eps_scale * eta`` - starts near 1 (little DC influence, free generation),
  ends near 0 (strong DC) as training progresses.  This is the training
  default.

Every draw is clamped to [0, 1].  Randomness comes from the explicit
``rng``; the same (state, seed) always yields the same lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = ["STRATEGIES", "ScheduleState", "sample_lambda"]

STRATEGIES = ("fixed", "uniform", "cosine_literal", "cosine_annealed")


@dataclass(frozen=True)
class ScheduleState:
    strategy: str = "cosine_annealed"
    epoch: int = 0
    phi: float = 100.0
    eps_scale: float = 0.05
    fixed_value: float = 0.5

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}"
            )
        if self.phi <= 0:
            raise ValueError("phi must be positive")
        if self.eps_scale < 0:
            raise ValueError("eps_scale must be nonnegative")
        if self.epoch < 0:
            raise ValueError("epoch must be nonnegative")
        if self.strategy == "fixed" and not 0.0 <= self.fixed_value <= 1.0:
            raise ValueError("fixed_value must lie in [0, 1]")

    def at_epoch(self, epoch: int) -> "ScheduleState":
        return replace(self, epoch=epoch)


def sample_lambda(state: ScheduleState, rng: np.random.Generator) -> float:
    """Draw one lambda according to the strategy, clamped to [0, 1].

    The Gaussian perturbation eta is resampled on every call (i.e. per
    optimization step)."""
    if state.strategy == "fixed":
        lam = state.fixed_value
    elif state.strategy == "uniform":
        lam = float(rng.uniform(0.0, 1.0))
    elif state.strategy == "cosine_literal":
        lam = math.cos(math.pi * math.floor(state.epoch / state.phi))
        if state.eps_scale > 0:
            lam += state.eps_scale * float(rng.standard_normal())
    else:  # cosine_annealed
        progress = min(float(state.epoch), state.phi) / state.phi
        lam = 0.5 * (1.0 + math.cos(math.pi * progress))
        if state.eps_scale > 0:
            lam += state.eps_scale * float(rng.standard_normal())
    return min(1.0, max(0.0, lam))
