"""Lambda-sampling strategies over a training run.

The annealed cosine starts near 1 (the network generates freely, little
DC influence) and ends near 0 (strong data consistency); the literal
formula with its floored epoch ratio stays piecewise constant.

Run:  python3 demos/04_scheduler_strategies.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from condmri.scheduler import ScheduleState, sample_lambda

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

epochs = np.arange(0, 200)
rng = np.random.default_rng(0)

fig, ax = plt.subplots(figsize=(8, 4))
for strategy, kwargs in [
    ("cosine_annealed", dict(phi=100.0, eps_scale=0.05)),
    ("cosine_literal", dict(phi=100.0, eps_scale=0.05)),
    ("uniform", {}),
    ("fixed", dict(fixed_value=0.1)),
]:
    draws = [
        sample_lambda(ScheduleState(strategy=strategy, epoch=int(e), **kwargs), rng)
        for e in epochs
    ]
    ax.plot(epochs, draws, label=strategy, alpha=0.85)

ax.set_xlabel("epoch")
ax.set_ylabel("sampled lambda")
ax.set_ylim(-0.05, 1.05)
ax.legend()
ax.set_title("one draw per epoch, clamped to [0, 1]")
fig.tight_layout()
fig.savefig(out_dir / "04_scheduler_strategies.png", dpi=110)
print(f"wrote {out_dir / '04_scheduler_strategies.png'}")

# the annealed schedule with no noise is exactly the half-cosine
clean = [
    sample_lambda(ScheduleState(strategy="cosine_annealed", epoch=e, eps_scale=0.0), rng)
    for e in (0, 25, 50, 75, 100, 150)
]
print("annealed lambda at epochs 0/25/50/75/100/150:",
      " ".join(f"{v:.3f}" for v in clean))
