"""The DC blend in isolation: how lambda trades the network prediction
against the acquired measurement.

lambda = 0 copies the measurement into every sampled k-space line (hard
data consistency); lambda = 1 ignores the measurement entirely.  Between
the endpoints the output moves along a straight segment.

Run:  python3 demos/02_data_consistency.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import torch

from condmri import apply_mask, fft2c, make_cartesian_mask, zero_filled_recon
from condmri.data import generate_phantom
from condmri.models.dc import dc_step

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

gt = generate_phantom(192, seed=3)
mask = make_cartesian_mask(192, 192, 4, 0.08, seed=0)
y = apply_mask(fft2c(gt), mask)

# pretend the "network prediction" is a blurred version of the truth
from scipy.ndimage import gaussian_filter

x_half_np = gaussian_filter(gt.real, 2.0) + 1j * gaussian_filter(gt.imag, 2.0)
x_half = torch.from_numpy(x_half_np)
y_t = torch.from_numpy(y.data)

print("identity checks:")
out1 = dc_step(x_half, y_t, mask, 1.0)
print(f"  lambda=1 passthrough error: {(out1 - x_half).abs().max():.2e}")
out0 = dc_step(torch.zeros_like(x_half), y_t, mask, 0.0)
zf = zero_filled_recon(y)
print(f"  lambda=0 on zero input vs zero-filled: {np.abs(out0.numpy() - zf).max():.2e}")

lams = [0.0, 0.25, 0.5, 0.75, 1.0]
fig, axes = plt.subplots(1, len(lams), figsize=(3 * len(lams), 3.4))
for ax, lam in zip(axes, lams):
    out = dc_step(x_half, y_t, mask, lam).numpy()
    err = np.abs(np.abs(out) - np.abs(gt)).mean()
    ax.imshow(np.abs(out), cmap="gray")
    ax.set_title(f"lambda={lam:g}\nmean |err| {err:.4f}")
    ax.set_xticks([]), ax.set_yticks([])
fig.suptitle("DC output as lambda moves from measurement-trust to network-trust")
fig.tight_layout()
fig.savefig(out_dir / "02_data_consistency.png", dpi=110)
print(f"wrote {out_dir / '02_data_consistency.png'}")
