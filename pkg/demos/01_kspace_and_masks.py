"""Walk through the measurement model: phantom -> k-space -> Cartesian
undersampling -> zero-filled reconstruction.

Run:  python3 demos/01_kspace_and_masks.py
Writes demos/output/01_kspace_and_masks.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from condmri import apply_mask, fft2c, make_cartesian_mask, zero_filled_recon
from condmri.data import generate_phantom

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# a synthetic slice: random ellipse scene with smooth phase, intensity in [0, 1]
phantom = generate_phantom(size=256, seed=7)
kspace = fft2c(phantom)

# energy is preserved by the orthonormal transform
print(f"image energy   {np.sum(np.abs(phantom) ** 2):.6f}")
print(f"k-space energy {np.sum(np.abs(kspace) ** 2):.6f}")

# 4x acceleration, 8% of columns always sampled at the center
mask = make_cartesian_mask(256, 256, accel=4, center_frac=0.08, seed=1)
print(f"sampled columns: {mask.num_sampled}/256 "
      f"({mask.num_sampled / 256:.1%}, accel {256 / mask.num_sampled:.1f}x)")
print(f"mask as JSON: {mask.to_json()[:80]}...")

measured = apply_mask(kspace, mask)
zf = zero_filled_recon(measured)

fig, axes = plt.subplots(1, 4, figsize=(14, 3.6))
axes[0].imshow(np.abs(phantom), cmap="gray")
axes[0].set_title("phantom |x|")
axes[1].imshow(np.log1p(1e4 * np.abs(kspace)), cmap="viridis")
axes[1].set_title("k-space (log)")
axes[2].imshow(mask.as_grid(256), cmap="gray", aspect="auto")
axes[2].set_title(f"mask ({mask.num_sampled} columns)")
axes[3].imshow(np.abs(zf), cmap="gray")
axes[3].set_title("zero-filled recon")
for ax in axes:
    ax.set_xticks([]), ax.set_yticks([])
fig.tight_layout()
fig.savefig(out_dir / "01_kspace_and_masks.png", dpi=110)
print(f"wrote {out_dir / '01_kspace_and_masks.png'}")
