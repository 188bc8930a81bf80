"""Noise-robustness grid: evaluate the trained desk model over
(lambda x sigma), the same layout as a results table.

Requires demos/05_train_desk_model.py to have run first.

Run:  python3 demos/06_robustness_grid.py
"""

from pathlib import Path

from condmri import data as D
from condmri.evaluate import evaluate_grid, plot_report, report_to_csv, report_to_json

desk = Path(__file__).parent / "output" / "desk"
checkpoint = desk / "run" / "checkpoints" / "best.pt"
if not checkpoint.exists():
    raise SystemExit("run demos/05_train_desk_model.py first")

dataset = D.Dataset(desk / "dataset" / "manifest.json")
lambdas = [0.1, 0.5, 0.9]
sigmas = [1e-5, 5e-5, 1e-4]

report = evaluate_grid(
    {"cond": checkpoint, "zero_filled": "zero_filled"},
    lambdas,
    sigmas,
    dataset,
    split="test",
    seed=21,
)

print(f"{'model':>12} {'lambda':>7} | " + " | ".join(f"sigma={s:g}" for s in sigmas))
for name in ("cond", "zero_filled"):
    for lam in lambdas:
        cells = [report.row(name, lam, s) for s in sigmas]
        line = " | ".join(f"{c.psnr_db:5.2f} dB / {c.ssim:.3f}" for c in cells)
        print(f"{name:>12} {lam:>7} | {line}")

out = desk / "grid"
out.mkdir(exist_ok=True)
print(f"wrote {report_to_csv(report, out / 'report.csv')}")
print(f"wrote {report_to_json(report, out / 'report.json')}")
print(f"wrote {plot_report(report, out / 'psnr_vs_sigma.png')}")
