"""Drive the inference service the way the browser console does: hold the
slice and noise level fixed, sweep lambda, and watch PSNR respond.

Requires demos/05_train_desk_model.py to have run first, plus the test
extra (httpx) for the in-process client.  This demo starts the service
in-process; against a real deployment you would instead run

    condmri serve --checkpoint .../best.pt --dataset .../manifest.json --port 8000

and point the lambda console (frontend/) at it.

Run:  python3 demos/07_serve_and_tune.py
"""

import base64
from pathlib import Path

from fastapi.testclient import TestClient

from condmri import data as D
from condmri.service import create_app

desk = Path(__file__).parent / "output" / "desk"
checkpoint = desk / "run" / "checkpoints" / "best.pt"
if not checkpoint.exists():
    raise SystemExit("run demos/05_train_desk_model.py first")

app = create_app(checkpoint=checkpoint, dataset=desk / "dataset" / "manifest.json")
client = TestClient(app)

catalog = client.get("/slices").json()["slices"]
slice_id = next(s["slice_id"] for s in catalog if s["split"] == "test")
info = client.get("/model/info").json()
print(f"serving {len(catalog)} slices; model config hash {info['config_hash'][:12]}...")
print(f"tuning slice {slice_id} at sigma = 5e-5\n")

print("lambda   PSNR (dB)   SSIM")
best = None
for lam in [0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0]:
    body = client.post(
        "/reconstruct",
        json={"slice_id": slice_id, "lambda": lam, "sigma": 5e-5, "seed": 0,
              "return_maps": ["recon"]},
    ).json()
    marker = ""
    if best is None or body["psnr"] > best[1]:
        best = (lam, body["psnr"])
    print(f"  {lam:4.2f}   {body['psnr']:8.2f}   {body['ssim']:.4f}")
print(f"\nsuggested lambda_opt = {best[0]} ({best[1]:.2f} dB) - "
      "the console shows this as the sweep argmax, the user stays in charge")

out = desk / "tuned_recon.png"
body = client.post(
    "/reconstruct",
    json={"slice_id": slice_id, "lambda": best[0], "sigma": 5e-5, "seed": 0,
          "return_maps": ["recon"]},
).json()
out.write_bytes(base64.b64decode(body["images"]["recon"]))
print(f"wrote {out}")
