"""Command-line entrypoints.

    condmri make-data    synthesize and persist a phantom dataset
    condmri train        train a model from a JSON/TOML config file
    condmri evaluate     run the (model x lambda x sigma) metric grid
    condmri reconstruct  reconstruct one slice to image files + metrics
    condmri serve        start the HTTP inference service

Exit codes: 0 ok, 2 usage/config errors, 3 data errors, 4 checkpoint
errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .data import DEFAULT_SIGNAL_SCALE, DataError, Dataset, make_dataset
from .models.unrolled import CheckpointError

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CHECKPOINT = 4


class UsageError(RuntimeError):
    pass


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {path}")
    text = p.read_text()
    if p.suffix == ".toml":
        try:
            import tomllib  # py >= 3.11
        except ImportError:  # pragma: no cover - depends on interpreter
            try:
                import tomli as tomllib
            except ImportError as exc:
                raise UsageError(
                    "TOML configs need Python >= 3.11 or the tomli package; "
                    "use JSON instead"
                ) from exc
        return tomllib.loads(text)
    return json.loads(text)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated float list, got {text!r}") from exc


def _train_config(raw: dict):
    from .scheduler import ScheduleState
    from .training import TrainConfig

    raw = dict(raw)
    sched = ScheduleState(**raw.pop("scheduler", {}))
    if "loss_weights" in raw:
        raw["loss_weights"] = tuple(raw["loss_weights"])
    if raw.get("augment_noise") is not None:
        raw["augment_noise"] = tuple(raw["augment_noise"])
    try:
        return TrainConfig(scheduler=sched, **raw)
    except TypeError as exc:
        raise UsageError(f"bad train config: {exc}") from exc


def _model_config(raw: dict):
    from .models.backbones import BackboneConfig
    from .models.unrolled import UnrolledConfig, model_from_dict

    model = model_from_dict(raw)
    if not isinstance(model.config, (UnrolledConfig, BackboneConfig)):
        raise UsageError(f"cannot train a {raw.get('model')!r} model")
    return model.config


def cmd_make_data(args) -> int:
    fractions = tuple(_floats(args.splits))
    ds = make_dataset(
        n=args.n,
        size=args.size,
        accel=args.accel,
        center_frac=args.center_frac,
        seed=args.seed,
        split_fractions=fractions,
        out_dir=args.out,
        signal_scale=args.signal_scale,
    )
    print(f"wrote {len(ds)} records to {ds.manifest_path}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .training import train

    cfg = _load_config(args.config)
    for key in ("dataset", "out_dir", "model", "train"):
        if key not in cfg:
            raise UsageError(f"config is missing the {key!r} section")
    dataset = Dataset(args.dataset or cfg["dataset"])
    out_dir = args.out or cfg["out_dir"]
    result = train(dataset, _model_config(cfg["model"]), _train_config(cfg["train"]), out_dir)
    print(
        f"trained {result.best_checkpoint} "
        f"(best val PSNR {result.best_val_psnr:.2f} dB, {result.seconds:.0f}s)"
    )
    return EXIT_OK


def _parse_checkpoints(specs: list[str]) -> dict:
    models: dict = {}
    for spec in specs:
        if "=" in spec:
            name, path = spec.split("=", 1)
        else:
            name, path = Path(spec).stem, spec
        if path != "zero_filled" and not Path(path).exists():
            raise CheckpointError(f"no such checkpoint: {path}")
        models[name] = path
    return models


def cmd_evaluate(args) -> int:
    from .evaluate import evaluate_grid, plot_report, report_to_csv, report_to_json

    models = _parse_checkpoints(args.checkpoints)
    if args.zero_filled:
        models.setdefault("zero_filled", "zero_filled")
    if not models:
        raise UsageError("no models given; pass --checkpoints and/or --zero-filled")
    dataset = Dataset(args.dataset)
    report = evaluate_grid(
        models,
        _floats(args.lambdas),
        _floats(args.sigmas),
        dataset,
        split=args.split,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = report_to_csv(report, out / "report.csv")
    json_path = report_to_json(report, out / "report.json")
    print(f"wrote {csv_path} and {json_path}")
    if args.plot:
        print(f"wrote {plot_report(report, out / 'psnr_vs_sigma.png')}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    import numpy as np

    from . import metrics
    from .evaluate import reconstruct_slice
    from .models.unrolled import load_checkpoint
    from .seeding import stable_seed
    from .service import _png_b64
    from .transforms import NoiseSpec, add_noise, apply_mask, zero_filled_recon

    model, _ = load_checkpoint(args.checkpoint)
    dataset = Dataset(args.dataset)
    rec = dataset.get(args.slice)

    ksp = apply_mask(rec.kspace_full.astype(np.complex128), rec.mask)
    corrupted = add_noise(
        ksp, NoiseSpec(sigma=args.sigma, seed=stable_seed(args.slice, args.sigma, args.seed))
    )
    recon = reconstruct_slice(model, corrupted, getattr(args, "lambda"))
    gt = rec.image_gt
    data_range = float(np.abs(gt).max())

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "recon.npy", recon)
    import base64

    maps = {
        "recon": np.abs(recon),
        "zero_filled": np.abs(zero_filled_recon(corrupted)),
        "gt": np.abs(gt),
        "error_map": np.abs(np.abs(recon) - np.abs(gt)),
    }
    for name, mag in maps.items():
        (out / f"{name}.png").write_bytes(base64.b64decode(_png_b64(mag, data_range)))
    result = {
        "slice_id": args.slice,
        "lambda": getattr(args, "lambda"),
        "sigma": args.sigma,
        "seed": args.seed,
        "psnr": metrics.cap_psnr(metrics.psnr(recon, gt, data_range)),
        "ssim": metrics.ssim(recon, gt, data_range),
        "data_range": data_range,
    }
    (out / "metrics.json").write_text(json.dumps(result, indent=1, sort_keys=True))
    print(f"wrote reconstruction to {out} (PSNR {result['psnr']:.2f} dB)")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(checkpoint=args.checkpoint, dataset=args.dataset)
    port = int(os.environ.get("CONDMRI_PORT", args.port))
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condmri",
        description="Noise-robust unrolled MRI reconstruction with lambda conditioning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-data", help="synthesize a phantom dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--accel", type=float, default=4.0)
    p.add_argument("--center-frac", type=float, default=0.08)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits", default="0.8,0.2", help="comma-separated fractions")
    p.add_argument("--signal-scale", type=float, default=DEFAULT_SIGNAL_SCALE)
    p.set_defaults(func=cmd_make_data)

    p = sub.add_parser("train", help="train from a JSON/TOML config file")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", help="override the config's dataset manifest")
    p.add_argument("--out", help="override the config's output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="run the robustness metric grid")
    p.add_argument(
        "--checkpoints",
        nargs="*",
        default=[],
        metavar="NAME=PATH",
        help="checkpoints to evaluate (bare paths use the file stem as name)",
    )
    p.add_argument("--zero-filled", action="store_true", help="include the naive baseline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--lambdas", default="0.1,0.5,0.9")
    p.add_argument("--sigmas", default="1e-5,5e-5,1e-4")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reconstruct", help="reconstruct one slice to files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--slice", required=True)
    p.add_argument("--lambda", type=float, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("serve", help="start the HTTP inference service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    lam = getattr(args, "lambda", None)
    if lam is not None and not 0.0 <= lam <= 1.0:
        parser.error(f"--lambda must lie in [0, 1], got {lam}")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except json.JSONDecodeError as exc:
        print(f"error: malformed config: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
