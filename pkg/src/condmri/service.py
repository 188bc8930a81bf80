"""Read-only HTTP inference service for interactive lambda tuning.

Endpoints:
    GET  /health       liveness + readiness flag
    GET  /slices       catalog of served slice ids with small thumbnails
    GET  /model/info   checkpoint config, its hash, training-log summary
    POST /reconstruct  one reconstruction at (slice, lambda, sigma, seed)

Noise is injected server side from a seed derived from
(slice_id, sigma, seed), so sweeping lambda at a fixed slice and noise level
compares reconstructions of the *identical* corrupted measurement - the
whole point of manual lambda tuning.  Responses are cached by the full
request; identical requests return identical bodies.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import threading
import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import metrics
from .data import Dataset
from .evaluate import reconstruct_slice
from .models.unrolled import load_checkpoint
from .seeding import stable_seed
from .transforms import NoiseSpec, add_noise, apply_mask, zero_filled_recon

__all__ = ["ReconRequest", "create_app", "KNOWN_MAPS"]

KNOWN_MAPS = ("recon", "zero_filled", "gt", "error_map")
THUMBNAIL_MAX = 128


class ReconRequest(BaseModel):
    slice_id: str
    lam: float = Field(alias="lambda", ge=0.0, le=1.0)
    sigma: float = Field(default=0.0, ge=0.0)
    seed: int = 0
    return_maps: list[str] = Field(default_factory=lambda: list(KNOWN_MAPS))

    model_config = {"populate_by_name": True}


def _png_b64(mag: np.ndarray, data_range: float, max_side: int | None = None) -> str:
    """Window/level the magnitude to [0, data_range] and encode as PNG."""
    from PIL import Image

    data_range = max(data_range, np.finfo(np.float64).tiny)
    arr = np.clip(mag / data_range, 0.0, 1.0)
    img = Image.fromarray((arr * 255.0).round().astype(np.uint8), mode="L")
    if max_side is not None and max(img.size) > max_side:
        scale = max_side / max(img.size)
        img = img.resize(
            (max(1, int(img.size[0] * scale)), max(1, int(img.size[1] * scale)))
        )
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _error_body(field: str, message: str) -> dict:
    return {"errors": [{"field": field, "message": message}]}


def _json_safe(value):
    """Starlette's JSON encoder rejects NaN/inf; map them to None."""
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def create_app(
    checkpoint=None,
    dataset=None,
    *,
    model=None,
    model_info: dict | None = None,
    cors_origins: "list[str] | str" = "*",
) -> FastAPI:
    """Build the service.  Pass ``checkpoint``/``dataset`` paths (or an
    already loaded model and :class:`Dataset`); with neither loaded the
    endpoints answer 503."""
    app = FastAPI(title="condmri inference service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origins] if isinstance(cors_origins, str) else cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    state = app.state
    state.model = None
    state.model_info = model_info or {}
    state.dataset = None
    state.cache = {}
    state.lock = threading.Lock()

    if model is not None:
        state.model = model.eval()
    elif checkpoint is not None:
        state.model, info = load_checkpoint(checkpoint)
        state.model_info = {**info["spec"], "meta": info["meta"]}
    if isinstance(dataset, Dataset):
        state.dataset = dataset
    elif dataset is not None:
        state.dataset = Dataset(dataset)

    def ready() -> bool:
        return state.model is not None and state.dataset is not None

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = [
            {
                "field": ".".join(str(p) for p in err["loc"] if p != "body"),
                "message": err["msg"],
            }
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"errors": errors})

    @app.get("/health")
    def health():
        return {"status": "ok", "ready": ready()}

    @app.get("/slices")
    def slices():
        if not ready():
            return JSONResponse(status_code=503, content=_error_body("service", "model not ready"))
        out = []
        for slice_id in state.dataset.ids():
            rec = state.dataset.get(slice_id)
            gt_mag = np.abs(rec.image_gt)
            out.append(
                {
                    "slice_id": slice_id,
                    "split": rec.split,
                    "shape": list(rec.kspace_full.shape),
                    "thumbnail_png": _png_b64(
                        gt_mag, float(gt_mag.max()), max_side=THUMBNAIL_MAX
                    ),
                }
            )
        return {"slices": out}

    @app.get("/model/info")
    def model_info_endpoint():
        if state.model is None:
            return JSONResponse(status_code=503, content=_error_body("service", "model not ready"))
        info = state.model_info
        config_json = json.dumps(info, sort_keys=True, default=str)
        summary = {
            "model": info.get("model", state.model.kind),
            "config": info.get("config", {}),
            "config_hash": hashlib.sha256(config_json.encode()).hexdigest(),
            "lambda_conditioned": bool(getattr(state.model, "hypernet", None)),
            "training_meta": _json_safe(info.get("meta", {})),
        }
        return summary

    @app.post("/reconstruct")
    def reconstruct(req: ReconRequest):
        if not ready():
            return JSONResponse(status_code=503, content=_error_body("service", "model not ready"))
        unknown = sorted(set(req.return_maps) - set(KNOWN_MAPS))
        if unknown:
            return JSONResponse(
                status_code=400,
                content=_error_body("return_maps", f"unknown maps: {', '.join(unknown)}"),
            )
        try:
            rec = state.dataset.get(req.slice_id)
        except Exception:
            return JSONResponse(
                status_code=404,
                content=_error_body("slice_id", f"unknown slice {req.slice_id!r}"),
            )

        key = (req.slice_id, req.lam, req.sigma, req.seed, tuple(sorted(req.return_maps)))
        with state.lock:
            cached = state.cache.get(key)
        if cached is not None:
            return cached

        t0 = time.monotonic()
        gt = rec.image_gt
        gt_mag = np.abs(gt)
        data_range = float(gt_mag.max())

        ksp = apply_mask(rec.kspace_full.astype(np.complex128), rec.mask)
        noise_seed = stable_seed(req.slice_id, req.sigma, req.seed)
        corrupted = add_noise(ksp, NoiseSpec(sigma=req.sigma, seed=noise_seed))
        recon = reconstruct_slice(state.model, corrupted, req.lam)
        recon_mag = np.abs(recon)

        images = {}
        if "recon" in req.return_maps:
            images["recon"] = _png_b64(recon_mag, data_range)
        if "zero_filled" in req.return_maps:
            images["zero_filled"] = _png_b64(np.abs(zero_filled_recon(corrupted)), data_range)
        if "gt" in req.return_maps:
            images["gt"] = _png_b64(gt_mag, data_range)
        if "error_map" in req.return_maps:
            images["error_map"] = _png_b64(np.abs(recon_mag - gt_mag), data_range)

        body = {
            "slice_id": req.slice_id,
            "lambda": req.lam,
            "sigma": req.sigma,
            "seed": req.seed,
            "psnr": metrics.cap_psnr(metrics.psnr(recon, gt, data_range)),
            "ssim": metrics.ssim(recon, gt, data_range),
            "data_range": data_range,
            "runtime_s": time.monotonic() - t0,
            "images": images,
        }
        with state.lock:
            state.cache[key] = body
        return body

    return app
