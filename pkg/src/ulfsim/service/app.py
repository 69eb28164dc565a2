"""HTTP service for the interactive tuning workflow.

Every endpoint is a thin adapter over the library: upload volumes, run
parameterized degradations, inspect slices and radial spectra, compare a
degraded result against a reference spectrum, and manage parameter presets
that export directly as batch-generation config fragments.
"""

import io
import json
import math
import uuid
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from PIL import Image

from ..dataset import PipelineConfig
from ..errors import InfeasibleMaskError, InvalidInputError, NiftiError
from ..kspace import SamplingConfig, config_from_params, params_from_dict
from ..metrics import spectrum_report
from ..nifti import read_volume_bytes, volume_bytes
from .schemas import (
    CompareResponse,
    DegradeRequest,
    DegradeResponse,
    ParamsModel,
    PresetCreate,
    PresetInfo,
    ReferenceRequest,
    VolumeInfo,
)
from .store import PresetStore, ResultStore, VolumeStore

REFERENCE_BINS = 64
DOCUMENTED_RANGES = SamplingConfig()


@dataclass
class ServiceConfig:
    max_upload_bytes: int = 256 * 1024 * 1024
    cache_bytes: int = 512 * 1024 * 1024
    presets_path: str = "presets.json"
    ui_dir: str | None = None


def _range_violations(params):
    """Sampling-range conformance; hard invariants are checked by the
    dataclasses themselves."""
    img, ksp = params.image, params.kspace
    doc = DOCUMENTED_RANGES
    checks = [
        ("image.t2", img.t2, doc.t2),
        ("image.te", img.te, doc.te),
        ("image.b0_strength", img.b0_strength, doc.b0_strength),
        ("kspace.rho", ksp.rho, doc.rho),
        ("kspace.center_fraction", ksp.center_fraction, doc.center_fraction),
        ("kspace.target_snr", ksp.target_snr, doc.target_snr),
    ]
    violations = []
    for name, value, (lo, hi) in checks:
        if not lo <= value <= hi:
            violations.append(f"{name}={value} outside [{lo}, {hi}]")
    if ksp.r_accel not in doc.r_accel:
        violations.append(f"kspace.r_accel={ksp.r_accel} not in {set(doc.r_accel)}")
    return violations


def _slice_png(data, axis, index, window):
    axes = {"x": 0, "y": 1, "z": 2}
    if axis not in axes:
        raise InvalidInputError(f"axis must be one of x, y, z; got {axis!r}")
    ax = axes[axis]
    if not 0 <= index < data.shape[ax]:
        return None
    plane = np.take(data, index, axis=ax)
    if window is not None:
        try:
            lo, hi = (float(x) for x in window.split(","))
        except ValueError as exc:
            raise InvalidInputError(f"window must be 'lo,hi', got {window!r}") from exc
    else:
        lo, hi = np.percentile(data, (1, 99))
    if hi <= lo:
        scaled = np.zeros_like(plane)
    else:
        scaled = np.clip((plane - lo) / (hi - lo), 0.0, 1.0)
    img = Image.fromarray(np.round(scaled * 255).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _normalized_bins(power):
    total = float(np.sum(power))
    if total == 0.0:
        return np.zeros(len(power))
    return np.asarray(power) / total


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="ulfsim tuning service")

    volumes = VolumeStore()
    results = ResultStore(volumes, cache_bytes=config.cache_bytes)
    presets = PresetStore(config.presets_path)
    state = {"session_id": "s-" + uuid.uuid4().hex[:12], "reference": None}

    @app.exception_handler(InfeasibleMaskError)
    async def infeasible_handler(_request: Request, exc: InfeasibleMaskError):
        return JSONResponse(
            status_code=422,
            content={"detail": str(exc), "max_feasible_accel": exc.max_feasible_accel},
        )

    @app.exception_handler(InvalidInputError)
    async def invalid_handler(_request: Request, exc: InvalidInputError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(NiftiError)
    async def nifti_handler(_request: Request, exc: NiftiError):
        return JSONResponse(status_code=422, content={"detail": f"NIfTI parse failure: {exc}"})

    def _error(status, detail):
        return JSONResponse(status_code=status, content={"detail": detail})

    def _get_volume_or_none(volume_id):
        return volumes.get(volume_id)

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "session_id": state["session_id"],
            "cache_bytes_used": results.cache_bytes_used,
        }

    @app.post("/volumes", response_model=VolumeInfo)
    async def upload_volume(request: Request):
        body = await request.body()
        if len(body) > config.max_upload_bytes:
            return _error(413, f"upload of {len(body)} bytes exceeds limit {config.max_upload_bytes}")
        if not body:
            return _error(422, "empty body; expected NIfTI-1 bytes")
        volume = read_volume_bytes(body)  # NiftiError -> 422 via handler
        volume_id = volumes.add(volume)
        return VolumeInfo(volume_id=volume_id, shape=list(volume.shape), spacing=list(volume.spacing))

    @app.post("/degrade", response_model=DegradeResponse)
    def degrade(req: DegradeRequest):
        if volumes.get(req.volume_id) is None:
            return _error(404, f"unknown volume {req.volume_id}")
        params = req.params.to_record(req.seed)  # InvalidInputError -> 422
        if not req.allow_out_of_range:
            violations = _range_violations(params)
            if violations:
                return _error(
                    422,
                    "parameters outside documented sampling ranges (set allow_out_of_range "
                    "to explore): " + "; ".join(violations),
                )
        result_id, entry, cache_hit = results.degrade(req.volume_id, params)
        return DegradeResponse(result_id=result_id, cache_hit=cache_hit, report=entry.report)

    def _materialized(result_id):
        return results.materialize(result_id)

    @app.get("/results/{result_id}/slice")
    def result_slice(result_id: str, axis: str = "z", index: int = 0, window: str | None = None):
        entry = _materialized(result_id)
        if entry is None:
            return _error(404, f"unknown result {result_id}")
        png = _slice_png(entry.volume.data, axis, index, window)
        if png is None:
            return _error(416, f"slice index {index} out of range for axis {axis}")
        return Response(content=png, media_type="image/png")

    @app.get("/results/{result_id}/spectrum")
    def result_spectrum(result_id: str, bins: int = 32):
        entry = _materialized(result_id)
        if entry is None:
            return _error(404, f"unknown result {result_id}")
        return spectrum_report(entry.volume, n_bins=bins)

    @app.get("/results/{result_id}/volume")
    def result_volume(result_id: str):
        entry = _materialized(result_id)
        if entry is None:
            return _error(404, f"unknown result {result_id}")
        return Response(
            content=volume_bytes(entry.volume, datatype="float32"),
            media_type="application/octet-stream",
        )

    @app.get("/results/{result_id}/report")
    def result_report(result_id: str):
        entry = _materialized(result_id)
        if entry is None:
            return _error(404, f"unknown result {result_id}")
        return entry.report

    @app.get("/volumes/{volume_id}/slice")
    def volume_slice(volume_id: str, axis: str = "z", index: int = 0, window: str | None = None):
        volume = _get_volume_or_none(volume_id)
        if volume is None:
            return _error(404, f"unknown volume {volume_id}")
        png = _slice_png(volume.data, axis, index, window)
        if png is None:
            return _error(416, f"slice index {index} out of range for axis {axis}")
        return Response(content=png, media_type="image/png")

    @app.get("/volumes/{volume_id}/spectrum")
    def volume_spectrum(volume_id: str, bins: int = 32):
        volume = _get_volume_or_none(volume_id)
        if volume is None:
            return _error(404, f"unknown volume {volume_id}")
        return spectrum_report(volume, n_bins=bins)

    @app.post("/reference-spectrum")
    def set_reference(req: ReferenceRequest):
        volume = _get_volume_or_none(req.volume_id)
        if volume is None:
            return _error(404, f"unknown volume {req.volume_id}")
        payload = spectrum_report(volume, n_bins=REFERENCE_BINS)
        state["reference"] = {"volume_id": req.volume_id, "spectrum": payload}
        return {"reference_volume_id": req.volume_id, "spectrum": payload}

    @app.get("/compare/{result_id}", response_model=CompareResponse)
    def compare(result_id: str):
        reference = state["reference"]
        if reference is None:
            return _error(409, "no reference spectrum set; POST /reference-spectrum first")
        entry = _materialized(result_id)
        if entry is None:
            return _error(404, f"unknown result {result_id}")
        result_payload = spectrum_report(entry.volume, n_bins=REFERENCE_BINS)
        ref_payload = reference["spectrum"]
        deltas = {
            band: result_payload["band_fractions"][band] - ref_payload["band_fractions"][band]
            for band in ("low", "mid", "high")
        }
        l1 = float(
            np.sum(np.abs(_normalized_bins(result_payload["power"]) - _normalized_bins(ref_payload["power"])))
        )
        return CompareResponse(
            reference_volume_id=reference["volume_id"], band_deltas=deltas, l1_distance=l1
        )

    @app.post("/presets", response_model=PresetInfo, status_code=201)
    def create_preset(req: PresetCreate):
        params = req.params.to_record(req.seed)
        record = presets.create(req.name, params, notes=req.notes)
        if record is None:
            return _error(409, f"preset {req.name!r} already exists")
        return _preset_info(record)

    def _preset_info(record):
        return PresetInfo(
            name=record["name"],
            params=ParamsModel.from_record(params_from_dict(record["params"])),
            seed=record["seed"],
            notes=record["notes"],
            created_at=record["created_at"],
        )

    @app.get("/presets")
    def list_presets():
        return [_preset_info(r) for r in presets.list()]

    @app.get("/presets/{name}", response_model=PresetInfo)
    def get_preset(name: str):
        record = presets.get(name)
        if record is None:
            return _error(404, f"no preset named {name!r}")
        return _preset_info(record)

    @app.delete("/presets/{name}", status_code=204)
    def delete_preset(name: str):
        if not presets.delete(name):
            return _error(404, f"no preset named {name!r}")
        return Response(status_code=204)

    @app.get("/presets/{name}/export")
    def export_preset(name: str):
        record = presets.get(name)
        if record is None:
            return _error(404, f"no preset named {name!r}")
        sampling = config_from_params(params_from_dict(record["params"]))
        fragment = PipelineConfig(sampling=sampling).to_dict()
        text = json.dumps(fragment, indent=2) + "\n"
        return Response(content=text, media_type="application/json")

    if config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
