"""HTTP service: reference uploads, asynchronous fits, preset CRUD, renders.

Fits run on a bounded worker pool and are polled by job id; renders are
synchronous and capped to a preview size unless the full image is asked
for. All image math is the pure library code, so concurrent requests are
safe by construction.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, Response

from .fit import FitConfig, fit_style
from .image import ImageError, decode_image, encode_png, resize_long_edge
from .metrics import concept_stats
from .params import (
    ALL_CONCEPTS,
    ConceptId,
    ConceptMask,
    ConceptParams,
    StrengthHue,
    neutral_params,
)
from .pcturb import (
    DegenerateImageError,
    PresetError,
    StylePreset,
    apply_style,
    decode_preset,
    encode_preset,
    now_rfc3339,
)
from .store import PresetExistsError, PresetNotFoundError, PresetStore

MAX_UPLOAD_BYTES = 32 * 1024 * 1024
PREVIEW_LONG_EDGE = 1024

_CONCEPT_BY_NAME = {c.name.lower(): c for c in ConceptId}


@dataclass
class FitJob:
    id: str
    state: str = "queued"  # queued -> running -> done | failed
    progress: tuple[int, float] | None = None
    result: Optional[StylePreset] = None
    error: Optional[str] = None
    submitted_at: str = field(default_factory=now_rfc3339)
    finished_at: Optional[str] = None

    def view(self) -> dict:
        return {
            "id": self.id,
            "state": self.state,
            "progress": (
                {"iteration": self.progress[0], "loss": self.progress[1]}
                if self.progress
                else None
            ),
            "result": json.loads(encode_preset(self.result)) if self.result else None,
            "error": self.error,
            "submitted_at": self.submitted_at,
            "finished_at": self.finished_at,
        }


class JobManager:
    """Bounded worker pool with a forward-only job state machine."""

    def __init__(self, workers: int):
        self._pool = ThreadPoolExecutor(max_workers=workers)
        self._jobs: dict[str, FitJob] = {}
        self._lock = threading.Lock()

    def submit(self, references: list[np.ndarray], config: FitConfig, name: str) -> FitJob:
        job = FitJob(id=uuid.uuid4().hex[:12])
        with self._lock:
            self._jobs[job.id] = job
        self._pool.submit(self._run, job, references, config, name)
        return job

    def get(self, job_id: str) -> Optional[FitJob]:
        with self._lock:
            return self._jobs.get(job_id)

    def _run(self, job: FitJob, references, config: FitConfig, name: str) -> None:
        with self._lock:
            job.state = "running"

        def progress(iteration: int, loss: float, _params) -> None:
            with self._lock:
                job.progress = (iteration, loss)

        try:
            preset, _report = fit_style(references, config, progress=progress, name=name)
            with self._lock:
                job.result = preset
                job.state = "done"
                job.finished_at = now_rfc3339()
        except Exception as exc:  # surface any failure in the job view
            with self._lock:
                job.error = str(exc)
                job.state = "failed"
                job.finished_at = now_rfc3339()

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)


def _parse_concept_mask(raw: Optional[str]) -> ConceptMask:
    if raw is None or raw.strip() == "":
        return ALL_CONCEPTS
    concepts = set()
    for token in raw.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token not in _CONCEPT_BY_NAME:
            raise HTTPException(400, f"unknown concept {token!r}")
        concepts.add(_CONCEPT_BY_NAME[token])
    return frozenset(concepts)


def parse_params_json(doc: dict, base: Optional[ConceptParams] = None) -> ConceptParams:
    """Build ConceptParams from a (possibly partial) JSON object."""
    params = base if base is not None else neutral_params()
    if not isinstance(doc, dict):
        raise ValueError("params must be an object")
    for key, value in doc.items():
        key = key.lower()
        if key not in _CONCEPT_BY_NAME:
            raise ValueError(f"unknown concept {key!r}")
        concept = _CONCEPT_BY_NAME[key]
        from .params import SCALAR_CONCEPTS, Scalar

        if concept in SCALAR_CONCEPTS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"{key} must be a number")
            params = params.with_value(concept, Scalar(float(value)))
        else:
            if not isinstance(value, dict) or set(value) - {"strength", "hue"}:
                raise ValueError(f"{key} must be {{strength, hue}}")
            params = params.with_value(
                concept,
                StrengthHue(float(value.get("strength", 0.0)), float(value.get("hue", 0.0))),
            )
    params.validate()
    return params


async def _read_upload(upload: UploadFile) -> np.ndarray:
    data = await upload.read()
    if len(data) > MAX_UPLOAD_BYTES:
        raise HTTPException(413, "upload exceeds 32 MiB")
    try:
        return decode_image(data)
    except ImageError as exc:
        raise HTTPException(400, f"bad image: {exc}") from exc


def create_app(
    data_dir: str | Path, worker_count: int = 2, ui_dir: Optional[str | Path] = None
) -> FastAPI:
    data_dir = Path(data_dir)
    references_dir = data_dir / "references"
    references_dir.mkdir(parents=True, exist_ok=True)
    presets = PresetStore(data_dir / "presets")
    jobs = JobManager(worker_count)

    app = FastAPI(title="pif", version="0.1.0")
    app.state.presets = presets
    app.state.jobs = jobs

    def load_reference(reference_id: str) -> np.ndarray:
        path = references_dir / f"{reference_id}.png"
        if not path.is_file():
            raise HTTPException(404, f"unknown reference {reference_id!r}")
        return decode_image(path.read_bytes())

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/api/references")
    async def upload_reference(file: UploadFile = File(...)) -> dict:
        img = await _read_upload(file)
        reference_id = uuid.uuid4().hex[:12]
        (references_dir / f"{reference_id}.png").write_bytes(encode_png(img, 16))
        return {"reference_id": reference_id}

    @app.get("/api/stats/{reference_id}")
    def reference_stats(reference_id: str) -> dict:
        stats = concept_stats(load_reference(reference_id))
        return dataclasses.asdict(stats)

    @app.post("/api/fit")
    async def start_fit(request: Request) -> dict:
        try:
            body = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            raise HTTPException(400, f"invalid JSON body: {exc}") from exc
        if not isinstance(body, dict):
            raise HTTPException(400, "body must be an object")
        ids = body.get("reference_ids")
        if not isinstance(ids, list) or not ids:
            raise HTTPException(400, "reference_ids must be a non-empty list")
        references = [load_reference(str(rid)) for rid in ids]
        overrides = body.get("config", {})
        if not isinstance(overrides, dict):
            raise HTTPException(400, "config must be an object")
        allowed = {f.name for f in dataclasses.fields(FitConfig)}
        unknown = set(overrides) - allowed
        if unknown:
            raise HTTPException(400, f"unknown config fields: {sorted(unknown)}")
        try:
            config = FitConfig(**overrides)
        except (TypeError, ValueError) as exc:
            raise HTTPException(400, f"bad config: {exc}") from exc
        name = body.get("name", "fitted")
        if not isinstance(name, str):
            raise HTTPException(400, "name must be a string")
        job = jobs.submit(references, config, name)
        return {"job_id": job.id}

    @app.get("/api/fit/{job_id}")
    def fit_status(job_id: str) -> dict:
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        return job.view()

    @app.get("/api/presets")
    def list_presets() -> list[dict]:
        return [
            {"name": p.name, "created_at": p.created_at, "fitted": p.fit_meta is not None}
            for p in presets.list()
        ]

    @app.get("/api/presets/{name}")
    def get_preset(name: str) -> Response:
        try:
            preset = presets.get(name)
        except PresetNotFoundError:
            raise HTTPException(404, f"unknown preset {name!r}") from None
        return Response(encode_preset(preset), media_type="application/json")

    @app.put("/api/presets/{name}")
    async def put_preset(name: str, request: Request) -> JSONResponse:
        try:
            preset = decode_preset(await request.body())
        except PresetError as exc:
            raise HTTPException(400, f"bad preset: {exc}") from exc
        try:
            presets.put(name, preset)
        except PresetExistsError:
            raise HTTPException(409, f"preset {name!r} already exists") from None
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        return JSONResponse({"name": name}, status_code=201)

    @app.delete("/api/presets/{name}")
    def delete_preset(name: str) -> dict:
        try:
            presets.delete(name)
        except PresetNotFoundError:
            raise HTTPException(404, f"unknown preset {name!r}") from None
        return {"deleted": name}

    @app.post("/api/render")
    async def render(
        file: UploadFile = File(...),
        preset_name: Optional[str] = Form(None),
        params: Optional[str] = Form(None),
        overrides: Optional[str] = Form(None),
        mode: str = Form("absolute"),
        concepts: Optional[str] = Form(None),
        full: bool = Form(False),
    ) -> Response:
        content = await _read_upload(file)
        if mode not in ("absolute", "relative"):
            raise HTTPException(400, "mode must be 'absolute' or 'relative'")
        mask = _parse_concept_mask(concepts)

        if preset_name is not None:
            try:
                preset = presets.get(preset_name)
            except PresetNotFoundError:
                raise HTTPException(404, f"unknown preset {preset_name!r}") from None
        elif params is not None:
            preset = StylePreset(params=neutral_params(), name="inline")
        else:
            raise HTTPException(400, "provide preset_name or inline params")

        resolved = preset.params
        try:
            if params is not None:
                resolved = parse_params_json(json.loads(params), base=resolved)
            if overrides is not None:
                resolved = parse_params_json(json.loads(overrides), base=resolved)
        except (ValueError, json.JSONDecodeError) as exc:
            raise HTTPException(400, f"bad params: {exc}") from exc
        preset = dataclasses.replace(preset, params=resolved)

        if not full:
            content = resize_long_edge(content, PREVIEW_LONG_EDGE)
        try:
            out = apply_style(content, preset, mode=mode, mask=mask)
        except DegenerateImageError as exc:
            raise HTTPException(422, str(exc)) from exc
        return Response(encode_png(out, 8), media_type="image/png")

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(port: int, data_dir: str | Path, worker_count: int) -> None:
    """Run the service until interrupted."""
    import uvicorn

    ui_dir = os.environ.get("PIF_UI_DIR")
    if ui_dir is None and Path("frontend/index.html").is_file():
        ui_dir = "frontend"
    uvicorn.run(
        create_app(data_dir, worker_count, ui_dir=ui_dir),
        host="127.0.0.1",
        port=port,
        log_level="info",
    )
