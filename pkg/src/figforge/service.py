"""HTTP job service: submit generations, poll status, fetch artifacts as they
appear, collect the feedback rubric, and accept editor save-backs.

Storage is the job directory tree plus one append-only feedback.ndjson —
no database. Download gating (final figure only after feedback) is off by
default and enabled per deployment.
"""

from __future__ import annotations

import base64
import json
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from figforge import pipeline, pngio
from figforge.errors import PipelineStageError
from figforge.injector import verify_editable_figure
from figforge.model import DraftProvenance, RasterDraft, SourceText, StyleReference
from figforge.svgkit import parse_svg, serialize_svg

_MEDIA_TYPES = {
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".json": "application/json",
}

LIKERT_METRICS = (
    "semantic_correctness",
    "information_completeness",
    "visual_quality",
    "style_consistency",
    "conversion_correctness",
)

_STATE_RANK = {"queued": 0, "running": 1, "done": 2, "failed": 2}


class CreateJobRequest(BaseModel):
    text: str = ""
    style: str | None = None  # base64 PNG
    image: str | None = None  # base64 PNG (vectorize mode)
    mode: Literal["generate", "vectorize"] = "generate"
    seed: int | None = None


class FeedbackIn(BaseModel):
    semantic_correctness: int = Field(ge=1, le=5)
    information_completeness: int = Field(ge=1, le=5)
    visual_quality: int = Field(ge=1, le=5)
    style_consistency: int = Field(ge=1, le=5)
    usability: int = Field(ge=0, le=1)
    conversion_correctness: int = Field(ge=1, le=5)
    free_text: str | None = None


def aggregate_feedback(records: list[dict]) -> dict:
    """Exact arithmetic over stored records: per-metric mean, histogram over
    1..5, and n, plus the positive-usability count."""
    out: dict = {"n": len(records), "metrics": {}, "usability": {"n": 0, "positive": 0}}
    for metric in LIKERT_METRICS:
        values = [r[metric] for r in records if metric in r]
        histogram = [0, 0, 0, 0, 0]
        for v in values:
            histogram[v - 1] += 1
        entry: dict = {"n": len(values), "histogram": histogram}
        if values:
            entry["mean"] = sum(values) / len(values)
        out["metrics"][metric] = entry
    usability = [r["usability"] for r in records if "usability" in r]
    out["usability"] = {"n": len(usability), "positive": sum(usability)}
    return out


class JobStore:
    """Job state on disk, transitions forward-only, one lock per job."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._feedback_lock = threading.Lock()

    def lock(self, job_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(job_id, threading.Lock())

    def job_dir(self, job_id: str) -> Path:
        return self.data_dir / job_id

    def state_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "state.json"

    def read(self, job_id: str) -> dict | None:
        path = self.state_path(job_id)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def write(self, job_id: str, **updates) -> dict:
        with self.lock(job_id):
            state = self.read(job_id) or {
                "id": job_id,
                "state": "queued",
                "stage": None,
                "reason": None,
                "created": _now(),
                "updated": _now(),
                "feedback_submitted": False,
            }
            new_state = updates.get("state")
            if new_state is not None:
                if _STATE_RANK[new_state] < _STATE_RANK[state["state"]]:
                    raise ValueError(
                        f"illegal transition {state['state']} -> {new_state}"
                    )
                if state["state"] in ("done", "failed") and new_state != state["state"]:
                    raise ValueError(f"job already {state['state']}")
            state.update(updates)
            state["updated"] = _now()
            tmp = self.state_path(job_id).with_suffix(".tmp")
            tmp.write_text(json.dumps(state, indent=2), encoding="utf-8")
            tmp.replace(self.state_path(job_id))
            return state

    def append_feedback(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._feedback_lock:
            with open(self.data_dir / "feedback.ndjson", "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def feedback_records(self) -> list[dict]:
        path = self.data_dir / "feedback.ndjson"
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _decode_png(encoded: str):
    return pngio.decode_rgb(base64.b64decode(encoded, validate=True))


def _run_job(store: JobStore, job_id: str, req: CreateJobRequest, mock: bool) -> None:
    job_dir = store.job_dir(job_id)
    cfg = pipeline.PipelineConfig(
        output_dir=job_dir,
        mock=mock,
        seed=req.seed,
        progress=lambda stage: store.write(job_id, state="running", stage=stage),
    )
    try:
        if req.mode == "vectorize":
            draft = RasterDraft(_decode_png(req.image), DraftProvenance("upload", None))
            pipeline.vectorize_existing(draft, cfg, job_id=job_id)
        else:
            style = None
            if req.style:
                style = StyleReference(_decode_png(req.style))
            pipeline.run_pipeline(SourceText(req.text), style, cfg, job_id=job_id)
        store.write(job_id, state="done", stage=None)
    except PipelineStageError as exc:
        store.write(job_id, state="failed", stage=exc.stage, reason=str(exc.cause))
    except Exception as exc:
        store.write(job_id, state="failed", reason=str(exc))


def create_app(
    data_dir: str | Path,
    gate_download: bool = False,
    mock: bool = True,
    app_dir: str | Path | None = None,
    synchronous: bool = False,
) -> FastAPI:
    """Build the service. `synchronous=True` runs jobs inline (tests);
    otherwise each job gets a worker thread."""
    store = JobStore(Path(data_dir))
    app = FastAPI(title="figforge")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.post("/jobs", status_code=202)
    def create_job(req: CreateJobRequest):
        if req.mode == "generate" and not req.text.strip():
            return JSONResponse({"error": "text is required for generate mode"}, 400)
        if req.mode == "vectorize":
            if not req.image:
                return JSONResponse({"error": "image is required for vectorize mode"}, 400)
            try:
                _decode_png(req.image)
            except Exception:
                return JSONResponse({"error": "image is not a base64 PNG"}, 400)
        if req.style:
            try:
                _decode_png(req.style)
            except Exception:
                return JSONResponse({"error": "style is not a base64 PNG"}, 400)

        job_id = uuid.uuid4().hex[:12]
        store.job_dir(job_id).mkdir(parents=True)
        store.write(job_id)  # queued
        if synchronous:
            _run_job(store, job_id, req, mock)
        else:
            worker = threading.Thread(
                target=_run_job, args=(store, job_id, req, mock), daemon=True
            )
            worker.start()
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        state = store.read(job_id)
        if state is None:
            return JSONResponse({"error": "unknown job"}, 404)
        return state

    @app.get("/jobs/{job_id}/artifacts/{name:path}")
    def get_artifact(job_id: str, name: str):
        state = store.read(job_id)
        if state is None:
            return JSONResponse({"error": "unknown job"}, 404)
        job_dir = store.job_dir(job_id).resolve()
        path = (job_dir / name).resolve()
        if not str(path).startswith(str(job_dir) + "/"):
            return JSONResponse({"error": "bad artifact path"}, 404)
        if path.is_file():
            if (
                gate_download
                and name == "final.svg"
                and not state.get("feedback_submitted")
            ):
                return JSONResponse(
                    {"error": "feedback required before download"}, 423
                )
            media = _MEDIA_TYPES.get(path.suffix, "application/octet-stream")
            return Response(path.read_bytes(), media_type=media)
        if state["state"] in ("queued", "running"):
            return JSONResponse({"error": "job not ready"}, 409)
        return JSONResponse({"error": "no such artifact"}, 404)

    @app.put("/jobs/{job_id}/svg")
    async def put_svg(job_id: str, request: Request):
        state = store.read(job_id)
        if state is None:
            return JSONResponse({"error": "unknown job"}, 404)
        if state["state"] != "done":
            return JSONResponse({"error": "job not ready"}, 409)
        body = await request.body()
        try:
            doc = parse_svg(body.decode("utf-8"))
        except Exception as exc:
            return JSONResponse({"error": f"document rejected: {exc}"}, 422)
        report = verify_editable_figure(doc, 0, mode="edited")
        if not report.ok:
            return JSONResponse(
                {"error": "document rejected",
                 "findings": [f.message for f in report.findings]},
                422,
            )
        with store.lock(job_id):
            (store.job_dir(job_id) / "final.svg").write_text(
                serialize_svg(doc), encoding="utf-8"
            )
        return {"ok": True}

    @app.post("/jobs/{job_id}/feedback")
    def submit_feedback(job_id: str, record: FeedbackIn):
        state = store.read(job_id)
        if state is None:
            return JSONResponse({"error": "unknown job"}, 404)
        if state["state"] != "done":
            return JSONResponse({"error": "job not ready"}, 409)
        stored = record.model_dump()
        stored["job_id"] = job_id
        stored["submitted_at"] = _now()
        store.append_feedback(stored)
        store.write(job_id, feedback_submitted=True)
        return stored

    @app.get("/metrics/feedback")
    def metrics_feedback():
        return aggregate_feedback(store.feedback_records())

    if app_dir is not None and Path(app_dir).is_dir():
        app.mount("/app", StaticFiles(directory=str(app_dir), html=True), name="app")

    return app
