"""HTTP service exposing the predictor, optimizer, and reflow engine.

JSON bodies follow the design/template schemas of the core modules; progress
of optimization jobs streams as server-sent events, one `epoch` event per
epoch with the best design so far.
"""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass
from datetime import datetime, timezone

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse

from ..design import VectorDesign, design_from_dict, design_to_dict, design_to_json
from ..errors import CountMismatch, InvalidDesign, NoTemplateForCount, StudioError
from ..maps import ImportanceMap, element_score
from ..optimizer import GAConfig
from ..predictor import ExternalPredictor, ReferencePredictor
from ..reflow import load_library, reflow_design, template_to_dict
from .config import ServiceConfig
from .jobs import DesignBusy, JobManager
from .store import FileStore


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class DesignRecord:
    id: str
    design: VectorDesign
    created: str
    updated: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "design": design_to_dict(self.design),
            "created": self.created,
            "updated": self.updated,
        }


class StudioState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = FileStore(config.data_dir)
        if config.predictor == "external":
            self.predictor = ExternalPredictor(config.external_endpoint)
            self._predictor_fingerprint = f"external:{config.external_endpoint}"
        else:
            self.predictor = ReferencePredictor(map_w=config.map_w, map_h=config.map_h)
            self._predictor_fingerprint = f"reference:{config.map_w}x{config.map_h}"
        self.library = load_library(config.templates_dir)
        self.jobs = JobManager(self.store, self.predictor, workers=config.workers)
        self.designs: dict[str, DesignRecord] = {}
        self.quarantined: list[str] = []
        self._map_cache: dict[str, tuple[str, dict]] = {}
        self._meta_lock = threading.Lock()
        self._record_locks: dict[str, threading.Lock] = {}
        self._load_designs()

    def _load_designs(self) -> None:
        records, quarantined = self.store.load_all("designs")
        self.quarantined = quarantined
        for record_id, payload in records.items():
            try:
                design = design_from_dict(payload["design"], strict=True)
            except (InvalidDesign, KeyError):
                self.quarantined.append(record_id)
                continue
            self.designs[record_id] = DesignRecord(
                payload["id"], design, payload["created"], payload["updated"]
            )

    def record_lock(self, design_id: str) -> threading.Lock:
        with self._meta_lock:
            return self._record_locks.setdefault(design_id, threading.Lock())

    def create_design(self, design: VectorDesign) -> DesignRecord:
        record = DesignRecord(f"d-{uuid.uuid4().hex[:12]}", design, _now(), _now())
        self.designs[record.id] = record
        self.store.save("designs", record.id, record.to_dict())
        return record

    def replace_design(self, record: DesignRecord, design: VectorDesign) -> None:
        record.design = design
        record.updated = _now()
        self._map_cache.pop(record.id, None)
        self.store.save("designs", record.id, record.to_dict())

    def predict_payload(self, record: DesignRecord) -> dict:
        """Importance map plus per-element scores, cached by content hash."""
        key = hashlib.sha256(
            (design_to_json(record.design) + self._predictor_fingerprint).encode()
        ).hexdigest()
        with self.record_lock(record.id):
            cached = self._map_cache.get(record.id)
            if cached is not None and cached[0] == key:
                return cached[1]
            imap: ImportanceMap = self.predictor.predict_map(record.design)
            scores = {e.id: element_score(imap, e, record.design) for e in record.design.elements}
            payload = {"map": imap.to_dict(), "scores": scores, "content_hash": key}
            self._map_cache[record.id] = (key, payload)
            return payload

    def close(self) -> None:
        self.jobs.shutdown()


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    state = StudioState(config or ServiceConfig())

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        state.close()

    app = FastAPI(title="impstudio", version="0.1.0", lifespan=lifespan)
    app.state.studio = state

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(StudioError)
    async def studio_error_handler(request: Request, exc: StudioError):
        if isinstance(exc, (CountMismatch, NoTemplateForCount)):
            status = 422
        elif isinstance(exc, InvalidDesign):
            status = 400
        else:
            status = 502
        return JSONResponse(status_code=status, content={"error": f"{type(exc).__name__}: {exc}"})

    async def parse_body(request: Request) -> dict:
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise InvalidDesign("request body is not valid JSON") from None
        if not isinstance(body, dict):
            raise InvalidDesign("request body must be a JSON object")
        return body

    def get_record(design_id: str) -> DesignRecord | None:
        return state.designs.get(design_id)

    @app.post("/designs", status_code=201)
    async def create_design(request: Request):
        design = design_from_dict(await parse_body(request), strict=True)
        record = state.create_design(design)
        return {"id": record.id}

    @app.get("/designs/{design_id}")
    async def get_design(design_id: str):
        record = get_record(design_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": "unknown design"})
        return Response(content=design_to_json(record.design), media_type="application/json")

    @app.put("/designs/{design_id}")
    async def put_design(design_id: str, request: Request):
        record = get_record(design_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": "unknown design"})
        if state.jobs.active_job_for(design_id) is not None:
            return JSONResponse(
                status_code=409, content={"error": "design is referenced by a running job"}
            )
        design = design_from_dict(await parse_body(request), strict=True)
        state.replace_design(record, design)
        return {"id": record.id, "updated": record.updated}

    @app.post("/designs/{design_id}/predict")
    async def predict_design(design_id: str):
        record = get_record(design_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": "unknown design"})
        return state.predict_payload(record)

    @app.post("/designs/{design_id}/optimize", status_code=202)
    async def optimize_design(design_id: str, request: Request):
        record = get_record(design_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": "unknown design"})
        body = await parse_body(request)
        targets = body.get("targets", {})
        if not isinstance(targets, dict):
            raise InvalidDesign("targets must be an object of element id -> value")
        known = {e.id for e in record.design.elements}
        unknown = set(targets) - known
        if unknown:
            raise InvalidDesign(f"targets reference unknown elements: {sorted(unknown)}")
        try:
            clean = {str(k): float(v) for k, v in targets.items()}
            if any(not 0.0 <= v <= 1.0 for v in clean.values()):
                raise ValueError("targets must be in [0, 1]")
            ga = GAConfig.from_dict(state.config.ga_defaults.to_dict() | body.get("config", {}))
        except (TypeError, ValueError) as exc:
            raise InvalidDesign(str(exc)) from None
        try:
            job = state.jobs.submit(design_id, record.design, clean, ga)
        except DesignBusy as exc:
            return JSONResponse(status_code=409, content={"error": str(exc)})
        return {"id": job.id}

    @app.get("/jobs/{job_id}")
    async def get_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "unknown job"})
        return job.public_dict()

    @app.delete("/jobs/{job_id}")
    async def cancel_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "unknown job"})
        state.jobs.cancel(job_id)
        return {"id": job_id, "state": job.state}

    @app.get("/jobs/{job_id}/events")
    def job_events(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "unknown job"})

        def stream():
            for event in state.jobs.events(job_id):
                yield f"event: epoch\ndata: {json.dumps(event, sort_keys=True)}\n\n"
            final = state.jobs.get(job_id)
            yield f"event: end\ndata: {json.dumps({'state': final.state if final else 'unknown'})}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.post("/designs/{design_id}/reflow", status_code=201)
    async def reflow_endpoint(design_id: str, request: Request):
        record = get_record(design_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": "unknown design"})
        body = await parse_body(request)
        try:
            width = float(body["width"])
            height = float(body["height"])
        except (KeyError, TypeError, ValueError):
            raise InvalidDesign("body must carry numeric width and height") from None
        if width <= 0 or height <= 0:
            raise InvalidDesign("width and height must be positive")
        payload = state.predict_payload(record)
        imap = ImportanceMap.from_dict(payload["map"])
        out = reflow_design(
            record.design,
            imap,
            state.library,
            width,
            height,
            group_overflow=bool(body.get("group_overflow", False)),
        )
        new_record = state.create_design(out)
        return {"id": new_record.id}

    @app.get("/templates")
    async def templates():
        return {"templates": [template_to_dict(t) for t in state.library.templates]}

    @app.get("/health")
    async def health():
        return {"status": "ok", "designs": len(state.designs), "quarantined": state.quarantined}

    return app
