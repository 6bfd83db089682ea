"""HTTP API over a survey store, the backend for the web pages.

Detection and duplicate removal run as background jobs because a
drone batch takes minutes; clients poll the job id they get back.
One job per survey runs at a time, a second submission gets 409.
Label corrections are synchronous, idempotent, and audit-logged.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import SurveyConfig
from .dedup import dedup_survey
from .errors import DataError, ShoresweepError, ValidationError
from .images import crop as crop_image
from .images import decode_image, encode_png
from .pipeline import DebrisRecord, SurveyImage, run_survey
from .store import SurveyStore

PHASES = ("queued", "detecting", "classifying", "deduplicating", "done", "failed")


def load_api_schema() -> dict:
    """The published response-shape contract for every /api endpoint."""
    import json
    from importlib.resources import files

    return json.loads(files("shoresweep").joinpath("schemas/http_api.json").read_text())


@dataclass
class JobStatus:
    job_id: str
    survey_id: str
    kind: str
    phase: str = "queued"
    images_total: int = 0
    images_done: int = 0
    pairs_total: int = 0
    pairs_done: int = 0
    records: int = 0
    failures: dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "survey_id": self.survey_id,
            "kind": self.kind,
            "phase": self.phase,
            "progress": {
                "images_total": self.images_total,
                "images_done": self.images_done,
                "pairs_total": self.pairs_total,
                "pairs_done": self.pairs_done,
            },
            "records": self.records,
            "failures": self.failures,
            "error": self.error,
        }


class JobRegistry:
    """In-memory job table; one running job per survey."""

    def __init__(self, max_workers: int = 2):
        self._jobs: dict = {}
        self._active: dict = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=max_workers)

    def get(self, job_id: str) -> Optional[JobStatus]:
        with self._lock:
            return self._jobs.get(job_id)

    def advance(self, job_id: str, phase: str) -> None:
        """Move a job's phase forward; phases never go backwards."""
        with self._lock:
            job = self._jobs[job_id]
            if PHASES.index(phase) > PHASES.index(job.phase):
                job.phase = phase

    def update(self, job_id: str, **fields) -> None:
        with self._lock:
            job = self._jobs[job_id]
            for key, value in fields.items():
                setattr(job, key, value)

    def submit(self, survey_id: str, kind: str, work) -> JobStatus:
        """Queue ``work(job)``; raises 409 while the survey has a live job."""
        with self._lock:
            active_id = self._active.get(survey_id)
            if active_id is not None:
                raise HTTPException(
                    status_code=409,
                    detail=f"survey {survey_id} already has a running job: {active_id}",
                )
            job = JobStatus(job_id=f"j{uuid.uuid4().hex[:10]}", survey_id=survey_id, kind=kind)
            self._jobs[job.job_id] = job
            self._active[survey_id] = job.job_id

        def runner() -> None:
            try:
                work(job)
                self.advance(job.job_id, "done")
            except ShoresweepError as exc:
                self.update(job.job_id, error=f"{type(exc).__name__}: {exc}")
                self.update(job.job_id, phase="failed")
            except Exception as exc:
                self.update(job.job_id, error=f"internal error: {exc}")
                self.update(job.job_id, phase="failed")
            finally:
                with self._lock:
                    self._active.pop(survey_id, None)

        self._pool.submit(runner)
        return job


class CorrectionBody(BaseModel):
    corrected_label: str


class SurveyBody(BaseModel):
    name: Optional[str] = None
    survey_id: Optional[str] = None


def record_to_json(record: DebrisRecord) -> dict:
    return {
        "record_id": record.record_id,
        "image_id": record.source_image_id,
        "box": {
            "x_min": record.box.x_min,
            "y_min": record.box.y_min,
            "x_max": record.box.x_max,
            "y_max": record.box.y_max,
        },
        "score": record.detection_score,
        "predicted_label": record.predicted_label,
        "corrected_label": record.corrected_label,
        "label": record.label,
        "latitude": record.geo_position.latitude if record.geo_position else None,
        "longitude": record.geo_position.longitude if record.geo_position else None,
        "duplicate_group": record.duplicate_group,
        "is_canonical": record.is_canonical,
        "crop_url": f"/api/records/{record.record_id}/crop",
    }


def create_app(
    store: SurveyStore,
    config: Optional[SurveyConfig] = None,
    frontend_dir: Optional[Path] = None,
) -> FastAPI:
    config = config or SurveyConfig()
    schema = config.schema()
    app = FastAPI(title="debris survey API", docs_url="/api/docs", openapi_url="/api/openapi.json")
    jobs = JobRegistry()
    app.state.store = store
    app.state.jobs = jobs

    def fetch_survey(survey_id: str) -> None:
        if not store.survey_exists(survey_id):
            raise HTTPException(status_code=404, detail=f"unknown survey {survey_id!r}")

    def fetch_record(record_id: str) -> DebrisRecord:
        try:
            _, record = store.get_record(record_id)
            return record
        except DataError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/api/schema")
    def get_schema() -> dict:
        return {"labels": list(schema), "colors": dict(config.colors)}

    @app.get("/api/surveys")
    def list_surveys() -> dict:
        return {"surveys": store.surveys()}

    @app.post("/api/surveys", status_code=201)
    def create_survey(body: SurveyBody) -> dict:
        try:
            survey_id = store.create_survey(name=body.name, survey_id=body.survey_id)
        except DataError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"survey_id": survey_id}

    @app.post("/api/surveys/{survey_id}/images", status_code=201)
    async def upload_image(survey_id: str, request: Request, filename: Optional[str] = None):
        fetch_survey(survey_id)
        content_type = request.headers.get("content-type", "")
        allowed = ("image/jpeg", "image/png", "application/octet-stream")
        if content_type.split(";")[0].strip() not in allowed:
            raise HTTPException(
                status_code=415,
                detail=f"content type must be one of {allowed}",
            )
        data = await request.body()
        if len(data) > config.upload_max_bytes:
            raise HTTPException(
                status_code=413,
                detail=f"upload exceeds the {config.upload_max_bytes} byte cap",
            )
        if not data:
            raise HTTPException(status_code=400, detail="empty upload")
        name = filename or request.headers.get("x-filename")
        try:
            stored = store.ingest_image(survey_id, data, filename=name)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "image_id": stored.image_id,
            "filename": stored.filename,
            "mapped": not stored.unmapped,
        }

    @app.get("/api/surveys/{survey_id}/images")
    def list_images(survey_id: str) -> dict:
        fetch_survey(survey_id)
        return {
            "images": [
                {
                    "image_id": i.image_id,
                    "filename": i.filename,
                    "width": i.width,
                    "height": i.height,
                    "mapped": not i.unmapped,
                    "latitude": i.meta.latitude if i.meta else None,
                    "longitude": i.meta.longitude if i.meta else None,
                    "altitude": i.altitude,
                }
                for i in store.images(survey_id)
            ]
        }

    @app.post("/api/surveys/{survey_id}/detect", status_code=202)
    def start_detect(survey_id: str) -> dict:
        fetch_survey(survey_id)
        inputs = [
            SurveyImage(i.image_id, store.image_bytes(i.image_id), i.meta)
            for i in store.images(survey_id)
            if i.has_blob
        ]
        if not inputs:
            raise HTTPException(status_code=400, detail="survey has no images with stored bytes")

        def work(job: JobStatus) -> None:
            jobs.update(job.job_id, images_total=len(inputs))
            done_count = {"n": 0}

            def progress(image_id: str, stage: str) -> None:
                if stage == "done":
                    done_count["n"] += 1
                    jobs.update(job.job_id, images_done=done_count["n"])
                else:
                    jobs.advance(job.job_id, stage)

            provider = config.build_provider()
            run = run_survey(
                inputs,
                config.pipeline(),
                provider,
                provider,
                camera=config.camera,
                workers=config.workers,
                on_progress=progress,
            )
            store.save_records(survey_id, run.records)
            jobs.update(job.job_id, records=len(run.records), failures=dict(run.failures))

        return {"job_id": jobs.submit(survey_id, "detect", work).job_id}

    @app.post("/api/surveys/{survey_id}/dedup", status_code=202)
    def start_dedup(survey_id: str) -> dict:
        fetch_survey(survey_id)
        records = store.records(survey_id)
        if not records:
            raise HTTPException(status_code=400, detail="survey has no records to deduplicate")

        def work(job: JobStatus) -> None:
            jobs.advance(job.job_id, "deduplicating")
            crops = {}
            by_image: dict = {}
            for record in records:
                by_image.setdefault(record.source_image_id, []).append(record)
            for image_id, image_records in by_image.items():
                try:
                    image = decode_image(store.image_bytes(image_id))
                except DataError:
                    continue
                for record in image_records:
                    crops[record.record_id] = crop_image(image, record.box)

            def progress(done: int, total: int) -> None:
                jobs.update(job.job_id, pairs_done=done, pairs_total=total)

            result = dedup_survey(
                records,
                crops,
                min_matches=config.dedup_min_matches,
                radius_m=config.dedup_radius_m,
                on_progress=progress,
            )
            store.save_dedup(survey_id, result)
            jobs.update(job.job_id, records=len(result.survivors))

        return {"job_id": jobs.submit(survey_id, "dedup", work).job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job.to_json()

    @app.get("/api/surveys/{survey_id}/records")
    def list_records(survey_id: str, page: int = 1, page_size: int = 50) -> dict:
        fetch_survey(survey_id)
        if page < 1 or page_size < 1 or page_size > 500:
            raise HTTPException(status_code=422, detail="page must be >= 1, page_size in 1..500")
        total = store.record_count(survey_id)
        records = store.records(survey_id, offset=(page - 1) * page_size, limit=page_size)
        return {
            "records": [record_to_json(r) for r in records],
            "total": total,
            "page": page,
            "page_size": page_size,
        }

    @app.patch("/api/records/{record_id}")
    def correct_record(record_id: str, body: CorrectionBody) -> dict:
        fetch_record(record_id)
        try:
            updated = store.correct_label(record_id, body.corrected_label, schema)
        except ValidationError:
            raise HTTPException(
                status_code=422,
                detail={
                    "message": f"label {body.corrected_label!r} is not in the schema",
                    "valid_labels": list(schema),
                },
            ) from None
        return record_to_json(updated)

    @app.delete("/api/records/{record_id}", status_code=204)
    def delete_record(record_id: str) -> Response:
        fetch_record(record_id)
        store.delete_record(record_id)
        return Response(status_code=204)

    @app.get("/api/records/{record_id}/crop")
    def record_crop(record_id: str) -> Response:
        fetch_record(record_id)
        try:
            patch = store.record_crop(record_id)
        except DataError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return Response(content=encode_png(patch), media_type="image/png")

    @app.get("/api/surveys/{survey_id}/duplicates")
    def list_duplicates(survey_id: str) -> dict:
        fetch_survey(survey_id)
        groups = []
        for g in store.duplicate_groups(survey_id):
            groups.append(
                {
                    "group_id": g.group_id,
                    "canonical": g.canonical,
                    "members": list(g.members),
                    "edges": [
                        {"a": a, "b": b, "match_count": n} for a, b, n in g.edges
                    ],
                    "thumbnails": {
                        member: f"/api/records/{member}/crop" for member in g.members
                    },
                }
            )
        return {"groups": groups}

    @app.get("/api/surveys/{survey_id}/map")
    def survey_map(survey_id: str) -> Response:
        fetch_survey(survey_id)
        data = store.export_geojson(
            survey_id,
            config.colors,
            cluster_eps_m=config.cluster_eps_m,
            cluster_min_pts=config.cluster_min_pts,
        )
        return Response(content=data, media_type="application/geo+json")

    @app.get("/api/surveys/{survey_id}/stats")
    def survey_stats(survey_id: str) -> dict:
        fetch_survey(survey_id)
        return store.stats(
            survey_id,
            schema,
            cluster_eps_m=config.cluster_eps_m,
            cluster_min_pts=config.cluster_min_pts,
        )

    @app.get("/api/surveys/{survey_id}/export.csv")
    def export_csv(survey_id: str) -> Response:
        fetch_survey(survey_id)
        return Response(
            content=store.export_csv(survey_id),
            media_type="text/csv",
            headers={"Content-Disposition": f'attachment; filename="{survey_id}.csv"'},
        )

    @app.exception_handler(DataError)
    def data_error_handler(request: Request, exc: DataError) -> JSONResponse:
        status = 404 if str(exc).startswith("unknown") else 400
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="frontend")

    return app
