"""The protocol server: request validation, inference dispatch, and the
error policy (400 with a schema pointer, 500 with an opaque id)."""

from __future__ import annotations

import base64
import binascii
import json
import logging
import threading
import uuid

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import fake
from .config import SidecarConfig
from .protocol import RequestViolation, validate_against

LOGGER = logging.getLogger("inference_sidecar")


def _bad_request(message: str, pointer: str, path: list) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"detail": {"message": message, "schema": pointer, "path": path}},
    )


def _decode_body(raw: bytes, definition: str) -> dict:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise RequestViolation(f"body is not valid JSON: {exc}", f"#/$defs/{definition}", [])
    validate_against(definition, doc)
    return doc


def _decode_image(doc: dict, definition: str) -> bytes:
    try:
        return base64.b64decode(doc["image"], validate=True)
    except (binascii.Error, ValueError) as exc:
        raise RequestViolation(f"image is not valid base64: {exc}", f"#/$defs/{definition}", ["image"])


def create_app(config: SidecarConfig) -> FastAPI:
    """Build the server; in real mode this loads the pinned models and
    raises ModelLoadError when they are unavailable."""
    app = FastAPI(title="inference sidecar", docs_url=None)
    runtime = None
    if not config.fake:
        from .models import ModelRuntime

        runtime = ModelRuntime(config)

    # One inference at a time by default; concurrency is a deployment knob.
    gate = threading.Semaphore(config.concurrency)

    def detector_name() -> str:
        return "fake" if config.fake else config.detector_model

    def classifier_name() -> str:
        return "fake" if config.fake else config.classifier_model

    @app.exception_handler(RequestViolation)
    def on_violation(request: Request, exc: RequestViolation) -> JSONResponse:
        return _bad_request(str(exc), exc.pointer, exc.path)

    @app.exception_handler(Exception)
    def on_failure(request: Request, exc: Exception) -> JSONResponse:
        error_id = uuid.uuid4().hex
        LOGGER.exception("inference failure %s", error_id)
        return JSONResponse(status_code=500, content={"detail": {"error_id": error_id}})

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "detector": detector_name(),
            "classifier": classifier_name(),
        }

    @app.post("/v1/detect")
    async def detect(request: Request) -> JSONResponse:
        doc = _decode_body(await request.body(), "detect_request")
        image_bytes = _decode_image(doc, "detect_request")
        try:
            with gate:
                if config.fake:
                    detections = fake.fake_detections(image_bytes, doc["prompts"])
                else:
                    detections = runtime.detect(image_bytes, doc["prompts"])
        except ValueError as exc:
            raise RequestViolation(str(exc), "#/$defs/detect_request", ["image"])
        return JSONResponse({"detections": detections})

    @app.post("/v1/classify")
    async def classify(request: Request) -> JSONResponse:
        doc = _decode_body(await request.body(), "classify_request")
        image_bytes = _decode_image(doc, "classify_request")
        try:
            with gate:
                if config.fake:
                    probabilities = fake.fake_probabilities(image_bytes, doc["labels"])
                else:
                    probabilities = runtime.classify(image_bytes, doc["labels"])
        except ValueError as exc:
            raise RequestViolation(str(exc), "#/$defs/classify_request", ["image"])
        return JSONResponse({"probabilities": probabilities})

    return app
