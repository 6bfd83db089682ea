"""HTTP client for the two-endpoint inference wire protocol."""

from __future__ import annotations

import base64
import importlib.resources
import json
import threading
from typing import Optional

import httpx
import jsonschema
import numpy as np

from ..errors import ProtocolError, TransportError, ValidationError
from ..geometry import ScoredDetection
from ..images import encode_png
from .base import (
    LOGGER,
    ClassDistribution,
    DetectionRequest,
    LabelSchema,
    WarningSink,
    finalize_detections,
)

DEFAULT_TIMEOUT_SECONDS = 30.0
DEFAULT_CONCURRENCY = 4


def load_protocol_schemas() -> dict:
    """Parsed wire-protocol schema document shipped with the package."""
    resource = importlib.resources.files("shoresweep").joinpath(
        "schemas/inference_protocol.json"
    )
    return json.loads(resource.read_text(encoding="utf-8"))


class RemoteProvider:
    """Detector and classifier backed by an inference service.

    Every call posts one request and validates the response against
    the shared protocol schema. Calls are bounded by ``timeout``
    seconds so a hung service never blocks a survey forever, and a
    semaphore caps in-flight requests across pipeline workers.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_TIMEOUT_SECONDS,
        concurrency: int = DEFAULT_CONCURRENCY,
        on_warning: Optional[WarningSink] = None,
    ):
        if concurrency < 1:
            raise ValidationError("concurrency must be at least 1")
        self._client = httpx.Client(base_url=base_url.rstrip("/"), timeout=timeout)
        self._slots = threading.BoundedSemaphore(concurrency)
        self._warn: WarningSink = on_warning if on_warning is not None else LOGGER.warning
        defs = load_protocol_schemas()["$defs"]
        self._detect_validator = jsonschema.Draft202012Validator(defs["detect_response"])
        self._classify_validator = jsonschema.Draft202012Validator(defs["classify_response"])

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RemoteProvider":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _post(self, path: str, payload: dict, validator: jsonschema.Draft202012Validator) -> dict:
        with self._slots:
            try:
                response = self._client.post(path, json=payload)
            except httpx.TransportError as exc:
                raise TransportError(f"inference service unreachable at {path}: {exc}") from exc
        if response.status_code != 200:
            raise ProtocolError(
                f"inference service returned HTTP {response.status_code} for {path}"
            )
        try:
            data = response.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON response from {path}") from exc
        errors = sorted(validator.iter_errors(data), key=str)
        if errors:
            raise ProtocolError(f"response from {path} violates the protocol: {errors[0].message}")
        return data

    def detect(self, request: DetectionRequest, image: np.ndarray) -> "list[ScoredDetection]":
        payload = {
            "image": base64.b64encode(encode_png(image)).decode("ascii"),
            "prompts": [
                {
                    "text": request.prompt,
                    "box_threshold": request.box_threshold,
                    "text_threshold": request.text_threshold,
                }
            ],
        }
        data = self._post("/v1/detect", payload, self._detect_validator)
        raw = [
            (d["x_min"], d["y_min"], d["x_max"], d["y_max"], d["score"])
            for d in data["detections"]
            if d["prompt"] == request.prompt
        ]
        return finalize_detections(raw, request, image.shape, self._warn)

    def classify(
        self, crop: np.ndarray, schema: LabelSchema, crop_id: Optional[str] = None
    ) -> ClassDistribution:
        payload = {
            "image": base64.b64encode(encode_png(crop)).decode("ascii"),
            "labels": list(schema),
        }
        data = self._post("/v1/classify", payload, self._classify_validator)
        probabilities = data["probabilities"]
        if len(probabilities) != len(schema):
            raise ProtocolError(
                f"classifier returned {len(probabilities)} probabilities for "
                f"{len(schema)} labels"
            )
        try:
            dist = ClassDistribution.from_scores(schema, probabilities)
        except ValidationError as exc:
            raise ProtocolError(f"classifier response is invalid: {exc}") from exc
        if dist.renormalized:
            self._warn(
                f"classifier probabilities summed to {sum(probabilities)!r}, renormalized"
            )
        return dist

    def health(self) -> dict:
        """GET /v1/health, raising on transport failure."""
        try:
            response = self._client.get("/v1/health")
        except httpx.TransportError as exc:
            raise TransportError(f"inference service unreachable: {exc}") from exc
        if response.status_code != 200:
            raise ProtocolError(f"health endpoint returned HTTP {response.status_code}")
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError("non-JSON health response") from exc
