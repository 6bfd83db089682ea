"""Deterministic provider that replays per-image fixture documents."""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import ProtocolError, ValidationError
from ..geometry import ScoredDetection
from .base import (
    LOGGER,
    ClassDistribution,
    DetectionRequest,
    LabelSchema,
    WarningSink,
    finalize_detections,
)

BOX_KEYS = ("x_min", "y_min", "x_max", "y_max", "score")


class FileBackedProvider:
    """Serves detections and class scores from JSON files on disk.

    The fixture directory holds one document per image id, named
    ``<image_id>.json``::

        {
          "detect": {
            "all trash": [{"x_min": 10, "y_min": 10, "x_max": 50,
                           "y_max": 40, "score": 0.8}, ...],
            "all rocks": []
          },
          "classify": {
            "<crop id>": {"wood": 0.1, "plastic": 0.8, ...},
            "default": {...}
          }
        }

    A prompt absent from the ``detect`` section yields no detections,
    which keeps rock queries optional for scenes without rocks.
    Classification looks up the crop id and falls back to the
    ``default`` entry; crop ids follow ``images.crop_key``. Responses
    are pure functions of the fixture and the request.
    """

    def __init__(self, fixture_dir: Union[str, Path], on_warning: Optional[WarningSink] = None):
        self._dir = Path(fixture_dir)
        self._warn: WarningSink = on_warning if on_warning is not None else LOGGER.warning
        self._cache: dict = {}
        self._lock = threading.Lock()

    def _document(self, image_id: str) -> dict:
        with self._lock:
            if image_id in self._cache:
                return self._cache[image_id]
        path = self._dir / f"{image_id}.json"
        if not path.is_file():
            raise ProtocolError(f"no fixture document for image {image_id!r} in {self._dir}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"unreadable fixture {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ProtocolError(f"fixture {path} must hold a JSON object")
        with self._lock:
            self._cache[image_id] = doc
        return doc

    def detect(self, request: DetectionRequest, image: np.ndarray) -> "list[ScoredDetection]":
        doc = self._document(request.image_id)
        section = doc.get("detect", {})
        if not isinstance(section, dict):
            raise ProtocolError(f"fixture for image {request.image_id!r}: 'detect' must be an object")
        entries = section.get(request.prompt, [])
        if not isinstance(entries, list):
            raise ProtocolError(
                f"fixture for image {request.image_id!r}: detections for prompt "
                f"{request.prompt!r} must be a list"
            )
        raw = []
        for entry in entries:
            if not isinstance(entry, dict) or any(k not in entry for k in BOX_KEYS):
                raise ProtocolError(
                    f"fixture detection for image {request.image_id!r} needs keys "
                    f"{BOX_KEYS}, got {entry!r}"
                )
            raw.append(tuple(entry[k] for k in BOX_KEYS))
        return finalize_detections(raw, request, image.shape, self._warn)

    def classify(
        self, crop: np.ndarray, schema: LabelSchema, crop_id: Optional[str] = None
    ) -> ClassDistribution:
        if crop_id is None:
            raise ProtocolError("the file-backed classifier needs a crop id to look up")
        image_id = crop_id.split(":", 1)[0]
        doc = self._document(image_id)
        section = doc.get("classify")
        if not isinstance(section, dict):
            raise ProtocolError(f"fixture for image {image_id!r} has no 'classify' section")
        scores = section.get(crop_id, section.get("default"))
        if scores is None:
            raise ProtocolError(
                f"fixture for image {image_id!r} has no classify entry for {crop_id!r} "
                "and no 'default'"
            )
        if not isinstance(scores, dict):
            raise ProtocolError(f"classify entry for {crop_id!r} must map labels to scores")
        try:
            return ClassDistribution.from_scores(schema, scores)
        except ValidationError as exc:
            raise ProtocolError(f"classify entry for {crop_id!r} is invalid: {exc}") from exc
