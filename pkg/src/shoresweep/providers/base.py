"""Inference provider contracts.

Detection and classification run behind two small protocols so the
pipeline never links against ML frameworks. Two implementations ship
with the package: a deterministic file-backed provider for tests and
offline surveys, and an HTTP client speaking the two-endpoint wire
protocol described in ``schemas/inference_protocol.json``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence, Union

import numpy as np

from ..errors import ProtocolError, ValidationError
from ..geometry import PixelBox, ScoredDetection

LOGGER = logging.getLogger("shoresweep.providers")

DEFAULT_LABELS = ("wood", "cage", "fishing gear", "nature", "plastic", "metal", "wheel")

# Proposal cap applied after score filtering, keeping the highest scores.
MAX_DETECTIONS = 900

# |sum - 1| above this means the source distribution needed renormalizing.
PROBABILITY_TOLERANCE = 1e-6

WarningSink = Callable[[str], None]


def _check_unit_interval(name: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v) or not 0.0 <= v <= 1.0:
        raise ValidationError(f"{name} must be in [0, 1], got {value!r}")
    return v


@dataclass(frozen=True)
class LabelSchema:
    """Ordered set of class names a survey classifies against."""

    labels: tuple = DEFAULT_LABELS

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ValidationError("label schema needs at least 2 classes")
        for label in labels:
            if not isinstance(label, str) or not label.strip():
                raise ValidationError(f"class names must be non-empty strings, got {label!r}")
        if len(set(labels)) != len(labels):
            raise ValidationError("class names must be unique")

    def __iter__(self):
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class DetectionRequest:
    """One prompt-plus-thresholds query against a detector."""

    image_id: str
    prompt: str
    box_threshold: float
    text_threshold: float

    def __post_init__(self) -> None:
        if not isinstance(self.image_id, str) or not self.image_id:
            raise ValidationError("image_id must be a non-empty string")
        if not isinstance(self.prompt, str) or not self.prompt.strip():
            raise ValidationError("prompt must be non-empty")
        object.__setattr__(
            self, "box_threshold", _check_unit_interval("box_threshold", self.box_threshold)
        )
        object.__setattr__(
            self, "text_threshold", _check_unit_interval("text_threshold", self.text_threshold)
        )


@dataclass(frozen=True)
class ClassDistribution:
    """Probabilities over a label schema.

    Key order is preserved and drives argmax tie-breaking, so
    distributions built through :meth:`from_scores` resolve ties by
    schema order. ``renormalized`` records that the source values did
    not sum to 1 within tolerance and were rescaled.
    """

    label_probabilities: Mapping[str, float]
    renormalized: bool = False

    def __post_init__(self) -> None:
        probs = dict(self.label_probabilities)
        if len(probs) < 2:
            raise ValidationError("distribution needs at least 2 classes")
        for label, p in probs.items():
            if isinstance(p, bool) or not isinstance(p, (int, float)) or not math.isfinite(p):
                raise ValidationError(f"probability for {label!r} must be finite, got {p!r}")
            if p < 0:
                raise ValidationError(f"probability for {label!r} is negative: {p!r}")
        total = math.fsum(probs.values())
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValidationError(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "label_probabilities", {k: float(v) for k, v in probs.items()})

    @classmethod
    def from_scores(
        cls,
        schema: LabelSchema,
        scores: Union[Sequence[float], Mapping[str, float]],
    ) -> "ClassDistribution":
        """Build a distribution from raw per-class scores.

        Accepts either a sequence aligned to the schema order or a
        mapping whose keys are exactly the schema classes. Scores are
        divided by their sum; a sum off by more than the tolerance sets
        the ``renormalized`` flag. NaN, negative, or all-zero scores
        raise :class:`ValidationError`.
        """
        if isinstance(scores, Mapping):
            missing = [l for l in schema if l not in scores]
            extra = [l for l in scores if l not in schema]
            if missing or extra:
                raise ValidationError(
                    f"score keys do not match the schema (missing {missing!r}, extra {extra!r})"
                )
            values = [scores[label] for label in schema]
        else:
            values = list(scores)
            if len(values) != len(schema):
                raise ValidationError(
                    f"expected {len(schema)} scores for the schema, got {len(values)}"
                )
        floats = []
        for label, v in zip(schema, values):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"score for {label!r} must be finite, got {v!r}")
            if v < 0:
                raise ValidationError(f"score for {label!r} is negative: {v!r}")
            floats.append(float(v))
        total = math.fsum(floats)
        if total <= 0:
            raise ValidationError("scores sum to zero, cannot normalize")
        renormalized = abs(total - 1.0) > PROBABILITY_TOLERANCE
        probs = {label: v / total for label, v in zip(schema, floats)}
        return cls(probs, renormalized=renormalized)


def argmax_label(dist: ClassDistribution) -> str:
    """Label with the highest probability; ties go to the earliest key."""
    best_label = ""
    best_p = -1.0
    for label, p in dist.label_probabilities.items():
        if p > best_p:
            best_label, best_p = label, p
    return best_label


class Detector(Protocol):
    def detect(self, request: DetectionRequest, image: np.ndarray) -> "list[ScoredDetection]":
        """Run one detection query against an RGB image array."""
        ...


class Classifier(Protocol):
    def classify(
        self, crop: np.ndarray, schema: LabelSchema, crop_id: Optional[str] = None
    ) -> ClassDistribution:
        """Score a crop against every class in the schema."""
        ...


def finalize_detections(
    raw: Iterable[tuple],
    request: DetectionRequest,
    image_shape: tuple,
    warn: WarningSink,
) -> "list[ScoredDetection]":
    """Enforce the detect postconditions on raw provider output.

    ``raw`` yields (x_min, y_min, x_max, y_max, score) tuples. Scores
    outside [0, 1] or non-finite coordinates are protocol errors, never
    repaired: silently clamping a score would corrupt suppression
    order. Boxes poking past the image edge are clamped and reported
    through ``warn``; a box that clamps to zero area is a protocol
    error. Results are filtered to ``score >= box_threshold``, sorted
    by descending score, and capped at ``MAX_DETECTIONS``.
    """
    height, width = image_shape[0], image_shape[1]
    kept = []
    for entry in raw:
        x_min, y_min, x_max, y_max, score = entry
        values = (x_min, y_min, x_max, y_max, score)
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ProtocolError(
                    f"detection for image {request.image_id!r} has a non-finite field: {entry!r}"
                )
        score = float(score)
        if score < 0.0 or score > 1.0:
            raise ProtocolError(
                f"detection score {score!r} outside [0, 1] for image {request.image_id!r}"
            )
        if score < request.box_threshold:
            continue
        cx_min = min(max(float(x_min), 0.0), float(width))
        cy_min = min(max(float(y_min), 0.0), float(height))
        cx_max = min(max(float(x_max), 0.0), float(width))
        cy_max = min(max(float(y_max), 0.0), float(height))
        if (cx_min, cy_min, cx_max, cy_max) != (x_min, y_min, x_max, y_max):
            warn(
                f"image {request.image_id}: box ({x_min}, {y_min}, {x_max}, {y_max}) "
                f"clamped to image bounds {width}x{height}"
            )
        if cx_max <= cx_min or cy_max <= cy_min:
            raise ProtocolError(
                f"detection box ({x_min}, {y_min}, {x_max}, {y_max}) for image "
                f"{request.image_id!r} has no area inside the {width}x{height} image"
            )
        kept.append(
            ScoredDetection(
                box=PixelBox(cx_min, cy_min, cx_max, cy_max),
                query_label=request.prompt,
                score=score,
                source_image_id=request.image_id,
            )
        )
    kept.sort(key=lambda d: (-d.score, -d.box.area, d.box.x_min, d.box.y_min))
    if len(kept) > MAX_DETECTIONS:
        warn(
            f"image {request.image_id}: {len(kept)} detections exceed the "
            f"{MAX_DETECTIONS} proposal cap, keeping the highest scores"
        )
        kept = kept[:MAX_DETECTIONS]
    return kept
