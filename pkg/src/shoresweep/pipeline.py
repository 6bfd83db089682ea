"""Per-image survey flow: detect, filter, classify, geolocate.

Each image runs two text queries at every configured threshold pair,
unions the debris detections, subtracts rock-covered boxes, suppresses
overlaps, drops oversized boxes, then classifies a crop per surviving
detection. Filter order matters: rocks are subtracted before overlap
suppression so a rock-covered box can never suppress a clean one, and
the oversize filter runs last.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ShoresweepError, SurveyRunError, ValidationError
from .geolocate import CameraModel, GeoPoint, ImageMeta, pixel_to_geo
from .geometry import (
    PixelBox,
    ScoredDetection,
    filter_oversized,
    subtract_overlapping,
    suppress_overlaps,
)
from .images import crop, crop_bounds, crop_key, decode_image
from .providers import (
    ClassDistribution,
    Classifier,
    DetectionRequest,
    Detector,
    LabelSchema,
    argmax_label,
)

DEFAULT_TRASH_PROMPT = "all trash"
DEFAULT_ROCK_PROMPT = "all rocks"
DEFAULT_THRESHOLD_PAIRS = ((0.3, 0.3), (0.15, 0.15))


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the per-image detection flow.

    ``threshold_pairs`` holds (box_threshold, text_threshold) tuples;
    both prompts run once per pair and debris detections are unioned
    across pairs.
    """

    trash_prompt: str = DEFAULT_TRASH_PROMPT
    rock_prompt: str = DEFAULT_ROCK_PROMPT
    threshold_pairs: tuple = DEFAULT_THRESHOLD_PAIRS
    overlap_threshold: float = 0.40
    max_area_fraction: float = 0.5
    rock_containment_threshold: float = 0.5
    schema: LabelSchema = field(default_factory=LabelSchema)

    def __post_init__(self) -> None:
        if not isinstance(self.trash_prompt, str) or not self.trash_prompt.strip():
            raise ValidationError("trash_prompt must be non-empty")
        if not isinstance(self.rock_prompt, str) or not self.rock_prompt.strip():
            raise ValidationError("rock_prompt must be non-empty")
        pairs = tuple(tuple(p) for p in self.threshold_pairs)
        object.__setattr__(self, "threshold_pairs", pairs)
        if not pairs:
            raise ValidationError("at least one threshold pair is required")
        for pair in pairs:
            if len(pair) != 2:
                raise ValidationError(f"threshold pair must be (box, text), got {pair!r}")
            for v in pair:
                if not isinstance(v, (int, float)) or not math.isfinite(v) or not 0 <= v <= 1:
                    raise ValidationError(f"thresholds must be in [0, 1], got {v!r}")
        for name in ("overlap_threshold", "max_area_fraction", "rock_containment_threshold"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v) or not 0 < v <= 1:
                raise ValidationError(f"{name} must be in (0, 1], got {v!r}")


@dataclass(frozen=True)
class DebrisRecord:
    """One detected debris object, as persisted and exported."""

    record_id: str
    source_image_id: str
    box: PixelBox
    detection_score: float
    predicted_label: str
    class_distribution: Optional[ClassDistribution] = None
    corrected_label: Optional[str] = None
    geo_position: Optional[GeoPoint] = None
    duplicate_group: Optional[str] = None
    is_canonical: bool = True

    def __post_init__(self) -> None:
        if not self.record_id or not self.source_image_id:
            raise ValidationError("record_id and source_image_id must be non-empty")
        if not math.isfinite(self.detection_score) or not 0 <= self.detection_score <= 1:
            raise ValidationError(f"detection_score out of range: {self.detection_score!r}")
        if not self.predicted_label:
            raise ValidationError("predicted_label must be non-empty")

    @property
    def label(self) -> str:
        """Corrected label when set, else the predicted one."""
        return self.corrected_label if self.corrected_label is not None else self.predicted_label


@dataclass(frozen=True)
class SurveyImage:
    """Input unit for a survey run: raw bytes plus capture metadata.

    ``meta`` is None for images whose GPS fields were missing; their
    records stay unmapped.
    """

    image_id: str
    data: bytes
    meta: Optional[ImageMeta] = None


@dataclass(frozen=True)
class SurveyRun:
    """Outcome of a batch run: records plus per-image bookkeeping."""

    records: tuple
    processed: tuple
    failures: dict
    warnings: tuple

    @property
    def ok(self) -> bool:
        return not self.failures


def detect_image(
    image: np.ndarray,
    image_id: str,
    config: PipelineConfig,
    detector: Detector,
) -> "list[ScoredDetection]":
    """Run the dual-threshold, dual-prompt flow on one decoded image.

    Returns surviving detections in descending score order. Provider
    errors propagate; the caller decides whether to isolate them.
    """
    trash: list[ScoredDetection] = []
    rocks: list[ScoredDetection] = []
    for box_t, text_t in config.threshold_pairs:
        trash_req = DetectionRequest(image_id, config.trash_prompt, box_t, text_t)
        trash.extend(detector.detect(trash_req, image))
        rock_req = DetectionRequest(image_id, config.rock_prompt, box_t, text_t)
        rocks.extend(detector.detect(rock_req, image))
    kept = subtract_overlapping(trash, rocks, config.rock_containment_threshold)
    kept = suppress_overlaps(kept, config.overlap_threshold)
    height, width = image.shape[0], image.shape[1]
    return filter_oversized(kept, width, height, config.max_area_fraction)


def classify_detections(
    image: np.ndarray,
    image_id: str,
    dets: Sequence[ScoredDetection],
    config: PipelineConfig,
    classifier: Classifier,
    warn: Optional[Callable] = None,
) -> "list[DebrisRecord]":
    """Crop each detection and classify it into a DebrisRecord.

    Record ids number detections in their given (descending score)
    order, so ids are stable across reruns. Crops round the box bounds
    outward to whole pixels. A crop with no pixels is dropped with a
    warning rather than failing the image.
    """
    height, width = image.shape[0], image.shape[1]
    records: list[DebrisRecord] = []
    for i, det in enumerate(dets):
        x0, y0, x1, y1 = crop_bounds(det.box, width, height)
        if x1 <= x0 or y1 <= y0:
            if warn is not None:
                warn(f"image {image_id}: detection {i} crop has no pixels, dropped")
            continue
        patch = image[y0:y1, x0:x1]
        cid = crop_key(image_id, det.box, width, height)
        dist = classifier.classify(patch, config.schema, crop_id=cid)
        records.append(
            DebrisRecord(
                record_id=f"{image_id}:{i:04d}",
                source_image_id=image_id,
                box=det.box,
                detection_score=det.score,
                predicted_label=argmax_label(dist),
                class_distribution=dist,
            )
        )
    return records


def geolocate_records(
    records: Sequence[DebrisRecord],
    meta: Optional[ImageMeta],
    camera: Optional[CameraModel],
    warn: Optional[Callable] = None,
) -> "list[DebrisRecord]":
    """Fill geo_position from each record's box center.

    Records keep a None position when metadata or camera intrinsics are
    missing, or when projection fails (polar captures).
    """
    if meta is None or camera is None:
        return list(records)
    out = []
    for rec in records:
        try:
            point = pixel_to_geo(meta, camera, rec.box.center)
        except ValidationError as exc:
            if warn is not None:
                warn(f"record {rec.record_id}: geolocation failed: {exc}")
            out.append(rec)
            continue
        out.append(replace(rec, geo_position=point))
    return out


def _process_one(
    item: SurveyImage,
    config: PipelineConfig,
    detector: Detector,
    classifier: Classifier,
    camera: Optional[CameraModel],
    on_progress: Optional[Callable] = None,
) -> tuple:
    def progress(stage: str) -> None:
        if on_progress is not None:
            on_progress(item.image_id, stage)

    warnings: list[str] = []
    image = decode_image(item.data)
    progress("detecting")
    dets = detect_image(image, item.image_id, config, detector)
    progress("classifying")
    records = classify_detections(
        image, item.image_id, dets, config, classifier, warn=warnings.append
    )
    records = geolocate_records(records, item.meta, camera, warn=warnings.append)
    if item.meta is None:
        warnings.append(f"image {item.image_id}: no capture metadata, records left unmapped")
    progress("done")
    return records, warnings


def run_survey(
    images: Sequence[SurveyImage],
    config: PipelineConfig,
    detector: Detector,
    classifier: Classifier,
    camera: Optional[CameraModel] = None,
    workers: int = 1,
    on_progress: Optional[Callable] = None,
) -> SurveyRun:
    """Process a batch of images into debris records.

    Images run independently (in parallel when ``workers`` > 1) and a
    failing image never aborts the batch; its error lands in
    ``failures``. Output records are ordered by (image id, record id)
    so the result is identical for any worker count or input order.
    ``on_progress`` receives (image_id, stage) as each image moves
    through detecting, classifying, done. Raises
    :class:`SurveyRunError` only when every image failed.
    """
    items = list(images)
    if not items:
        raise ValidationError("survey needs at least one image")
    ids = [item.image_id for item in items]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate image ids in survey input")
    if workers < 1:
        raise ValidationError("workers must be at least 1")

    def job(item: SurveyImage):
        try:
            result = _process_one(item, config, detector, classifier, camera, on_progress)
            return item.image_id, result, None
        except ShoresweepError as exc:
            return item.image_id, None, exc

    if workers == 1 or len(items) == 1:
        outcomes = [job(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, items))

    records: list[DebrisRecord] = []
    warnings: list[str] = []
    failures: dict = {}
    processed: list[str] = []
    for image_id, result, error in sorted(outcomes, key=lambda o: o[0]):
        if error is not None:
            failures[image_id] = f"{type(error).__name__}: {error}"
            continue
        image_records, image_warnings = result
        records.extend(image_records)
        warnings.extend(image_warnings)
        processed.append(image_id)
    if not processed:
        raise SurveyRunError(f"all {len(items)} images failed", causes=failures)
    records.sort(key=lambda r: (r.source_image_id, r.record_id))
    return SurveyRun(
        records=tuple(records),
        processed=tuple(processed),
        failures=failures,
        warnings=tuple(warnings),
    )
