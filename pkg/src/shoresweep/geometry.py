"""Bounding-box arithmetic and the detection-filtering rules.

All operations are pure functions over immutable values; inputs are never
mutated and may be shared freely across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ValidationError

__all__ = [
    "PixelBox",
    "ScoredDetection",
    "iou",
    "overlap_ratio",
    "suppress_overlaps",
    "filter_oversized",
    "subtract_overlapping",
]


@dataclass(frozen=True, slots=True)
class PixelBox:
    """Axis-aligned box in continuous pixel coordinates, origin top-left."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if any(not math.isfinite(c) for c in coords):
            raise ValidationError(f"box coordinates must be finite, got {coords}")
        if self.x_min < 0 or self.y_min < 0:
            raise ValidationError(f"box coordinates must be >= 0, got {coords}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValidationError(f"box has degenerate extent: {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def intersection_area(self, other: "PixelBox") -> float:
        iw = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        ih = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if iw <= 0 or ih <= 0:
            return 0.0
        return iw * ih

    def within(self, width: float, height: float) -> bool:
        return self.x_max <= width and self.y_max <= height


@dataclass(frozen=True, slots=True)
class ScoredDetection:
    """One provider detection: a box, the text query that produced it, and
    its similarity score."""

    box: PixelBox
    query_label: str
    score: float
    source_image_id: str

    def __post_init__(self):
        if not self.query_label:
            raise ValidationError("query_label must be non-empty")
        if not (0.0 <= self.score <= 1.0) or math.isnan(self.score):
            raise ValidationError(f"score must be in [0, 1], got {self.score}")


def iou(a: PixelBox, b: PixelBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint, 1 iff identical."""
    inter = a.intersection_area(b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def overlap_ratio(a: PixelBox, b: PixelBox, measure: str = "iou") -> float:
    """Overlap under the configured measure: plain IoU, or intersection over
    the smaller box's area."""
    if measure == "iou":
        return iou(a, b)
    if measure == "smaller":
        inter = a.intersection_area(b)
        if inter == 0.0:
            return 0.0
        return inter / min(a.area, b.area)
    raise ValidationError(f"unknown overlap measure {measure!r}")


def _suppression_order(det: ScoredDetection):
    # Descending score; ties by larger area, then lower x_min, then lower y_min.
    return (-det.score, -det.box.area, det.box.x_min, det.box.y_min)


def suppress_overlaps(
    dets: Sequence[ScoredDetection],
    threshold: float = 0.40,
    measure: str = "iou",
) -> list[ScoredDetection]:
    """Greedy overlap suppression.

    Walks detections by descending score and keeps one only if its overlap
    with every already-kept detection stays below ``threshold``. Output is in
    descending-score order.
    """
    kept: list[ScoredDetection] = []
    for det in sorted(dets, key=_suppression_order):
        if all(overlap_ratio(det.box, k.box, measure) < threshold for k in kept):
            kept.append(det)
    return kept


def filter_oversized(
    dets: Sequence[ScoredDetection],
    image_width: float,
    image_height: float,
    max_area_fraction: float = 0.5,
) -> list[ScoredDetection]:
    """Drop detections whose box area exceeds ``max_area_fraction`` of the
    image area; the rest pass through unchanged and in order."""
    if image_width <= 0 or image_height <= 0:
        raise ValidationError("image dimensions must be positive")
    limit = max_area_fraction * image_width * image_height
    return [d for d in dets if d.box.area <= limit]


def subtract_overlapping(
    trash: Sequence[ScoredDetection],
    rocks: Iterable[ScoredDetection],
    containment_threshold: float = 0.5,
) -> list[ScoredDetection]:
    """Remove trash detections mostly covered by a rock detection.

    A trash box is dropped when its intersection with any single rock box,
    divided by the trash box's own area, reaches ``containment_threshold``.
    """
    rock_boxes = [r.box for r in rocks]
    out: list[ScoredDetection] = []
    for det in trash:
        area = det.box.area
        covered = any(
            det.box.intersection_area(rb) / area >= containment_threshold
            for rb in rock_boxes
        )
        if not covered:
            out.append(det)
    return out
