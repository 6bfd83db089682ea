"""Detection and classification scoring against human annotations.

Predictions and ground truth are matched per image, one-to-one, by
descending overlap. Detection quality is the mean IoU over that
pairing; classification quality is accuracy and macro-F1 over the
matched pairs, since an unmatched prediction has no true label to
compare against. Unmatched truths still show up: they pull the mean
IoU down (unless ``matched_only``) and fill the "unmatched" column of
the confusion matrix.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DataError, ValidationError
from .geometry import PixelBox, iou
from .pipeline import DebrisRecord
from .providers import LabelSchema

UNMATCHED = "unmatched"


@dataclass(frozen=True)
class GroundTruthBox:
    """One human-annotated object."""

    image_id: str
    box: PixelBox
    label: str

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValidationError("image_id must be non-empty")
        if not self.label:
            raise ValidationError("label must be non-empty")

    def sort_key(self) -> tuple:
        return (self.box.x_min, self.box.y_min, self.box.x_max, self.box.y_max, self.label)


@dataclass(frozen=True)
class BoxPairing:
    """Greedy one-to-one matching result across all images."""

    matched: tuple
    unmatched_predictions: tuple
    unmatched_truths: tuple

    @property
    def truth_count(self) -> int:
        return len(self.matched) + len(self.unmatched_truths)


def match_boxes(
    preds: Sequence[DebrisRecord],
    truths: Sequence[GroundTruthBox],
    optimal: bool = False,
) -> BoxPairing:
    """Pair predictions with ground truth, per image, one-to-one.

    Greedy by default: candidate pairs sorted by descending IoU are
    accepted while both sides are unused. Zero-IoU pairs never match.
    Ties break on box coordinates, not input order, so the pairing is
    stable under permutation. ``optimal`` switches to a maximum-total-
    IoU assignment for sensitivity checks.
    """
    matched = []
    unmatched_preds = []
    unmatched_truths = []
    by_image: dict = {}
    for p in preds:
        by_image.setdefault(p.source_image_id, ([], []))[0].append(p)
    for t in truths:
        by_image.setdefault(t.image_id, ([], []))[1].append(t)
    for image_id in sorted(by_image):
        image_preds, image_truths = by_image[image_id]
        image_preds.sort(key=lambda p: p.record_id)
        image_truths.sort(key=lambda t: t.sort_key())
        pairs = []
        for pi, p in enumerate(image_preds):
            for ti, t in enumerate(image_truths):
                overlap = iou(p.box, t.box)
                if overlap > 0.0:
                    pairs.append((overlap, pi, ti))
        if optimal:
            chosen = _optimal_pairs(pairs, len(image_preds), len(image_truths))
        else:
            chosen = _greedy_pairs(pairs, image_preds, image_truths)
        used_preds = {pi for _, pi, _ in chosen}
        used_truths = {ti for _, _, ti in chosen}
        matched.extend(
            (image_preds[pi], image_truths[ti], overlap) for overlap, pi, ti in chosen
        )
        unmatched_preds.extend(p for pi, p in enumerate(image_preds) if pi not in used_preds)
        unmatched_truths.extend(t for ti, t in enumerate(image_truths) if ti not in used_truths)
    return BoxPairing(
        matched=tuple(matched),
        unmatched_predictions=tuple(unmatched_preds),
        unmatched_truths=tuple(unmatched_truths),
    )


def _greedy_pairs(pairs, image_preds, image_truths):
    def order(entry):
        overlap, pi, ti = entry
        return (-overlap, image_preds[pi].record_id, image_truths[ti].sort_key())

    chosen = []
    used_preds: set = set()
    used_truths: set = set()
    for overlap, pi, ti in sorted(pairs, key=order):
        if pi in used_preds or ti in used_truths:
            continue
        chosen.append((overlap, pi, ti))
        used_preds.add(pi)
        used_truths.add(ti)
    return chosen


def _optimal_pairs(pairs, n_preds, n_truths):
    import numpy as np
    from scipy.optimize import linear_sum_assignment

    if not pairs or n_preds == 0 or n_truths == 0:
        return []
    gain = np.zeros((n_preds, n_truths))
    for overlap, pi, ti in pairs:
        gain[pi, ti] = overlap
    rows, cols = linear_sum_assignment(gain, maximize=True)
    return [
        (float(gain[pi, ti]), int(pi), int(ti))
        for pi, ti in zip(rows, cols)
        if gain[pi, ti] > 0.0
    ]


def mean_iou(pairing: BoxPairing, matched_only: bool = False) -> Optional[float]:
    """Average IoU of the pairing, or None when nothing can be scored.

    By default every unmatched truth contributes a zero, penalizing
    missed objects; ``matched_only`` averages over matched pairs alone.
    """
    if matched_only:
        if not pairing.matched:
            return None
        return math.fsum(overlap for _, _, overlap in pairing.matched) / len(pairing.matched)
    if pairing.truth_count == 0:
        return None
    total = math.fsum(overlap for _, _, overlap in pairing.matched)
    return total / pairing.truth_count


@dataclass(frozen=True)
class MetricsReport:
    """Detection and classification scores plus the confusion matrix.

    Optional scores are None when the inputs cannot support them (no
    ground truth, or no matched pairs). Confusion rows are truth
    classes in schema order; columns add "unmatched" for truths no
    prediction covered.
    """

    mean_iou: Optional[float]
    matched_mean_iou: Optional[float]
    accuracy: Optional[float]
    macro_f1: Optional[float]
    per_class: dict
    confusion: dict
    matched_pairs: int
    unmatched_predictions: int
    unmatched_truths: int

    def to_dict(self) -> dict:
        return {
            "mean_iou": self.mean_iou,
            "matched_mean_iou": self.matched_mean_iou,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_class": {
                label: dict(scores) for label, scores in self.per_class.items()
            },
            "confusion": {t: dict(row) for t, row in self.confusion.items()},
            "matched_pairs": self.matched_pairs,
            "unmatched_predictions": self.unmatched_predictions,
            "unmatched_truths": self.unmatched_truths,
        }


def classification_metrics(pairing: BoxPairing, schema: LabelSchema) -> MetricsReport:
    """Score labels over the matched pairs of a pairing.

    Uses each record's corrected label when present. Per-class
    precision, recall, and F1 count only matched pairs; a class with no
    matched presence on either side is excluded from the macro mean.
    Empty pairings yield None scores rather than misleading zeros.
    """
    confusion = {t: {p: 0 for p in list(schema) + [UNMATCHED]} for t in schema}
    for record, truth, _ in pairing.matched:
        if truth.label not in schema:
            raise ValidationError(f"truth label {truth.label!r} not in schema")
        if record.label not in schema:
            raise ValidationError(f"predicted label {record.label!r} not in schema")
        confusion[truth.label][record.label] += 1
    for truth in pairing.unmatched_truths:
        if truth.label not in schema:
            raise ValidationError(f"truth label {truth.label!r} not in schema")
        confusion[truth.label][UNMATCHED] += 1

    matched = len(pairing.matched)
    correct = sum(confusion[label][label] for label in schema)
    accuracy = correct / matched if matched else None

    per_class = {}
    f1_values = []
    for label in schema:
        tp = confusion[label][label]
        fp = sum(confusion[t][label] for t in schema if t != label)
        fn = sum(confusion[label][p] for p in schema if p != label)
        if tp + fp + fn == 0:
            continue
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = {"precision": precision, "recall": recall, "f1": f1}
        f1_values.append(f1)
    macro_f1 = math.fsum(f1_values) / len(f1_values) if f1_values else None

    return MetricsReport(
        mean_iou=mean_iou(pairing),
        matched_mean_iou=mean_iou(pairing, matched_only=True),
        accuracy=accuracy,
        macro_f1=macro_f1,
        per_class=per_class,
        confusion=confusion,
        matched_pairs=matched,
        unmatched_predictions=len(pairing.unmatched_predictions),
        unmatched_truths=len(pairing.unmatched_truths),
    )


def evaluate_records(
    preds: Sequence[DebrisRecord],
    truths: Sequence[GroundTruthBox],
    schema: LabelSchema,
    optimal: bool = False,
) -> MetricsReport:
    """Match and score in one call."""
    return classification_metrics(match_boxes(preds, truths, optimal=optimal), schema)


def load_annotations_json(data: bytes, schema: LabelSchema) -> "list[GroundTruthBox]":
    """Parse the annotation document format.

    Layout: ``{"annotations": {"<image_id>": [{"box": [x_min, y_min,
    x_max, y_max], "label": "plastic"}, ...]}}``. Labels outside the
    schema and malformed boxes are data errors.
    """
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"annotation file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("annotations"), dict):
        raise DataError("annotation file needs a top-level 'annotations' object")
    truths = []
    for image_id, entries in sorted(doc["annotations"].items()):
        if not isinstance(entries, list):
            raise DataError(f"annotations for image {image_id!r} must be a list")
        for i, entry in enumerate(entries):
            where = f"image {image_id!r} entry {i}"
            if not isinstance(entry, dict) or "box" not in entry or "label" not in entry:
                raise DataError(f"{where}: each annotation needs 'box' and 'label'")
            box = entry["box"]
            if not isinstance(box, (list, tuple)) or len(box) != 4:
                raise DataError(f"{where}: box must be [x_min, y_min, x_max, y_max]")
            label = entry["label"]
            if label not in schema:
                raise DataError(f"{where}: label {label!r} not in schema {list(schema)}")
            try:
                pixel_box = PixelBox(*(float(v) for v in box))
            except (TypeError, ValueError, ValidationError) as exc:
                raise DataError(f"{where}: invalid box: {exc}") from exc
            truths.append(GroundTruthBox(image_id=image_id, box=pixel_box, label=label))
    return truths


def load_annotations_csv(data: bytes, schema: LabelSchema) -> "list[GroundTruthBox]":
    """Parse ground truth from the survey export CSV columns.

    Accepts any CSV whose header includes image_id, the four box
    columns, and label; extra columns (the full export schema) are
    ignored. This lets a hand-corrected survey export serve as truth.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"annotation CSV is not UTF-8: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    needed = ["image_id", "x_min", "y_min", "x_max", "y_max", "label"]
    header = reader.fieldnames or []
    missing = [c for c in needed if c not in header]
    if missing:
        raise DataError(f"annotation CSV is missing columns: {missing}")
    truths = []
    for line, row in enumerate(reader, start=2):
        label = row["label"]
        if label not in schema:
            raise DataError(f"line {line}: label {label!r} not in schema")
        try:
            box = PixelBox(
                float(row["x_min"]), float(row["y_min"]),
                float(row["x_max"]), float(row["y_max"]),
            )
        except (TypeError, ValueError, ValidationError) as exc:
            raise DataError(f"line {line}: invalid box: {exc}") from exc
        truths.append(GroundTruthBox(image_id=row["image_id"], box=box, label=label))
    return truths
