from .base import (
    DEFAULT_LABELS,
    MAX_DETECTIONS,
    PROBABILITY_TOLERANCE,
    ClassDistribution,
    Classifier,
    DetectionRequest,
    Detector,
    LabelSchema,
    argmax_label,
    finalize_detections,
)
from .filebacked import FileBackedProvider
from .remote import RemoteProvider, load_protocol_schemas

__all__ = [
    "DEFAULT_LABELS",
    "MAX_DETECTIONS",
    "PROBABILITY_TOLERANCE",
    "ClassDistribution",
    "Classifier",
    "DetectionRequest",
    "Detector",
    "LabelSchema",
    "argmax_label",
    "finalize_detections",
    "FileBackedProvider",
    "RemoteProvider",
    "load_protocol_schemas",
]
