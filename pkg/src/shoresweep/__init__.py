"""Aerial debris survey toolkit: detect, geolocate, and map shoreline trash."""

from .config import SurveyConfig, load_config
from .dedup import DedupResult, DedupStats, DuplicateGroup, SpatialIndex, dedup_survey
from .errors import (
    ConfigError,
    DataError,
    ProtocolError,
    ProviderError,
    ShoresweepError,
    SurveyRunError,
    TransportError,
    ValidationError,
)
from .evaluation import (
    GroundTruthBox,
    MetricsReport,
    evaluate_records,
    load_annotations_csv,
    load_annotations_json,
    match_boxes,
)
from .geolocate import CameraModel, GeoPoint, ImageMeta, cluster_hotspots, gsd, haversine, pixel_to_geo
from .geometry import PixelBox, ScoredDetection, iou, suppress_overlaps
from .pipeline import DebrisRecord, PipelineConfig, SurveyImage, SurveyRun, run_survey
from .providers import (
    ClassDistribution,
    Classifier,
    DetectionRequest,
    Detector,
    FileBackedProvider,
    LabelSchema,
    RemoteProvider,
)
from .store import SurveyStore, extract_capture_meta

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "ClassDistribution",
    "Classifier",
    "ConfigError",
    "DataError",
    "DebrisRecord",
    "DedupResult",
    "DedupStats",
    "DetectionRequest",
    "Detector",
    "DuplicateGroup",
    "FileBackedProvider",
    "GeoPoint",
    "GroundTruthBox",
    "ImageMeta",
    "LabelSchema",
    "MetricsReport",
    "PipelineConfig",
    "PixelBox",
    "ProtocolError",
    "ProviderError",
    "RemoteProvider",
    "ScoredDetection",
    "ShoresweepError",
    "SpatialIndex",
    "SurveyConfig",
    "SurveyImage",
    "SurveyRun",
    "SurveyRunError",
    "SurveyStore",
    "TransportError",
    "ValidationError",
    "cluster_hotspots",
    "dedup_survey",
    "evaluate_records",
    "extract_capture_meta",
    "gsd",
    "haversine",
    "iou",
    "load_annotations_csv",
    "load_annotations_json",
    "load_config",
    "match_boxes",
    "pixel_to_geo",
    "run_survey",
    "suppress_overlaps",
    "__version__",
]
