"""Survey configuration: one YAML document drives a whole run.

Every knob has a default matching the reference drone setup, so an
absent or empty file is a valid configuration. Unknown keys are
rejected rather than ignored; a typo that silently reverts a threshold
to its default would be invisible in results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .errors import ConfigError, ValidationError
from .geolocate import CameraModel
from .pipeline import DEFAULT_THRESHOLD_PAIRS, PipelineConfig
from .providers import DEFAULT_LABELS, FileBackedProvider, LabelSchema, RemoteProvider

CAMERA_PROFILES = {
    "phantom4pro": CameraModel(
        focal_length=0.0088,
        sensor_width=0.0132,
        image_width_px=5472,
        image_height_px=3648,
    ),
}

DEFAULT_COLORS = {
    "wood": "#8c564b",
    "cage": "#d62728",
    "fishing gear": "#1f77b4",
    "nature": "#2ca02c",
    "plastic": "#ff7f0e",
    "metal": "#7f7f7f",
    "wheel": "#9467bd",
}

# Fallback cycle for custom labels with no configured color.
PALETTE_CYCLE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "filebacked"
    fixture_dir: Optional[str] = None
    base_url: Optional[str] = None
    timeout: float = 30.0
    concurrency: int = 4

    def __post_init__(self) -> None:
        if self.kind not in ("filebacked", "remote"):
            raise ConfigError(f"provider.kind must be filebacked or remote, got {self.kind!r}")
        if self.kind == "filebacked" and not self.fixture_dir:
            raise ConfigError("provider.fixture_dir is required for the filebacked provider")
        if self.kind == "remote" and not self.base_url:
            raise ConfigError("provider.base_url is required for the remote provider")
        if self.timeout <= 0:
            raise ConfigError("provider.timeout must be positive")
        if self.concurrency < 1:
            raise ConfigError("provider.concurrency must be at least 1")


@dataclass(frozen=True)
class SurveyConfig:
    camera: CameraModel = CAMERA_PROFILES["phantom4pro"]
    labels: tuple = DEFAULT_LABELS
    colors: dict = field(default_factory=lambda: dict(DEFAULT_COLORS))
    trash_prompt: str = "all trash"
    rock_prompt: str = "all rocks"
    threshold_pairs: tuple = DEFAULT_THRESHOLD_PAIRS
    overlap_threshold: float = 0.40
    max_area_fraction: float = 0.5
    rock_containment_threshold: float = 0.5
    provider: ProviderConfig = field(default_factory=lambda: ProviderConfig(fixture_dir="."))
    dedup_radius_m: float = 5.0
    dedup_min_matches: int = 50
    cluster_eps_m: float = 10.0
    cluster_min_pts: int = 3
    workers: int = 1
    upload_max_bytes: int = 50_000_000

    def schema(self) -> LabelSchema:
        return LabelSchema(self.labels)

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            trash_prompt=self.trash_prompt,
            rock_prompt=self.rock_prompt,
            threshold_pairs=self.threshold_pairs,
            overlap_threshold=self.overlap_threshold,
            max_area_fraction=self.max_area_fraction,
            rock_containment_threshold=self.rock_containment_threshold,
            schema=self.schema(),
        )

    def build_provider(self, on_warning=None):
        """Instantiate the configured provider; it serves both roles."""
        if self.provider.kind == "filebacked":
            return FileBackedProvider(self.provider.fixture_dir, on_warning=on_warning)
        return RemoteProvider(
            self.provider.base_url,
            timeout=self.provider.timeout,
            concurrency=self.provider.concurrency,
            on_warning=on_warning,
        )

    def color_for(self, label: str) -> str:
        return self.colors[label]


def _expect_keys(section: dict, allowed: tuple, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {where} keys: {unknown} (allowed: {sorted(allowed)})")


def _parse_camera(value) -> CameraModel:
    if isinstance(value, str):
        if value not in CAMERA_PROFILES:
            raise ConfigError(
                f"unknown camera profile {value!r}; available: {sorted(CAMERA_PROFILES)}"
            )
        return CAMERA_PROFILES[value]
    if isinstance(value, dict):
        allowed = ("focal_length_m", "sensor_width_m", "image_width_px", "image_height_px")
        _expect_keys(value, allowed, "camera")
        missing = [k for k in allowed if k not in value]
        if missing:
            raise ConfigError(f"camera definition is missing {missing}")
        try:
            return CameraModel(
                focal_length=float(value["focal_length_m"]),
                sensor_width=float(value["sensor_width_m"]),
                image_width_px=int(value["image_width_px"]),
                image_height_px=int(value["image_height_px"]),
            )
        except (TypeError, ValueError, ValidationError) as exc:
            raise ConfigError(f"invalid camera definition: {exc}") from exc
    raise ConfigError("camera must be a profile name or an intrinsics mapping")


def _parse_colors(labels: tuple, value: Optional[dict]) -> dict:
    colors = dict(value or {})
    for label, color in colors.items():
        if label not in labels:
            raise ConfigError(f"color configured for unknown label {label!r}")
        if not isinstance(color, str) or not color.startswith("#") or len(color) != 7:
            raise ConfigError(f"color for {label!r} must look like #rrggbb, got {color!r}")
    out = {}
    cycle = 0
    for label in labels:
        if label in colors:
            out[label] = colors[label]
        elif label in DEFAULT_COLORS:
            out[label] = DEFAULT_COLORS[label]
        else:
            out[label] = PALETTE_CYCLE[cycle % len(PALETTE_CYCLE)]
            cycle += 1
    return out


TOP_LEVEL_KEYS = (
    "camera", "labels", "colors", "detection", "provider", "dedup", "clustering",
    "workers", "service",
)
DETECTION_KEYS = (
    "trash_prompt", "rock_prompt", "threshold_pairs", "overlap_threshold",
    "max_area_fraction", "rock_containment_threshold",
)
PROVIDER_KEYS = ("kind", "fixture_dir", "base_url", "timeout", "concurrency")
DEDUP_KEYS = ("radius_m", "min_matches")
CLUSTER_KEYS = ("eps_m", "min_pts")


def load_config(path: Optional[Union[str, Path]] = None) -> SurveyConfig:
    """Load a survey configuration, or the defaults when path is None.

    Raises :class:`ConfigError` for unreadable files, unknown keys, and
    out-of-range values.
    """
    if path is None:
        return SurveyConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if doc is None:
        return SurveyConfig()
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a mapping at the top level")
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> SurveyConfig:
    _expect_keys(doc, TOP_LEVEL_KEYS, "config")
    kwargs: dict = {}

    if "camera" in doc:
        kwargs["camera"] = _parse_camera(doc["camera"])
    labels = tuple(doc.get("labels", DEFAULT_LABELS))
    if "labels" in doc:
        try:
            LabelSchema(labels)
        except ValidationError as exc:
            raise ConfigError(f"invalid labels: {exc}") from exc
        kwargs["labels"] = labels
    kwargs["colors"] = _parse_colors(labels, doc.get("colors"))

    detection = doc.get("detection", {})
    if not isinstance(detection, dict):
        raise ConfigError("detection section must be a mapping")
    _expect_keys(detection, DETECTION_KEYS, "detection")
    for key in ("trash_prompt", "rock_prompt"):
        if key in detection:
            kwargs[key] = detection[key]
    if "threshold_pairs" in detection:
        pairs = detection["threshold_pairs"]
        if not isinstance(pairs, list):
            raise ConfigError("detection.threshold_pairs must be a list of [box, text] pairs")
        kwargs["threshold_pairs"] = tuple(tuple(p) for p in pairs)
    for key in ("overlap_threshold", "max_area_fraction", "rock_containment_threshold"):
        if key in detection:
            kwargs[key] = detection[key]

    provider = doc.get("provider", None)
    if provider is not None:
        if not isinstance(provider, dict):
            raise ConfigError("provider section must be a mapping")
        _expect_keys(provider, PROVIDER_KEYS, "provider")
        kwargs["provider"] = ProviderConfig(**provider)

    dedup = doc.get("dedup", {})
    if not isinstance(dedup, dict):
        raise ConfigError("dedup section must be a mapping")
    _expect_keys(dedup, DEDUP_KEYS, "dedup")
    if "radius_m" in dedup:
        if not isinstance(dedup["radius_m"], (int, float)) or dedup["radius_m"] <= 0:
            raise ConfigError("dedup.radius_m must be a positive number")
        kwargs["dedup_radius_m"] = float(dedup["radius_m"])
    if "min_matches" in dedup:
        if not isinstance(dedup["min_matches"], int) or dedup["min_matches"] < 1:
            raise ConfigError("dedup.min_matches must be a positive integer")
        kwargs["dedup_min_matches"] = dedup["min_matches"]

    clustering = doc.get("clustering", {})
    if not isinstance(clustering, dict):
        raise ConfigError("clustering section must be a mapping")
    _expect_keys(clustering, CLUSTER_KEYS, "clustering")
    if "eps_m" in clustering:
        if not isinstance(clustering["eps_m"], (int, float)) or clustering["eps_m"] <= 0:
            raise ConfigError("clustering.eps_m must be a positive number")
        kwargs["cluster_eps_m"] = float(clustering["eps_m"])
    if "min_pts" in clustering:
        if not isinstance(clustering["min_pts"], int) or clustering["min_pts"] < 1:
            raise ConfigError("clustering.min_pts must be a positive integer")
        kwargs["cluster_min_pts"] = clustering["min_pts"]

    service = doc.get("service", {})
    if not isinstance(service, dict):
        raise ConfigError("service section must be a mapping")
    _expect_keys(service, ("upload_max_bytes",), "service")
    if "upload_max_bytes" in service:
        if not isinstance(service["upload_max_bytes"], int) or service["upload_max_bytes"] < 1:
            raise ConfigError("service.upload_max_bytes must be a positive integer")
        kwargs["upload_max_bytes"] = service["upload_max_bytes"]

    if "workers" in doc:
        if not isinstance(doc["workers"], int) or doc["workers"] < 1:
            raise ConfigError("workers must be a positive integer")
        kwargs["workers"] = doc["workers"]

    try:
        cfg = SurveyConfig(**kwargs)
        # Constructing the pipeline validates prompts and thresholds now,
        # not at first use.
        cfg.pipeline()
    except (ValidationError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg
