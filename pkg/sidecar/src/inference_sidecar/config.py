from __future__ import annotations

from dataclasses import dataclass

DEFAULT_DETECTOR = "IDEA-Research/grounding-dino-base"
DEFAULT_CLASSIFIER = "openai/clip-vit-large-patch14"

# Proposal cap per detect request, highest scores kept.
MAX_DETECTIONS = 900


@dataclass(frozen=True)
class SidecarConfig:
    """Deployment knobs. Model weights are pinned by identifier and
    fetched at startup, never vendored."""

    detector_model: str = DEFAULT_DETECTOR
    classifier_model: str = DEFAULT_CLASSIFIER
    device: str = "cpu"
    concurrency: int = 1
    fake: bool = False

    def __post_init__(self) -> None:
        if not self.detector_model or not self.classifier_model:
            raise ValueError("model identifiers must be non-empty")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
