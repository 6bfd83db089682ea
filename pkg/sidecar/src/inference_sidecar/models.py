"""Real model loading and inference, imported only outside --fake mode.

Weights are fetched by identifier through the transformers hub cache at
startup. Loading failures raise ModelLoadError so the process can exit
nonzero instead of serving a half-alive endpoint.
"""

from __future__ import annotations

import io
import math

from .config import MAX_DETECTIONS, SidecarConfig


class ModelLoadError(Exception):
    pass


class ModelRuntime:
    """Holds the detector and classifier pipelines for one process."""

    def __init__(self, config: SidecarConfig):
        try:
            import torch  # noqa: F401
            from transformers import (
                AutoModelForZeroShotObjectDetection,
                AutoProcessor,
                CLIPModel,
                CLIPProcessor,
            )
        except ImportError as exc:
            raise ModelLoadError(
                f"model dependencies are not installed ({exc}); "
                "install the [models] extra or run with --fake"
            ) from exc
        try:
            self._detector_processor = AutoProcessor.from_pretrained(config.detector_model)
            self._detector = AutoModelForZeroShotObjectDetection.from_pretrained(
                config.detector_model
            ).to(config.device)
            self._clip_processor = CLIPProcessor.from_pretrained(config.classifier_model)
            self._clip = CLIPModel.from_pretrained(config.classifier_model).to(config.device)
        except Exception as exc:
            raise ModelLoadError(f"cannot load pinned models: {exc}") from exc
        self._device = config.device

    def detect(self, image_bytes: bytes, prompts: list) -> list:
        import torch
        from PIL import Image

        image = Image.open(io.BytesIO(image_bytes)).convert("RGB")
        out = []
        for prompt in prompts:
            inputs = self._detector_processor(
                images=image, text=prompt["text"], return_tensors="pt"
            ).to(self._device)
            with torch.no_grad():
                raw = self._detector(**inputs)
            results = self._detector_processor.post_process_grounded_object_detection(
                raw,
                inputs.input_ids,
                box_threshold=prompt["box_threshold"],
                text_threshold=prompt["text_threshold"],
                target_sizes=[image.size[::-1]],
            )[0]
            for box, score in zip(results["boxes"].tolist(), results["scores"].tolist()):
                x_min, y_min, x_max, y_max = box
                out.append(
                    {
                        "x_min": x_min,
                        "y_min": y_min,
                        "x_max": x_max,
                        "y_max": y_max,
                        "score": float(score),
                        "prompt": prompt["text"],
                    }
                )
        out.sort(key=lambda d: -d["score"])
        return out[:MAX_DETECTIONS]

    def classify(self, image_bytes: bytes, labels: list) -> list:
        import torch
        from PIL import Image

        image = Image.open(io.BytesIO(image_bytes)).convert("RGB")
        inputs = self._clip_processor(
            text=labels, images=image, return_tensors="pt", padding=True
        ).to(self._device)
        with torch.no_grad():
            logits = self._clip(**inputs).logits_per_image[0]
        probabilities = torch.softmax(logits, dim=0).tolist()
        total = math.fsum(probabilities)
        return [p / total for p in probabilities]
