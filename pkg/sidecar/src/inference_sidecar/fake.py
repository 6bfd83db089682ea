"""Deterministic stand-in models for ``--fake`` mode.

Outputs are pure functions of the request bytes: detections and class
scores are derived from SHA-256 of the image and the prompt or label
text. That keeps integration tests of the remote client free of GPUs
and downloads while still exercising thresholds, ordering, the
proposal cap, and label alignment.

Per-label scores depend only on (image, label text), never on list
position, so permuting the request labels permutes the probabilities
and nothing else.
"""

from __future__ import annotations

import hashlib
import io
import math

from PIL import Image, UnidentifiedImageError

from .config import MAX_DETECTIONS


def _unit_stream(seed: bytes):
    """Reproducible floats in [0, 1) derived from hashing a counter."""
    counter = 0
    while True:
        block = hashlib.sha256(seed + counter.to_bytes(4, "big")).digest()
        for i in range(0, 32, 4):
            yield int.from_bytes(block[i:i + 4], "big") / 2.0**32
        counter += 1


def _image_size(image_bytes: bytes) -> tuple:
    try:
        with Image.open(io.BytesIO(image_bytes)) as im:
            return im.size
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"image bytes are not a decodable raster: {exc}") from exc


def fake_detections(image_bytes: bytes, prompts: list) -> list:
    """Boxes seeded by (image, prompt), filtered by each prompt's own
    box threshold, highest scores first, capped at the proposal limit.

    Scores live in [0.05, 0.95), so a threshold of 1.0 always yields an
    empty list."""
    width, height = _image_size(image_bytes)
    digest = hashlib.sha256(image_bytes).digest()
    out = []
    for prompt in prompts:
        text = prompt["text"]
        stream = _unit_stream(digest + text.encode("utf-8"))
        count = 2 + int(next(stream) * 4)
        for _ in range(count):
            u_cx, u_cy, u_w, u_h, u_s = (next(stream) for _ in range(5))
            bw = max(1.0, (0.05 + 0.25 * u_w) * width)
            bh = max(1.0, (0.05 + 0.25 * u_h) * height)
            cx, cy = u_cx * width, u_cy * height
            x_min = min(max(cx - bw / 2.0, 0.0), width - 1.0)
            y_min = min(max(cy - bh / 2.0, 0.0), height - 1.0)
            x_max = min(x_min + bw, float(width))
            y_max = min(y_min + bh, float(height))
            score = 0.05 + 0.9 * u_s
            if score < prompt["box_threshold"]:
                continue
            out.append(
                {
                    "x_min": x_min,
                    "y_min": y_min,
                    "x_max": x_max,
                    "y_max": y_max,
                    "score": score,
                    "prompt": text,
                }
            )
    out.sort(key=lambda d: (-d["score"], d["prompt"], d["x_min"], d["y_min"]))
    return out[:MAX_DETECTIONS]


def fake_probabilities(image_bytes: bytes, labels: list) -> list:
    _image_size(image_bytes)
    digest = hashlib.sha256(image_bytes).digest()
    raw = []
    for label in labels:
        value = hashlib.sha256(digest + b"\x00" + label.encode("utf-8")).digest()
        raw.append(int.from_bytes(value[:8], "big") / 2.0**64 + 1e-9)
    total = math.fsum(raw)
    return [v / total for v in raw]
