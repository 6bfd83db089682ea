"""Raster helpers: decoding, grayscale conversion, and crop extraction.

Crop bounds round outward to integer pixels and clamp to the image, so a
fractional detection box always yields the smallest integer crop covering it.
"""

from __future__ import annotations

import io
import math

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError
from .geometry import PixelBox

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def decode_image(data: bytes) -> np.ndarray:
    """Decode image bytes to an RGB uint8 array of shape (H, W, 3)."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DataError(f"undecodable image: {exc}") from exc


def encode_png(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(img)).save(buf, format="PNG")
    return buf.getvalue()


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Convert a raster to float64 luminance in [0, 1]."""
    arr = np.asarray(img)
    if arr.ndim == 3:
        r, g, b = LUMA_WEIGHTS
        arr = r * arr[..., 0] + g * arr[..., 1] + b * arr[..., 2]
    arr = arr.astype(np.float64)
    if np.issubdtype(np.asarray(img).dtype, np.integer):
        arr /= 255.0
    return np.clip(arr, 0.0, 1.0)


def crop_bounds(box: PixelBox, width: int, height: int) -> tuple[int, int, int, int]:
    """Outward-rounded integer crop bounds, clamped to the image."""
    x0 = max(0, math.floor(box.x_min))
    y0 = max(0, math.floor(box.y_min))
    x1 = min(width, math.ceil(box.x_max))
    y1 = min(height, math.ceil(box.y_max))
    return x0, y0, x1, y1


def crop(img: np.ndarray, box: PixelBox) -> np.ndarray:
    """Extract the outward-rounded crop for a box; empty array if the crop
    degenerates after clamping."""
    h, w = img.shape[:2]
    x0, y0, x1, y1 = crop_bounds(box, w, h)
    return img[y0:y1, x0:x1]


def crop_key(image_id: str, box: PixelBox, width: int, height: int) -> str:
    """Stable identifier for a crop: image id plus integer crop bounds."""
    x0, y0, x1, y1 = crop_bounds(box, width, height)
    return f"{image_id}:{x0},{y0},{x1},{y1}"
