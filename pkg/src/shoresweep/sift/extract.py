"""Keypoint detection and descriptor computation.

The pipeline follows the canonical recipe: a doubled, pre-blurred base image
feeds a Gaussian scale space (octaves until the smaller dimension drops
below 16); difference-of-Gaussians extrema are localized to subpixel
precision by a quadratic fit, rejected for low contrast or edge response;
surviving points get one keypoint per dominant gradient orientation; each
keypoint is described by a 4x4 grid of 8-bin gradient histograms with
trilinear interpolation, normalized, clamped at 0.2 and renormalized.

Hot paths are vectorized over pixel windows; Python-level loops run only
over extremum candidates and keypoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..errors import ValidationError

N_INTERVALS = 3            # scales per octave
BASE_SIGMA = 1.6           # blur of each octave's first image
ASSUMED_BLUR = 0.5         # blur assumed present in the input
MIN_PYRAMID_DIM = 16       # stop adding octaves below this
CONTRAST_THRESHOLD = 0.04
EDGE_RATIO = 10.0
IMAGE_BORDER = 5           # candidate-free margin, in octave pixels
MAX_REFINE_STEPS = 5

ORI_BINS = 36
ORI_SIGMA_FACTOR = 1.5
ORI_RADIUS_FACTOR = 3
ORI_PEAK_RATIO = 0.8

DESC_WIDTH = 4
DESC_BINS = 8
DESC_SCALE_FACTOR = 3.0
DESC_CLAMP = 0.2

_EPS = 1e-7


@dataclass(frozen=True, slots=True)
class SiftKeypoint:
    """Subpixel keypoint in input-image coordinates."""

    x: float
    y: float
    scale: float
    orientation: float  # radians in [0, 2*pi)


@dataclass(slots=True)
class SiftDescriptorSet:
    """Keypoints with index-aligned 128-component unit descriptors."""

    keypoints: list[SiftKeypoint] = field(default_factory=list)
    descriptors: np.ndarray = field(
        default_factory=lambda: np.empty((0, 128), dtype=np.float32)
    )

    def __post_init__(self):
        if self.descriptors.ndim != 2 or self.descriptors.shape[1] != 128:
            raise ValidationError("descriptors must have shape (n, 128)")
        if len(self.keypoints) != self.descriptors.shape[0]:
            raise ValidationError("keypoints and descriptors must be index-aligned")

    def __len__(self) -> int:
        return len(self.keypoints)


@dataclass(slots=True)
class _Candidate:
    """Refined extremum before orientation assignment (octave coordinates)."""

    octave: int
    layer: int
    x_oct: float
    y_oct: float
    sigma_oct: float  # blur relative to the octave's sampling grid


def _prepare_input(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise ValidationError("extract expects a 2-d grayscale raster")
    arr = arr.astype(np.float64)
    if np.issubdtype(np.asarray(image).dtype, np.integer):
        arr /= 255.0
    if min(arr.shape) * 2 < MIN_PYRAMID_DIM:
        raise ValidationError(
            f"image too small: needs at least {MIN_PYRAMID_DIM}x{MIN_PYRAMID_DIM} "
            "after base-image doubling"
        )
    return arr


def _base_image(image: np.ndarray) -> np.ndarray:
    doubled = ndimage.zoom(image, 2.0, order=1, mode="nearest", grid_mode=True)
    # Doubling also doubles the assumed blur; top up to the base sigma.
    sigma_diff = math.sqrt(max(BASE_SIGMA**2 - (2.0 * ASSUMED_BLUR) ** 2, 0.01))
    return ndimage.gaussian_filter(doubled, sigma_diff)


def _num_octaves(base_shape: tuple[int, int]) -> int:
    return int(math.log2(min(base_shape) / MIN_PYRAMID_DIM)) + 1


def _gaussian_kernels() -> np.ndarray:
    k = 2.0 ** (1.0 / N_INTERVALS)
    sigmas = np.zeros(N_INTERVALS + 3)
    sigmas[0] = BASE_SIGMA
    for i in range(1, N_INTERVALS + 3):
        prev = BASE_SIGMA * k ** (i - 1)
        total = prev * k
        sigmas[i] = math.sqrt(total**2 - prev**2)
    return sigmas


def _build_pyramids(base: np.ndarray, n_octaves: int):
    kernels = _gaussian_kernels()
    gaussians: list[list[np.ndarray]] = []
    dogs: list[np.ndarray] = []
    img = base
    for _ in range(n_octaves):
        octave = [img]
        for sigma in kernels[1:]:
            octave.append(ndimage.gaussian_filter(octave[-1], sigma))
        gaussians.append(octave)
        dogs.append(np.stack([octave[i + 1] - octave[i] for i in range(len(octave) - 1)]))
        # Next octave starts from the image with twice the base blur.
        img = octave[N_INTERVALS][::2, ::2]
    return gaussians, dogs


def _find_extrema(dog: np.ndarray) -> np.ndarray:
    """Candidate (layer, y, x) indices of 3x3x3 extrema above the
    preliminary contrast floor."""
    prelim = 0.5 * CONTRAST_THRESHOLD / N_INTERVALS
    is_max = (dog == ndimage.maximum_filter(dog, size=3, mode="nearest")) & (dog > prelim)
    is_min = (dog == ndimage.minimum_filter(dog, size=3, mode="nearest")) & (dog < -prelim)
    mask = is_max | is_min
    mask[0] = mask[-1] = False
    b = IMAGE_BORDER
    inner = np.zeros_like(mask)
    inner[:, b:-b, b:-b] = mask[:, b:-b, b:-b]
    return np.argwhere(inner)


def _gradient_3d(cube: np.ndarray) -> np.ndarray:
    ds = 0.5 * (cube[2, 1, 1] - cube[0, 1, 1])
    dy = 0.5 * (cube[1, 2, 1] - cube[1, 0, 1])
    dx = 0.5 * (cube[1, 1, 2] - cube[1, 1, 0])
    return np.array([ds, dy, dx])


def _hessian_3d(cube: np.ndarray) -> np.ndarray:
    c = cube[1, 1, 1]
    dss = cube[2, 1, 1] - 2 * c + cube[0, 1, 1]
    dyy = cube[1, 2, 1] - 2 * c + cube[1, 0, 1]
    dxx = cube[1, 1, 2] - 2 * c + cube[1, 1, 0]
    dsy = 0.25 * (cube[2, 2, 1] - cube[2, 0, 1] - cube[0, 2, 1] + cube[0, 0, 1])
    dsx = 0.25 * (cube[2, 1, 2] - cube[2, 1, 0] - cube[0, 1, 2] + cube[0, 1, 0])
    dyx = 0.25 * (cube[1, 2, 2] - cube[1, 2, 0] - cube[1, 0, 2] + cube[1, 0, 0])
    return np.array([[dss, dsy, dsx], [dsy, dyy, dyx], [dsx, dyx, dxx]])


def _refine_candidate(
    dog: np.ndarray, octave: int, layer: int, y: int, x: int
) -> _Candidate | None:
    """Quadratic subpixel refinement with contrast and edge rejection."""
    n_layers, height, width = dog.shape
    for _ in range(MAX_REFINE_STEPS):
        cube = dog[layer - 1 : layer + 2, y - 1 : y + 2, x - 1 : x + 2]
        grad = _gradient_3d(cube)
        hess = _hessian_3d(cube)
        try:
            offset = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return None
        if np.all(np.abs(offset) < 0.5):
            break
        layer += int(round(offset[0]))
        y += int(round(offset[1]))
        x += int(round(offset[2]))
        if (
            layer < 1
            or layer > N_INTERVALS
            or y < IMAGE_BORDER
            or y >= height - IMAGE_BORDER
            or x < IMAGE_BORDER
            or x >= width - IMAGE_BORDER
        ):
            return None
    else:
        return None

    value = cube[1, 1, 1] + 0.5 * float(grad @ offset)
    if abs(value) * N_INTERVALS < CONTRAST_THRESHOLD:
        return None

    # Edge rejection on the spatial 2x2 Hessian (principal curvature ratio).
    spatial = hess[1:, 1:]
    trace = spatial[0, 0] + spatial[1, 1]
    det = spatial[0, 0] * spatial[1, 1] - spatial[0, 1] * spatial[1, 0]
    if det <= 0 or EDGE_RATIO * trace**2 >= (EDGE_RATIO + 1) ** 2 * det:
        return None

    return _Candidate(
        octave=octave,
        layer=layer,
        x_oct=x + float(offset[2]),
        y_oct=y + float(offset[1]),
        sigma_oct=BASE_SIGMA * 2.0 ** ((layer + float(offset[0])) / N_INTERVALS),
    )


class _GradientCache:
    """Per gaussian image: unhalved central differences (dx right, dy up)."""

    def __init__(self, gaussians: list[list[np.ndarray]]):
        self._gaussians = gaussians
        self._cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def get(self, octave: int, layer: int) -> tuple[np.ndarray, np.ndarray]:
        key = (octave, layer)
        if key not in self._cache:
            img = self._gaussians[octave][layer]
            gx = np.zeros_like(img)
            gy = np.zeros_like(img)
            gx[:, 1:-1] = img[:, 2:] - img[:, :-2]
            gy[1:-1, :] = img[:-2, :] - img[2:, :]
            self._cache[key] = (gx, gy)
        return self._cache[key]


def _orientation_angles(
    grads: tuple[np.ndarray, np.ndarray], shape: tuple[int, int], cand: _Candidate
) -> list[float]:
    """Dominant gradient directions (degrees) around a candidate; peaks at
    80% of the histogram maximum each spawn a keypoint."""
    gx, gy = grads
    height, width = shape
    sigma = ORI_SIGMA_FACTOR * cand.sigma_oct
    radius = int(round(ORI_RADIUS_FACTOR * sigma))
    cx = int(round(cand.x_oct))
    cy = int(round(cand.y_oct))

    y0, y1 = max(1, cy - radius), min(height - 1, cy + radius + 1)
    x0, x1 = max(1, cx - radius), min(width - 1, cx + radius + 1)
    if y0 >= y1 or x0 >= x1:
        return []

    dx = gx[y0:y1, x0:x1]
    dy = gy[y0:y1, x0:x1]
    rows, cols = np.mgrid[y0 - cy : y1 - cy, x0 - cx : x1 - cx]
    weight = np.exp(-(rows**2 + cols**2) / (2.0 * sigma**2))
    magnitude = np.hypot(dx, dy)
    angle = np.rad2deg(np.arctan2(dy, dx))
    bins = np.round(angle * ORI_BINS / 360.0).astype(int) % ORI_BINS
    hist = np.bincount(bins.ravel(), weights=(weight * magnitude).ravel(), minlength=ORI_BINS)

    smooth = (
        6 * hist
        + 4 * (np.roll(hist, 1) + np.roll(hist, -1))
        + np.roll(hist, 2)
        + np.roll(hist, -2)
    ) / 16.0
    peak_floor = ORI_PEAK_RATIO * smooth.max()
    if smooth.max() <= 0:
        return []

    left = np.roll(smooth, 1)
    right = np.roll(smooth, -1)
    peaks = np.flatnonzero((smooth > left) & (smooth > right) & (smooth >= peak_floor))
    angles = []
    for p in peaks:
        l, c, r = left[p], smooth[p], right[p]
        interp = (p + 0.5 * (l - r) / (l - 2 * c + r)) % ORI_BINS
        deg = 360.0 - interp * 360.0 / ORI_BINS
        if abs(deg - 360.0) < _EPS:
            deg = 0.0
        angles.append(deg)
    return angles


def _descriptor(
    grads: tuple[np.ndarray, np.ndarray],
    shape: tuple[int, int],
    cand: _Candidate,
    angle_deg: float,
) -> np.ndarray:
    """4x4x8 gradient histogram descriptor with trilinear interpolation."""
    gx, gy = grads
    height, width = shape
    px = int(round(cand.x_oct))
    py = int(round(cand.y_oct))

    rotation = 360.0 - angle_deg
    cos_a = math.cos(math.radians(rotation))
    sin_a = math.sin(math.radians(rotation))
    bins_per_degree = DESC_BINS / 360.0
    hist_width = DESC_SCALE_FACTOR * cand.sigma_oct
    half_width = int(round(hist_width * math.sqrt(2) * (DESC_WIDTH + 1) * 0.5))
    half_width = min(half_width, int(math.hypot(height, width)))

    rows, cols = np.mgrid[-half_width : half_width + 1, -half_width : half_width + 1]
    row_rot = cols * sin_a + rows * cos_a
    col_rot = cols * cos_a - rows * sin_a
    row_bin = row_rot / hist_width + 0.5 * DESC_WIDTH - 0.5
    col_bin = col_rot / hist_width + 0.5 * DESC_WIDTH - 0.5
    win_y = py + rows
    win_x = px + cols
    valid = (
        (row_bin > -1)
        & (row_bin < DESC_WIDTH)
        & (col_bin > -1)
        & (col_bin < DESC_WIDTH)
        & (win_y > 0)
        & (win_y < height - 1)
        & (win_x > 0)
        & (win_x < width - 1)
    )
    if not valid.any():
        return np.zeros(DESC_WIDTH * DESC_WIDTH * DESC_BINS, dtype=np.float32)

    row_bin = row_bin[valid]
    col_bin = col_bin[valid]
    dx = gx[win_y[valid], win_x[valid]]
    dy = gy[win_y[valid], win_x[valid]]
    magnitude = np.hypot(dx, dy)
    orientation = np.rad2deg(np.arctan2(dy, dx)) % 360.0
    weight = np.exp(
        -0.5
        / (0.5 * DESC_WIDTH) ** 2
        * ((row_rot[valid] / hist_width) ** 2 + (col_rot[valid] / hist_width) ** 2)
    )
    value = weight * magnitude
    ori_bin = (orientation - rotation) * bins_per_degree

    tensor = np.zeros((DESC_WIDTH + 2, DESC_WIDTH + 2, DESC_BINS))
    rbf = np.floor(row_bin).astype(int)
    cbf = np.floor(col_bin).astype(int)
    obf = np.floor(ori_bin).astype(int)
    rfrac = row_bin - rbf
    cfrac = col_bin - cbf
    ofrac = ori_bin - obf
    obf %= DESC_BINS

    for dr in (0, 1):
        wr = value * (rfrac if dr else 1 - rfrac)
        for dc in (0, 1):
            wc = wr * (cfrac if dc else 1 - cfrac)
            for do in (0, 1):
                wo = wc * (ofrac if do else 1 - ofrac)
                np.add.at(tensor, (rbf + 1 + dr, cbf + 1 + dc, (obf + do) % DESC_BINS), wo)

    return finalize_descriptor(tensor[1:-1, 1:-1, :].ravel())


def finalize_descriptor(raw: np.ndarray) -> np.ndarray:
    """Normalize, clamp each component at 0.2, renormalize to unit length."""
    norm = np.linalg.norm(raw)
    clamped = np.minimum(raw / max(norm, _EPS), DESC_CLAMP)
    out = clamped / max(np.linalg.norm(clamped), _EPS)
    return out.astype(np.float32)


def extract(image: np.ndarray) -> SiftDescriptorSet:
    """Extract keypoints and descriptors from a grayscale raster in [0, 1].

    A constant image yields an empty (valid) set; images smaller than 8x8
    are rejected.
    """
    arr = _prepare_input(image)
    height, width = arr.shape
    base = _base_image(arr)
    gaussians, dogs = _build_pyramids(base, _num_octaves(base.shape))
    grad_cache = _GradientCache(gaussians)

    oriented: list[tuple[_Candidate, float]] = []
    seen: set[tuple] = set()
    for octave, dog in enumerate(dogs):
        for layer, y, x in _find_extrema(dog):
            cand = _refine_candidate(dog, octave, int(layer), int(y), int(x))
            if cand is None:
                continue
            grads = grad_cache.get(octave, cand.layer)
            shape = gaussians[octave][cand.layer].shape
            for angle in _orientation_angles(grads, shape, cand):
                key = (octave, cand.layer, cand.x_oct, cand.y_oct, cand.sigma_oct, angle)
                if key in seen:
                    continue
                seen.add(key)
                oriented.append((cand, angle))

    keypoints: list[SiftKeypoint] = []
    rows: list[np.ndarray] = []
    for cand, angle in oriented:
        factor = 2.0**cand.octave / 2.0  # octave grid -> input coordinates
        kx = cand.x_oct * factor
        ky = cand.y_oct * factor
        if not (0 <= kx < width and 0 <= ky < height):
            continue
        grads = grad_cache.get(cand.octave, cand.layer)
        shape = gaussians[cand.octave][cand.layer].shape
        desc = _descriptor(grads, shape, cand, angle)
        keypoints.append(
            SiftKeypoint(
                x=kx,
                y=ky,
                scale=cand.sigma_oct * factor,
                orientation=math.radians(angle % 360.0),
            )
        )
        rows.append(desc)

    order = sorted(
        range(len(keypoints)),
        key=lambda i: (
            keypoints[i].y,
            keypoints[i].x,
            keypoints[i].scale,
            keypoints[i].orientation,
        ),
    )
    descriptors = (
        np.stack([rows[i] for i in order])
        if rows
        else np.empty((0, 128), dtype=np.float32)
    )
    return SiftDescriptorSet(
        keypoints=[keypoints[i] for i in order], descriptors=descriptors
    )
