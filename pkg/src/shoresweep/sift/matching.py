"""Descriptor matching with the nearest-neighbor ratio test, and the
crop-level duplicate verdict built on it."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..images import to_grayscale
from .extract import MIN_PYRAMID_DIM, SiftDescriptorSet, extract

DEFAULT_RATIO = 0.75
DEFAULT_MIN_MATCHES = 50


@dataclass(frozen=True, slots=True)
class MatchResult:
    """Accepted descriptor pairs; one-to-one in both index spaces."""

    match_count: int
    pairs: tuple[tuple[int, int], ...]


def match(
    a: SiftDescriptorSet, b: SiftDescriptorSet, ratio: float = DEFAULT_RATIO
) -> MatchResult:
    """Ratio-test matching from ``a`` into ``b``.

    Each descriptor in ``a`` is accepted when its nearest neighbor in ``b``
    is closer than ``ratio`` times its second-nearest. Collisions on a
    ``b`` index keep only the closest claim, so the pairing is one-to-one.
    """
    n, m = len(a), len(b)
    if n == 0 or m < 2:
        # With fewer than two candidates the ratio test is undefined.
        return MatchResult(0, ())

    da = a.descriptors.astype(np.float64)
    db = b.descriptors.astype(np.float64)
    sq = (
        np.sum(da**2, axis=1)[:, None]
        + np.sum(db**2, axis=1)[None, :]
        - 2.0 * (da @ db.T)
    )
    np.maximum(sq, 0.0, out=sq)
    dist = np.sqrt(sq)

    two = np.argpartition(dist, 1, axis=1)[:, :2]
    d_pair = np.take_along_axis(dist, two, axis=1)
    swap = d_pair[:, 0] > d_pair[:, 1]
    d_pair[swap] = d_pair[swap][:, ::-1]
    two[swap] = two[swap][:, ::-1]
    nearest, second = d_pair[:, 0], d_pair[:, 1]
    accepted = nearest < ratio * second

    best_claim: dict[int, tuple[float, int]] = {}
    for i in np.flatnonzero(accepted):
        j = int(two[i, 0])
        d = float(nearest[i])
        if j not in best_claim or d < best_claim[j][0]:
            best_claim[j] = (d, int(i))
    pairs = tuple(sorted((i, j) for j, (_, i) in best_claim.items()))
    return MatchResult(len(pairs), pairs)


def is_duplicate(
    crop_a: np.ndarray,
    crop_b: np.ndarray,
    min_matches: int = DEFAULT_MIN_MATCHES,
    ratio: float = DEFAULT_RATIO,
) -> tuple[bool, MatchResult]:
    """Decide whether two crops show the same object.

    Runs the ratio test in both directions and takes the larger count, so
    the verdict is symmetric. Crops too small or too flat to produce
    keypoints are never duplicates.
    """
    sets = []
    for crop in (crop_a, crop_b):
        gray = to_grayscale(crop)
        if min(gray.shape) * 2 < MIN_PYRAMID_DIM:
            return False, MatchResult(0, ())
        sets.append(extract(gray))
    forward = match(sets[0], sets[1], ratio)
    backward = match(sets[1], sets[0], ratio)
    best = forward if forward.match_count >= backward.match_count else backward
    return best.match_count >= min_matches, best


def match_descriptor_sets(
    a: SiftDescriptorSet,
    b: SiftDescriptorSet,
    ratio: float = DEFAULT_RATIO,
) -> MatchResult:
    """Symmetric match count for pre-extracted descriptor sets (both
    directions, larger count wins)."""
    forward = match(a, b, ratio)
    backward = match(b, a, ratio)
    return forward if forward.match_count >= backward.match_count else backward


def descriptor_set_to_json(s: SiftDescriptorSet) -> str:
    """Debug export used by golden tests: keypoints and descriptors as JSON."""
    doc = {
        "keypoints": [
            {"x": k.x, "y": k.y, "scale": k.scale, "orientation": k.orientation}
            for k in s.keypoints
        ],
        "descriptors": [[round(float(v), 6) for v in row] for row in s.descriptors],
    }
    return json.dumps(doc, indent=1)
