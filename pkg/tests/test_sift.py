"""Feature extraction and matching: invariance to rotation and scale,
descriptor hygiene, and the duplicate verdict."""

import time

import numpy as np
import pytest
from scipy import ndimage

from conftest import textured_patch
from shoresweep.errors import ValidationError
from shoresweep.sift import (
    MatchResult,
    SiftDescriptorSet,
    descriptor_set_to_json,
    extract,
    is_duplicate,
    match,
    match_descriptor_sets,
)
from shoresweep.sift.extract import DESC_CLAMP, finalize_descriptor


@pytest.fixture(scope="module")
def patch():
    return textured_patch(42, 160).astype(np.float64) / 255.0


@pytest.fixture(scope="module")
def patch_features(patch):
    return extract(patch)


def blob_canvas(size, centers, sigma):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    canvas = np.zeros((size, size))
    for cy, cx in centers:
        canvas += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
    return canvas / canvas.max()


BLOB_CENTERS = [(40, 40), (40, 150), (100, 95), (160, 50), (155, 160)]


class TestExtract:
    def test_constant_image_has_no_features(self):
        assert len(extract(np.full((64, 64), 0.5))) == 0

    def test_rejects_color_and_tiny_inputs(self):
        with pytest.raises(ValidationError):
            extract(np.zeros((64, 64, 3)))
        with pytest.raises(ValidationError):
            extract(np.zeros((7, 64)))

    def test_finds_a_keypoint_near_each_blob(self):
        features = extract(blob_canvas(200, BLOB_CENTERS, 4.0))
        assert len(features) >= 5
        for cy, cx in BLOB_CENTERS:
            nearest = min(
                ((k.x - cx) ** 2 + (k.y - cy) ** 2) ** 0.5 for k in features.keypoints
            )
            assert nearest <= 2.0

    def test_doubled_scene_doubles_keypoint_coordinates(self):
        doubled = [(2 * cy, 2 * cx) for cy, cx in BLOB_CENTERS]
        features = extract(blob_canvas(400, doubled, 8.0))
        for cy, cx in doubled:
            nearest = min(
                ((k.x - cx) ** 2 + (k.y - cy) ** 2) ** 0.5 for k in features.keypoints
            )
            assert nearest <= 2.0

    def test_deterministic_for_identical_input(self, patch, patch_features):
        again = extract(patch.copy())
        assert descriptor_set_to_json(again) == descriptor_set_to_json(patch_features)

    def test_quarter_turn_keeps_the_keypoint_count_close(self, patch, patch_features):
        turned = extract(np.rot90(patch))
        assert len(turned) == pytest.approx(len(patch_features), rel=0.20)

    def test_descriptors_are_unit_capped_and_nonnegative(self, patch_features):
        descs = patch_features.descriptors
        assert len(patch_features) > 100
        assert descs.shape[1] == 128
        norms = np.linalg.norm(descs.astype(np.float64), axis=1)
        assert np.all(norms <= 1.0 + 1e-6)
        assert np.all(norms >= 0.99)
        assert np.all(descs >= 0.0)

    def test_keypoints_carry_valid_geometry(self, patch_features):
        for k in patch_features.keypoints:
            assert 0 <= k.x < 160 and 0 <= k.y < 160
            assert k.scale > 0
            assert 0 <= k.orientation < 2 * np.pi

    def test_runtime_grows_near_linearly_with_pixel_count(self):
        timings = []
        for size in (128, 181, 256):  # each step doubles the pixel count
            image = textured_patch(9, size).astype(np.float64) / 255.0
            start = time.perf_counter()
            extract(image)
            timings.append(time.perf_counter() - start)
        assert timings[1] / timings[0] < 2.6
        assert timings[2] / timings[1] < 2.6


class TestFinalizeDescriptor:
    def test_normalize_clamp_renormalize(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            raw = rng.random(128) * rng.choice([0.1, 1.0, 50.0])
            out = finalize_descriptor(raw)
            unit = raw / np.linalg.norm(raw)
            clamped = np.minimum(unit, DESC_CLAMP)
            assert np.max(clamped) <= DESC_CLAMP + 1e-9
            expected = clamped / np.linalg.norm(clamped)
            assert np.allclose(out, expected, atol=1e-6)
            assert np.linalg.norm(out.astype(np.float64)) == pytest.approx(1.0, abs=1e-5)


class TestMatching:
    def test_self_match_recovers_nearly_every_descriptor(self, patch_features):
        result = match(patch_features, patch_features)
        assert result.match_count >= 0.9 * len(patch_features)

    def test_empty_sets_yield_no_matches(self, patch_features):
        empty = SiftDescriptorSet()
        assert match(patch_features, empty).match_count == 0
        assert match(empty, patch_features).match_count == 0
        assert match(empty, empty) == MatchResult(0, ())

    def test_pairing_is_one_to_one_and_bounded(self, patch, patch_features):
        rotated = extract(
            ndimage.rotate(patch, 30.0, reshape=True, mode="nearest", order=1)
        )
        result = match(patch_features, rotated)
        assert result.match_count == len(result.pairs)
        assert result.match_count <= min(len(patch_features), len(rotated))
        a_side = [a for a, _ in result.pairs]
        b_side = [b for _, b in result.pairs]
        assert len(set(a_side)) == len(a_side)
        assert len(set(b_side)) == len(b_side)

    def test_symmetric_count_takes_the_better_direction(self, patch_features):
        small = SiftDescriptorSet(
            keypoints=patch_features.keypoints[:40],
            descriptors=patch_features.descriptors[:40].copy(),
        )
        ab = match(patch_features, small)
        ba = match(small, patch_features)
        sym = match_descriptor_sets(patch_features, small)
        assert sym.match_count == max(ab.match_count, ba.match_count)


class TestIsDuplicate:
    def test_crop_versus_itself(self, patch):
        verdict, result = is_duplicate(patch, patch)
        assert verdict
        assert result.match_count >= 50

    def test_survives_rotation_and_scaling(self, patch):
        rotated = ndimage.rotate(patch, 30.0, reshape=True, mode="nearest", order=1)
        verdict, result = is_duplicate(patch, rotated)
        assert verdict and result.match_count >= 50
        scaled = ndimage.zoom(patch, 1.5, order=1)
        verdict, result = is_duplicate(patch, scaled)
        assert verdict and result.match_count >= 50

    def test_different_textures_never_pass(self):
        for seed in range(5):
            a = textured_patch(1000 + seed, 128).astype(np.float64) / 255.0
            b = textured_patch(2000 + seed, 128).astype(np.float64) / 255.0
            verdict, result = is_duplicate(a, b)
            assert not verdict
            assert result.match_count < 50

    def test_tiny_crops_are_never_duplicates(self, patch):
        small = np.ones((6, 6, 3), dtype=np.uint8) * 100
        assert is_duplicate(small, small) == (False, MatchResult(0, ()))
        verdict, _ = is_duplicate(patch, small)
        assert not verdict

    def test_accepts_color_crops(self, patch):
        color = np.stack([(patch * 255).astype(np.uint8)] * 3, axis=-1)
        verdict, result = is_duplicate(color, color)
        assert verdict and result.match_count >= 50
