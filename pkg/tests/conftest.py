"""Shared builders for the test suite.

Everything here is synthetic and deterministic: smoothed-noise textures
stand in for debris, JPEGs carry real GPS EXIF tags, and file-backed
provider documents replay known detections. The flagship fixture is a
twelve-image flight with three true duplicate pairs placed 3 m apart,
two decoy pairs at 6 m, and two singletons, all separated by 40 m of
longitude so nothing else lands within pairing range.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest
from PIL import Image
from scipy import ndimage

from shoresweep.config import load_config
from shoresweep.dedup import dedup_survey
from shoresweep.images import crop as crop_image
from shoresweep.images import decode_image
from shoresweep.pipeline import SurveyImage, run_survey
from shoresweep.providers import DEFAULT_LABELS
from shoresweep.store import SurveyStore

GPS_IFD = 0x8825
TAG_DATETIME = 306

IMAGE_W, IMAGE_H = 640, 480
PATCH_BOX = (240.0, 160.0, 400.0, 320.0)
BASE_LAT, BASE_LON = 43.0, -69.0
ALTITUDE = 30.0
METERS_PER_DEGREE = 111320.0
TEXTURE_BASE = 7000

# name, texture, north offset (m), east offset (m), detection score, class
LAYOUT = (
    ("img00", 0, 0.0, 0.0, 0.90, "plastic"),
    ("img01", 0, 3.0, 0.0, 0.80, "plastic"),
    ("img02", 1, 0.0, 40.0, 0.80, "metal"),
    ("img03", 1, 3.0, 40.0, 0.90, "metal"),
    ("img04", 2, 0.0, 80.0, 0.85, "wood"),
    ("img05", 2, 3.0, 80.0, 0.85, "wood"),
    ("img06", 3, 0.0, 120.0, 0.90, "fishing gear"),
    ("img07", 3, 6.0, 120.0, 0.80, "fishing gear"),
    ("img08", 4, 0.0, 160.0, 0.90, "nature"),
    ("img09", 4, 6.0, 160.0, 0.80, "nature"),
    ("img10", 5, 0.0, 200.0, 0.90, "cage"),
    ("img11", 6, 0.0, 240.0, 0.90, "wheel"),
)
DUP_PAIRS = (("img00", "img01"), ("img02", "img03"), ("img04", "img05"))
DECOY_PAIRS = (("img06", "img07"), ("img08", "img09"))

# Ground truth deviations from a perfect score: one label mismatch, one
# shifted box (IoU 0.6), one disjoint box, one extra truth, one missing.
TRUTH_PLAN = {
    "img01": (((240.0, 160.0, 400.0, 320.0), "metal"),),
    "img05": (((280.0, 160.0, 440.0, 320.0), "wood"),),
    "img09": (((0.0, 0.0, 100.0, 100.0), "nature"),),
    "img10": (
        ((240.0, 160.0, 400.0, 320.0), "cage"),
        ((500.0, 380.0, 620.0, 460.0), "plastic"),
    ),
    "img11": (),
}

CONFIG_TEMPLATE = """\
camera:
  focal_length_m: 0.0088
  sensor_width_m: 0.0132
  image_width_px: 640
  image_height_px: 480
provider:
  kind: filebacked
  fixture_dir: {fixture_dir}
dedup:
  radius_m: 5.0
  min_matches: 50
"""


def textured_patch(seed: int, shape) -> np.ndarray:
    """Smoothed random field, full-range uint8. Feature-rich enough for
    descriptor matching at 120 px and up."""
    if isinstance(shape, int):
        shape = (shape, shape)
    rng = np.random.default_rng(seed)
    field = ndimage.gaussian_filter(rng.random(shape), 3.0)
    lo, hi = float(field.min()), float(field.max())
    return np.round((field - lo) / (hi - lo) * 255.0).astype(np.uint8)


def _dms(value: float):
    degrees = int(value)
    rem = (value - degrees) * 60.0
    minutes = int(rem)
    return degrees, minutes, (rem - minutes) * 60.0


def gps_exif(lat, lon, alt, heading=0.0, when="2026:06:01 10:12:00") -> Image.Exif:
    exif = Image.Exif()
    exif[TAG_DATETIME] = when
    exif[GPS_IFD] = {
        1: "N" if lat >= 0 else "S",
        2: _dms(abs(lat)),
        3: "E" if lon >= 0 else "W",
        4: _dms(abs(lon)),
        5: bytes([0]),
        6: float(alt),
        17: float(heading) % 360.0,
    }
    return exif


def survey_jpeg(
    texture_seed: int,
    lat: float,
    lon: float,
    alt: float = ALTITUDE,
    heading: float = 0.0,
    *,
    box=PATCH_BOX,
    size=(IMAGE_W, IMAGE_H),
    quality: int = 95,
) -> bytes:
    """A flat gray frame with one textured patch, GPS-tagged."""
    w, h = size
    canvas = np.full((h, w), 127, dtype=np.uint8)
    x0, y0, x1, y1 = (int(v) for v in box)
    canvas[y0:y1, x0:x1] = textured_patch(texture_seed, (y1 - y0, x1 - x0))
    buf = io.BytesIO()
    Image.fromarray(np.stack([canvas] * 3, axis=-1)).save(
        buf, format="JPEG", quality=quality, exif=gps_exif(lat, lon, alt, heading)
    )
    return buf.getvalue()


def class_scores(peak_label: str, labels=DEFAULT_LABELS, peak: float = 0.7) -> dict:
    rest = (1.0 - peak) / (len(labels) - 1)
    return {label: (peak if label == peak_label else rest) for label in labels}


def write_fixture_doc(fixture_dir, image_id, detections, peak_label, *, classify=None) -> None:
    """Write one provider document: detections under the trash prompt,
    nothing under rocks, one default class distribution."""
    doc = {
        "detect": {
            "all trash": [
                {"x_min": b[0], "y_min": b[1], "x_max": b[2], "y_max": b[3], "score": s}
                for b, s in detections
            ],
            "all rocks": [],
        },
        "classify": classify if classify is not None else {"default": class_scores(peak_label)},
    }
    (Path(fixture_dir) / f"{image_id}.json").write_text(json.dumps(doc, indent=2))


@dataclass
class FixtureSurvey:
    root: Path
    flight_dir: Path
    fixture_dir: Path
    config_path: Path
    truth_path: Path
    names: tuple
    image_ids: dict
    jpeg_paths: dict
    positions: dict
    scores: dict
    labels: dict
    dup_pairs: tuple = DUP_PAIRS
    decoy_pairs: tuple = DECOY_PAIRS

    def id_of(self, name: str) -> str:
        return self.image_ids[name]

    def record_of(self, name: str) -> str:
        return f"{self.image_ids[name]}:0000"


def build_fixture_survey(root: Path) -> FixtureSurvey:
    flight = root / "flight"
    fixtures = root / "fixtures"
    flight.mkdir(parents=True)
    fixtures.mkdir()
    image_ids, jpeg_paths, positions, scores, labels = {}, {}, {}, {}, {}
    for name, tex, north_m, east_m, score, label in LAYOUT:
        lat = BASE_LAT + north_m / METERS_PER_DEGREE
        lon = BASE_LON + east_m / (METERS_PER_DEGREE * math.cos(math.radians(BASE_LAT)))
        data = survey_jpeg(TEXTURE_BASE + tex, lat, lon)
        image_id = hashlib.sha256(data).hexdigest()[:16]
        path = flight / f"{name}.jpg"
        path.write_bytes(data)
        write_fixture_doc(fixtures, image_id, [(PATCH_BOX, score)], label)
        image_ids[name] = image_id
        jpeg_paths[name] = path
        positions[name] = (lat, lon)
        scores[name] = score
        labels[name] = label

    config_path = root / "config.yaml"
    config_path.write_text(CONFIG_TEMPLATE.format(fixture_dir=fixtures))

    annotations = {}
    for name, _, _, _, _, label in LAYOUT:
        plan = TRUTH_PLAN.get(name, ((PATCH_BOX, label),))
        annotations[image_ids[name]] = [
            {"box": list(box), "label": lab} for box, lab in plan
        ]
    truth_path = root / "truth.json"
    truth_path.write_text(json.dumps({"annotations": annotations}, indent=2))

    return FixtureSurvey(
        root=root,
        flight_dir=flight,
        fixture_dir=fixtures,
        config_path=config_path,
        truth_path=truth_path,
        names=tuple(row[0] for row in LAYOUT),
        image_ids=image_ids,
        jpeg_paths=jpeg_paths,
        positions=positions,
        scores=scores,
        labels=labels,
    )


def ingest_flight(store: SurveyStore, fx: FixtureSurvey, survey_id="fly01") -> str:
    sid = store.create_survey(name="fixture flight", survey_id=survey_id)
    for name in fx.names:
        store.ingest_image(sid, fx.jpeg_paths[name].read_bytes(), filename=f"{name}.jpg")
    return sid


def run_detection(store: SurveyStore, fx: FixtureSurvey, survey_id: str):
    config = load_config(fx.config_path)
    provider = config.build_provider()
    inputs = [
        SurveyImage(i.image_id, store.image_bytes(i.image_id), i.meta)
        for i in store.images(survey_id)
        if i.has_blob
    ]
    run = run_survey(
        inputs, config.pipeline(), provider, provider, camera=config.camera, workers=1
    )
    store.save_records(survey_id, run.records)
    return run


def run_dedup(store: SurveyStore, fx: FixtureSurvey, survey_id: str):
    config = load_config(fx.config_path)
    records = store.records(survey_id)
    crops = {}
    for record in records:
        image = decode_image(store.image_bytes(record.source_image_id))
        crops[record.record_id] = crop_image(image, record.box)
    result = dedup_survey(
        records,
        crops,
        min_matches=config.dedup_min_matches,
        radius_m=config.dedup_radius_m,
    )
    store.save_dedup(survey_id, result)
    return result


@pytest.fixture(scope="session")
def fixture_survey(tmp_path_factory) -> FixtureSurvey:
    return build_fixture_survey(tmp_path_factory.mktemp("survey-fixture"))


@pytest.fixture(scope="session")
def _populated_template(tmp_path_factory, fixture_survey):
    """Template store with the fixture flight ingested, detected, and
    deduplicated. Copied per test so mutations never leak."""
    root = tmp_path_factory.mktemp("store-template")
    with SurveyStore(root) as store:
        sid = ingest_flight(store, fixture_survey)
        run_detection(store, fixture_survey, sid)
        run_dedup(store, fixture_survey, sid)
    return root, sid


@pytest.fixture
def populated_store(tmp_path, _populated_template):
    template, survey_id = _populated_template
    root = tmp_path / "store"
    shutil.copytree(template, root)
    with SurveyStore(root) as store:
        yield store, survey_id
