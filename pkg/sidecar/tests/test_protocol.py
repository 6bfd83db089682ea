"""Wire-protocol conformance for the sidecar in --fake mode: golden
pairs, shape validation, thresholds, alignment, and the error policy."""

import base64
import importlib.util
import json
import math
from pathlib import Path

import jsonschema
import pytest
from fastapi.testclient import TestClient

from inference_sidecar import SidecarConfig, create_app, load_protocol_schema
from inference_sidecar.config import MAX_DETECTIONS

GOLDEN_DIR = Path(__file__).parent / "golden"
DETECT_PAIR = json.loads((GOLDEN_DIR / "detect_pair.json").read_text())
CLASSIFY_PAIR = json.loads((GOLDEN_DIR / "classify_pair.json").read_text())
IMAGE_B64 = DETECT_PAIR["request"]["image"]


def validate(definition: str, doc) -> None:
    schema = load_protocol_schema()
    jsonschema.Draft202012Validator(
        {"$defs": schema["$defs"], "$ref": f"#/$defs/{definition}"}
    ).validate(doc)


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(SidecarConfig(fake=True)), raise_server_exceptions=False)


class TestGoldenPairs:
    def test_golden_documents_match_the_protocol(self):
        validate("detect_request", DETECT_PAIR["request"])
        validate("detect_response", DETECT_PAIR["response"])
        validate("classify_request", CLASSIFY_PAIR["request"])
        validate("classify_response", CLASSIFY_PAIR["response"])

    def test_detect_reproduces_the_golden_response(self, client):
        response = client.post("/v1/detect", json=DETECT_PAIR["request"])
        assert response.status_code == 200
        assert response.json() == DETECT_PAIR["response"]
        validate("detect_response", response.json())

    def test_classify_reproduces_the_golden_response(self, client):
        response = client.post("/v1/classify", json=CLASSIFY_PAIR["request"])
        assert response.status_code == 200
        assert response.json() == CLASSIFY_PAIR["response"]
        validate("classify_response", response.json())

    def test_repeated_calls_are_byte_identical(self, client):
        first = client.post("/v1/detect", json=DETECT_PAIR["request"])
        second = client.post("/v1/detect", json=DETECT_PAIR["request"])
        assert first.content == second.content


class TestDetect:
    def test_threshold_one_returns_no_detections(self, client):
        request = {
            "image": IMAGE_B64,
            "prompts": [{"text": "all trash", "box_threshold": 1.0, "text_threshold": 0.25}],
        }
        response = client.post("/v1/detect", json=request)
        assert response.status_code == 200
        assert response.json() == {"detections": []}

    def test_scores_respect_the_request_threshold(self, client):
        request = {
            "image": IMAGE_B64,
            "prompts": [{"text": "all trash", "box_threshold": 0.6, "text_threshold": 0.25}],
        }
        detections = client.post("/v1/detect", json=request).json()["detections"]
        assert all(d["score"] >= 0.6 for d in detections)
        scores = [d["score"] for d in detections]
        assert scores == sorted(scores, reverse=True)

    def test_boxes_stay_inside_the_image(self, client):
        detections = client.post("/v1/detect", json=DETECT_PAIR["request"]).json()["detections"]
        assert detections
        for d in detections:
            assert 0.0 <= d["x_min"] < d["x_max"] <= 32.0
            assert 0.0 <= d["y_min"] < d["y_max"] <= 24.0

    def test_proposals_are_capped(self, client):
        prompts = [
            {"text": f"query {i:03d}", "box_threshold": 0.0, "text_threshold": 0.25}
            for i in range(400)
        ]
        response = client.post("/v1/detect", json={"image": IMAGE_B64, "prompts": prompts})
        detections = response.json()["detections"]
        assert len(detections) == MAX_DETECTIONS
        scores = [d["score"] for d in detections]
        assert scores == sorted(scores, reverse=True)


class TestClassify:
    def test_distribution_sums_to_one(self, client):
        probs = client.post("/v1/classify", json=CLASSIFY_PAIR["request"]).json()["probabilities"]
        assert len(probs) == len(CLASSIFY_PAIR["request"]["labels"])
        assert all(p > 0 for p in probs)
        assert math.isclose(math.fsum(probs), 1.0, abs_tol=1e-9)

    def test_label_permutation_permutes_probabilities(self, client):
        labels = CLASSIFY_PAIR["request"]["labels"]
        base = client.post(
            "/v1/classify", json={"image": IMAGE_B64, "labels": labels}
        ).json()["probabilities"]
        shuffled = labels[::-1]
        permuted = client.post(
            "/v1/classify", json={"image": IMAGE_B64, "labels": shuffled}
        ).json()["probabilities"]
        assert permuted == base[::-1]


class TestErrorPolicy:
    def test_missing_field_points_at_the_schema(self, client):
        response = client.post("/v1/detect", json={"image": IMAGE_B64})
        assert response.status_code == 400
        detail = response.json()["detail"]
        assert detail["schema"] == "#/$defs/detect_request"
        assert "prompts" in detail["message"]

    def test_invalid_json_is_a_bad_request(self, client):
        response = client.post(
            "/v1/detect", content=b"{nope", headers={"content-type": "application/json"}
        )
        assert response.status_code == 400
        assert response.json()["detail"]["schema"] == "#/$defs/detect_request"

    def test_bad_base64_names_the_image_field(self, client):
        request = {
            "image": "!!!not-base64!!!",
            "prompts": [{"text": "x", "box_threshold": 0.5, "text_threshold": 0.5}],
        }
        response = client.post("/v1/detect", json=request)
        assert response.status_code == 400
        assert response.json()["detail"]["path"] == ["image"]

    def test_undecodable_image_is_a_bad_request(self, client):
        request = {
            "image": base64.b64encode(b"junk junk junk").decode(),
            "prompts": [{"text": "x", "box_threshold": 0.5, "text_threshold": 0.5}],
        }
        response = client.post("/v1/detect", json=request)
        assert response.status_code == 400
        assert "raster" in response.json()["detail"]["message"]

    def test_single_label_classify_is_rejected(self, client):
        response = client.post(
            "/v1/classify", json={"image": IMAGE_B64, "labels": ["only"]}
        )
        assert response.status_code == 400
        assert response.json()["detail"]["schema"] == "#/$defs/classify_request"

    def test_inference_failure_returns_an_opaque_id(self, client, monkeypatch):
        import inference_sidecar.app as app_module

        def explode(image_bytes, prompts):
            raise RuntimeError("secret internals")

        monkeypatch.setattr(app_module.fake, "fake_detections", explode)
        response = client.post("/v1/detect", json=DETECT_PAIR["request"])
        assert response.status_code == 500
        detail = response.json()["detail"]
        assert set(detail) == {"error_id"}
        assert "secret" not in response.text

    def test_startup_without_models_exits_nonzero(self, monkeypatch):
        from inference_sidecar import cli
        from inference_sidecar.models import ModelLoadError

        import inference_sidecar.app as app_module

        def refuse(config):
            raise ModelLoadError("cannot load pinned models")

        monkeypatch.setattr(app_module, "create_app", refuse)
        with pytest.raises(SystemExit) as exc_info:
            cli.main(["--detector", "nonexistent/model"])
        assert exc_info.value.code == 1


class TestHealth:
    def test_health_shape(self, client):
        response = client.get("/v1/health")
        assert response.status_code == 200
        doc = response.json()
        validate("health_response", doc)
        assert doc == {"status": "ok", "detector": "fake", "classifier": "fake"}


def test_schema_copy_matches_the_survey_engine():
    """Both ends of the wire must validate against the same document."""
    if importlib.util.find_spec("shoresweep") is None:
        pytest.skip("survey engine not installed alongside the sidecar")
    from importlib.resources import files

    theirs = files("shoresweep").joinpath("schemas/inference_protocol.json").read_text()
    ours = files("inference_sidecar").joinpath("schemas/inference_protocol.json").read_text()
    assert ours == theirs
