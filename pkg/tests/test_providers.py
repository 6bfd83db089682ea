"""Provider contracts: label schemas, class distributions, the output
postconditions every provider passes through, and the two concrete
providers."""

import json

import httpx
import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shoresweep.errors import ProtocolError, TransportError, ValidationError
from shoresweep.geometry import PixelBox
from shoresweep.providers import (
    ClassDistribution,
    DetectionRequest,
    FileBackedProvider,
    LabelSchema,
    RemoteProvider,
)
from shoresweep.providers.base import MAX_DETECTIONS, argmax_label, finalize_detections
from shoresweep.providers.remote import load_protocol_schemas

from conftest import class_scores, write_fixture_doc

SCHEMA = LabelSchema(("wood", "plastic", "metal"))


def request(box_threshold=0.3, text_threshold=0.3, prompt="all trash"):
    return DetectionRequest("img1", prompt, box_threshold, text_threshold)


class TestLabelSchema:
    def test_preserves_order_and_membership(self):
        s = LabelSchema(("b", "a", "c"))
        assert list(s) == ["b", "a", "c"]
        assert "a" in s and "z" not in s
        assert len(s) == 3
        assert s.index("c") == 2

    @pytest.mark.parametrize("labels", [(), ("one",), ("x", "x"), ("ok", "")])
    def test_rejects_degenerate_schemas(self, labels):
        with pytest.raises(ValidationError):
            LabelSchema(labels)


class TestClassDistribution:
    def test_sequence_scores_align_to_schema_order(self):
        d = ClassDistribution.from_scores(SCHEMA, [1.0, 2.0, 1.0])
        assert d.label_probabilities == {"wood": 0.25, "plastic": 0.5, "metal": 0.25}
        assert d.renormalized

    def test_exact_sum_is_not_flagged(self):
        d = ClassDistribution.from_scores(SCHEMA, [0.2, 0.5, 0.3])
        assert not d.renormalized

    def test_mapping_keys_must_match_schema_exactly(self):
        with pytest.raises(ValidationError, match="missing"):
            ClassDistribution.from_scores(SCHEMA, {"wood": 1.0, "plastic": 1.0})
        with pytest.raises(ValidationError, match="extra"):
            ClassDistribution.from_scores(
                SCHEMA, {"wood": 1.0, "plastic": 1.0, "metal": 1.0, "glass": 1.0}
            )

    def test_sequence_length_must_match_schema(self):
        with pytest.raises(ValidationError):
            ClassDistribution.from_scores(SCHEMA, [0.5, 0.5])

    @pytest.mark.parametrize(
        "scores", [[0.0, 0.0, 0.0], [1.0, float("nan"), 0.0], [1.0, -0.1, 0.5]]
    )
    def test_rejects_unusable_scores(self, scores):
        with pytest.raises(ValidationError):
            ClassDistribution.from_scores(SCHEMA, scores)

    def test_direct_construction_checks_the_sum(self):
        with pytest.raises(ValidationError):
            ClassDistribution({"a": 0.7, "b": 0.2})
        ClassDistribution({"a": 0.8, "b": 0.2})  # fine

    @given(
        scores=st.lists(st.integers(0, 100), min_size=3, max_size=3).filter(
            lambda vs: sum(vs) > 0
        ),
        scale=st.integers(1, 50),
    )
    @settings(max_examples=150)
    def test_argmax_is_invariant_under_rescaling(self, scores, scale):
        # Small integers keep the scaling exact in float arithmetic, so the
        # ordering of the scores is genuinely unchanged.
        a = ClassDistribution.from_scores(SCHEMA, [float(v) for v in scores])
        b = ClassDistribution.from_scores(SCHEMA, [float(v * scale) for v in scores])
        assert argmax_label(a) == argmax_label(b)

    def test_argmax_tie_goes_to_the_earlier_class(self):
        d = ClassDistribution.from_scores(SCHEMA, [0.4, 0.4, 0.2])
        assert argmax_label(d) == "wood"


class TestFinalizeDetections:
    def run(self, raw, req=None, shape=(100, 200, 3)):
        warnings = []
        out = finalize_detections(raw, req or request(), shape, warnings.append)
        return out, warnings

    def test_sorts_by_score_then_area_then_position(self):
        raw = [
            (0, 0, 10, 10, 0.5),
            (0, 0, 20, 20, 0.9),
            (50, 0, 60, 10, 0.9),   # same score, smaller area than the 20x20
            (30, 5, 40, 15, 0.5),
        ]
        out, warnings = self.run(raw)
        assert [(d.box.x_min, d.score) for d in out] == [
            (0.0, 0.9),
            (50.0, 0.9),
            (0.0, 0.5),
            (30.0, 0.5),
        ]
        assert not warnings

    def test_filters_below_the_box_threshold(self):
        out, _ = self.run([(0, 0, 10, 10, 0.29), (0, 0, 10, 10, 0.3)])
        assert len(out) == 1
        assert out[0].score == 0.3

    def test_clamps_overhanging_boxes_and_warns(self):
        out, warnings = self.run([(-5, -5, 10, 10, 0.9), (190, 90, 250, 140, 0.8)])
        assert [(d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max) for d in out] == [
            (0.0, 0.0, 10.0, 10.0),
            (190.0, 90.0, 200.0, 100.0),
        ]
        assert len(warnings) == 2

    def test_box_clamped_to_nothing_is_a_protocol_error(self):
        with pytest.raises(ProtocolError):
            self.run([(300, 0, 400, 10, 0.9)])

    @pytest.mark.parametrize(
        "entry",
        [
            (float("nan"), 0, 10, 10, 0.9),
            (0, 0, float("inf"), 10, 0.9),
            (0, 0, 10, 10, 1.2),
            (0, 0, 10, 10, -0.1),
            (0, 0, 10, 10, True),
        ],
    )
    def test_rejects_corrupt_entries(self, entry):
        with pytest.raises(ProtocolError):
            self.run([entry])

    def test_caps_the_detection_count_and_warns(self):
        raw = [(i % 150, 0, (i % 150) + 10, 10, 0.9) for i in range(MAX_DETECTIONS + 7)]
        out, warnings = self.run(raw)
        assert len(out) == MAX_DETECTIONS
        assert any("capped" in w or str(MAX_DETECTIONS) in w for w in warnings)

    def test_query_metadata_is_attached(self):
        out, _ = self.run([(0, 0, 10, 10, 0.9)])
        assert out[0].query_label == "all trash"
        assert out[0].source_image_id == "img1"


class TestFileBackedProvider:
    def test_replays_detections_and_falls_back_to_default_classify(self, tmp_path):
        write_fixture_doc(
            tmp_path, "img1", [((10, 10, 60, 60), 0.8), ((0, 0, 5, 5), 0.2)], "plastic"
        )
        provider = FileBackedProvider(tmp_path)
        image = np.zeros((100, 100, 3), dtype=np.uint8)
        out = provider.detect(request(box_threshold=0.3), image)
        assert [(d.box.x_max, d.score) for d in out] == [(60.0, 0.8)]
        # the 0.2 box appears once the threshold drops
        low = provider.detect(request(box_threshold=0.15), image)
        assert len(low) == 2

        from shoresweep.providers import DEFAULT_LABELS

        dist = provider.classify(image, LabelSchema(DEFAULT_LABELS), crop_id="img1:0,0,5,5")
        assert argmax_label(dist) == "plastic"

    def test_prompt_absent_from_the_document_yields_no_detections(self, tmp_path):
        write_fixture_doc(tmp_path, "img1", [((10, 10, 60, 60), 0.8)], "plastic")
        provider = FileBackedProvider(tmp_path)
        image = np.zeros((100, 100, 3), dtype=np.uint8)
        assert provider.detect(request(prompt="all seaweed"), image) == []

    def test_specific_crop_entry_wins_over_default(self, tmp_path):
        from shoresweep.providers import DEFAULT_LABELS

        classify = {
            "default": class_scores("plastic"),
            "img1:0,0,5,5": class_scores("metal"),
        }
        write_fixture_doc(tmp_path, "img1", [], "plastic", classify=classify)
        provider = FileBackedProvider(tmp_path)
        crop = np.zeros((5, 5, 3), dtype=np.uint8)
        schema = LabelSchema(DEFAULT_LABELS)
        assert argmax_label(provider.classify(crop, schema, crop_id="img1:0,0,5,5")) == "metal"
        assert argmax_label(provider.classify(crop, schema, crop_id="img1:9,9,12,12")) == "plastic"

    def test_missing_document_and_crop_id_are_protocol_errors(self, tmp_path):
        provider = FileBackedProvider(tmp_path)
        image = np.zeros((10, 10, 3), dtype=np.uint8)
        with pytest.raises(ProtocolError):
            provider.detect(request(), image)
        write_fixture_doc(tmp_path, "img1", [], "plastic", classify={})
        with pytest.raises(ProtocolError):
            provider.classify(image, SCHEMA, crop_id=None)
        with pytest.raises(ProtocolError):
            provider.classify(image, SCHEMA, crop_id="img1:0,0,5,5")

    def test_malformed_documents_are_protocol_errors(self, tmp_path):
        (tmp_path / "img1.json").write_text("not json {")
        provider = FileBackedProvider(tmp_path)
        with pytest.raises(ProtocolError):
            provider.detect(request(), np.zeros((10, 10, 3), dtype=np.uint8))
        (tmp_path / "img2.json").write_text(json.dumps({"detect": {"all trash": [{"x_min": 1}]}}))
        with pytest.raises(ProtocolError):
            provider.detect(
                DetectionRequest("img2", "all trash", 0.3, 0.3),
                np.zeros((10, 10, 3), dtype=np.uint8),
            )


def mock_remote(handler) -> RemoteProvider:
    provider = RemoteProvider("http://inference.test")
    provider._client = httpx.Client(
        base_url="http://inference.test", transport=httpx.MockTransport(handler)
    )
    return provider


class TestRemoteProvider:
    def test_detect_round_trip_validates_and_finalizes(self):
        seen = {}

        def handler(req: httpx.Request) -> httpx.Response:
            seen["payload"] = json.loads(req.content)
            seen["path"] = req.url.path
            return httpx.Response(
                200,
                json={
                    "detections": [
                        {"prompt": "all trash", "x_min": 5, "y_min": 5,
                         "x_max": 50, "y_max": 40, "score": 0.9},
                        {"prompt": "all rocks", "x_min": 0, "y_min": 0,
                         "x_max": 10, "y_max": 10, "score": 0.8},
                    ]
                },
            )

        with mock_remote(handler) as provider:
            out = provider.detect(request(), np.zeros((60, 80, 3), dtype=np.uint8))
        assert seen["path"] == "/v1/detect"
        assert [(d.box.x_max, d.score) for d in out] == [(50.0, 0.9)]  # rocks filtered out
        schemas = load_protocol_schemas()["$defs"]
        jsonschema.validate(seen["payload"], schemas["detect_request"])
        assert seen["payload"]["prompts"][0]["text"] == "all trash"

    def test_classify_round_trip(self):
        seen = {}

        def handler(req: httpx.Request) -> httpx.Response:
            seen["payload"] = json.loads(req.content)
            return httpx.Response(200, json={"probabilities": [0.2, 0.5, 0.3]})

        with mock_remote(handler) as provider:
            dist = provider.classify(np.zeros((8, 8, 3), dtype=np.uint8), SCHEMA)
        assert argmax_label(dist) == "plastic"
        jsonschema.validate(seen["payload"], load_protocol_schemas()["$defs"]["classify_request"])
        assert seen["payload"]["labels"] == ["wood", "plastic", "metal"]

    def test_renormalizes_off_by_more_than_tolerance_with_a_warning(self):
        warnings = []

        def handler(req):
            return httpx.Response(200, json={"probabilities": [2.0, 5.0, 3.0]})

        provider = mock_remote(handler)
        provider._warn = warnings.append
        dist = provider.classify(np.zeros((8, 8, 3), dtype=np.uint8), SCHEMA)
        assert dist.renormalized
        assert dist.label_probabilities["plastic"] == 0.5
        assert warnings

    def test_protocol_violations_are_protocol_errors(self):
        cases = [
            httpx.Response(200, json={"wrong": []}),
            httpx.Response(200, content=b"not json"),
            httpx.Response(500, json={"detections": []}),
            httpx.Response(200, json={"detections": [{"prompt": "all trash", "x_min": 0,
                                                      "y_min": 0, "x_max": 1, "y_max": 1,
                                                      "score": 2.0}]}),
        ]
        for response in cases:
            with mock_remote(lambda req, r=response: r) as provider:
                with pytest.raises(ProtocolError):
                    provider.detect(request(), np.zeros((8, 8, 3), dtype=np.uint8))

    def test_wrong_probability_count_is_a_protocol_error(self):
        def handler(req):
            return httpx.Response(200, json={"probabilities": [0.5, 0.5]})

        with mock_remote(handler) as provider:
            with pytest.raises(ProtocolError):
                provider.classify(np.zeros((8, 8, 3), dtype=np.uint8), SCHEMA)

    def test_unreachable_service_is_a_transport_error(self):
        def handler(req):
            raise httpx.ConnectError("refused")

        with mock_remote(handler) as provider:
            with pytest.raises(TransportError):
                provider.detect(request(), np.zeros((8, 8, 3), dtype=np.uint8))
            with pytest.raises(TransportError):
                provider.health()

    def test_health_round_trip(self):
        def handler(req):
            assert req.url.path == "/v1/health"
            return httpx.Response(200, json={"status": "ok", "detector": "fake"})

        with mock_remote(handler) as provider:
            assert provider.health()["status"] == "ok"
