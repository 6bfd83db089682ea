"""Scoring predictions against annotations: box pairing, IoU means,
classification metrics, and the two annotation loaders."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shoresweep.errors import DataError, ValidationError
from shoresweep.evaluation import (
    UNMATCHED,
    BoxPairing,
    GroundTruthBox,
    classification_metrics,
    evaluate_records,
    load_annotations_csv,
    load_annotations_json,
    match_boxes,
    mean_iou,
)
from shoresweep.geometry import PixelBox, iou
from shoresweep.pipeline import DebrisRecord
from shoresweep.providers import LabelSchema

SCHEMA = LabelSchema(("plastic", "metal", "wood"))


def rec(n, box, label="plastic", image="imgA", corrected=None):
    return DebrisRecord(
        record_id=f"{image}:{n:04d}",
        source_image_id=image,
        box=box,
        detection_score=0.9,
        predicted_label=label,
        corrected_label=corrected,
    )


def truth(box, label="plastic", image="imgA"):
    return GroundTruthBox(image_id=image, box=box, label=label)


def strip(x0, x1):
    return PixelBox(float(x0), 0.0, float(x1), 10.0)


class TestMatchBoxes:
    def test_prediction_takes_the_higher_iou_truth(self):
        pred = rec(0, PixelBox(0.0, 0.0, 60.0, 100.0))
        best = truth(PixelBox(0.0, 0.0, 50.0, 100.0))
        worse = truth(PixelBox(0.0, 0.0, 100.0, 100.0))
        pairing = match_boxes([pred], [best, worse])
        ((p, t, overlap),) = pairing.matched
        assert (p, t) == (pred, best)
        assert overlap == pytest.approx(5 / 6)
        assert pairing.unmatched_truths == (worse,)

    def test_zero_iou_never_matches(self):
        pred = rec(0, strip(0, 40))
        t = truth(strip(100, 140))
        pairing = match_boxes([pred], [t])
        assert pairing.matched == ()
        assert pairing.unmatched_predictions == (pred,)
        assert pairing.unmatched_truths == (t,)

    def test_edge_touching_boxes_do_not_match(self):
        pairing = match_boxes([rec(0, strip(0, 40))], [truth(strip(40, 80))])
        assert pairing.matched == ()

    def test_matching_is_per_image(self):
        box = strip(0, 40)
        pairing = match_boxes(
            [rec(0, box, image="imgA")], [truth(box, image="imgB")]
        )
        assert pairing.matched == ()
        assert len(pairing.unmatched_predictions) == 1
        assert len(pairing.unmatched_truths) == 1

    def test_greedy_can_be_suboptimal_and_optimal_fixes_it(self):
        t1, t2 = truth(strip(100, 190)), truth(strip(152.5, 242.5), label="metal")
        p1 = rec(0, strip(122.5, 212.5))
        p2 = rec(1, strip(32.5, 122.5))
        greedy = match_boxes([p1, p2], [t1, t2])
        assert [(p, t) for p, t, _ in greedy.matched] == [(p1, t1)]
        assert greedy.matched[0][2] == pytest.approx(0.6)

        optimal = match_boxes([p1, p2], [t1, t2], optimal=True)
        assert {(p.record_id, t.label) for p, t, _ in optimal.matched} == {
            ("imgA:0000", "metal"),
            ("imgA:0001", "plastic"),
        }
        greedy_total = sum(o for _, _, o in greedy.matched)
        optimal_total = sum(o for _, _, o in optimal.matched)
        assert optimal_total > greedy_total

    @given(
        pred_boxes=st.lists(
            st.builds(
                lambda x, y, w, h: PixelBox(float(x), float(y), float(x + w), float(y + h)),
                st.integers(0, 25), st.integers(0, 25),
                st.integers(1, 15), st.integers(1, 15),
            ),
            max_size=8,
        ),
        truth_boxes=st.lists(
            st.builds(
                lambda x, y, w, h: PixelBox(float(x), float(y), float(x + w), float(y + h)),
                st.integers(0, 25), st.integers(0, 25),
                st.integers(1, 15), st.integers(1, 15),
            ),
            max_size=8,
        ),
        rng=st.randoms(use_true_random=False),
    )
    @settings(max_examples=60, deadline=None)
    def test_pairing_is_permutation_invariant_and_consistent(
        self, pred_boxes, truth_boxes, rng
    ):
        labels = list(SCHEMA)
        preds = [
            rec(i, b, label=labels[i % 3], image="imgA" if i % 2 else "imgB")
            for i, b in enumerate(pred_boxes)
        ]
        truths = [
            truth(b, label=labels[i % 3], image="imgA" if i % 3 else "imgB")
            for i, b in enumerate(truth_boxes)
        ]
        base = match_boxes(preds, truths)

        for p, t, overlap in base.matched:
            assert overlap == iou(p.box, t.box) > 0.0
            assert p.source_image_id == t.image_id
        matched_pred_ids = [p.record_id for p, _, _ in base.matched]
        assert len(set(matched_pred_ids)) == len(matched_pred_ids)
        matched_truths = [t for _, t, _ in base.matched]
        assert len(set(matched_truths)) == len(matched_truths)
        assert len(base.matched) + len(base.unmatched_predictions) == len(preds)
        assert base.truth_count == len(truths)

        shuffled_preds, shuffled_truths = list(preds), list(truths)
        rng.shuffle(shuffled_preds)
        rng.shuffle(shuffled_truths)
        assert match_boxes(shuffled_preds, shuffled_truths) == base


class TestMeanIou:
    def test_unmatched_truths_pull_the_mean_down(self):
        pred = rec(0, strip(0, 40))
        t_hit = truth(PixelBox(20.0, 0.0, 60.0, 10.0))
        t_miss = truth(strip(100, 140))
        pairing = match_boxes([pred], [t_hit, t_miss])
        assert mean_iou(pairing) == pytest.approx((1 / 3 + 0.0) / 2)
        assert mean_iou(pairing, matched_only=True) == pytest.approx(1 / 3)

    def test_none_when_nothing_to_score(self):
        empty = BoxPairing((), (), ())
        assert mean_iou(empty) is None
        assert mean_iou(empty, matched_only=True) is None
        preds_only = match_boxes([rec(0, strip(0, 40))], [])
        assert mean_iou(preds_only) is None
        truths_only = match_boxes([], [truth(strip(0, 40))])
        assert mean_iou(truths_only) == 0.0
        assert mean_iou(truths_only, matched_only=True) is None

    @given(
        n_hits=st.integers(0, 5),
        n_misses=st.integers(0, 5),
    )
    @settings(max_examples=40, deadline=None)
    def test_full_mean_never_exceeds_matched_mean(self, n_hits, n_misses):
        preds = [rec(i, strip(i * 100, i * 100 + 40)) for i in range(n_hits)]
        truths = [
            truth(PixelBox(i * 100 + 20.0, 0.0, i * 100 + 60.0, 10.0))
            for i in range(n_hits)
        ]
        truths += [truth(strip(10_000 + i * 100, 10_040 + i * 100)) for i in range(n_misses)]
        pairing = match_boxes(preds, truths)
        full = mean_iou(pairing)
        matched = mean_iou(pairing, matched_only=True)
        if matched is not None and full is not None:
            assert full <= matched + 1e-12


def paired(pred_label, truth_label, corrected=None, n=0):
    box = strip(0, 40)
    return (
        rec(n, box, label=pred_label, corrected=corrected),
        truth(box, label=truth_label),
        1.0,
    )


class TestClassificationMetrics:
    def test_precision_recall_from_matched_pairs(self):
        pairing = BoxPairing(
            matched=(
                paired("plastic", "plastic", n=0),
                paired("plastic", "plastic", n=1),
                paired("plastic", "metal", n=2),
                paired("metal", "plastic", n=3),
            ),
            unmatched_predictions=(),
            unmatched_truths=(),
        )
        report = classification_metrics(pairing, SCHEMA)
        assert report.per_class["plastic"] == {
            "precision": pytest.approx(2 / 3),
            "recall": pytest.approx(2 / 3),
            "f1": pytest.approx(2 / 3),
        }
        assert report.per_class["metal"] == {"precision": 0.0, "recall": 0.0, "f1": 0.0}
        assert "wood" not in report.per_class
        assert report.accuracy == pytest.approx(0.5)
        assert report.macro_f1 == pytest.approx((2 / 3 + 0.0) / 2)
        assert report.matched_pairs == 4

    def test_confusion_matrix_layout(self):
        pairing = BoxPairing(
            matched=(paired("plastic", "metal", n=0),),
            unmatched_predictions=(),
            unmatched_truths=(truth(strip(100, 140), label="wood"),),
        )
        report = classification_metrics(pairing, SCHEMA)
        assert set(report.confusion) == set(SCHEMA)
        for row in report.confusion.values():
            assert set(row) == set(SCHEMA) | {UNMATCHED}
        assert report.confusion["metal"]["plastic"] == 1
        assert report.confusion["wood"][UNMATCHED] == 1
        assert sum(report.confusion["plastic"].values()) == 0

    def test_corrections_drive_the_scoring(self):
        pairing = BoxPairing(
            matched=(paired("plastic", "metal", corrected="metal", n=0),),
            unmatched_predictions=(),
            unmatched_truths=(),
        )
        report = classification_metrics(pairing, SCHEMA)
        assert report.accuracy == 1.0
        assert report.confusion["metal"]["metal"] == 1

    def test_empty_pairing_yields_none_scores(self):
        report = classification_metrics(BoxPairing((), (), ()), SCHEMA)
        assert report.mean_iou is None
        assert report.matched_mean_iou is None
        assert report.accuracy is None
        assert report.macro_f1 is None
        assert report.per_class == {}
        assert report.matched_pairs == 0

    def test_labels_outside_the_schema_are_rejected(self):
        bad_truth = BoxPairing(
            matched=((rec(0, strip(0, 40)), truth(strip(0, 40), label="seaweed"), 1.0),),
            unmatched_predictions=(),
            unmatched_truths=(),
        )
        with pytest.raises(ValidationError):
            classification_metrics(bad_truth, SCHEMA)
        bad_pred = BoxPairing(
            matched=((rec(0, strip(0, 40), label="seaweed"), truth(strip(0, 40)), 1.0),),
            unmatched_predictions=(),
            unmatched_truths=(),
        )
        with pytest.raises(ValidationError):
            classification_metrics(bad_pred, SCHEMA)
        bad_unmatched = BoxPairing(
            matched=(),
            unmatched_predictions=(),
            unmatched_truths=(truth(strip(0, 40), label="seaweed"),),
        )
        with pytest.raises(ValidationError):
            classification_metrics(bad_unmatched, SCHEMA)

    def test_evaluate_records_is_match_plus_score(self):
        preds = [rec(0, strip(0, 40))]
        truths = [truth(PixelBox(20.0, 0.0, 60.0, 10.0))]
        report = evaluate_records(preds, truths, SCHEMA)
        assert report.mean_iou == pytest.approx(1 / 3)
        assert report.accuracy == 1.0
        assert report.to_dict()["matched_pairs"] == 1


GOOD_JSON = b"""
{
  "annotations": {
    "imgB": [{"box": [10, 10, 50, 50], "label": "metal"}],
    "imgA": [
      {"box": [0, 0, 40, 40], "label": "plastic"},
      {"box": [60.5, 0, 90, 25.5], "label": "wood"}
    ]
  }
}
"""


class TestJsonLoader:
    def test_parses_and_orders_by_image(self):
        truths = load_annotations_json(GOOD_JSON, SCHEMA)
        assert [t.image_id for t in truths] == ["imgA", "imgA", "imgB"]
        assert truths[0].box == PixelBox(0.0, 0.0, 40.0, 40.0)
        assert truths[1].box == PixelBox(60.5, 0.0, 90.0, 25.5)
        assert [t.label for t in truths] == ["plastic", "wood", "metal"]

    @pytest.mark.parametrize(
        "data,fragment",
        [
            (b"{not json", "not valid JSON"),
            (b"[]", "'annotations' object"),
            (b'{"annotations": {"img": {}}}', "must be a list"),
            (b'{"annotations": {"img": [{"label": "metal"}]}}', "'box' and 'label'"),
            (b'{"annotations": {"img": [{"box": [1, 2, 3], "label": "metal"}]}}', "box must be"),
            (b'{"annotations": {"img": [{"box": [0, 0, 9, 9], "label": "kelp"}]}}', "not in schema"),
            (b'{"annotations": {"img": [{"box": [9, 0, 0, 9], "label": "metal"}]}}', "invalid box"),
        ],
    )
    def test_rejects_malformed_documents(self, data, fragment):
        with pytest.raises(DataError, match=fragment):
            load_annotations_json(data, SCHEMA)


GOOD_CSV = (
    b"record_id,image_id,x_min,y_min,x_max,y_max,label,score\n"
    b"imgA:0000,imgA,0,0,40,40,plastic,0.9\n"
    b"imgB:0000,imgB,10,10,50,50,metal,0.8\n"
)


class TestCsvLoader:
    def test_parses_and_ignores_extra_columns(self):
        truths = load_annotations_csv(GOOD_CSV, SCHEMA)
        assert [t.image_id for t in truths] == ["imgA", "imgB"]
        assert truths[0].box == PixelBox(0.0, 0.0, 40.0, 40.0)
        assert truths[1].label == "metal"

    def test_missing_columns_are_named(self):
        with pytest.raises(DataError, match=r"\['y_max', 'label'\]"):
            load_annotations_csv(b"image_id,x_min,y_min,x_max\n", SCHEMA)

    def test_errors_carry_line_numbers(self):
        bad_label = (
            b"image_id,x_min,y_min,x_max,y_max,label\n"
            b"imgA,0,0,40,40,plastic\n"
            b"imgA,0,0,40,40,kelp\n"
        )
        with pytest.raises(DataError, match="line 3"):
            load_annotations_csv(bad_label, SCHEMA)
        bad_box = b"image_id,x_min,y_min,x_max,y_max,label\nimgA,40,0,0,40,metal\n"
        with pytest.raises(DataError, match="line 2: invalid box"):
            load_annotations_csv(bad_box, SCHEMA)

    def test_rejects_non_utf8(self):
        with pytest.raises(DataError, match="not UTF-8"):
            load_annotations_csv(b"\xff\xfeimage_id\n", SCHEMA)
