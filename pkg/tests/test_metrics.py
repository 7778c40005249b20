import math
import random

import pytest

from pack_order.errors import EvaluationError
from pack_order.metrics import (
    SceneOutcome,
    Tally,
    accumulate,
    assemble_report,
    f1_scores,
    match_labels,
    report_series_csv,
    report_text_table,
    report_to_json,
    score_outcome,
    success_rate,
    success_rate_per_run,
)
from pack_order.scoring import PackingSequence
from pack_order.textpipe import PipelineResult

from conftest import make_matrix


class TestMatchLabels:
    def test_exact_match(self):
        tallies = match_labels(["apples"], ["apples"])
        assert tallies["apples"].tp == 1

    def test_plural_stripping(self):
        tallies = match_labels(["apple"], ["apples"])
        assert tallies["apples"].tp == 1
        assert tallies["apples"].fn == 0

    def test_set_difference(self):
        tallies = match_labels(["apples", "dragonfruit"], ["apples", "bananas"])
        assert tallies["apples"].tp == 1
        assert tallies["bananas"].fn == 1
        assert tallies["dragonfruit"].fp == 1

    def test_alias_resolution(self):
        tallies = match_labels(["red delicious"], ["apples"], {"red delicious": "apples"})
        assert tallies["apples"].tp == 1

    def test_duplicates_collapse_to_presence(self):
        tallies = match_labels(["apples", "apples"], ["apples"])
        assert tallies["apples"].tp == 1
        assert tallies["apples"].fp == 0


class TestF1Scores:
    def test_perfect_detection(self):
        total = {}
        for _ in range(3):
            accumulate(total, match_labels(["apples", "milk"], ["apples", "milk"]))
        result = f1_scores(total)
        assert result["AF1"] == 1.0

    def test_hand_computed_half(self):
        # class present in 2 scenes, detected in 1, plus 1 false detection elsewhere
        total = {}
        accumulate(total, match_labels(["widget"], ["widget"]))
        accumulate(total, match_labels([], ["widget"]))
        accumulate(total, match_labels(["widget"], ["other"]))
        per = f1_scores(total)["per_class"]["widget"]
        assert per["precision"] == 0.5
        assert per["recall"] == 0.5
        assert per["f1"] == 0.5

    def test_af1_is_mean_of_per_class_f1(self):
        rng = random.Random(8)
        total = {f"c{i}": Tally(rng.randint(0, 5), rng.randint(0, 5), rng.randint(0, 5))
                 for i in range(20)}
        for c in total:
            if total[c].tp + total[c].fn == 0:
                total[c].fn = 1
        result = f1_scores(total)
        mean = sum(v["f1"] for v in result["per_class"].values()) / len(result["per_class"])
        assert result["AF1"] == pytest.approx(mean, abs=1e-12)

    def test_no_ground_truth_rejected(self):
        with pytest.raises(EvaluationError):
            f1_scores({"x": Tally(0, 3, 0)})

    def test_rates_in_unit_interval(self):
        rng = random.Random(5)
        total = {f"c{i}": Tally(rng.randint(0, 4), rng.randint(0, 4), rng.randint(1, 4))
                 for i in range(10)}
        result = f1_scores(total)
        for value in (result["AP"], result["AR"], result["AF1"]):
            assert 0.0 <= value <= 1.0


def outcome(scene_id, size, truth, detected=None, planned=None, attempts=1):
    result = None
    if planned is not None:
        result = PipelineResult(scene_id, tuple(detected), PackingSequence(tuple(planned)),
                                attempts, ())
    return SceneOutcome(scene_id, size, tuple(truth), result,
                        error="" if result else "validation-exhausted")


class TestSuccessRate:
    def test_full_permutation(self):
        out = outcome("s1", 2, ["a", "b"], ["a", "b"], ["b", "a"])
        assert success_rate([out]) == 1.0

    def test_exhausted_scene_contributes_zero(self):
        good = outcome("s1", 2, ["a", "b"], ["a", "b"], ["b", "a"])
        failed = outcome("s2", 2, ["a", "b"])
        assert success_rate([good, failed]) == 0.5
        assert success_rate_per_run([good, failed]) == 0.5

    def test_partial_appearance(self):
        out = outcome("s1", 4, ["a", "b", "c", "d"],
                      ["aa", "bb", "cc", "dd"], ["aa", "bb", "cc"])
        assert success_rate([out]) == 0.75


@pytest.fixture
def tiny_matrix():
    prob = [[0, 0.9, 0.8], [0.1, 0, 0.7], [0.2, 0.3, 0]]
    return make_matrix(("a", "b", "c"), prob)


class TestScoreOutcome:
    def test_hallucinations_dropped_from_scoring(self, tiny_matrix):
        out = outcome("s1", 3, ["a", "b", "c"], ["a", "b", "c"], ["a", "unicorn fruit", "b"])
        score_outcome(out, tiny_matrix)
        assert out.scored_items == ("a", "b")
        assert out.consistency == pytest.approx(math.log(0.9))

    def test_failed_scene_stays_unscored(self, tiny_matrix):
        out = outcome("s1", 3, ["a", "b", "c"])
        score_outcome(out, tiny_matrix)
        assert out.consistency is None

    def test_single_resolvable_item_stays_unscored(self, tiny_matrix):
        out = outcome("s1", 3, ["a", "b", "c"], ["a"], ["a", "mystery"])
        score_outcome(out, tiny_matrix)
        assert out.consistency is None


class TestAssembleReport:
    def build(self, tiny_matrix):
        outs = [
            outcome("s1", 3, ["a", "b", "c"], ["a", "b", "c"], ["a", "b", "c"]),
            outcome("s2", 2, ["a", "b"], ["a", "b"], ["a", "b"], attempts=2),
            outcome("s3", 2, ["b", "c"]),
        ]
        for out in outs:
            score_outcome(out, tiny_matrix)
        return assemble_report(outs, tiny_matrix, {"seed": 0})

    def test_headline_fields(self, tiny_matrix):
        report = self.build(tiny_matrix)
        assert report["detection"]["AF1"] == pytest.approx(
            sum(v["f1"] for k, v in report["detection"]["per_class"].items()
                if v["tp"] + v["fn"] > 0) / 3, abs=1e-12)
        assert report["planning"]["attempts_histogram"] == {"1": 1, "2": 1, "failed": 1}
        assert report["planning"]["success_rate"] == pytest.approx(2 / 3)

    def test_by_scene_size_series(self, tiny_matrix):
        report = self.build(tiny_matrix)
        sizes = [row["scene_size"] for row in report["by_scene_size"]]
        assert sizes == [2, 3]

    def test_round_trip(self, tiny_matrix):
        import json
        report = self.build(tiny_matrix)
        assert json.loads(report_to_json(report)) == report

    def test_deterministic(self, tiny_matrix):
        assert report_to_json(self.build(tiny_matrix)) == report_to_json(self.build(tiny_matrix))

    def test_scene_order_invariance(self, tiny_matrix):
        outs = [
            outcome("s1", 3, ["a", "b", "c"], ["a", "b", "c"], ["a", "b", "c"]),
            outcome("s2", 2, ["a", "b"], ["a", "b"], ["a", "b"]),
        ]
        for out in outs:
            score_outcome(out, tiny_matrix)
        fwd = assemble_report(outs, tiny_matrix, {"seed": 0})
        rev = assemble_report(list(reversed(outs)), tiny_matrix, {"seed": 0})
        assert report_to_json(fwd) == report_to_json(rev)

    def test_duplicate_scene_ids_rejected(self, tiny_matrix):
        out = outcome("s1", 2, ["a", "b"], ["a", "b"], ["a", "b"])
        score_outcome(out, tiny_matrix)
        with pytest.raises(EvaluationError):
            assemble_report([out, out], tiny_matrix, {})

    def test_renderers(self, tiny_matrix):
        report = self.build(tiny_matrix)
        csv = report_series_csv(report)
        assert csv.splitlines()[0] == "scene_size,scenes,aC,satisfaction_rate"
        table = report_text_table(report)
        assert "AF1" in table and "success rate" in table

    def test_minus_infinity_encoding(self):
        prob = [[0, 1.0], [0.0, 0]]
        m = make_matrix(("a", "b"), prob)
        out = outcome("s1", 2, ["a", "b"], ["a", "b"], ["b", "a"])
        score_outcome(out, m)
        report = assemble_report([out], m, {})
        assert report["planning"]["aC"] == "-inf"
        assert report["planning"]["infinite_count"] == 1
