"""
Unit tests for src/validation/multihop_scoring.py
"""

import json
from decimal import Decimal

import pytest

from src.validation.errors import EvaluationError
from src.validation.multihop_scoring import (
    MultiHopItem,
    load_gold_items,
    load_predictions,
    normalize_category,
    score_multihop,
)


def items(n, category="inference"):
    return [MultiHopItem(f"q{i}", f"Question {i}?", f"Answer {i}", category) for i in range(n)]


class TestMultiHopItem:

    def test_reference_scored_as_inference(self):
        assert MultiHopItem("q", "?", "Yes", "Reference").category == "inference"

    def test_unknown_category(self):
        with pytest.raises(ValueError, match="Valid options"):
            normalize_category("null_query")

    def test_empty_gold(self):
        with pytest.raises(ValueError):
            MultiHopItem("q", "?", " ", "temporal")


class TestScoreMultihop:

    def test_forty_of_125(self):
        gold = items(125)
        predictions = {item.query_id: (item.gold if i < 40 else "wrong") for i, item in enumerate(gold)}
        score = score_multihop(predictions, gold)
        assert score.overall.accuracy == Decimal("32.00")
        assert score.categories["inference"].correct == 40

    def test_exact_match_normalization(self):
        gold = [MultiHopItem("q1", "?", "Honey Bees", "comparison")]
        assert score_multihop({"q1": "  honey bees\n"}, gold).overall.correct == 1
        assert score_multihop({"q1": "honey bee"}, gold).overall.correct == 0

    def test_missing_and_ignored_predictions(self):
        score = score_multihop({"q0": "Answer 0", "extra": "x"}, items(3))
        assert score.overall.correct == 1
        assert score.overall.total == 3
        assert score.missing_predictions == 2
        assert score.ignored_predictions == 1

    def test_only_present_categories_reported(self):
        score = score_multihop({}, items(2, "temporal"))
        assert list(score.categories) == ["temporal"]
        assert score.to_dict()["overall"]["accuracy"] == "0.00"

    def test_empty_gold(self):
        with pytest.raises(EvaluationError):
            score_multihop({}, [])

    def test_duplicate_ids(self):
        with pytest.raises(EvaluationError):
            score_multihop({}, items(2) + items(1))

    def test_twenty_item_fixture(self, tmp_path):
        categories = ["inference", "comparison", "temporal", "reference"]
        gold_path = tmp_path / "gold.jsonl"
        pred_path = tmp_path / "predictions.jsonl"
        with open(gold_path, "w", encoding="utf-8") as f:
            for i in range(20):
                f.write(json.dumps({
                    "query_id": f"m{i}", "query": f"Q{i}?", "answer": "Yes" if i % 2 else "No",
                    "question_type": categories[i % 4],
                }) + "\n")
        with open(pred_path, "w", encoding="utf-8") as f:
            for i in range(20):
                predicted = "yes" if i % 2 else ("no" if i < 10 else "maybe")
                f.write(json.dumps({"query_id": f"m{i}", "text": predicted}) + "\n")

        score = score_multihop(load_predictions(pred_path), load_gold_items(gold_path))
        # evens at 10..18 are wrong: m10, m12, m14, m16, m18
        assert score.overall.correct == 15
        assert score.overall.accuracy == Decimal("75.00")
        assert score.categories["inference"].total == 10
        assert score.categories["comparison"].total == 5
        assert score.categories["temporal"].correct == 2

    def test_fixture_edge_cases(self, tmp_path):
        gold_path = tmp_path / "gold.jsonl"
        pred_path = tmp_path / "predictions.jsonl"
        gold = [
            {"query_id": "r0", "answer": "Apis mellifera", "question_type": "reference"},
            {"query_id": "r1", "answer": "1998", "question_type": "temporal_query"},
            {"query_id": "r2", "answer": "Yes", "question_type": "comparison"},
            {"query_id": "r3", "answer": "No", "question_type": "inference"},
            {"query_id": "r4", "answer": "Yes", "question_type": "Reference"},
        ]
        predictions = [
            {"query_id": "r0", "text": "  apis MELLIFERA \n"},
            {"query_id": "r1", "text": "1998 "},
            {"query_id": "r3", "answer": "No"},
            {"query_id": "r4", "text": "yes."},
            {"query_id": "zz", "text": "Yes"},
        ]
        gold_path.write_text("".join(json.dumps(g) + "\n" for g in gold), encoding="utf-8")
        pred_path.write_text("".join(json.dumps(p) + "\n" for p in predictions), encoding="utf-8")

        score = score_multihop(load_predictions(pred_path), load_gold_items(gold_path))

        assert list(score.categories) == ["inference", "comparison", "temporal"]
        assert score.categories["inference"].to_dict() == {"correct": 2, "total": 3, "accuracy": "66.67"}
        assert score.categories["temporal"].to_dict() == {"correct": 1, "total": 1, "accuracy": "100.00"}
        assert score.categories["comparison"].to_dict() == {"correct": 0, "total": 1, "accuracy": "0.00"}
        assert score.overall.accuracy == Decimal("60.00")
        assert (score.missing_predictions, score.ignored_predictions) == (1, 1)


class TestLoaders:

    def test_bad_gold_line(self, tmp_path):
        path = tmp_path / "gold.jsonl"
        path.write_text('{"query_id": "q", "answer": "x", "category": "bogus"}\n', encoding="utf-8")
        with pytest.raises(EvaluationError, match="line 1"):
            load_gold_items(path)

    def test_bad_prediction_line(self, tmp_path):
        path = tmp_path / "pred.jsonl"
        path.write_text('{"answer": "x"}\n', encoding="utf-8")
        with pytest.raises(EvaluationError):
            load_predictions(path)
