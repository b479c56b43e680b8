"""
Multi-hop exact-match scoring.

Gold items carry a category: inference, comparison or temporal. Items
labelled ``reference`` are scored as inference. A prediction is correct when
it equals the gold answer after trimming and case-folding; a missing
prediction counts as wrong.
"""

import json
import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Union

from src.validation.errors import EvaluationError

logger = logging.getLogger(__name__)

CATEGORIES = ("inference", "comparison", "temporal")
CATEGORY_ALIASES = {"reference": "inference", "inference_query": "inference", "comparison_query": "comparison", "temporal_query": "temporal"}


def normalize_answer(text: str) -> str:
    return (text or "").strip().casefold()


def normalize_category(category: str) -> str:
    key = normalize_answer(category)
    key = CATEGORY_ALIASES.get(key, key)
    if key not in CATEGORIES:
        raise ValueError(f"Unknown multi-hop category '{category}'. Valid options: {', '.join(CATEGORIES)}")
    return key


@dataclass(frozen=True)
class MultiHopItem:
    query_id: str
    query: str
    gold: str
    category: str

    def __post_init__(self):
        if not self.gold.strip():
            raise ValueError(f"Multi-hop item {self.query_id} has an empty gold answer")
        object.__setattr__(self, "category", normalize_category(self.category))


@dataclass
class CategoryScore:
    correct: int = 0
    total: int = 0

    @property
    def accuracy(self) -> Decimal:
        """Percentage correct, quantized to 0.01."""
        if not self.total:
            return Decimal("0.00")
        return (Decimal(self.correct) * 100 / Decimal(self.total)).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)

    def to_dict(self) -> dict:
        return {"correct": self.correct, "total": self.total, "accuracy": str(self.accuracy)}


@dataclass
class MultiHopScore:
    """Per-category and overall accuracy."""

    categories: Dict[str, CategoryScore] = field(default_factory=dict)
    overall: CategoryScore = field(default_factory=CategoryScore)
    missing_predictions: int = 0
    ignored_predictions: int = 0

    def to_dict(self) -> dict:
        return {
            "categories": {name: score.to_dict() for name, score in self.categories.items()},
            "overall": self.overall.to_dict(),
            "missing_predictions": self.missing_predictions,
            "ignored_predictions": self.ignored_predictions,
        }


def score_multihop(predictions: Mapping[str, str], gold_items: Sequence[MultiHopItem]) -> MultiHopScore:
    """
    Score predictions against gold items by normalized exact match.

    Args:
        predictions: query_id -> predicted answer
        gold_items: Gold items

    Returns:
        MultiHopScore with one entry per category present in the gold set

    Raises:
        EvaluationError: Empty gold set or duplicate gold ids
    """
    if not gold_items:
        raise EvaluationError("No gold items to score against")
    ids = [item.query_id for item in gold_items]
    if len(set(ids)) != len(ids):
        raise EvaluationError("Gold items contain duplicate query ids")

    score = MultiHopScore(categories={c: CategoryScore() for c in CATEGORIES if any(i.category == c for i in gold_items)})
    for item in gold_items:
        category = score.categories[item.category]
        category.total += 1
        score.overall.total += 1
        if item.query_id not in predictions:
            score.missing_predictions += 1
            continue
        if normalize_answer(predictions[item.query_id]) == normalize_answer(item.gold):
            category.correct += 1
            score.overall.correct += 1

    score.ignored_predictions = len(set(predictions) - set(ids))
    if score.missing_predictions:
        logger.warning(f"{score.missing_predictions} gold items have no prediction (scored as wrong)")
    if score.ignored_predictions:
        logger.warning(f"Ignoring {score.ignored_predictions} predictions with no gold item")
    return score


def load_gold_items(path: Union[str, Path]) -> List[MultiHopItem]:
    """
    Read gold items from JSON lines with query_id, query, answer (or gold) and category.
    """
    items = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                items.append(MultiHopItem(
                    query_id=str(record.get("query_id", line_no)),
                    query=record.get("query", ""),
                    gold=str(record.get("answer", record.get("gold", ""))),
                    category=record.get("category", record.get("question_type", "")),
                ))
            except (ValueError, AttributeError) as e:
                raise EvaluationError(f"{Path(path).name}: line {line_no}: {e}") from e
    return items


def load_predictions(path: Union[str, Path]) -> Dict[str, str]:
    """Read query_id -> answer from JSON lines with ``answer`` or ``text``."""
    predictions = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                predictions[str(record["query_id"])] = str(record.get("answer", record.get("text", "")))
            except (ValueError, KeyError, TypeError) as e:
                raise EvaluationError(f"{Path(path).name}: line {line_no}: not a prediction record ({e})") from e
    return predictions
