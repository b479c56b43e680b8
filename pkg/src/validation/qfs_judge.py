"""
Pairwise QFS answer judging.

Each (query, answer_a, answer_b) pair is judged twice, once with each answer
in position 1, on Comprehensiveness, Diversity, Empowerment and Overall. Every
valid verdict counts as one judging. An ordering whose reply cannot be parsed
after one re-ask is excluded and counted.

Win rates are percentages quantized to 0.01 with half-even rounding; the
second system's rate is 100 minus the first's, so swapping the system labels
swaps the columns exactly.
"""

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd

from src.llm.errors import BudgetExceededError
from src.llm.gateway import LLMGateway
from src.llm.usage import PHASE_EVALUATION
from src.validation.errors import EvaluationError

logger = logging.getLogger(__name__)

METRICS = ("Comprehensiveness", "Diversity", "Empowerment", "Overall")
ANSWER_1 = "answer_1"
ANSWER_2 = "answer_2"

REFORMAT_NOTE = (
    "\nYour previous evaluation could not be read. Reply with the JSON object only, "
    "naming \"Answer 1\" or \"Answer 2\" as the Winner of every criterion.\n"
)

_HUNDRED = Decimal(100)
_CENT = Decimal("0.01")

_WINNER = re.compile(r'"?winner"?\s*:\s*"?\s*(?:\[\s*)?answer\s*([12])', re.IGNORECASE)
_EXPLANATION = re.compile(r'"?explanation"?\s*:\s*"((?:[^"\\]|\\.)*)"', re.IGNORECASE | re.DOTALL)
_ANSWER = re.compile(r"answer\s*([12])", re.IGNORECASE)
_FENCE = re.compile(r"^\s*```[a-zA-Z]*\s*$", re.MULTILINE)


class JudgeParseError(ValueError):
    """A judge reply is missing a verdict for at least one metric."""
    pass


@dataclass(frozen=True)
class JudgeDecision:
    """One metric verdict from one ordering."""

    query_id: str
    metric: str
    winner: str
    explanation: str
    answer_1_system: str
    answer_2_system: str

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"Unknown metric '{self.metric}'. Valid options: {', '.join(METRICS)}")
        if self.winner not in (ANSWER_1, ANSWER_2):
            raise ValueError(f"Winner must be '{ANSWER_1}' or '{ANSWER_2}', got '{self.winner}'")

    @property
    def order_tag(self) -> str:
        """Which ordering produced the decision: ``<system in position 1>-first``."""
        return f"{self.answer_1_system}-first"

    @property
    def winning_system(self) -> str:
        return self.answer_1_system if self.winner == ANSWER_1 else self.answer_2_system

    def to_dict(self) -> dict:
        data = asdict(self)
        data["order_tag"] = self.order_tag
        data["winning_system"] = self.winning_system
        return data


@dataclass
class OrderingJudgment:
    """Outcome of judging one ordering of one pair."""

    query_id: str
    answer_1_system: str
    answer_2_system: str
    decisions: List[JudgeDecision] = field(default_factory=list)
    raw_replies: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def valid(self) -> bool:
        return self.error is None

    @property
    def order_tag(self) -> str:
        return f"{self.answer_1_system}-first"

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "order_tag": self.order_tag,
            "answer_1_system": self.answer_1_system,
            "answer_2_system": self.answer_2_system,
            "valid": self.valid,
            "error": self.error,
            "decisions": [d.to_dict() for d in self.decisions],
            "raw_replies": list(self.raw_replies),
        }


def _key_pattern(metric: str) -> re.Pattern:
    # A metric key opens a line, or follows "{" or "," when its value is an object.
    return re.compile(
        rf'(?:^[ \t]*"?{metric}"?\s*:|[{{,]\s*"?{metric}"?\s*:(?=\s*\{{))',
        re.IGNORECASE | re.MULTILINE,
    )


_KEYS = {metric: _key_pattern(metric) for metric in METRICS}


def _metric_segments(text: str) -> Dict[str, str]:
    positions = []
    for metric in METRICS:
        match = _KEYS[metric].search(text)
        if match:
            positions.append((match.end(), metric))
    positions.sort()
    segments = {}
    for i, (start, metric) in enumerate(positions):
        end = positions[i + 1][0] if i + 1 < len(positions) else len(text)
        segments[metric] = text[start:end]
    return segments


def _load_json_object(text: str) -> Optional[dict]:
    stripped = _FENCE.sub("", text).strip()
    candidates = [stripped]
    start, end = stripped.find("{"), stripped.rfind("}")
    if 0 <= start < end:
        candidates.append(stripped[start:end + 1])
    for candidate in candidates:
        try:
            data = json.loads(candidate)
        except ValueError:
            continue
        if isinstance(data, dict):
            return data
    return None


def _json_verdicts(data: dict) -> Dict[str, Tuple[str, str]]:
    by_key = {str(key).strip().casefold(): value for key, value in data.items()}
    verdicts: Dict[str, Tuple[str, str]] = {}
    for metric in METRICS:
        entry = by_key.get(metric.casefold())
        if not isinstance(entry, dict):
            continue
        fields = {str(key).strip().casefold(): value for key, value in entry.items()}
        winner = fields.get("winner")
        if isinstance(winner, list) and winner:
            winner = winner[0]
        match = _ANSWER.search(winner) if isinstance(winner, str) else None
        if not match:
            continue
        explanation = fields.get("explanation")
        verdicts[metric] = (
            ANSWER_1 if match.group(1) == "1" else ANSWER_2,
            explanation if isinstance(explanation, str) else "",
        )
    return verdicts


def _scanned_verdicts(text: str) -> Dict[str, Tuple[str, str]]:
    verdicts: Dict[str, Tuple[str, str]] = {}
    for metric, segment in _metric_segments(text).items():
        winner = _WINNER.search(segment)
        if not winner:
            continue
        explanation = _EXPLANATION.search(segment)
        verdicts[metric] = (
            ANSWER_1 if winner.group(1) == "1" else ANSWER_2,
            explanation.group(1).replace('\\"', '"') if explanation else "",
        )
    return verdicts


def parse_judge_reply(text: str) -> Dict[str, Tuple[str, str]]:
    """
    Read the four metric verdicts of a judge reply.

    A reply that decodes as a JSON object (code fences allowed) is read by its
    top-level keys only. Anything else is scanned leniently for metric keys
    (bracketed winners, missing quotes).

    Returns:
        metric -> (winner, explanation) with winner ``answer_1`` or ``answer_2``

    Raises:
        JudgeParseError: Any metric lacks a readable winner
    """
    text = text or ""
    data = _load_json_object(text)
    verdicts = _json_verdicts(data) if data is not None else _scanned_verdicts(text)
    missing = [metric for metric in METRICS if metric not in verdicts]
    if missing:
        raise JudgeParseError(f"No verdict for {', '.join(missing)}")
    return verdicts


def judge_ordering(
    query_id: str,
    query: str,
    first: Tuple[str, str],
    second: Tuple[str, str],
    gateway: LLMGateway,
) -> OrderingJudgment:
    """
    Judge one ordering: ``first`` is shown as Answer 1, ``second`` as Answer 2.

    Args:
        first, second: (system name, answer text)
    """
    judgment = OrderingJudgment(query_id=query_id, answer_1_system=first[0], answer_2_system=second[0])
    for retry_note in ("", REFORMAT_NOTE):
        prompt = gateway.render(
            "judge_pair", query=query, answer1=first[1], answer2=second[1], retry_note=retry_note,
        )
        reply = gateway.complete(prompt, phase=PHASE_EVALUATION)
        judgment.raw_replies.append(reply.text)
        try:
            verdicts = parse_judge_reply(reply.text)
        except JudgeParseError as e:
            judgment.error = str(e)
            continue
        judgment.error = None
        judgment.decisions = [
            JudgeDecision(query_id, metric, winner, explanation, first[0], second[0])
            for metric, (winner, explanation) in verdicts.items()
        ]
        judgment.decisions.sort(key=lambda d: METRICS.index(d.metric))
        return judgment

    logger.warning(f"Excluding judgment of {query_id} ({judgment.order_tag}): {judgment.error}")
    return judgment


def judge_pair(
    query_id: str,
    query: str,
    system_a: str,
    answer_a: str,
    system_b: str,
    answer_b: str,
    gateway: LLMGateway,
) -> List[OrderingJudgment]:
    """
    Judge a pair of answers in both orderings.

    Returns:
        [A-first judgment, B-first judgment]
    """
    if system_a == system_b:
        raise ValueError("The two systems must have distinct names")
    if not answer_a.strip() or not answer_b.strip():
        raise ValueError(f"Both answers of {query_id} must be non-empty")
    return [
        judge_ordering(query_id, query, (system_a, answer_a), (system_b, answer_b), gateway),
        judge_ordering(query_id, query, (system_b, answer_b), (system_a, answer_a), gateway),
    ]


def judge_answer_sets(
    queries: Sequence[Tuple[str, str]],
    answers_a: Dict[str, str],
    answers_b: Dict[str, str],
    gateway: LLMGateway,
    system_a: str = "A",
    system_b: str = "B",
) -> List[OrderingJudgment]:
    """
    Judge two systems' answers over a query set, concurrently across queries.

    Args:
        queries: (query_id, query text) pairs
        answers_a, answers_b: query_id -> answer text for each system

    Returns:
        Judgments in query order, two per query

    Raises:
        EvaluationError: A query lacks an answer from either system
    """
    missing = [qid for qid, _ in queries if qid not in answers_a or qid not in answers_b]
    if missing:
        raise EvaluationError(f"{len(missing)} queries lack an answer from one system: {', '.join(missing[:5])}")

    def judge(item: Tuple[str, str]) -> List[OrderingJudgment]:
        qid, text = item
        return judge_pair(qid, text, system_a, answers_a[qid], system_b, answers_b[qid], gateway)

    workers = max(1, min(gateway.max_in_flight, len(queries) or 1))
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="judge") as pool:
        try:
            per_query = list(pool.map(judge, queries))
        except BudgetExceededError:
            logger.error("Token budget exhausted during judging")
            raise
    return [judgment for pair in per_query for judgment in pair]


def _percent(wins: int, total: int) -> Decimal:
    return (Decimal(wins) * _HUNDRED / Decimal(total)).quantize(_CENT, rounding=ROUND_HALF_EVEN)


@dataclass
class WinRateTable:
    """
    Per-metric win rates of system A against system B.

    Attributes:
        systems: (system A, system B)
        rates: metric -> (A percent, B percent)
        wins: metric -> (A wins, B wins)
        judgings: metric -> number of valid judgings
        excluded_orderings: Orderings dropped as unparseable
    """

    systems: Tuple[str, str]
    rates: Dict[str, Tuple[Decimal, Decimal]]
    wins: Dict[str, Tuple[int, int]]
    judgings: Dict[str, int]
    excluded_orderings: int = 0

    def to_dataframe(self) -> pd.DataFrame:
        rows = [
            {
                "metric": metric,
                f"{self.systems[0]}_win_rate": str(self.rates[metric][0]),
                f"{self.systems[1]}_win_rate": str(self.rates[metric][1]),
                f"{self.systems[0]}_wins": self.wins[metric][0],
                f"{self.systems[1]}_wins": self.wins[metric][1],
                "judgings": self.judgings[metric],
            }
            for metric in self.rates
        ]
        return pd.DataFrame(rows)

    def to_dict(self) -> dict:
        return {
            "systems": list(self.systems),
            "rates": {m: [str(a), str(b)] for m, (a, b) in self.rates.items()},
            "wins": {m: list(w) for m, w in self.wins.items()},
            "judgings": dict(self.judgings),
            "excluded_orderings": self.excluded_orderings,
        }

    def to_markdown(self) -> str:
        a, b = self.systems
        lines = [
            f"| Metric | {a} | {b} | Judgings |",
            "|---|---:|---:|---:|",
        ]
        for metric, (rate_a, rate_b) in self.rates.items():
            lines.append(f"| {metric} | {rate_a} | {rate_b} | {self.judgings[metric]} |")
        if self.excluded_orderings:
            lines.append("")
            lines.append(f"{self.excluded_orderings} ordering(s) excluded as unparseable.")
        return "\n".join(lines) + "\n"


def compute_win_rates(
    decisions: Iterable[JudgeDecision],
    systems: Optional[Tuple[str, str]] = None,
    excluded_orderings: int = 0,
) -> WinRateTable:
    """
    Aggregate decisions into per-metric win rates.

    Args:
        decisions: Valid metric verdicts
        systems: (A, B); inferred from the first decision when None
        excluded_orderings: Count reported alongside the table

    Raises:
        EvaluationError: No valid decisions, or a metric has none
    """
    decisions = list(decisions)
    if not decisions:
        raise EvaluationError("No valid judgings to aggregate")
    if systems is None:
        first = decisions[0]
        systems = tuple(sorted((first.answer_1_system, first.answer_2_system)))
    system_a, system_b = systems

    rates, wins, judgings = {}, {}, {}
    for metric in METRICS:
        picked = [d for d in decisions if d.metric == metric]
        if not picked:
            raise EvaluationError(f"No valid judgings for metric {metric}")
        wins_a = sum(1 for d in picked if d.winning_system == system_a)
        unknown = [d for d in picked if d.winning_system not in systems]
        if unknown:
            raise EvaluationError(f"Decision for system '{unknown[0].winning_system}' outside {systems}")
        rate_a = _percent(wins_a, len(picked))
        rates[metric] = (rate_a, _HUNDRED - rate_a)
        wins[metric] = (wins_a, len(picked) - wins_a)
        judgings[metric] = len(picked)

    return WinRateTable(
        systems=(system_a, system_b),
        rates=rates,
        wins=wins,
        judgings=judgings,
        excluded_orderings=excluded_orderings,
    )


def win_rates_from_judgments(
    judgments: Sequence[OrderingJudgment],
    systems: Tuple[str, str],
) -> WinRateTable:
    valid = [j for j in judgments if j.valid]
    decisions = [d for j in valid for d in j.decisions]
    return compute_win_rates(decisions, systems, excluded_orderings=len(judgments) - len(valid))


def write_win_rate_outputs(
    table: WinRateTable,
    judgments: Sequence[OrderingJudgment],
    out_dir: Union[str, Path],
) -> Dict[str, Path]:
    """
    Write win_rates.csv, win_rates.md and judgments.jsonl (the audit log).

    Returns:
        name -> written path
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / "win_rates.csv",
        "markdown": out / "win_rates.md",
        "audit": out / "judgments.jsonl",
    }
    table.to_dataframe().to_csv(paths["csv"], index=False)
    paths["markdown"].write_text(table.to_markdown(), encoding="utf-8")
    with open(paths["audit"], "w", encoding="utf-8") as f:
        for judgment in judgments:
            f.write(json.dumps(judgment.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
    logger.info(f"Wrote win-rate outputs to {out}")
    return paths
