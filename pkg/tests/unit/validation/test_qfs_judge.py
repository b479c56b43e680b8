"""
Unit tests for src/validation/qfs_judge.py
"""

import json
from decimal import Decimal

import pandas as pd
import pytest

from src.llm.mock_provider import MockLLMProvider, ScriptRule
from src.validation.errors import EvaluationError
from src.validation.qfs_judge import (
    ANSWER_1,
    ANSWER_2,
    METRICS,
    REFORMAT_NOTE,
    JudgeDecision,
    JudgeParseError,
    compute_win_rates,
    judge_answer_sets,
    judge_pair,
    parse_judge_reply,
    win_rates_from_judgments,
    write_win_rate_outputs,
)


def verdict(winner_of):
    """Strict judge JSON; winner_of maps metric -> 1 or 2."""
    return json.dumps({
        metric: {"Winner": f"Answer {winner_of(metric)}", "Explanation": f"Better {metric.lower()}."}
        for metric in METRICS
    })


def position_biased_judge():
    return ScriptRule("judge_pair", verdict(lambda metric: 1))


def content_judge(marker="GOOD"):
    return ScriptRule("judge_pair", lambda v: verdict(lambda metric: 1 if marker in v["answer1"] else 2))


def answer_sets(n):
    queries = [(f"q{i}", f"Question {i}?") for i in range(n)]
    answers_a = {qid: f"GOOD answer to {qid}" for qid, _ in queries}
    answers_b = {qid: f"weak answer to {qid}" for qid, _ in queries}
    return queries, answers_a, answers_b


def decision(metric, winner, first="fg-rag", second="baseline", query_id="q0"):
    return JudgeDecision(query_id, metric, winner, "", first, second)


class TestParseJudgeReply:

    def test_strict_json(self):
        verdicts = parse_judge_reply(verdict(lambda m: 2 if m == "Diversity" else 1))
        assert verdicts["Diversity"] == (ANSWER_2, "Better diversity.")
        assert verdicts["Overall"][0] == ANSWER_1

    def test_near_json(self):
        reply = (
            "```json\n{\n"
            "  Comprehensiveness: {Winner: [Answer 2], Explanation: \"covers more\"},\n"
            "  \"Diversity\": {\"winner\": \"answer 1\"},\n"
            "  \"Empowerment\": {\"Winner\": \"Answer  2\", \"Explanation\": \"says \\\"why\\\"\"},\n"
            "  \"Overall\": {\"Winner\": \"Answer 2\"}\n"
            "}\n```"
        )
        verdicts = parse_judge_reply(reply)
        assert [verdicts[m][0] for m in METRICS] == [ANSWER_2, ANSWER_1, ANSWER_2, ANSWER_2]
        assert verdicts["Empowerment"][1] == 'says "why"'
        assert verdicts["Diversity"][1] == ""

    def test_metric_name_inside_explanation_ignored(self):
        data = json.loads(verdict(lambda m: 2 if m == "Comprehensiveness" else 1))
        data["Comprehensiveness"]["Explanation"] = "Answer 2 covers honey, wax and overall: pollination."
        data["Diversity"]["Explanation"] = "Empowerment: both; diversity: answer 2 lists more."
        verdicts = parse_judge_reply(json.dumps(data))
        assert verdicts["Comprehensiveness"] == (ANSWER_2, "Answer 2 covers honey, wax and overall: pollination.")
        assert [verdicts[m][0] for m in METRICS] == [ANSWER_2, ANSWER_1, ANSWER_1, ANSWER_1]

    def test_fenced_json_with_lowercase_keys(self):
        reply = "```json\n" + json.dumps({
            metric.lower(): {"winner": "answer 2", "explanation": "Overall: more detail."} for metric in METRICS
        }) + "\n```"
        verdicts = parse_judge_reply(reply)
        assert all(verdicts[m] == (ANSWER_2, "Overall: more detail.") for m in METRICS)

    def test_near_json_scan_skips_metric_words_in_text(self):
        reply = (
            "{\n"
            "  Comprehensiveness: {Winner: Answer 2, Explanation: \"honey, overall: pollination\"},\n"
            "  Diversity: {Winner: Answer 2},\n"
            "  Empowerment: {Winner: Answer 2},\n"
            "  Overall: {Winner: Answer 1}\n"
            "}"
        )
        verdicts = parse_judge_reply(reply)
        assert verdicts["Overall"][0] == ANSWER_1
        assert verdicts["Comprehensiveness"] == (ANSWER_2, "honey, overall: pollination")

    def test_missing_metric(self):
        data = json.loads(verdict(lambda m: 1))
        del data["Empowerment"]
        with pytest.raises(JudgeParseError, match="Empowerment"):
            parse_judge_reply(json.dumps(data))

    def test_unreadable(self):
        with pytest.raises(JudgeParseError):
            parse_judge_reply("Both answers are fine.")


class TestJudgeDecision:

    def test_validation(self):
        with pytest.raises(ValueError, match="Valid options"):
            decision("Relevance", ANSWER_1)
        with pytest.raises(ValueError):
            decision("Overall", "answer_3")

    def test_winning_system_and_order_tag(self):
        d = decision("Overall", ANSWER_2, first="baseline", second="fg-rag")
        assert d.winning_system == "fg-rag"
        assert d.order_tag == "baseline-first"


class TestJudgePair:

    def test_both_orderings(self, make_gateway):
        provider = MockLLMProvider(script=[content_judge()])
        a_first, b_first = judge_pair("q1", "Why bees?", "fg-rag", "GOOD", "baseline", "meh", make_gateway(provider))
        assert (a_first.order_tag, b_first.order_tag) == ("fg-rag-first", "baseline-first")
        assert {d.winning_system for d in a_first.decisions + b_first.decisions} == {"fg-rag"}
        first_prompt, second_prompt = provider.calls_for("judge_pair")
        assert (first_prompt.variables["answer1"], second_prompt.variables["answer1"]) == ("GOOD", "meh")

    def test_unparseable_ordering_excluded_after_re_ask(self, make_gateway):
        provider = MockLLMProvider(script=[
            ScriptRule("judge_pair", "I prefer the first one.", match={"answer1": "GOOD"}),
            position_biased_judge(),
        ])
        a_first, b_first = judge_pair("q1", "Why bees?", "A", "GOOD", "B", "meh", make_gateway(provider))
        assert not a_first.valid and b_first.valid
        assert len(a_first.raw_replies) == 2
        assert provider.calls_for("judge_pair")[1].variables["retry_note"] == REFORMAT_NOTE
        table = win_rates_from_judgments([a_first, b_first], ("A", "B"))
        assert table.excluded_orderings == 1
        assert table.judgings["Overall"] == 1

    def test_re_ask_recovers(self, make_gateway):
        provider = MockLLMProvider(script=[ScriptRule("judge_pair", ["garbled", verdict(lambda m: 2)])])
        a_first, _ = judge_pair("q1", "Why bees?", "A", "x", "B", "y", make_gateway(provider))
        assert a_first.valid
        assert len(a_first.raw_replies) == 2

    def test_invalid_inputs(self, make_gateway):
        gateway = make_gateway()
        with pytest.raises(ValueError):
            judge_pair("q1", "q", "A", "x", "A", "y", gateway)
        with pytest.raises(ValueError):
            judge_pair("q1", "q", "A", " ", "B", "y", gateway)

    def test_usage_in_evaluation_phase(self, make_gateway):
        gateway = make_gateway()
        judge_pair("q1", "q", "A", "x", "B", "y", gateway)
        assert gateway.usage_report().by_phase["evaluation"].calls == 2


class TestJudgeAnswerSets:

    def test_ten_queries_give_eighty_decisions(self, make_gateway):
        queries, answers_a, answers_b = answer_sets(10)
        judgments = judge_answer_sets(queries, answers_a, answers_b, make_gateway(), "fg-rag", "baseline")
        assert len(judgments) == 20
        assert [j.query_id for j in judgments[:4]] == ["q0", "q0", "q1", "q1"]
        assert sum(len(j.decisions) for j in judgments) == 80

    def test_position_biased_judge_is_neutral(self, make_gateway):
        queries, answers_a, answers_b = answer_sets(10)
        gateway = make_gateway(MockLLMProvider(script=[position_biased_judge()]))
        judgments = judge_answer_sets(queries, answers_a, answers_b, gateway, "fg-rag", "baseline")
        table = win_rates_from_judgments(judgments, ("fg-rag", "baseline"))
        for metric in METRICS:
            assert table.rates[metric] == (Decimal("50.00"), Decimal("50.00"))
            assert table.judgings[metric] == 20

    def test_content_judge_prefers_better_system(self, make_gateway):
        queries, answers_a, answers_b = answer_sets(10)
        gateway = make_gateway(MockLLMProvider(script=[content_judge()]))
        judgments = judge_answer_sets(queries, answers_a, answers_b, gateway, "fg-rag", "baseline")
        table = win_rates_from_judgments(judgments, ("fg-rag", "baseline"))
        assert table.rates["Overall"] == (Decimal("100.00"), Decimal("0.00"))
        assert table.wins["Overall"] == (20, 0)

    def test_missing_answer(self, make_gateway):
        queries, answers_a, answers_b = answer_sets(3)
        del answers_b["q2"]
        with pytest.raises(EvaluationError, match="q2"):
            judge_answer_sets(queries, answers_a, answers_b, make_gateway())


class TestComputeWinRates:

    def test_rounding_half_even(self):
        decisions = [
            decision(metric, ANSWER_1 if i == 0 else ANSWER_2, query_id=f"q{i}")
            for metric in METRICS for i in range(32)
        ]
        table = compute_win_rates(decisions, ("fg-rag", "baseline"))
        assert table.rates["Overall"] == (Decimal("3.12"), Decimal("96.88"))

    def test_thirds(self):
        decisions = [decision(m, w) for m in METRICS for w in (ANSWER_1, ANSWER_1, ANSWER_2)]
        table = compute_win_rates(decisions, ("fg-rag", "baseline"))
        assert table.rates["Comprehensiveness"] == (Decimal("66.67"), Decimal("33.33"))

    def test_label_swap_swaps_columns(self):
        decisions = [decision(m, w) for m in METRICS for w in (ANSWER_1, ANSWER_2, ANSWER_2)]
        forward = compute_win_rates(decisions, ("fg-rag", "baseline"))
        swapped = compute_win_rates(decisions, ("baseline", "fg-rag"))
        for metric in METRICS:
            assert swapped.rates[metric] == tuple(reversed(forward.rates[metric]))
            assert sum(forward.rates[metric]) == Decimal("100.00")

    def test_systems_inferred_sorted(self):
        table = compute_win_rates([decision(m, ANSWER_1) for m in METRICS])
        assert table.systems == ("baseline", "fg-rag")

    def test_no_decisions(self):
        with pytest.raises(EvaluationError):
            compute_win_rates([])

    def test_metric_without_decisions(self):
        with pytest.raises(EvaluationError, match="Overall"):
            compute_win_rates([decision(m, ANSWER_1) for m in METRICS[:3]])

    def test_foreign_system(self):
        decisions = [decision(m, ANSWER_1) for m in METRICS]
        with pytest.raises(EvaluationError):
            compute_win_rates(decisions, ("A", "B"))


class TestWinRateOutputs:

    def test_files(self, make_gateway, tmp_path):
        queries, answers_a, answers_b = answer_sets(2)
        gateway = make_gateway(MockLLMProvider(script=[content_judge()]))
        judgments = judge_answer_sets(queries, answers_a, answers_b, gateway, "fg-rag", "baseline")
        table = win_rates_from_judgments(judgments, ("fg-rag", "baseline"))
        paths = write_win_rate_outputs(table, judgments, tmp_path / "eval")

        frame = pd.read_csv(paths["csv"], dtype={"fg-rag_win_rate": str, "baseline_win_rate": str})
        assert list(frame["metric"]) == list(METRICS)
        assert frame.loc[0, "fg-rag_win_rate"] == "100.00"
        assert "| Overall | 100.00 | 0.00 | 4 |" in paths["markdown"].read_text(encoding="utf-8")
        audit = [json.loads(line) for line in paths["audit"].read_text(encoding="utf-8").splitlines()]
        assert len(audit) == 4
        assert audit[1]["order_tag"] == "baseline-first"
