"""
Unit tests for src/llm/mock_provider.py
"""

import json

import pytest

from src.llm.base_provider import DecodingOptions
from src.llm.mock_provider import MockLLMProvider, ScriptRule
from src.llm.prompts import PromptLibrary

PROMPTS = PromptLibrary()
DECODING = DecodingOptions()


def ask(provider, template_id, **variables):
    return provider.complete(PROMPTS.render(template_id, **variables), DECODING)


class TestScriptRules:

    def test_first_accepting_rule_wins(self):
        provider = MockLLMProvider(script=[
            ScriptRule("decompose_query", '["Wax"]', match={"query": "candles"}),
            ScriptRule("decompose_query", '["Honey"]'),
        ])
        assert ask(provider, "decompose_query", query="How are candles made?").text == '["Wax"]'
        assert ask(provider, "decompose_query", query="Why honey?").text == '["Honey"]'

    def test_list_replies_served_in_turn_last_repeats(self):
        provider = MockLLMProvider(script=[ScriptRule("decompose_query", ["one", "two"])])
        texts = [ask(provider, "decompose_query", query="q").text for _ in range(3)]
        assert texts == ["one", "two", "two"]

    def test_callable_reply_sees_variables(self):
        provider = MockLLMProvider(script=[ScriptRule("decompose_query", lambda v: json.dumps([v["query"]]))])
        assert ask(provider, "decompose_query", query="bees").text == '["bees"]'

    def test_exception_reply_is_raised(self):
        provider = MockLLMProvider(script=[ScriptRule("decompose_query", RuntimeError("boom"))])
        with pytest.raises(RuntimeError, match="boom"):
            ask(provider, "decompose_query", query="q")

    def test_exception_in_list_raised_in_turn(self):
        provider = MockLLMProvider(script=[ScriptRule("decompose_query", ["one", RuntimeError("boom")])])
        assert ask(provider, "decompose_query", query="q").text == "one"
        for _ in range(2):
            with pytest.raises(RuntimeError, match="boom"):
                ask(provider, "decompose_query", query="q")

    def test_usage_override(self):
        provider = MockLLMProvider(script=[ScriptRule("decompose_query", "[]", usage=(11, 7))])
        reply = ask(provider, "decompose_query", query="q")
        assert (reply.prompt_tokens, reply.completion_tokens) == (11, 7)

    def test_empty_reply_is_a_refusal(self):
        provider = MockLLMProvider(script=[ScriptRule("summarize_entity", "")])
        reply = ask(provider, "summarize_entity", entity="e", query="q", questions="-", descriptions="- d", description_count="1")
        assert reply.refusal


class TestDefaultResponders:

    def test_same_seed_same_reply(self):
        a = ask(MockLLMProvider(seed=3), "judge_pair", query="q", answer1="x", answer2="y", retry_note="")
        b = ask(MockLLMProvider(seed=3), "judge_pair", query="q", answer1="x", answer2="y", retry_note="")
        assert a.text == b.text

    def test_extraction_reply_uses_record_format(self):
        text = ask(MockLLMProvider(), "extract_elements", input_text="Honey Bees visit Almond Orchards.", retry_note="").text
        assert '("entity"<|>Honey Bees<|>CONCEPT<|>' in text
        assert '("relationship"<|>Honey Bees<|>Almond Orchards<|>' in text
        assert text.endswith("<|COMPLETE|>")

    def test_decompose_picks_capitalized_phrases(self):
        text = ask(MockLLMProvider(), "decompose_query", query="How do Beekeepers sell Honey?").text
        assert json.loads(text) == ["Beekeepers", "Honey"]

    def test_questions_count_follows_request(self):
        text = ask(MockLLMProvider(), "formulate_questions", entity="Honey", query="q", num_questions="4", retry_note="").text
        assert len([line for line in text.splitlines() if line.endswith("?")]) == 4

    def test_calls_recorded_per_template(self):
        provider = MockLLMProvider()
        ask(provider, "decompose_query", query="Bees?")
        ask(provider, "glean_more", input_text="t", previous_output="")
        assert provider.call_count == 2
        assert [p.template_id for p in provider.calls_for("glean_more")] == ["glean_more"]
        provider.reset_calls()
        assert provider.call_count == 0

    def test_backend_id(self):
        assert MockLLMProvider().backend_id == "mock:fg-mock-v1"
