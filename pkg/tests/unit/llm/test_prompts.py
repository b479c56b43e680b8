"""
Unit tests for src/llm/prompts.py
"""

import pytest

from src.llm.errors import PromptRenderError
from src.llm.prompts import TEMPLATE_IDS, PromptLibrary


@pytest.fixture
def prompts():
    return PromptLibrary()


class TestPromptLibrary:

    def test_all_templates_load(self, prompts):
        assert prompts.template_ids == list(TEMPLATE_IDS)
        assert len(TEMPLATE_IDS) == 8

    def test_placeholders_in_appearance_order(self, prompts):
        assert prompts.placeholders("decompose_query") == ["query"]
        assert set(prompts.placeholders("judge_pair")) == {"query", "answer1", "answer2", "retry_note"}

    def test_render_binds_variables(self, prompts):
        p = prompts.render("decompose_query", query="How do bees make honey?")
        assert p.template_id == "decompose_query"
        assert "How do bees make honey?" in p.rendered
        assert "${" not in p.rendered
        assert p.variables == {"query": "How do bees make honey?"}

    def test_extra_bindings_ignored(self, prompts):
        p = prompts.render("decompose_query", query="q", unused="x")
        assert "unused" not in p.variables

    def test_unbound_placeholder_raises_before_rendering(self, prompts):
        with pytest.raises(PromptRenderError, match="entity"):
            prompts.render("formulate_questions", query="q", num_questions="3", retry_note="")

    def test_none_binding_counts_as_unbound(self, prompts):
        with pytest.raises(PromptRenderError):
            prompts.render("decompose_query", query=None)

    def test_unknown_template_lists_options(self, prompts):
        with pytest.raises(PromptRenderError, match="Valid options"):
            prompts.render("summarize_everything", query="q")

    def test_dollar_signs_in_values_survive(self, prompts):
        p = prompts.render("decompose_query", query="Is ${price} or $5 too much?")
        assert "Is ${price} or $5 too much?" in p.rendered

    def test_checksums_are_stable_sha256(self, prompts):
        first = prompts.checksums()
        assert first == PromptLibrary().checksums()
        assert all(len(d) == 64 for d in first.values())

    def test_edited_template_changes_checksum(self, prompts, tmp_path):
        for template_id in TEMPLATE_IDS:
            (tmp_path / f"{template_id}.txt").write_text(prompts.source(template_id), encoding="utf-8")
        (tmp_path / "glean_more.txt").write_text("Anything missed in ${input_text}? ${previous_output}", encoding="utf-8")

        edited = PromptLibrary(tmp_path).checksums()
        assert edited["glean_more"] != prompts.checksums()["glean_more"]
        assert edited["decompose_query"] == prompts.checksums()["decompose_query"]

    def test_missing_template_file_raises(self, tmp_path):
        with pytest.raises(PromptRenderError, match="Cannot read"):
            PromptLibrary(tmp_path)
