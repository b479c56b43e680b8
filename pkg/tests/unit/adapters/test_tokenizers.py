"""
Unit tests for src/adapters/tokenizers.py
"""

import pytest

from src.adapters.tokenizers import (
    DEFAULT_TOKENIZER_ID,
    RegexWordTokenizer,
    WhitespaceTokenizer,
    get_tokenizer,
    list_tokenizers,
)


class TestRegexWordTokenizer:

    def test_words_and_punctuation_are_separate_tokens(self):
        assert RegexWordTokenizer().tokenize("Honey, bees!") == ["Honey", ",", "bees", "!"]

    def test_spans_slice_back_to_tokens(self):
        text = "  Beekeepers sell\thoney.\n"
        tokenizer = RegexWordTokenizer()
        assert [text[s:e] for s, e in tokenizer.token_spans(text)] == tokenizer.tokenize(text)

    def test_count_of_empty_text_is_zero(self):
        assert RegexWordTokenizer().count("") == 0
        assert RegexWordTokenizer().count("   \n") == 0


class TestWhitespaceTokenizer:

    def test_splits_on_whitespace_only(self):
        assert WhitespaceTokenizer().tokenize("Honey, bees!  wax") == ["Honey,", "bees!", "wax"]


class TestRegistry:

    def test_default_id(self):
        assert get_tokenizer().tokenizer_id == DEFAULT_TOKENIZER_ID == "regex-word-v1"

    def test_both_tokenizers_registered(self):
        assert list_tokenizers() == ["regex-word-v1", "whitespace-v1"]

    def test_unknown_id_lists_valid_options(self):
        with pytest.raises(ValueError, match="Valid options"):
            get_tokenizer("bpe-v9")
