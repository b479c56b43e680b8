"""
Tokenizers for chunking and token accounting.

All chunk-size and usage arithmetic is relative to the tokenizer selected by
``tokenizer_id``. The id is persisted in the index manifest so an index always
records which tokenizer produced its counts.

Available tokenizers:
- regex-word-v1: word runs and single punctuation characters (default)
- whitespace-v1: whitespace-delimited tokens
"""

import re
from abc import ABC, abstractmethod
from typing import Dict, List, Tuple, Type

DEFAULT_TOKENIZER_ID = "regex-word-v1"


class BaseTokenizer(ABC):
    """Abstract tokenizer returning character spans into the source text."""

    tokenizer_id: str = ""

    @abstractmethod
    def token_spans(self, text: str) -> List[Tuple[int, int]]:
        """
        Locate tokens in text.

        Args:
            text: Input text

        Returns:
            List of (start_char, end_char) half-open spans, in order
        """
        pass

    def tokenize(self, text: str) -> List[str]:
        """Return the token strings of text."""
        return [text[start:end] for start, end in self.token_spans(text)]

    def count(self, text: str) -> int:
        """Return the number of tokens in text."""
        return len(self.token_spans(text))


class _PatternTokenizer(BaseTokenizer):
    pattern: "re.Pattern[str]"

    def token_spans(self, text: str) -> List[Tuple[int, int]]:
        return [match.span() for match in self.pattern.finditer(text)]


class RegexWordTokenizer(_PatternTokenizer):
    """Word/punctuation tokenizer: ``\\w+`` runs plus each other non-space character."""

    tokenizer_id = "regex-word-v1"
    pattern = re.compile(r"\w+|[^\w\s]")


class WhitespaceTokenizer(_PatternTokenizer):
    """Splits on whitespace only."""

    tokenizer_id = "whitespace-v1"
    pattern = re.compile(r"\S+")


_REGISTRY: Dict[str, Type[BaseTokenizer]] = {
    RegexWordTokenizer.tokenizer_id: RegexWordTokenizer,
    WhitespaceTokenizer.tokenizer_id: WhitespaceTokenizer,
}


def get_tokenizer(tokenizer_id: str = DEFAULT_TOKENIZER_ID) -> BaseTokenizer:
    """
    Create a tokenizer by id.

    Raises:
        ValueError: If tokenizer_id is unknown
    """
    try:
        return _REGISTRY[tokenizer_id]()
    except KeyError:
        raise ValueError(
            f"Unknown tokenizer: '{tokenizer_id}'\n"
            f"Valid options: {', '.join(sorted(_REGISTRY))}"
        ) from None


def list_tokenizers() -> List[str]:
    """List available tokenizer ids."""
    return sorted(_REGISTRY)
