"""
Abstract base class for chat-completion providers.

The gateway talks to every backend through this interface, so the remote
OpenAI-compatible client and the deterministic mock are interchangeable.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

from .prompts import PromptInstance


@dataclass(frozen=True)
class DecodingOptions:
    """Sampling parameters passed through to the backend."""

    temperature: float = 0.0
    max_tokens: Optional[int] = None
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {"temperature": self.temperature, "max_tokens": self.max_tokens, "seed": self.seed}


@dataclass(frozen=True)
class ProviderReply:
    """
    Raw reply of one backend call.

    Token counts are None when the backend did not report usage; the gateway
    then counts with its tokenizer.
    """

    text: str
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None
    refusal: bool = False


class BaseLLMProvider(ABC):
    """Abstract base class for completion providers."""

    @abstractmethod
    def complete(self, prompt: PromptInstance, decoding: DecodingOptions) -> ProviderReply:
        """
        Run one completion.

        Args:
            prompt: Rendered prompt
            decoding: Sampling parameters

        Returns:
            ProviderReply with text and (optionally) backend-reported usage

        Raises:
            TransportError: Network, timeout, rate-limit or 5xx failure
            ProtocolError: Reply does not have the expected shape
        """
        pass

    @property
    @abstractmethod
    def provider(self) -> str:
        """Provider identifier ('openai', 'mock')."""
        pass

    @property
    @abstractmethod
    def model_name(self) -> str:
        pass

    @property
    def backend_id(self) -> str:
        """``<provider>:<model>`` recorded on every CompletionResult."""
        return f"{self.provider}:{self.model_name}"
