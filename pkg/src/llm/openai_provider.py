"""
OpenAI-compatible chat-completions provider.

Works with any endpoint that speaks the chat-completions protocol (hosted
OpenAI, vLLM, NIM, Ollama's OpenAI shim). Retries are owned by the gateway, so
the SDK's own retry loop is disabled and transport failures are surfaced as
TransportError.
"""

import logging
import os
from typing import Optional

import openai
from openai import OpenAI

from .base_provider import BaseLLMProvider, DecodingOptions, ProviderReply
from .errors import ConfigurationError, ProtocolError, TransportError
from .prompts import PromptInstance

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4o-mini"

_TRANSPORT_ERRORS = (
    openai.APIConnectionError,  # includes APITimeoutError
    openai.RateLimitError,
    openai.InternalServerError,
)


class OpenAICompatibleProvider(BaseLLMProvider):
    """Chat-completions provider over the openai SDK."""

    def __init__(
        self,
        endpoint: Optional[str] = None,
        model: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout: float = 120.0,
        client: Optional[OpenAI] = None,
    ):
        """
        Initialize the provider.

        Args:
            endpoint: Base URL (or LLM_ENDPOINT env var)
            model: Model name (or LLM_MODEL env var)
            api_key: Bearer token (or LLM_API_KEY env var)
            timeout: Per-request timeout in seconds
            client: Pre-built client, used by tests

        Raises:
            ConfigurationError: If no API key is available
        """
        self.endpoint = endpoint or os.environ.get("LLM_ENDPOINT", DEFAULT_ENDPOINT)
        self._model_name = model or os.environ.get("LLM_MODEL", DEFAULT_MODEL)

        if client is None:
            api_key = api_key or os.environ.get("LLM_API_KEY")
            if not api_key:
                raise ConfigurationError(
                    "LLM_API_KEY environment variable not set.\n"
                    "To fix:\n"
                    "  1. export LLM_API_KEY='...'\n"
                    "  2. or run with --mock-seed N to use the offline mock backend"
                )
            client = OpenAI(base_url=self.endpoint, api_key=api_key, timeout=timeout, max_retries=0)
        self.client = client

        logger.info(f"Chat provider initialized: endpoint={self.endpoint}, model={self._model_name}")

    def complete(self, prompt: PromptInstance, decoding: DecodingOptions) -> ProviderReply:
        params = {
            "model": self._model_name,
            "messages": [{"role": "user", "content": prompt.rendered}],
            "temperature": decoding.temperature,
        }
        if decoding.max_tokens is not None:
            params["max_tokens"] = decoding.max_tokens
        if decoding.seed is not None:
            params["seed"] = decoding.seed

        try:
            response = self.client.chat.completions.create(**params)
        except _TRANSPORT_ERRORS as e:
            raise TransportError(f"{prompt.template_id}: {type(e).__name__}: {e}") from e
        except openai.APIStatusError as e:
            raise ProtocolError(
                f"{prompt.template_id}: backend rejected request with status {e.status_code}: {e}"
            ) from e

        choices = getattr(response, "choices", None)
        if not choices:
            raise ProtocolError(f"{prompt.template_id}: reply has no choices")
        message = getattr(choices[0], "message", None)
        if message is None:
            raise ProtocolError(f"{prompt.template_id}: reply choice has no message")

        text = message.content or ""
        refusal = bool(getattr(message, "refusal", None)) or not text.strip()

        usage = getattr(response, "usage", None)
        prompt_tokens = getattr(usage, "prompt_tokens", None) if usage is not None else None
        completion_tokens = getattr(usage, "completion_tokens", None) if usage is not None else None

        return ProviderReply(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            refusal=refusal,
        )

    @property
    def provider(self) -> str:
        return "openai"

    @property
    def model_name(self) -> str:
        return self._model_name
