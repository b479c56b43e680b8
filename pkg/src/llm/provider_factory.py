"""
Factory for creating completion providers.

Switches between the remote OpenAI-compatible backend and the offline mock by
changing a single environment variable.
"""

import logging
import os
from typing import Optional

from src.adapters.tokenizers import BaseTokenizer

from .base_provider import BaseLLMProvider
from .errors import ConfigurationError

logger = logging.getLogger(__name__)


class ProviderFactory:
    """Factory for creating completion providers."""

    @staticmethod
    def create(
        provider: Optional[str] = None,
        seed: int = 0,
        endpoint: Optional[str] = None,
        model: Optional[str] = None,
        tokenizer: Optional[BaseTokenizer] = None,
    ) -> BaseLLMProvider:
        """
        Create a completion provider.

        Args:
            provider: 'openai', 'mock', or None (read LLM_PROVIDER, default 'mock')
            seed: Seed of the mock provider
            endpoint: Remote base URL override
            model: Remote model name override
            tokenizer: Tokenizer the mock counts usage with

        Returns:
            BaseLLMProvider instance

        Raises:
            ConfigurationError: If provider is unknown or credentials are missing

        Environment Variables:
            LLM_PROVIDER: 'openai' or 'mock'
            LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY: remote backend settings
        """
        if provider is None:
            provider = os.environ.get("LLM_PROVIDER", "mock")
            if "LLM_PROVIDER" not in os.environ:
                logger.warning(f"LLM_PROVIDER not set, defaulting to '{provider}'")

        provider = provider.lower()

        if provider == "mock":
            from .mock_provider import MockLLMProvider
            logger.info(f"Creating mock completion provider (seed={seed})")
            return MockLLMProvider(seed=seed, tokenizer=tokenizer)

        elif provider == "openai":
            from .openai_provider import OpenAICompatibleProvider
            logger.info("Creating OpenAI-compatible completion provider")
            return OpenAICompatibleProvider(endpoint=endpoint, model=model)

        raise ConfigurationError(
            f"Unknown LLM provider: '{provider}'\n"
            f"Valid options: {', '.join(ProviderFactory.list_providers())}\n"
            f"Set LLM_PROVIDER environment variable."
        )

    @staticmethod
    def list_providers():
        return ["mock", "openai"]
