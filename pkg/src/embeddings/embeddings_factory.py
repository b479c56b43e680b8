"""
Factory for creating embeddings providers.

Switches between the remote endpoint and the offline hashing embedder by
changing a single environment variable.
"""

import logging
import os
from typing import Optional

from src.llm.errors import ConfigurationError

from .base_embeddings import BaseEmbeddings

logger = logging.getLogger(__name__)


class EmbeddingsFactory:
    """Factory for creating embeddings providers."""

    @staticmethod
    def create(
        provider: Optional[str] = None,
        seed: int = 0,
        dimension: Optional[int] = None,
        endpoint: Optional[str] = None,
        model: Optional[str] = None,
    ) -> BaseEmbeddings:
        """
        Create embeddings provider.

        Args:
            provider: 'openai', 'mock', or None (read EMBEDDINGS_PROVIDER, default 'mock')
            seed: Seed of the mock embedder
            dimension: Vector dimension (mock default 64)
            endpoint: Remote base URL override
            model: Remote model name override

        Returns:
            BaseEmbeddings instance

        Raises:
            ConfigurationError: If provider is unknown

        Environment Variables:
            EMBEDDINGS_PROVIDER: 'openai' or 'mock'
            EMBEDDING_ENDPOINT, EMBEDDING_MODEL, LLM_API_KEY: remote settings
        """
        if provider is None:
            provider = os.environ.get("EMBEDDINGS_PROVIDER", "mock")
            if "EMBEDDINGS_PROVIDER" not in os.environ:
                logger.warning(f"EMBEDDINGS_PROVIDER not set, defaulting to '{provider}'")

        provider = provider.lower()

        if provider == "mock":
            from .mock_embeddings import MockEmbeddings
            logger.info(f"Creating mock embeddings provider (seed={seed})")
            return MockEmbeddings(dimension=dimension or 64, seed=seed)

        elif provider == "openai":
            from .openai_embeddings import OpenAIEmbeddings
            logger.info("Creating OpenAI-compatible embeddings provider")
            return OpenAIEmbeddings(endpoint=endpoint, model=model, dimension=dimension)

        raise ConfigurationError(
            f"Unknown embeddings provider: '{provider}'\n"
            f"Valid options: {', '.join(EmbeddingsFactory.list_providers())}\n"
            f"Set EMBEDDINGS_PROVIDER environment variable."
        )

    @staticmethod
    def list_providers():
        return ["mock", "openai"]
