"""
Pluggable embeddings for entity descriptions and query entities.

Provides an abstract interface for swapping between a remote
OpenAI-compatible endpoint and the seeded offline embedder.
"""

from .base_embeddings import BaseEmbeddings
from .mock_embeddings import MockEmbeddings
from .embeddings_factory import EmbeddingsFactory

__all__ = [
    'BaseEmbeddings',
    'MockEmbeddings',
    'EmbeddingsFactory',
]
