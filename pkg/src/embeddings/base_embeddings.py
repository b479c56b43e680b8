"""
Embeddings interface shared by the remote endpoint and the offline hashing embedder.

Entity texts (canonical name plus merged descriptions) and query entities go
through the same implementation, so the two land in one vector space.
"""

from abc import ABC, abstractmethod
from typing import List


class BaseEmbeddings(ABC):
    """
    An embedding backend.

    Subclasses implement embed_documents; single texts go through the same
    batch path so both produce identical vectors for identical text.
    """

    @abstractmethod
    def embed_documents(self, texts: List[str]) -> List[List[float]]:
        """
        Embed texts in input order.

        Raises:
            ValueError: If any text is empty
            TransportError: If the backend is unreachable
        """

    def embed_query(self, text: str) -> List[float]:
        if not text or not text.strip():
            raise ValueError("Cannot embed empty text")
        return self.embed_documents([text])[0]

    @property
    @abstractmethod
    def dimension(self) -> int:
        pass

    @property
    @abstractmethod
    def provider(self) -> str:
        """'openai' or 'mock'."""

    @property
    @abstractmethod
    def model_name(self) -> str:
        pass

    @property
    def embedder_id(self) -> str:
        """provider:model/dimension, as logged and compared against an index."""
        return f"{self.provider}:{self.model_name}/{self.dimension}"
