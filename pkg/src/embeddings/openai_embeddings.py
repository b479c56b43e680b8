"""
Embeddings client for OpenAI-compatible ``/embeddings`` endpoints.

Posts batches over a pooled requests session with bearer auth. Transient
failures surface as TransportError; LLMGateway.embed owns the retry loop.
"""

import logging
import os
from typing import List, Optional

import requests

from src.llm.errors import ConfigurationError, ProtocolError, TransportError

from .base_embeddings import BaseEmbeddings

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://api.openai.com/v1"
DEFAULT_MODEL = "text-embedding-3-small"

_KNOWN_DIMENSIONS = {
    "text-embedding-3-small": 1536,
    "text-embedding-3-large": 3072,
    "text-embedding-ada-002": 1536,
}


class OpenAIEmbeddings(BaseEmbeddings):
    """OpenAI-compatible embeddings adapter."""

    def __init__(
        self,
        endpoint: Optional[str] = None,
        model: Optional[str] = None,
        api_key: Optional[str] = None,
        dimension: Optional[int] = None,
        batch_size: int = 64,
        timeout: float = 60.0,
    ):
        """
        Initialize the embeddings client.

        Args:
            endpoint: Base URL (or EMBEDDING_ENDPOINT, then LLM_ENDPOINT env var)
            model: Model name (or EMBEDDING_MODEL env var)
            api_key: Bearer token (or LLM_API_KEY env var)
            dimension: Vector dimension; required for models not in the known table
            batch_size: Maximum texts per request
            timeout: Per-request timeout in seconds

        Raises:
            ConfigurationError: If no API key is set or the dimension is unknown
        """
        api_key = api_key or os.environ.get("LLM_API_KEY")
        if not api_key:
            raise ConfigurationError(
                "LLM_API_KEY environment variable not set.\n"
                "To fix:\n"
                "  1. export LLM_API_KEY='...'\n"
                "  2. or set EMBEDDINGS_PROVIDER=mock for offline runs"
            )

        base = endpoint or os.environ.get("EMBEDDING_ENDPOINT") or os.environ.get("LLM_ENDPOINT", DEFAULT_ENDPOINT)
        self.url = base.rstrip("/") + "/embeddings"
        self._model_name = model or os.environ.get("EMBEDDING_MODEL", DEFAULT_MODEL)
        self.batch_size = batch_size
        self.timeout = timeout

        self._dimension = dimension or _KNOWN_DIMENSIONS.get(self._model_name)
        if not self._dimension:
            raise ConfigurationError(
                f"Unknown dimension for embedding model '{self._model_name}'; "
                f"set backend.embedding_dim in the config file"
            )

        self.session = requests.Session()
        self.session.headers.update({
            "Authorization": f"Bearer {api_key}",
            "Content-Type": "application/json",
        })

        logger.info(f"Embeddings initialized: url={self.url}, model={self._model_name}, dimension={self._dimension}")

    def _post(self, texts: List[str]) -> List[List[float]]:
        try:
            response = self.session.post(
                self.url,
                json={"input": texts, "model": self._model_name},
                timeout=self.timeout,
            )
        except requests.exceptions.RequestException as e:
            raise TransportError(f"Embeddings request failed: {e}") from e

        if response.status_code == 429 or response.status_code >= 500:
            raise TransportError(f"Embeddings endpoint returned {response.status_code}")
        if response.status_code != 200:
            raise ProtocolError(f"Embeddings endpoint rejected request: {response.status_code} {response.text[:200]}")

        try:
            data = sorted(response.json()["data"], key=lambda item: item["index"])
            vectors = [item["embedding"] for item in data]
        except (ValueError, KeyError, TypeError) as e:
            raise ProtocolError(f"Malformed embeddings reply: {e}") from e
        if len(vectors) != len(texts):
            raise ProtocolError(f"Embeddings reply has {len(vectors)} vectors for {len(texts)} inputs")
        return vectors

    def embed_documents(self, texts: List[str]) -> List[List[float]]:
        if any(not t or not t.strip() for t in texts):
            raise ValueError("Cannot embed empty text")
        vectors: List[List[float]] = []
        for i in range(0, len(texts), self.batch_size):
            vectors.extend(self._post(texts[i:i + self.batch_size]))
        return vectors

    def close(self) -> None:
        self.session.close()

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def provider(self) -> str:
        return "openai"

    @property
    def model_name(self) -> str:
        return self._model_name
