"""
Seeded hashing embedder for offline runs.

Each lowercase word token is hashed to a signed coordinate (feature hashing), so
texts sharing vocabulary land near each other. A small per-text component
derived from sha256(seed, text) keeps distinct texts from ever colliding.
Identical (seed, text) pairs always give identical vectors.
"""

import hashlib
import logging
import re
from typing import List

import numpy as np

from .base_embeddings import BaseEmbeddings

logger = logging.getLogger(__name__)

_WORD = re.compile(r"\w+")

NOISE_WEIGHT = 0.05


class MockEmbeddings(BaseEmbeddings):
    """Deterministic feature-hashing embeddings."""

    def __init__(self, dimension: int = 64, seed: int = 0):
        if dimension < 2:
            raise ValueError(f"dimension must be >= 2, got {dimension}")
        self._dimension = dimension
        self.seed = seed

    def _digest(self, *parts: str) -> bytes:
        return hashlib.sha256("\x00".join([str(self.seed), *parts]).encode("utf-8")).digest()

    def _vector(self, text: str) -> np.ndarray:
        features = np.zeros(self._dimension, dtype=np.float64)
        for token in _WORD.findall(text.casefold()):
            digest = self._digest("token", token)
            index = int.from_bytes(digest[:4], "little") % self._dimension
            features[index] += 1.0 if digest[4] & 1 else -1.0

        rng = np.random.default_rng(int.from_bytes(self._digest("text", text)[:8], "little"))
        noise = rng.standard_normal(self._dimension)

        norm = np.linalg.norm(features)
        if norm > 0:
            features /= norm
        vector = features + NOISE_WEIGHT * noise / np.linalg.norm(noise)
        return vector / np.linalg.norm(vector)

    def embed_documents(self, texts: List[str]) -> List[List[float]]:
        if any(not text or not text.strip() for text in texts):
            raise ValueError("Cannot embed empty text")
        return [self._vector(text).tolist() for text in texts]

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def provider(self) -> str:
        return "mock"

    @property
    def model_name(self) -> str:
        return f"feature-hash-{self._dimension}"
