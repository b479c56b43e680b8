"""
Entity Vector Store

Exact (full-scan) cosine top-k over entity embeddings, plus a compact binary
file format. Vectors are held as float32; scores are computed in float64.

Binary layout (all little-endian), documented in docs/index-format.md:

    header   magic "FGVS" | uint16 major | uint16 minor | uint32 dim | uint32 count
    vectors  count * dim float32, records in ascending entity-name order
    names    per record: uint32 byte length | UTF-8 name | 32-byte sha256 of embedded text
"""

import hashlib
import logging
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from src.search.scoring import cosine_scores, rank_by_score

logger = logging.getLogger(__name__)

MAGIC = b"FGVS"
FORMAT_MAJOR = 1
FORMAT_MINOR = 0
_HEADER = struct.Struct("<4sHHII")
_LENGTH = struct.Struct("<I")
CHECKSUM_BYTES = 32


class VectorStoreError(ValueError):
    """Base class for vector store failures."""
    pass


class DimensionMismatchError(VectorStoreError):
    """A vector's dimension differs from the store dimension."""
    pass


class ZeroNormQueryError(VectorStoreError):
    """Cosine similarity is undefined for a zero-norm query."""
    pass


def text_checksum(text: str) -> str:
    """sha256 hex digest of the text an embedding was computed from."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EmbeddingRecord:
    """One entity embedding."""

    entity_name: str
    vector: np.ndarray
    text_checksum: str

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.entity_name == other.entity_name
            and self.text_checksum == other.text_checksum
            and np.array_equal(np.asarray(self.vector, dtype=np.float32), np.asarray(other.vector, dtype=np.float32))
        )


@dataclass(frozen=True)
class MatchResult:
    """A match: entity name and cosine similarity in [-1, 1]."""

    entity_name: str
    score: float

    def to_dict(self) -> dict:
        return {"entity_name": self.entity_name, "score": self.score}


class VectorStore:
    """
    In-memory entity embedding store with exact cosine top-k.

    Many concurrent readers are safe; writers are exclusive.

    Example:
        >>> store = VectorStore()
        >>> store.upsert([EmbeddingRecord("honey", np.array([1.0, 0.0]), text_checksum("honey"))])
        1
        >>> store.match_top_k(np.array([1.0, 0.1]), k=1)[0].entity_name
        'honey'
    """

    def __init__(self, dim: Optional[int] = None):
        self.dim = dim
        self._vectors: Dict[str, np.ndarray] = {}
        self._checksums: Dict[str, str] = {}
        self._lock = threading.RLock()
        self._snapshot: Optional[Tuple[List[str], np.ndarray]] = None

    def __len__(self) -> int:
        with self._lock:
            return len(self._vectors)

    def __contains__(self, name: str) -> bool:
        with self._lock:
            return name in self._vectors

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorStore):
            return NotImplemented
        return self.dim == other.dim and self.records() == other.records()

    @property
    def names(self) -> List[str]:
        with self._lock:
            return sorted(self._vectors)

    def upsert(self, records: Iterable[EmbeddingRecord]) -> int:
        """
        Insert or replace records. A later record for a name replaces an earlier one.

        Returns:
            Store size after the write

        Raises:
            DimensionMismatchError: On any dimension mismatch; nothing is written
            VectorStoreError: On non-finite vector components; nothing is written
        """
        staged: List[Tuple[str, np.ndarray, str]] = []
        with self._lock:
            dim = self.dim
            for record in records:
                vector = np.asarray(record.vector, dtype=np.float32).reshape(-1)
                if dim is None:
                    dim = vector.shape[0]
                if vector.shape[0] != dim:
                    raise DimensionMismatchError(
                        f"Record '{record.entity_name}' has dimension {vector.shape[0]}, store dimension is {dim}"
                    )
                if not np.all(np.isfinite(vector)):
                    raise VectorStoreError(f"Record '{record.entity_name}' has non-finite components")
                staged.append((record.entity_name, vector.copy(), record.text_checksum))

            if staged:
                self.dim = dim
            for name, vector, checksum in staged:
                self._vectors[name] = vector
                self._checksums[name] = checksum
            self._snapshot = None
            return len(self._vectors)

    def record(self, name: str) -> EmbeddingRecord:
        with self._lock:
            return EmbeddingRecord(name, self._vectors[name].copy(), self._checksums[name])

    def records(self) -> List[EmbeddingRecord]:
        """All records in ascending name order."""
        with self._lock:
            return [self.record(name) for name in sorted(self._vectors)]

    def vector(self, name: str) -> np.ndarray:
        """Stored float32 vector of an entity (a copy)."""
        with self._lock:
            try:
                return self._vectors[name].copy()
            except KeyError:
                raise KeyError(f"No embedding stored for entity '{name}'") from None

    def _matrix(self) -> Tuple[List[str], np.ndarray]:
        with self._lock:
            if self._snapshot is None:
                names = sorted(self._vectors)
                matrix = np.stack([self._vectors[n] for n in names]) if names else np.zeros((0, self.dim or 0), np.float32)
                self._snapshot = (names, matrix)
            return self._snapshot

    def match_top_k(self, query: Union[np.ndarray, List[float]], k: int) -> List[MatchResult]:
        """
        Exact cosine top-k.

        Returns:
            min(k, size) results, score descending, ties by ascending name;
            empty list for an empty store

        Raises:
            ValueError: If k < 1
            DimensionMismatchError: If the query dimension differs from the store's
            ZeroNormQueryError: If the query has zero norm
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        names, matrix = self._matrix()
        if not names:
            return []

        query = np.asarray(query, dtype=np.float64).reshape(-1)
        if query.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"Query dimension {query.shape[0]} != store dimension {matrix.shape[1]}")
        if not np.any(query):
            raise ZeroNormQueryError("Cannot match a zero-norm query vector")

        scores = cosine_scores(matrix, query)
        return [MatchResult(name, score) for name, score in rank_by_score(names, scores, k)]

    def match_by_name(self, name: str, k: int) -> List[MatchResult]:
        """Top-k matches of an entity's own stored vector."""
        return self.match_top_k(self.vector(name), k)

    def to_bytes(self) -> bytes:
        """Encode the store in the binary layout."""
        names, matrix = self._matrix()
        parts = [_HEADER.pack(MAGIC, FORMAT_MAJOR, FORMAT_MINOR, self.dim or 0, len(names))]
        parts.append(matrix.astype("<f4", copy=False).tobytes(order="C"))
        with self._lock:
            for name in names:
                encoded = name.encode("utf-8")
                parts.append(_LENGTH.pack(len(encoded)))
                parts.append(encoded)
                parts.append(bytes.fromhex(self._checksums[name]))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "VectorStore":
        """
        Decode a store from the binary layout.

        Raises:
            VectorStoreError: Bad magic, unsupported major version, or truncated data
        """
        if len(data) < _HEADER.size:
            raise VectorStoreError("Vector file is shorter than its header")
        magic, major, minor, dim, count = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise VectorStoreError(f"Bad vector file magic {magic!r}")
        if major != FORMAT_MAJOR:
            raise VectorStoreError(f"Unsupported vector file version {major}.{minor}")

        offset = _HEADER.size
        vector_bytes = count * dim * 4
        if len(data) < offset + vector_bytes:
            raise VectorStoreError("Vector file is truncated in the vector block")
        matrix = np.frombuffer(data, dtype="<f4", count=count * dim, offset=offset).reshape(count, dim)
        offset += vector_bytes

        records = []
        for row in range(count):
            if len(data) < offset + _LENGTH.size:
                raise VectorStoreError("Vector file is truncated in the name table")
            (length,) = _LENGTH.unpack_from(data, offset)
            offset += _LENGTH.size
            end = offset + length + CHECKSUM_BYTES
            if len(data) < end:
                raise VectorStoreError("Vector file is truncated in the name table")
            try:
                name = data[offset:offset + length].decode("utf-8")
            except UnicodeDecodeError as e:
                raise VectorStoreError(f"Vector file name table is not valid UTF-8: {e}") from e
            checksum = data[offset + length:end].hex()
            offset = end
            records.append(EmbeddingRecord(name, matrix[row].astype(np.float32), checksum))
        if offset != len(data):
            raise VectorStoreError(f"Vector file has {len(data) - offset} trailing bytes")

        store = cls(dim=dim if (dim or count) else None)
        store.upsert(records)
        if len(store) != count:
            raise VectorStoreError(f"Vector file lists {count} records but {len(store)} distinct names")
        return store

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_bytes(self.to_bytes())
        logger.info(f"Wrote {len(self)} vectors (dim={self.dim}) to {path}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "VectorStore":
        return cls.from_bytes(Path(path).read_bytes())
