"""
Token-window chunking of corpus documents.

A document of T tokens is cut into windows of ``chunk_size`` tokens; window i
starts at token ``i * (chunk_size - overlap_tokens)``. The short tail window is
kept as-is. Chunk text is sliced from the original document between the first
and last token of the window, so the original spacing is preserved.
"""

import json
import logging
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

from .text_corpus_adapter import Document
from .tokenizers import DEFAULT_TOKENIZER_ID, BaseTokenizer, get_tokenizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChunkConfig:
    """Chunking parameters (token counts are tokenizer-relative)."""

    chunk_size: int = 1200
    overlap_tokens: int = 100
    tokenizer_id: str = DEFAULT_TOKENIZER_ID

    def __post_init__(self):
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if not 0 <= self.overlap_tokens < self.chunk_size:
            raise ValueError(
                f"overlap_tokens must satisfy 0 <= overlap < chunk_size "
                f"(got overlap={self.overlap_tokens}, chunk_size={self.chunk_size})"
            )

    @property
    def step(self) -> int:
        return self.chunk_size - self.overlap_tokens

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Chunk:
    """A token window of one document."""

    doc_id: str
    index: int
    token_span: Tuple[int, int]
    text: str

    @property
    def ref(self) -> Tuple[str, int]:
        """(doc_id, index) reference used as provenance on graph elements."""
        return (self.doc_id, self.index)

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "index": self.index,
            "start_token": self.token_span[0],
            "end_token": self.token_span[1],
            "text": self.text,
        }


def expected_chunk_count(num_tokens: int, cfg: ChunkConfig) -> int:
    """Number of chunks produced for a document of num_tokens tokens (0 for empty)."""
    if num_tokens < 1:
        return 0
    # ceil((T - overlap) / step) without floats
    return max(1, -(-(num_tokens - cfg.overlap_tokens) // cfg.step))


def chunk_document(
    doc: Document,
    cfg: ChunkConfig,
    tokenizer: Optional[BaseTokenizer] = None,
) -> List[Chunk]:
    """
    Split a document into overlapping token windows.

    Args:
        doc: Document to split
        cfg: Chunk size, overlap and tokenizer selection
        tokenizer: Optional tokenizer instance (must match cfg.tokenizer_id)

    Returns:
        Chunks ordered by index; empty list for a document with no tokens
    """
    tokenizer = tokenizer or get_tokenizer(cfg.tokenizer_id)
    if tokenizer.tokenizer_id != cfg.tokenizer_id:
        raise ValueError(
            f"Tokenizer '{tokenizer.tokenizer_id}' does not match "
            f"configured '{cfg.tokenizer_id}'"
        )

    spans = tokenizer.token_spans(doc.text)
    total = len(spans)
    chunks: List[Chunk] = []

    start = 0
    while start < total:
        end = min(start + cfg.chunk_size, total)
        text = doc.text[spans[start][0]:spans[end - 1][1]]
        chunks.append(Chunk(doc_id=doc.id, index=len(chunks), token_span=(start, end), text=text))
        if end >= total:
            break
        start += cfg.step

    return chunks


def chunk_corpus(
    documents: Iterable[Document],
    cfg: ChunkConfig,
    tokenizer: Optional[BaseTokenizer] = None,
) -> List[Chunk]:
    """Chunk every document, preserving document order."""
    tokenizer = tokenizer or get_tokenizer(cfg.tokenizer_id)
    chunks: List[Chunk] = []
    for doc in documents:
        chunks.extend(chunk_document(doc, cfg, tokenizer))
    return chunks


def dump_chunks(chunks: Iterable[Chunk], path: Union[str, Path]) -> int:
    """
    Write chunks as line-delimited JSON records.

    Returns:
        Number of records written
    """
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for chunk in chunks:
            f.write(json.dumps(chunk.to_dict(), ensure_ascii=False) + "\n")
            count += 1
    logger.info(f"Wrote {count} chunk records to {path}")
    return count
