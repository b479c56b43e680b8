"""Corpus adapters: document loading, tokenization and chunking."""

from .text_corpus_adapter import (
    CorpusError,
    CorpusIssue,
    Document,
    TextCorpusAdapter,
    build_corpus_digest,
    load_corpus,
)
from .tokenizers import BaseTokenizer, get_tokenizer
from .chunker import Chunk, ChunkConfig, chunk_corpus, chunk_document, expected_chunk_count

__all__ = [
    'CorpusError',
    'CorpusIssue',
    'Document',
    'TextCorpusAdapter',
    'build_corpus_digest',
    'load_corpus',
    'BaseTokenizer',
    'get_tokenizer',
    'Chunk',
    'ChunkConfig',
    'chunk_corpus',
    'chunk_document',
    'expected_chunk_count',
]
