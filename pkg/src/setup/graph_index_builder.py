"""
Graph Index Builder

Builds the knowledge graph and the entity vector store from a corpus:

1. chunk every document into overlapping token windows
2. extract entities and relationships per chunk (concurrently, with gleaning)
3. merge same-name entity mentions
4. assemble the graph, creating placeholders for dangling relationship endpoints
5. embed each entity's name plus merged descriptions into the vector store

All completions are recorded under the indexing phase. A chunk whose
extraction fails is skipped and reported; the build fails only when more than
half of the chunks fail.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from src.adapters.chunker import Chunk, ChunkConfig, chunk_corpus
from src.adapters.text_corpus_adapter import Document
from src.adapters.tokenizers import get_tokenizer
from src.extractors.graph_element_extractor import ExtractionResult, GraphElementExtractor
from src.graph.knowledge_graph import KnowledgeGraph, merge_entities
from src.llm.errors import BudgetExceededError
from src.llm.gateway import LLMGateway
from src.llm.usage import PHASE_INDEXING
from src.vectorization.vector_store import EmbeddingRecord, VectorStore, text_checksum

logger = logging.getLogger(__name__)

MAX_FAILURE_RATIO = 0.5
EMBED_BATCH_SIZE = 64


@dataclass(frozen=True)
class ChunkFailure:
    """A chunk whose extraction failed."""

    doc_id: str
    index: int
    error: str

    def to_dict(self) -> dict:
        return {"doc_id": self.doc_id, "index": self.index, "error": self.error}


class IndexBuildError(Exception):
    """Raised when more than half of the chunks fail extraction."""

    def __init__(self, message: str, failures: Sequence[ChunkFailure] = ()):
        super().__init__(message)
        self.failures = list(failures)


@dataclass
class IndexBuildResult:
    """Graph, populated store, and build statistics."""

    graph: KnowledgeGraph
    store: VectorStore
    stats: Dict[str, Any] = field(default_factory=dict)
    failures: List[ChunkFailure] = field(default_factory=list)


class GraphIndexBuilder:
    """
    Build a graph index from documents.

    Example:
        >>> builder = GraphIndexBuilder(gateway, ChunkConfig(chunk_size=1200, overlap_tokens=100))
        >>> result = builder.build(load_corpus("./docs"))
        >>> result.stats['entities'] == len(result.store)
        True
    """

    def __init__(
        self,
        gateway: LLMGateway,
        chunk_config: Optional[ChunkConfig] = None,
        gleaning_passes: int = 1,
        max_failure_ratio: float = MAX_FAILURE_RATIO,
    ):
        """
        Args:
            gateway: Gateway used for extraction and embedding
            chunk_config: Chunking parameters
            gleaning_passes: Gleaning passes per chunk
            max_failure_ratio: Highest tolerated share of failed chunks
        """
        self.gateway = gateway
        self.chunk_config = chunk_config or ChunkConfig()
        self.extractor = GraphElementExtractor(gateway, gleaning_passes)
        self.max_failure_ratio = max_failure_ratio

        self.stats: Dict[str, Any] = {
            'documents': 0,
            'chunks': 0,
            'failed_chunks': 0,
            'mentions': 0,
            'relationships': 0,
            'entities': 0,
            'placeholder_entities': 0,
            'embedded': 0,
            'processing_time': 0.0,
        }

    def _extract(self, chunk: Chunk) -> Tuple[Optional[ExtractionResult], Optional[ChunkFailure]]:
        try:
            return self.extractor.extract(chunk), None
        except BudgetExceededError:
            raise
        except Exception as e:
            logger.warning(f"Extraction failed for {chunk.doc_id}#{chunk.index}: {type(e).__name__}: {e}")
            return None, ChunkFailure(chunk.doc_id, chunk.index, f"{type(e).__name__}: {e}")

    def _embed(self, graph: KnowledgeGraph, store: VectorStore) -> int:
        entities = list(graph.entities.values())
        records: List[EmbeddingRecord] = []
        for start in range(0, len(entities), EMBED_BATCH_SIZE):
            batch = entities[start:start + EMBED_BATCH_SIZE]
            texts = [entity.embedding_text() for entity in batch]
            vectors = self.gateway.embed(texts)
            records.extend(
                EmbeddingRecord(entity.canonical_name, vector, text_checksum(text))
                for entity, vector, text in zip(batch, vectors, texts)
            )
        return store.upsert(records) if records else len(store)

    def build(self, documents: Sequence[Document], store: Optional[VectorStore] = None) -> IndexBuildResult:
        """
        Build the graph and populate the vector store.

        Args:
            documents: Corpus documents
            store: Store to populate (a new one if None)

        Returns:
            IndexBuildResult

        Raises:
            IndexBuildError: More than max_failure_ratio of the chunks failed
            BudgetExceededError: The token budget ran out
        """
        start_time = time.perf_counter()
        store = store if store is not None else VectorStore(dim=self.gateway.expected_embedding_dim)

        tokenizer = get_tokenizer(self.chunk_config.tokenizer_id)
        chunks = chunk_corpus(documents, self.chunk_config, tokenizer)
        self.stats['documents'] = len(documents)
        self.stats['chunks'] = len(chunks)
        logger.info(f"Extracting graph elements from {len(chunks)} chunks of {len(documents)} documents")

        with self.gateway.phase(PHASE_INDEXING):
            workers = max(1, min(self.gateway.max_in_flight, len(chunks) or 1))
            with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="extract") as pool:
                outcomes = list(pool.map(self._extract, chunks))

            failures = [failure for _, failure in outcomes if failure is not None]
            self.stats['failed_chunks'] = len(failures)
            if chunks and len(failures) / len(chunks) > self.max_failure_ratio:
                raise IndexBuildError(
                    f"Extraction failed for {len(failures)} of {len(chunks)} chunks "
                    f"(more than {self.max_failure_ratio:.0%})",
                    failures,
                )

            mentions, relationships = [], []
            for result, _ in outcomes:
                if result is not None:
                    mentions.extend(result.mentions)
                    relationships.extend(result.relationships)

            graph = KnowledgeGraph.from_elements(merge_entities(mentions), relationships)
            graph.validate()
            embedded = self._embed(graph, store)

        self.stats['mentions'] = len(mentions)
        self.stats['relationships'] = len(graph.relationships)
        self.stats['entities'] = len(graph.entities)
        self.stats['placeholder_entities'] = sum(1 for e in graph.entities.values() if e.is_placeholder)
        self.stats['embedded'] = embedded
        self.stats['processing_time'] = time.perf_counter() - start_time
        self._log_build_summary(failures)

        return IndexBuildResult(graph=graph, store=store, stats=dict(self.stats), failures=failures)

    def _log_build_summary(self, failures: List[ChunkFailure]) -> None:
        logger.info(
            f"Index build complete: chunks={self.stats['chunks']} failed={self.stats['failed_chunks']} "
            f"entities={self.stats['entities']} (placeholders={self.stats['placeholder_entities']}) "
            f"relationships={self.stats['relationships']} elapsed={self.stats['processing_time']:.2f}s"
        )
        for failure in failures:
            logger.warning(f"  skipped chunk {failure.doc_id}#{failure.index}: {failure.error}")


def build_index(
    corpus: Sequence[Document],
    gateway: LLMGateway,
    chunk_config: Optional[ChunkConfig] = None,
    gleaning_passes: int = 1,
    store: Optional[VectorStore] = None,
) -> KnowledgeGraph:
    """
    Build the knowledge graph of a corpus; the given store is populated as a side effect.
    """
    result = GraphIndexBuilder(gateway, chunk_config, gleaning_passes).build(corpus, store)
    return result.graph
