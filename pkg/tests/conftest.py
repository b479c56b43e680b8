"""
Pytest configuration: shared fixtures for offline runs.

Everything runs against the mock LLM and mock embeddings; no test needs a network.
"""

import os
import sys
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from src.adapters.tokenizers import get_tokenizer
from src.embeddings.mock_embeddings import MockEmbeddings
from src.graph.knowledge_graph import Entity, KnowledgeGraph, Relationship
from src.llm.gateway import LLMGateway
from src.llm.mock_provider import MockLLMProvider, ScriptRule
from src.vectorization.vector_store import EmbeddingRecord, VectorStore, text_checksum


def pytest_configure(config):
    for var in ("LLM_PROVIDER", "EMBEDDINGS_PROVIDER", "LLM_API_KEY"):
        os.environ.pop(var, None)

    config.addinivalue_line("markers", "integration: Integration tests")
    config.addinivalue_line("markers", "unit: Unit tests")
    config.addinivalue_line("markers", "slow: Slow tests")
    config.addinivalue_line("markers", "property: Randomized property tests with fixed seeds")


@pytest.fixture
def tokenizer():
    return get_tokenizer()


@pytest.fixture
def scripted_provider():
    """Factory: MockLLMProvider with the given script rules."""
    def _make(*rules: ScriptRule, seed: int = 0) -> MockLLMProvider:
        return MockLLMProvider(seed=seed, script=list(rules), tokenizer=get_tokenizer())
    return _make


@pytest.fixture
def make_gateway():
    """Factory: gateway over a mock provider and mock embeddings (no backoff sleeps)."""
    def _make(provider: Optional[MockLLMProvider] = None, seed: int = 0, dim: int = 32, **kwargs) -> LLMGateway:
        kwargs.setdefault("backoff_seconds", 0)
        kwargs.setdefault("expected_embedding_dim", dim)
        return LLMGateway(
            provider or MockLLMProvider(seed=seed),
            MockEmbeddings(dimension=dim, seed=seed),
            tokenizer=get_tokenizer(),
            **kwargs,
        )
    return _make


def build_graph(
    entities: Dict[str, Sequence[str]],
    edges: Iterable[Tuple[str, str, str]] = (),
) -> KnowledgeGraph:
    """Graph from {name: [descriptions]} and (src, dst, description) triples."""
    graph = KnowledgeGraph.from_elements(
        [
            Entity(canonical_name=name, display_name=name, type_tag="CONCEPT",
                   descriptions=[(d, ("doc.txt", i)) for i, d in enumerate(descs)])
            for name, descs in entities.items()
        ],
        [Relationship(src, dst, desc, 1.0, ("doc.txt", 0)) for src, dst, desc in edges],
    )
    graph.validate()
    return graph


def embed_graph(graph: KnowledgeGraph, gateway: LLMGateway) -> VectorStore:
    """Store holding the gateway embedding of every entity of the graph."""
    store = VectorStore(dim=gateway.expected_embedding_dim)
    entities = list(graph.entities.values())
    texts = [e.embedding_text() for e in entities]
    vectors = gateway.embed(texts) if texts else []
    store.upsert(EmbeddingRecord(e.canonical_name, v, text_checksum(t)) for e, v, t in zip(entities, vectors, texts))
    return store


def store_from_vectors(vectors: Dict[str, List[float]]) -> VectorStore:
    store = VectorStore()
    store.upsert(EmbeddingRecord(name, np.asarray(v, dtype=np.float32), text_checksum(name)) for name, v in vectors.items())
    return store


@pytest.fixture
def graph_builder():
    return build_graph


@pytest.fixture
def store_builder():
    return embed_graph


@pytest.fixture
def bee_graph():
    """Small beekeeping graph used across retrieval and summarization tests."""
    return build_graph(
        {
            "honey": ["Honey is a sweet food made by bees.", "Raw honey is sold at farmers markets."],
            "beekeepers": ["Beekeepers maintain colonies of honey bees."],
            "hive products": ["Hive products include wax, propolis and royal jelly."],
            "pollination": ["Bees pollinate crops while foraging."],
            "wax": ["Beeswax is used for candles."],
        },
        [
            ("beekeepers", "honey", "Beekeepers harvest honey from hives."),
            ("beekeepers", "hive products", "Beekeepers collect hive products."),
            ("hive products", "wax", "Wax is a hive product."),
            ("honey", "pollination", "Honey production depends on pollination."),
        ],
    )


@pytest.fixture
def tmp_index_dir(tmp_path):
    return tmp_path / "idx"


@pytest.fixture
def corpus_dir(tmp_path):
    """Two-document corpus with capitalized entity names the mock extractor picks up."""
    root = tmp_path / "corpus"
    root.mkdir()
    (root / "bees.txt").write_text(
        "Beekeepers tend Honey Bees in wooden Hives. Honey Bees produce Honey and Beeswax.\n"
        "Farmers Markets sell Honey from local Beekeepers.",
        encoding="utf-8",
    )
    (root / "crops.md").write_text(
        "Honey Bees pollinate Almond Orchards in California. Almond Orchards rent Hives from Beekeepers.",
        encoding="utf-8",
    )
    return root
