"""
Context-aware entity expansion retrieval.

For one query entity:
1. weak-context entities: the top-n store matches of the entity's embedding
2. strong-context entities: the top matches of each weak entity's stored vector
3. BFS from the weak set and from the strong set separately
4. union of both traversals, with descriptions deduplicated and capped

Descriptions are prioritized weak before strong before BFS-only when the cap
truncates them.
"""

import json
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from src.graph.knowledge_graph import KnowledgeGraph, normalize_name
from src.llm.errors import ConfigurationError
from src.llm.gateway import LLMGateway
from src.vectorization.vector_store import VectorStore

logger = logging.getLogger(__name__)

ORIGIN_WEAK = "weak"
ORIGIN_STRONG = "strong"
ORIGIN_BFS = "bfs"
ORIGIN_TIERS = (ORIGIN_WEAK, ORIGIN_STRONG, ORIGIN_BFS)


@dataclass(frozen=True)
class RetrievalConfig:
    """Retrieval parameters."""

    top_n_weak: int = 5
    top_n_strong_per_seed: int = 3
    bfs_depth: int = 1
    max_descriptions: int = 200
    expansion_enabled: bool = True
    match_relationships: bool = False

    def __post_init__(self):
        for name in ("top_n_weak", "top_n_strong_per_seed", "max_descriptions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.bfs_depth < 0:
            raise ValueError(f"bfs_depth must be >= 0, got {self.bfs_depth}")
        if self.match_relationships:
            raise ConfigurationError(
                "match_relationships is not supported: relationship embeddings are not stored in the index"
            )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DescriptionItem:
    """One collected description and where it came from."""

    text: str
    origin_kind: str  # "entity" or "relationship"
    origin: Union[str, int]
    tier: str

    def to_dict(self) -> dict:
        return {"text": self.text, "origin_kind": self.origin_kind, "origin": self.origin, "tier": self.tier}


@dataclass
class Subgraph:
    """
    Retrieval result for one query entity.

    Attributes:
        entity: Query entity text the subgraph was retrieved for
        nodes: Canonical name -> origin tier, in traversal order
        edges: Relationship ids, in traversal order
        descriptions: Deduplicated, prioritized, capped descriptions
        weak: Weak-context entity names in score order
        strong: Strong-context entity names in score order
        dropped_descriptions: Descriptions removed by the cap
    """

    entity: str
    nodes: Dict[str, str] = field(default_factory=dict)
    edges: List[int] = field(default_factory=list)
    descriptions: List[DescriptionItem] = field(default_factory=list)
    weak: List[str] = field(default_factory=list)
    strong: List[str] = field(default_factory=list)
    dropped_descriptions: int = 0

    @property
    def is_empty(self) -> bool:
        return not self.nodes

    def to_dict(self) -> dict:
        return {
            "entity": self.entity,
            "nodes": [{"name": name, "origin": origin} for name, origin in self.nodes.items()],
            "edges": list(self.edges),
            "descriptions": [d.to_dict() for d in self.descriptions],
            "weak": list(self.weak),
            "strong": list(self.strong),
            "dropped_descriptions": self.dropped_descriptions,
        }


def expand_entities(
    entity: str,
    cfg: RetrievalConfig,
    store: VectorStore,
    graph: KnowledgeGraph,
    gateway: LLMGateway,
) -> Tuple[List[str], List[str]]:
    """
    Compute weak- and strong-context entities for a query entity.

    Args:
        entity: Query entity text
        cfg: Retrieval parameters
        store: Entity vector store
        graph: Knowledge graph (unused names in the store are still returned)
        gateway: Gateway used to embed the query entity

    Returns:
        (weak, strong) name lists in score order; strong has no duplicates
        and may overlap weak. Both are empty for an empty store.
    """
    if not entity or not entity.strip():
        raise ValueError("Query entity must be non-empty")
    if len(store) == 0:
        return [], []

    (query_vector,) = gateway.embed([entity])
    weak = [m.entity_name for m in store.match_top_k(query_vector, cfg.top_n_weak)]

    strong: List[str] = []
    if cfg.expansion_enabled:
        seen = set()
        for seed in weak:
            for match in store.match_by_name(seed, cfg.top_n_strong_per_seed):
                if match.entity_name not in seen:
                    seen.add(match.entity_name)
                    strong.append(match.entity_name)
    return weak, strong


def bfs_collect(seeds: Sequence[str], depth: int, graph: KnowledgeGraph) -> Tuple[List[str], List[int]]:
    """
    Breadth-first traversal over the undirected view of the graph.

    Seeds are visited in the given order and neighbors in ascending name
    order. Every edge leaving a node closer than depth is collected once.

    Returns:
        (nodes in visitation order, relationship ids in traversal order)
    """
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")

    distance: Dict[str, int] = {}
    nodes: List[str] = []
    queue: deque = deque()
    for seed in seeds:
        key = normalize_name(seed)
        if key not in graph.entities:
            logger.warning(f"BFS seed '{seed}' is not in the graph; skipped")
            continue
        if key not in distance:
            distance[key] = 0
            nodes.append(key)
            queue.append(key)

    edges: List[int] = []
    seen_edges = set()
    while queue:
        node = queue.popleft()
        if distance[node] >= depth:
            continue
        for neighbor, rel_id in graph.neighbors(node):
            if rel_id not in seen_edges:
                seen_edges.add(rel_id)
                edges.append(rel_id)
            if neighbor not in distance:
                distance[neighbor] = distance[node] + 1
                nodes.append(neighbor)
                queue.append(neighbor)
    return nodes, edges


def _ordered_union(*sequences: Iterable) -> List:
    seen, merged = set(), []
    for sequence in sequences:
        for item in sequence:
            if item not in seen:
                seen.add(item)
                merged.append(item)
    return merged


def _prioritized_descriptions(
    nodes: Dict[str, str],
    edges: List[int],
    graph: KnowledgeGraph,
) -> List[DescriptionItem]:
    rank = {tier: i for i, tier in enumerate(ORIGIN_TIERS)}
    items: List[DescriptionItem] = []
    for tier in ORIGIN_TIERS:
        for name, origin in nodes.items():
            if origin == tier:
                items.extend(
                    DescriptionItem(text, "entity", name, tier) for text in graph.entities[name].description_texts
                )
        for rel_id in edges:
            rel = graph.relationship(rel_id)
            best = min((nodes[rel.src], nodes[rel.dst]), key=rank.__getitem__)
            if best == tier:
                items.append(DescriptionItem(rel.description, "relationship", rel_id, tier))

    unique, seen = [], set()
    for item in items:
        if item.text not in seen:
            seen.add(item.text)
            unique.append(item)
    return unique


def retrieve_subgraph(
    entity: str,
    cfg: RetrievalConfig,
    store: VectorStore,
    graph: KnowledgeGraph,
    gateway: LLMGateway,
) -> Subgraph:
    """
    Retrieve the subgraph of one query entity.

    Returns:
        Subgraph; empty when neither expansion found anything
    """
    weak, strong = expand_entities(entity, cfg, store, graph, gateway)
    weak_nodes, weak_edges = bfs_collect(weak, cfg.bfs_depth, graph)
    strong_nodes, strong_edges = bfs_collect(strong, cfg.bfs_depth, graph)

    nodes: Dict[str, str] = {}
    weak_set, strong_set = set(weak), set(strong)
    for name in _ordered_union(weak_nodes, strong_nodes):
        if name in weak_set:
            nodes[name] = ORIGIN_WEAK
        elif name in strong_set:
            nodes[name] = ORIGIN_STRONG
        else:
            nodes[name] = ORIGIN_BFS
    edges = _ordered_union(weak_edges, strong_edges)

    candidates = _prioritized_descriptions(nodes, edges, graph)
    kept = candidates[:cfg.max_descriptions]
    subgraph = Subgraph(
        entity=entity,
        nodes=nodes,
        edges=edges,
        descriptions=kept,
        weak=[n for n in weak if n in graph.entities],
        strong=[n for n in strong if n in graph.entities],
        dropped_descriptions=len(candidates) - len(kept),
    )
    if subgraph.dropped_descriptions:
        logger.info(
            f"Subgraph for '{entity}' capped at {cfg.max_descriptions} descriptions "
            f"({subgraph.dropped_descriptions} dropped)"
        )
    logger.debug(f"Subgraph for '{entity}': {len(nodes)} nodes, {len(edges)} edges, {len(kept)} descriptions")
    return subgraph


def collect_descriptions(sg: Subgraph, max_descriptions: Optional[int] = None) -> List[str]:
    """
    Flat description texts of a subgraph in priority order, without duplicates.

    Args:
        sg: Retrieved subgraph
        max_descriptions: Optional tighter cap

    Returns:
        Description texts; stable across runs and idempotent
    """
    texts, seen = [], set()
    for item in sg.descriptions:
        if item.text not in seen:
            seen.add(item.text)
            texts.append(item.text)
    return texts if max_descriptions is None else texts[:max_descriptions]


def subgraph_records(sg: Subgraph, graph: KnowledgeGraph) -> List[dict]:
    """Line-delimited debug records: one per node, edge, and description."""
    records = [{"record": "node", "entity": sg.entity, "name": name, "origin": origin} for name, origin in sg.nodes.items()]
    for rel_id in sg.edges:
        rel = graph.relationship(rel_id)
        records.append({
            "record": "edge", "entity": sg.entity, "id": rel_id,
            "src": rel.src, "dst": rel.dst, "description": rel.description, "weight": rel.weight,
        })
    records += [{"record": "description", "entity": sg.entity, **item.to_dict()} for item in sg.descriptions]
    return records


def dump_subgraph(sg: Subgraph, graph: KnowledgeGraph, out: Union[str, Path, TextIO]) -> int:
    """
    Write a subgraph as JSON lines.

    Returns:
        Number of records written
    """
    records = subgraph_records(sg, graph)
    lines = "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)
    if isinstance(out, (str, Path)):
        Path(out).write_text(lines, encoding="utf-8")
    else:
        out.write(lines)
    return len(records)
