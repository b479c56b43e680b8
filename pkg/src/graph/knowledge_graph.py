"""
Knowledge Graph

In-memory entity/relationship graph built from extracted mentions.

Entities are keyed by canonical name (case-folded, trimmed, internal whitespace
collapsed). Relationship ids are their positions in the relationship list, and
an adjacency index maps every entity to the ids of its incident relationships.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Tuple

import networkx as nx

logger = logging.getLogger(__name__)

SourceRef = Tuple[str, int]


class GraphIntegrityError(ValueError):
    """Raised when a graph violates one of its structural invariants."""
    pass


def normalize_name(name: str) -> str:
    """Canonical entity key: case-fold, trim, collapse internal whitespace."""
    return " ".join(name.split()).casefold()


def _source(raw: Any) -> SourceRef:
    return (str(raw[0]), int(raw[1]))


@dataclass(frozen=True)
class EntityMention:
    """One entity occurrence extracted from one chunk."""

    name: str
    type_tag: str
    description: str
    source_chunk: SourceRef

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("Entity mention name must be non-empty")
        if not self.description.strip():
            raise ValueError(f"Entity mention '{self.name}' has an empty description")


@dataclass(frozen=True)
class Relationship:
    """A relation between two entities, extracted from one chunk."""

    src: str
    dst: str
    description: str
    weight: Optional[float] = None
    source_chunk: SourceRef = ("", 0)

    def other(self, name: str) -> str:
        """The endpoint opposite to name."""
        return self.dst if name == self.src else self.src

    def to_dict(self) -> Dict[str, Any]:
        return {
            "src": self.src,
            "dst": self.dst,
            "description": self.description,
            "weight": self.weight,
            "source_chunk": list(self.source_chunk),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Relationship":
        weight = data.get("weight")
        return cls(
            src=data["src"],
            dst=data["dst"],
            description=data["description"],
            weight=None if weight is None else float(weight),
            source_chunk=_source(data["source_chunk"]),
        )


@dataclass
class Entity:
    """
    A merged entity.

    Attributes:
        canonical_name: Normalized name, unique within a graph
        display_name: Surface form of the first mention
        type_tag: Category of the first mention
        descriptions: (description, source_chunk) pairs in first-seen order
        degree: Number of incident relationships (maintained by the graph)
    """

    canonical_name: str
    display_name: str = ""
    type_tag: str = ""
    descriptions: List[Tuple[str, SourceRef]] = field(default_factory=list)
    degree: int = 0

    @property
    def description_texts(self) -> List[str]:
        return [text for text, _ in self.descriptions]

    @property
    def is_placeholder(self) -> bool:
        """True for entities created only to anchor a relationship endpoint."""
        return not self.descriptions

    def embedding_text(self) -> str:
        """Text embedded for this entity: canonical name followed by its descriptions."""
        return "\n".join([self.canonical_name, *self.description_texts])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "canonical_name": self.canonical_name,
            "display_name": self.display_name,
            "type_tag": self.type_tag,
            "descriptions": [{"text": text, "source_chunk": list(src)} for text, src in self.descriptions],
            "degree": self.degree,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Entity":
        return cls(
            canonical_name=data["canonical_name"],
            display_name=data.get("display_name", ""),
            type_tag=data.get("type_tag", ""),
            descriptions=[(d["text"], _source(d["source_chunk"])) for d in data.get("descriptions", [])],
            degree=int(data.get("degree", 0)),
        )


def merge_entities(mentions: Iterable[EntityMention]) -> List[Entity]:
    """
    Group mentions by normalized name into entities.

    Groups appear in the order their first mention appears; each entity's
    descriptions keep mention order. No description is dropped.

    Args:
        mentions: Entity mentions from all chunks

    Returns:
        One Entity per distinct normalized name
    """
    merged: Dict[str, Entity] = {}
    for mention in mentions:
        key = normalize_name(mention.name)
        entity = merged.get(key)
        if entity is None:
            entity = merged[key] = Entity(
                canonical_name=key,
                display_name=" ".join(mention.name.split()),
                type_tag=mention.type_tag,
            )
        elif not entity.type_tag:
            entity.type_tag = mention.type_tag
        entity.descriptions.append((mention.description, mention.source_chunk))
    return list(merged.values())


class KnowledgeGraph:
    """
    Entity/relationship graph with an adjacency index.

    Example:
        >>> graph = KnowledgeGraph.from_elements(merge_entities(mentions), relationships)
        >>> graph.neighbors("honey")
        [('beekeepers', 0)]
    """

    def __init__(self):
        self.entities: Dict[str, Entity] = {}
        self.relationships: List[Relationship] = []
        self.adjacency: Dict[str, List[int]] = {}

    @classmethod
    def from_elements(cls, entities: Iterable[Entity], relationships: Iterable[Relationship]) -> "KnowledgeGraph":
        """
        Assemble a graph from merged entities and extracted relationships.

        Relationship endpoints are normalized; endpoints without a matching
        entity become placeholder entities with no descriptions.
        """
        graph = cls()
        for entity in entities:
            graph.add_entity(entity)
        for relationship in relationships:
            graph.add_relationship(relationship)
        return graph

    @classmethod
    def from_records(cls, entities: Iterable[Entity], relationships: Iterable[Relationship]) -> "KnowledgeGraph":
        """
        Restore a graph from persisted records without re-normalizing.

        Degrees are taken as stored and the adjacency index is rebuilt, so
        validate() detects any disagreement between the two.
        """
        graph = cls()
        graph.entities = {entity.canonical_name: entity for entity in entities}
        graph.relationships = list(relationships)
        graph.adjacency = graph._rebuild_adjacency()
        return graph

    def add_entity(self, entity: Entity) -> Entity:
        """
        Add an entity, merging descriptions into an existing one with the same key.

        The stored entity's degree is owned by the graph; the incoming value is ignored.
        """
        key = normalize_name(entity.canonical_name)
        existing = self.entities.get(key)
        if existing is None:
            existing = self.entities[key] = Entity(
                canonical_name=key,
                display_name=entity.display_name or key,
                type_tag=entity.type_tag,
            )
            self.adjacency[key] = []
        existing.descriptions.extend(entity.descriptions)
        return existing

    def ensure_entity(self, name: str) -> Entity:
        key = normalize_name(name)
        if key not in self.entities:
            logger.debug(f"Creating placeholder entity for relationship endpoint '{name}'")
            self.add_entity(Entity(canonical_name=key, display_name=" ".join(name.split())))
        return self.entities[key]

    def add_relationship(self, relationship: Relationship) -> int:
        """
        Add a relationship and index it under both endpoints.

        Returns:
            The new relationship id
        """
        src = self.ensure_entity(relationship.src).canonical_name
        dst = self.ensure_entity(relationship.dst).canonical_name
        rel_id = len(self.relationships)
        self.relationships.append(replace(relationship, src=src, dst=dst))

        for endpoint in {src, dst}:
            self.adjacency[endpoint].append(rel_id)
            self.entities[endpoint].degree += 1
        return rel_id

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self.entities

    def __len__(self) -> int:
        return len(self.entities)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return (
            self.entities == other.entities
            and self.relationships == other.relationships
            and self.adjacency == other.adjacency
        )

    def get(self, name: str) -> Optional[Entity]:
        return self.entities.get(normalize_name(name))

    def relationship(self, rel_id: int) -> Relationship:
        return self.relationships[rel_id]

    def neighbors(self, name: str) -> List[Tuple[str, int]]:
        """
        Neighbors over the undirected view of relationships.

        Returns:
            (neighbor_name, relationship_id) pairs sorted by name, then id
        """
        key = normalize_name(name)
        pairs = [(self.relationships[rel_id].other(key), rel_id) for rel_id in self.adjacency.get(key, [])]
        return sorted(pairs)

    def _rebuild_adjacency(self) -> Dict[str, List[int]]:
        rebuilt: Dict[str, List[int]] = {name: [] for name in self.entities}
        for rel_id, rel in enumerate(self.relationships):
            for endpoint in {rel.src, rel.dst}:
                rebuilt.setdefault(endpoint, []).append(rel_id)
        return rebuilt

    def validate(self) -> None:
        """
        Check every structural invariant.

        Raises:
            GraphIntegrityError: Listing every violation found
        """
        problems: List[str] = []
        for key, entity in self.entities.items():
            if entity.canonical_name != key or normalize_name(key) != key:
                problems.append(f"entity key '{key}' is not the canonical name '{entity.canonical_name}'")
        for rel_id, rel in enumerate(self.relationships):
            for endpoint in (rel.src, rel.dst):
                if endpoint not in self.entities:
                    problems.append(f"relationship {rel_id} has dangling endpoint '{endpoint}'")
        rebuilt = self._rebuild_adjacency()
        if rebuilt != self.adjacency:
            problems.append("adjacency index differs from a full rebuild")
        for name, entity in self.entities.items():
            if entity.degree != len(rebuilt.get(name, [])):
                problems.append(f"entity '{name}' has degree {entity.degree}, expected {len(rebuilt.get(name, []))}")

        if problems:
            raise GraphIntegrityError("; ".join(problems[:10]) + (f" (+{len(problems) - 10} more)" if len(problems) > 10 else ""))

    def to_networkx(self) -> nx.MultiGraph:
        """Undirected multigraph view; edge keys are relationship ids."""
        g = nx.MultiGraph()
        g.add_nodes_from(self.entities)
        for rel_id, rel in enumerate(self.relationships):
            g.add_edge(rel.src, rel.dst, key=rel_id)
        return g

    def stats(self) -> Dict[str, Any]:
        """Entity/relationship counts, degree histogram, placeholder and component counts."""
        degrees = Counter(entity.degree for entity in self.entities.values())
        histogram = [degrees.get(d, 0) for d in range(max(degrees, default=-1) + 1)]
        return {
            "entity_count": len(self.entities),
            "relationship_count": len(self.relationships),
            "placeholder_entities": sum(1 for e in self.entities.values() if e.is_placeholder),
            "description_count": sum(len(e.descriptions) for e in self.entities.values()),
            "connected_components": nx.number_connected_components(self.to_networkx()) if self.entities else 0,
            "degree_histogram": histogram,
        }
