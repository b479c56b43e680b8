"""
Knowledge graph model: entity mentions, merged entities, relationships.
"""

from .knowledge_graph import (
    Entity,
    EntityMention,
    GraphIntegrityError,
    KnowledgeGraph,
    Relationship,
    merge_entities,
    normalize_name,
)

__all__ = [
    'Entity',
    'EntityMention',
    'GraphIntegrityError',
    'KnowledgeGraph',
    'Relationship',
    'merge_entities',
    'normalize_name',
]
