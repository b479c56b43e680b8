"""
Unit tests for src/graph/knowledge_graph.py
"""

import random

import networkx as nx
import pytest

from src.graph.knowledge_graph import (
    Entity,
    EntityMention,
    GraphIntegrityError,
    KnowledgeGraph,
    Relationship,
    merge_entities,
    normalize_name,
)

SURFACE_FORMS = ["Honey", "honey", "  HONEY ", "Honey  Bees", "honey bees", "Wax", "wax", "Pollination", "Hive Products"]


def mention(name, description, doc="doc.txt", index=0, type_tag="CONCEPT"):
    return EntityMention(name=name, type_tag=type_tag, description=description, source_chunk=(doc, index))


class TestNormalizeName:

    def test_casefold_trim_collapse(self):
        assert normalize_name("  Honey \t Bees\n") == "honey bees"

    def test_idempotent(self):
        for name in SURFACE_FORMS:
            assert normalize_name(normalize_name(name)) == normalize_name(name)


class TestEntityMention:

    def test_rejects_empty_name(self):
        with pytest.raises(ValueError):
            mention("  ", "desc")

    def test_rejects_empty_description(self):
        with pytest.raises(ValueError):
            mention("Honey", " ")


class TestMergeEntities:

    def test_groups_by_normalized_name(self):
        entities = merge_entities([
            mention("Honey", "sweet", index=0),
            mention("Wax", "candles", index=1),
            mention("HONEY ", "sticky", index=2),
        ])
        assert [e.canonical_name for e in entities] == ["honey", "wax"]
        honey = entities[0]
        assert honey.display_name == "Honey"
        assert honey.descriptions == [("sweet", ("doc.txt", 0)), ("sticky", ("doc.txt", 2))]

    def test_first_nonempty_type_tag_wins(self):
        (entity,) = merge_entities([mention("Honey", "a", type_tag=""), mention("honey", "b", type_tag="FOOD")])
        assert entity.type_tag == "FOOD"

    @pytest.mark.property
    def test_descriptions_conserved_over_random_mention_sets(self):
        rng = random.Random(20240501)
        for _ in range(200):
            mentions = [
                mention(rng.choice(SURFACE_FORMS), f"description {i}", index=rng.randrange(5))
                for i in range(rng.randrange(0, 30))
            ]
            entities = merge_entities(mentions)

            keys = [e.canonical_name for e in entities]
            assert len(keys) == len(set(keys))
            assert keys == list(dict.fromkeys(normalize_name(m.name) for m in mentions))
            assert sum(len(e.descriptions) for e in entities) == len(mentions)
            for entity in entities:
                expected = [(m.description, m.source_chunk) for m in mentions if normalize_name(m.name) == entity.canonical_name]
                assert entity.descriptions == expected


class TestKnowledgeGraph:

    def test_placeholder_for_dangling_endpoint(self):
        graph = KnowledgeGraph.from_elements(
            merge_entities([mention("Honey", "sweet")]),
            [Relationship("Honey", "Farmers Markets", "Honey is sold at farmers markets.", 2.0, ("doc.txt", 0))],
        )
        placeholder = graph.get("farmers markets")
        assert placeholder is not None and placeholder.is_placeholder
        assert placeholder.display_name == "Farmers Markets"
        assert graph.relationship(0).dst == "farmers markets"
        graph.validate()

    def test_relationship_endpoints_normalized(self, graph_builder):
        graph = graph_builder({"honey": ["sweet"]}, [(" HONEY", "Wax ", "co-products")])
        rel = graph.relationship(0)
        assert (rel.src, rel.dst) == ("honey", "wax")

    def test_degree_and_adjacency(self, bee_graph):
        assert bee_graph.get("beekeepers").degree == 2
        assert bee_graph.get("wax").degree == 1
        assert bee_graph.adjacency["honey"] == [0, 3]
        assert sum(e.degree for e in bee_graph.entities.values()) == 2 * len(bee_graph.relationships)

    def test_self_loop_counts_once(self, graph_builder):
        graph = graph_builder({"honey": ["sweet"]}, [("honey", "honey", "honey ferments into mead made from honey")])
        assert graph.get("honey").degree == 1
        assert graph.adjacency["honey"] == [0]
        assert graph.neighbors("honey") == [("honey", 0)]

    def test_neighbors_sorted(self, bee_graph):
        assert bee_graph.neighbors("Beekeepers") == [("hive products", 1), ("honey", 0)]
        assert bee_graph.neighbors("unknown") == []

    def test_add_entity_merges_descriptions(self):
        graph = KnowledgeGraph()
        graph.add_entity(Entity("honey", descriptions=[("a", ("d", 0))]))
        graph.add_entity(Entity("Honey", descriptions=[("b", ("d", 1))], degree=99))
        assert len(graph) == 1
        assert graph.get("honey").description_texts == ["a", "b"]
        assert graph.get("honey").degree == 0

    def test_contains(self, bee_graph):
        assert "Hive  Products" in bee_graph
        assert "propolis" not in bee_graph

    def test_validate_detects_wrong_degree(self, bee_graph):
        bee_graph.entities["wax"].degree = 5
        with pytest.raises(GraphIntegrityError, match="degree"):
            bee_graph.validate()

    def test_validate_detects_dangling_endpoint(self, bee_graph):
        restored = KnowledgeGraph.from_records(
            [e for name, e in bee_graph.entities.items() if name != "wax"],
            bee_graph.relationships,
        )
        with pytest.raises(GraphIntegrityError, match="dangling endpoint 'wax'"):
            restored.validate()

    def test_records_round_trip(self, bee_graph):
        entities = [Entity.from_dict(e.to_dict()) for e in bee_graph.entities.values()]
        relationships = [Relationship.from_dict(r.to_dict()) for r in bee_graph.relationships]
        restored = KnowledgeGraph.from_records(entities, relationships)
        restored.validate()
        assert restored == bee_graph

    def test_to_networkx(self, bee_graph):
        g = bee_graph.to_networkx()
        assert g.number_of_nodes() == 5
        assert g.number_of_edges() == 4
        assert nx.is_connected(g)

    def test_stats(self, bee_graph, graph_builder):
        stats = bee_graph.stats()
        assert stats["entity_count"] == 5
        assert stats["relationship_count"] == 4
        assert stats["placeholder_entities"] == 0
        assert stats["description_count"] == 6
        assert stats["connected_components"] == 1
        assert stats["degree_histogram"] == [0, 2, 3]

        assert KnowledgeGraph().stats()["connected_components"] == 0
        assert graph_builder({"a": ["x"], "b": ["y"]}).stats()["connected_components"] == 2
