"""Sentence-entity-relation graph construction from annotated documents.

Two sentences are linked by an entity edge when they share a case-folded
annotated noun surface or when a coreference link spans them; adjacent
sentences are linked by one relation edge per annotated discourse sense.
Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .documents import Document
from .relations import CauseDirection, RelationSense


class GraphStructureError(ValueError):
    """An annotation references structure the document does not have."""


class EdgeSource(enum.Enum):
    SHARED_NOUN = "shared_noun"
    COREF = "coref"


@dataclass(frozen=True)
class EntityEdge:
    """Entity link between sentences i < j, keyed by (i, j, surface)."""

    i: int
    j: int
    surface: str
    source: EdgeSource

    def __post_init__(self) -> None:
        if not 1 <= self.i < self.j:
            raise GraphStructureError(
                f"entity edge requires 1 <= i < j, got ({self.i}, {self.j})")
        if not self.surface:
            raise GraphStructureError("entity edge has empty surface")

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.i, self.j, self.surface)


@dataclass(frozen=True)
class RelationEdge:
    """Discourse relation edge spanning the adjacent pair (i, i+1)."""

    i: int
    sense: RelationSense
    direction: CauseDirection | None = None

    @property
    def j(self) -> int:
        return self.i + 1

    @property
    def key(self) -> tuple[int, str, str]:
        return (self.i, self.sense.kind.value, self.sense.name)


@dataclass(frozen=True)
class CoherenceGraph:
    doc_id: str
    n_sentences: int
    entity_edges: frozenset[EntityEdge]
    relation_edges: frozenset[RelationEdge]

    def sorted_entity_edges(self) -> list[EntityEdge]:
        return sorted(self.entity_edges, key=lambda e: e.key)

    def sorted_relation_edges(self) -> list[RelationEdge]:
        return sorted(self.relation_edges, key=lambda e: e.key)


def extract_entity_edges(doc: Document) -> frozenset[EntityEdge]:
    """Entity edges from shared nouns and cross-sentence coreference links.

    One SharedNoun edge per sentence pair per distinct case-folded surface;
    one Coref edge per link whose mentions sit in different sentences, with
    the earlier mention's text as surface. On a (i, j, surface) collision the
    coref edge wins.
    """
    n = len(doc.sentences)
    nouns_by_sentence: dict[int, set[str]] = {}
    for noun in doc.annotations.nouns:
        if not 1 <= noun.sentence_index <= n:
            raise GraphStructureError(
                f"noun annotation references sentence {noun.sentence_index} "
                f"outside [1, {n}]")
        nouns_by_sentence.setdefault(noun.sentence_index, set()).add(
            noun.surface.casefold())

    edges: dict[tuple[int, int, str], EntityEdge] = {}
    indices = sorted(nouns_by_sentence)
    for a_pos, i in enumerate(indices):
        for j in indices[a_pos + 1:]:
            for surface in nouns_by_sentence[i] & nouns_by_sentence[j]:
                edge = EntityEdge(i, j, surface, EdgeSource.SHARED_NOUN)
                edges[edge.key] = edge

    for mention_a, mention_b in doc.annotations.coref_links:
        for m in (mention_a, mention_b):
            if not 1 <= m.sentence_index <= n:
                raise GraphStructureError(
                    f"coref mention references sentence {m.sentence_index} "
                    f"outside [1, {n}]")
        if mention_a.sentence_index == mention_b.sentence_index:
            continue
        first, second = sorted((mention_a, mention_b),
                               key=lambda m: (m.sentence_index, m.span.start))
        edge = EntityEdge(first.sentence_index, second.sentence_index,
                          doc.mention_text(first), EdgeSource.COREF)
        edges[edge.key] = edge  # coref overrides a shared-noun edge on the same key

    return frozenset(edges.values())


def extract_relation_edges(doc: Document) -> frozenset[RelationEdge]:
    """One RelationEdge per annotated adjacent-pair relation, deduplicated
    per (pair, sense); the first annotation's direction wins on duplicates."""
    n = len(doc.sentences)
    edges: dict[tuple[int, str, str], RelationEdge] = {}
    for rel in doc.annotations.relations:
        if not 1 <= rel.sentence_index < n:
            raise GraphStructureError(
                f"relation at sentence {rel.sentence_index} is not an "
                f"adjacent pair in [1, {n - 1}]")
        edge = RelationEdge(rel.sentence_index, rel.sense, rel.direction)
        edges.setdefault(edge.key, edge)
    return frozenset(edges.values())


def build_graph(doc: Document) -> CoherenceGraph:
    """Construct the full coherence graph for a validated document."""
    doc.validate()
    return CoherenceGraph(
        doc_id=doc.id,
        n_sentences=len(doc.sentences),
        entity_edges=extract_entity_edges(doc),
        relation_edges=extract_relation_edges(doc),
    )


def graph_to_record(graph: CoherenceGraph) -> dict:
    """JSON-ready dump mirroring the graph fields, edges in canonical order."""
    return {
        "doc_id": graph.doc_id,
        "n_sentences": graph.n_sentences,
        "entity_edges": [
            [e.i, e.j, e.surface, e.source.value]
            for e in graph.sorted_entity_edges()],
        "relation_edges": [
            [e.i, e.sense.name, e.sense.kind.value,
             e.direction.value if e.direction else None]
            for e in graph.sorted_relation_edges()],
    }
