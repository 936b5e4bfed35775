"""Synthetic corpus generator: determinism, structure, sense marginals."""

from collections import Counter

import numpy as np
import pytest

from cohgraph.corpus import document_to_record, dumps_canonical, write_corpus
from cohgraph.graph import build_graph
from cohgraph.labels import CoherenceLabel
from cohgraph.relations import RelationKind, load_registry
from cohgraph.synth import PROFILES, SynthProfile, synth_generate

L, M, H = CoherenceLabel.LOW, CoherenceLabel.MEDIUM, CoherenceLabel.HIGH


def test_same_seed_byte_identical_corpus(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_corpus(synth_generate(40, seed=9), a)
    write_corpus(synth_generate(40, seed=9), b)
    assert a.read_bytes() == b.read_bytes()
    write_corpus(synth_generate(40, seed=10), b)
    assert a.read_bytes() != b.read_bytes()


def test_labels_cycle_evenly():
    docs = synth_generate(30, seed=0)
    counts = Counter(d.label for d in docs)
    assert counts == {L: 10, M: 10, H: 10}


def test_entity_edge_structure_by_label():
    """High: one entity edge per adjacent pair; low: none; medium: between."""
    docs = synth_generate(90, seed=1)
    medium_rates = []
    for doc in docs:
        graph = build_graph(doc)
        adjacent = {(e.i, e.j) for e in graph.entity_edges}
        pairs = {(k, k + 1) for k in range(1, len(doc.sentences))}
        if doc.label is H:
            assert pairs <= adjacent
        elif doc.label is L:
            assert not graph.entity_edges
        else:
            medium_rates.append(len(adjacent & pairs) / len(pairs))
    mean_rate = np.mean(medium_rates)
    assert 0.0 < mean_rate < 1.0


def test_relations_cover_every_adjacent_pair():
    for doc in synth_generate(30, seed=2):
        graph = build_graph(doc)
        covered = {e.i for e in graph.relation_edges}
        assert covered == set(range(1, len(doc.sentences)))


def test_low_docs_are_norel_heavy():
    docs = synth_generate(300, seed=3)
    norel = {label: 0 for label in (L, M, H)}
    totals = {label: 0 for label in (L, M, H)}
    for doc in docs:
        for rel in doc.annotations.relations:
            if rel.sense.kind is RelationKind.IMPLICIT:
                totals[doc.label] += 1
                norel[doc.label] += rel.sense.name == "NoRel"
    low_rate = norel[L] / totals[L]
    medium_rate = norel[M] / totals[M]
    high_rate = norel[H] / totals[H]
    assert low_rate > 1.5 * medium_rate
    assert medium_rate > 10 * high_rate


def test_sense_marginals_match_registry_priors():
    """Aggregated over many documents the sense distribution per kind stays
    within 0.03 of the registry fractions (the label tilts cancel)."""
    registry = load_registry()
    docs = synth_generate(10_000, seed=7)
    counts = {kind: Counter() for kind in RelationKind}
    for doc in docs:
        for rel in doc.annotations.relations:
            counts[rel.sense.kind][rel.sense.name] += 1
    for kind in RelationKind:
        total = sum(counts[kind].values())
        for name, prior in registry.priors(kind).items():
            observed = counts[kind][name] / total
            assert observed == pytest.approx(prior, abs=0.03), (kind, name)


def test_token_streams_carry_no_entity_leak():
    """Noun and pronoun token layout is identical across labels: position 0
    is a unique noun, position 1 a closed-class pronoun, for every label."""
    docs = synth_generate(60, seed=5)
    for doc in docs:
        nouns = [s.tokens[0] for s in doc.sentences]
        assert len(set(nouns)) == len(nouns)
        for s in doc.sentences:
            assert s.tokens[1] in ("it", "they", "this", "that", "these")


def test_domain_tags_alternate_and_prefix_vocab():
    docs = synth_generate(12, seed=6)
    tags = {d.domain_tag for d in docs}
    assert tags == {"synthA", "synthB"}
    for doc in docs:
        for sent in doc.sentences:
            for token in sent.tokens[2:]:
                assert token.startswith(f"{doc.domain_tag}-")


def test_documents_validate_and_serialize():
    for doc in synth_generate(12, seed=8):
        doc.validate()
        dumps_canonical(document_to_record(doc))


def test_profiles_registry():
    assert set(PROFILES) == {"balanced", "separable"}
    with pytest.raises(KeyError):
        synth_generate(3, seed=0, profile="unknown")
    with pytest.raises(ValueError):
        synth_generate(0, seed=0)
    with pytest.raises(ValueError):
        SynthProfile(name="bad", shared_token_prob=1.5)
