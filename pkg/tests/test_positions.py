"""Sinusoid encodings and relative position embeddings."""

import numpy as np
import pytest

from cohgraph.flat import ElementKind, FlatElement
from cohgraph.fusion.positions import (PositionEncoder, pair_distances,
                                       sinusoid, sinusoid_table)

# Reference evaluation of the sinusoid formula for distance 3, d_model 8,
# computed independently at 30-digit precision and rounded to float64.
SINUSOID_3_8 = np.array([
    0.14112000805986722, -0.98999249660044546,
    0.29552020666133958, 0.95533648912560602,
    0.029995500202495661, 0.99955003374898752,
    0.002999995500002025, 0.999995500003375,
])


def test_zero_distance():
    """sin 0 = 0 and cos 0 = 1 in alternating slots."""
    assert np.array_equal(sinusoid(0, 4), [0.0, 1.0, 0.0, 1.0])


def test_sign_parity():
    """Negating the distance negates even (sin) slots and keeps odd (cos)."""
    for d in (1, 2, 17, 128):
        plus = sinusoid(d, 8)
        minus = sinusoid(-d, 8)
        assert np.allclose(minus[0::2], -plus[0::2], atol=0, rtol=0)
        assert np.allclose(minus[1::2], plus[1::2], atol=0, rtol=0)


def test_reference_vector():
    np.testing.assert_allclose(sinusoid(3, 8), SINUSOID_3_8, rtol=0, atol=1e-16)


def test_table_rows_match_direct_eval():
    table = sinusoid_table(5, 6)
    assert table.shape == (11, 6)
    for row, dist in enumerate(range(-5, 6)):
        np.testing.assert_array_equal(table[row], sinusoid(dist, 6))


def _sentence(k):
    return FlatElement(ElementKind.SENTENCE, k, k, k)


def _relation_at(i, payload="rel"):
    return FlatElement(ElementKind.RELATION, payload, i, i + 1)


def test_sentence_vs_relation_distances():
    """s1 at (1,1) against r1 at (1,2) has distances (0, -1, 0, -1)."""
    assert pair_distances(_sentence(1), _relation_at(1), 128) == (0, -1, 0, -1)


def test_distances_clip():
    far = FlatElement(ElementKind.ENTITY, "x", 1, 300)
    assert pair_distances(_sentence(1), far, 128) == (0, -128, 0, -128)
    assert pair_distances(far, _sentence(1), 128) == (0, 0, 128, 128)


def _encoder(d_model=8, max_distance=16, seed=0, activation="none"):
    rng = np.random.default_rng(seed)
    W_p = rng.normal(0, 0.2, (4 * d_model, d_model))
    return PositionEncoder(d_model, max_distance, W_p, activation)


def test_self_pair_embedding():
    """Equal elements give concat(p(0) x4) @ W_p."""
    enc = _encoder()
    el = _sentence(3)
    expected = np.concatenate([sinusoid(0, 8)] * 4) @ enc.W_p
    np.testing.assert_array_equal(enc.pair_embedding(el, el), expected)


def oracle_pair_embedding(enc: PositionEncoder, a: FlatElement,
                          b: FlatElement) -> np.ndarray:
    """Second implementation straight from the four named distances."""
    clip = lambda x: int(np.clip(x, -enc.max_distance, enc.max_distance))
    d_start_start = clip(a.start - b.start)
    d_start_end = clip(a.start - b.end)
    d_end_start = clip(a.end - b.start)
    d_end_end = clip(a.end - b.end)
    feats = np.concatenate([
        sinusoid(d_start_start, enc.d_model),
        sinusoid(d_start_end, enc.d_model),
        sinusoid(d_end_start, enc.d_model),
        sinusoid(d_end_end, enc.d_model),
    ])
    out = feats @ enc.W_p
    return np.maximum(out, 0) if enc.activation == "relu" else out


@pytest.mark.parametrize("activation", ["none", "relu"])
def test_random_pairs_match_named_distance_oracle(activation):
    rng = np.random.default_rng(99)
    enc = _encoder(activation=activation)
    for _ in range(50):
        i, j = rng.integers(1, 12, size=2)
        a = (_sentence(int(i)) if rng.random() < 0.5
             else FlatElement(ElementKind.ENTITY, "e", int(min(i, j)),
                              int(max(i, j) + 1)))
        b = (_sentence(int(j)) if rng.random() < 0.5 else _relation_at(int(j)))
        np.testing.assert_allclose(enc.pair_embedding(a, b),
                                   oracle_pair_embedding(enc, a, b),
                                   rtol=0, atol=1e-15)


def test_sequence_features_match_pair_features():
    from cohgraph.graph import build_graph
    from cohgraph.flat import linearize
    from conftest import make_demo_document

    enc = _encoder(d_model=6)
    seq = linearize(build_graph(make_demo_document()))
    feats = enc.sequence_features(seq)
    pe = enc.encode(feats)
    for i, a in enumerate(seq.elements):
        for j, b in enumerate(seq.elements):
            np.testing.assert_array_equal(feats[i, j], enc.pair_features(a, b))
            np.testing.assert_allclose(pe[i, j], enc.pair_embedding(a, b),
                                       rtol=0, atol=1e-15)
