"""Sinusoidal encodings over the four relative distances between 2D positions.

For elements i (query) and j (key) with positions (start, end), the four
signed distances are

    d1 = start_i - start_j    d2 = start_i - end_j
    d3 = end_i - start_j      d4 = end_i - end_j

each clipped to +-max_distance. Their sinusoid encodings are concatenated
into a 4*d_model feature and projected by a trainable matrix to d_model.
"""

from __future__ import annotations

import numpy as np

from ..flat import FlatElement, FlatSequence


def sinusoid(distance: int, d_model: int) -> np.ndarray:
    """Fixed sinusoid encoding of a signed distance.

    Component 2k is sin(distance / 10000^(2k/d_model)) and component 2k+1 the
    matching cosine.
    """
    out = np.empty(d_model, dtype=np.float64)
    k = np.arange(0, d_model, 2)
    angles = distance / np.power(10000.0, k / d_model)
    out[0::2] = np.sin(angles)
    out[1::2] = np.cos(angles)[:out[1::2].shape[0]]
    return out


def sinusoid_table(max_distance: int, d_model: int) -> np.ndarray:
    """Rows for every clipped distance: row r encodes distance r - max_distance."""
    table = np.empty((2 * max_distance + 1, d_model), dtype=np.float64)
    for r, dist in enumerate(range(-max_distance, max_distance + 1)):
        table[r] = sinusoid(dist, d_model)
    return table


def pair_distances(elem_i: FlatElement, elem_j: FlatElement,
                   max_distance: int) -> tuple[int, int, int, int]:
    """The four clipped signed distances from elem_i to elem_j."""
    clip = lambda d: max(-max_distance, min(max_distance, d))
    return (clip(elem_i.start - elem_j.start),
            clip(elem_i.start - elem_j.end),
            clip(elem_i.end - elem_j.start),
            clip(elem_i.end - elem_j.end))


def distance_indices(seq: FlatSequence, max_distance: int) -> np.ndarray:
    """(n, n, 4) table-row indices of the clipped distances for all pairs."""
    starts = np.array([el.start for el in seq.elements], dtype=np.int64)
    ends = np.array([el.end for el in seq.elements], dtype=np.int64)
    d = np.stack([
        starts[:, None] - starts[None, :],
        starts[:, None] - ends[None, :],
        ends[:, None] - starts[None, :],
        ends[:, None] - ends[None, :],
    ], axis=2)
    np.clip(d, -max_distance, max_distance, out=d)
    return d + max_distance


class PositionEncoder:
    """Caches the sinusoid table and applies the trainable projection W_p.

    W_p has shape (4 * d_model, d_model) and lives in the model's parameter
    store; the encoder holds a reference so in-place optimizer updates stay
    visible. An optional ReLU after the projection is config-switchable (the
    default applies none).
    """

    def __init__(self, d_model: int, max_distance: int, W_p: np.ndarray,
                 activation: str = "none"):
        if W_p.shape != (4 * d_model, d_model):
            raise ValueError(
                f"W_p shape {W_p.shape} != {(4 * d_model, d_model)}")
        self.d_model = d_model
        self.max_distance = max_distance
        self.W_p = W_p
        self.activation = activation
        self.table = sinusoid_table(max_distance, d_model)

    def pair_features(self, elem_i: FlatElement, elem_j: FlatElement) -> np.ndarray:
        """Concatenated sinusoids of the four distances, shape (4 * d_model,)."""
        dists = pair_distances(elem_i, elem_j, self.max_distance)
        return np.concatenate([self.table[d + self.max_distance] for d in dists])

    def pair_embedding(self, elem_i: FlatElement, elem_j: FlatElement) -> np.ndarray:
        """Relative position embedding for one element pair, shape (d_model,)."""
        pe = self.pair_features(elem_i, elem_j) @ self.W_p
        if self.activation == "relu":
            pe = np.maximum(pe, 0.0)
        return pe

    def sequence_features(self, seq: FlatSequence) -> np.ndarray:
        """(n, n, 4 * d_model) fixed sinusoid features for all pairs."""
        idx = distance_indices(seq, self.max_distance)
        feats = self.table[idx]  # (n, n, 4, d_model)
        n = len(seq)
        return feats.reshape(n, n, 4 * self.d_model)

    def encode(self, features: np.ndarray) -> np.ndarray:
        """Project pair features to (n, n, d_model) embeddings."""
        n = features.shape[0]
        pe = features.reshape(n * n, -1) @ self.W_p
        pe = pe.reshape(n, n, self.d_model)
        if self.activation == "relu":
            pe = np.maximum(pe, 0.0)
        return pe
