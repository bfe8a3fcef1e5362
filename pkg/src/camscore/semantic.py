"""Semantic-level metric: cosine similarity of global image features."""

from __future__ import annotations

import numpy as np

from .types import FeatureVector, PerceptionBundle


def cosine_similarity(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine of the angle between two feature vectors, clamped to [-1, 1].

    Identical inputs short-circuit to exactly 1.0 so that self-comparison
    is free of rounding noise. Zero-norm inputs are rejected.
    """
    if a.dim != b.dim:
        raise ValueError(f"feature dimension mismatch: {a.dim} vs {b.dim}")
    norm_a = a.norm
    norm_b = b.norm
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm feature vectors")
    if np.array_equal(a.values, b.values):
        return 1.0
    cos = float(np.dot(a.values, b.values) / (norm_a * norm_b))
    return min(1.0, max(-1.0, cos))


def semantic_score(ori: PerceptionBundle, gen: PerceptionBundle) -> float:
    """Global-feature cosine similarity between two bundles."""
    return cosine_similarity(ori.global_feature, gen.global_feature)
