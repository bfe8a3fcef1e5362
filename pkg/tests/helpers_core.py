"""Detection factories shared across the scoring-package tests."""

import numpy as np

from camscore.types import BoundingBox, Detection, FeatureVector


def make_detection(feature, box=None, label="obj") -> Detection:
    if box is None:
        box = BoundingBox(0.2, 0.2, 0.6, 0.6)
    return Detection(
        box=box, label=label, feature=FeatureVector(np.asarray(feature, dtype=np.float64))
    )


def nonneg_feature(rng, dim: int = 16) -> np.ndarray:
    """Sparse nonnegative vector, the shape of extractor class embeddings.

    Nonnegative features keep every pair cost at or below the padding
    cost of 1, which the count-penalty monotonicity property relies on.
    """
    v = np.zeros(dim)
    k = int(rng.integers(2, 6))
    v[rng.choice(dim, size=k, replace=False)] = rng.uniform(0.25, 1.0, k)
    return v
