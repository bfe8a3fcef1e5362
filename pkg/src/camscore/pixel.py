"""Pixel-level metric: normalized Minkowski distance between two rasters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import ImageRaster, resize_raster


@dataclass(frozen=True)
class PixelMetricConfig:
    """Minkowski exponent and the side length both rasters are resized to.

    p = 2 (Euclidean) is the default; any real p >= 1 is accepted.
    """

    p: float = 2.0
    canonical_size: int = 512

    def __post_init__(self):
        if not self.p >= 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.canonical_size < 1:
            raise ValueError(f"canonical_size must be >= 1, got {self.canonical_size}")


def pixel_distance(
    ori: ImageRaster, gen: ImageRaster, cfg: PixelMetricConfig = PixelMetricConfig()
) -> float:
    """Normalized L_p distance between two rasters, in [0, 1].

    Both rasters are resized to canonical_size x canonical_size, then
    (sum_i |ori[i] - gen[i]|^p)^(1/p) is divided by N^(1/p) with
    N = canonical_size^2 * channels, which makes the value independent of
    resolution and exactly 1 for maximally different images. Multiply by
    N^(1/p) to recover the raw sum-based distance.
    """
    if ori.channels != gen.channels:
        raise ValueError(
            f"channel mismatch: {ori.channels} vs {gen.channels}"
        )
    size = cfg.canonical_size
    a = resize_raster(ori, size, size).data.astype(np.float64)
    b = resize_raster(gen, size, size).data.astype(np.float64)
    # mean-then-root equals sum^(1/p) / N^(1/p) and avoids overflow for large p
    return float(np.mean(np.abs(a - b) ** cfg.p) ** (1.0 / cfg.p))
