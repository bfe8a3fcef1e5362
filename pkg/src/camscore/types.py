"""Shared domain types: rasters, features, boxes, depth maps, bundles, sub-scores.

Everything here is immutable after construction (arrays are frozen), so
instances can be shared freely across threads and processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Admissible provenance tags for a perception bundle.
SOURCES = ("original", "generated", "synthetic")


def _frozen_array(values, dtype, ndim: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"{what} must be {ndim}-d, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImageRaster:
    """Intensity raster, shape (height, width, channels), values in [0, 1].

    Stored as float32; the on-disk representation quantizes to 8 bits per
    channel, so rasters that round-trip through files always sit on the
    k/255 grid.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.data, np.float32, 3, "raster data")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ValueError(f"raster dimensions must be positive, got {w}x{h}")
        if c not in (1, 3):
            raise ValueError(f"raster must have 1 or 3 channels, got {c}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("raster contains non-finite intensities")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("raster intensities must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class FeatureVector:
    """A 1-d real feature vector (float64)."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, np.float64, 1, "feature values")
        if arr.size < 1:
            raise ValueError("feature vector must have at least one component")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature vector contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in normalized image coordinates, strictly positive area."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in coords):
            raise ValueError(f"box coordinates must be finite, got {coords}")
        if not (0.0 <= self.x1 < self.x2 <= 1.0 and 0.0 <= self.y1 < self.y2 <= 1.0):
            raise ValueError(
                f"box must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1, got {coords}"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))


@dataclass(frozen=True)
class Detection:
    """One detected object: box, category label, crop feature, confidence."""

    box: BoundingBox
    label: str
    feature: FeatureVector
    confidence: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class DepthMap:
    """Relative per-pixel depth, shape (height, width), strictly positive.

    Units are arbitrary; only ratios matter downstream (the depth error is
    scale-invariant), so maps from different estimators stay comparable.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.data, np.float64, 2, "depth data")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"depth dimensions must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("depth map contains non-finite values")
        if arr.min() <= 0.0:
            raise ValueError("non-positive depth value (all depths must be > 0)")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PerceptionBundle:
    """Everything the engine knows about one image.

    This is the boundary between perception models (encoders, detectors,
    depth estimators, renderers) and the purely numerical evaluation core:
    whatever produced it, a valid bundle scores the same way.
    """

    image: ImageRaster
    global_feature: FeatureVector
    detections: tuple[Detection, ...]
    depth: DepthMap
    source: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        object.__setattr__(self, "meta", dict(self.meta))
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if (self.depth.height, self.depth.width) != (self.image.height, self.image.width):
            raise ValueError(
                f"depth dimensions {self.depth.width}x{self.depth.height} do not match "
                f"image dimensions {self.image.width}x{self.image.height}"
            )
        dim = self.global_feature.dim
        for i, det in enumerate(self.detections):
            if det.feature.dim != dim:
                raise ValueError(
                    f"detection {i} feature dim {det.feature.dim} != bundle feature dim {dim}"
                )

    @property
    def feature_dim(self) -> int:
        return self.global_feature.dim


@dataclass(frozen=True)
class SubScores:
    """The five per-level scores feeding aggregation.

    l_pix  in [0, 1]: normalized pixel-space Minkowski distance (0 = identical).
    l_sem  in [-1, 1]: global-feature cosine similarity (1 = identical).
    l_obj  in [0, 2]: mean per-slot optimal matching cost (0 = objects align).
    l_ciou in [0, 3]: mean complete-IoU loss over matched pairs (0 = boxes align).
    l_dep  >= 0: mean scale-invariant log-depth error over matched pairs.
    """

    l_pix: float
    l_sem: float
    l_obj: float
    l_ciou: float
    l_dep: float

    def __post_init__(self):
        fields = {
            "l_pix": (self.l_pix, 0.0, 1.0),
            "l_sem": (self.l_sem, -1.0, 1.0),
            "l_obj": (self.l_obj, 0.0, 2.0),
            "l_ciou": (self.l_ciou, 0.0, 3.0),
            "l_dep": (self.l_dep, 0.0, math.inf),
        }
        for name, (value, lo, hi) in fields.items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            if not (lo <= value <= hi):
                raise ValueError(f"{name}={value} outside [{lo}, {hi}]")

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.l_pix, self.l_sem, self.l_obj, self.l_ciou, self.l_dep], dtype=np.float64
        )

    def as_dict(self) -> dict:
        return {
            "l_pix": self.l_pix,
            "l_sem": self.l_sem,
            "l_obj": self.l_obj,
            "l_ciou": self.l_ciou,
            "l_dep": self.l_dep,
        }


def bilinear_sample(values: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Sample a (H, W) or (H, W, C) grid at fractional pixel coordinates.

    Coordinates follow the half-pixel-center convention (pixel i covers
    [i-0.5, i+0.5] with its sample at integer i) and are clamped to the
    grid, which replicates border pixels.
    """
    h, w = values.shape[:2]
    px = np.clip(px, 0.0, w - 1.0)
    py = np.clip(py, 0.0, h - 1.0)
    x0 = np.floor(px).astype(np.intp)
    y0 = np.floor(py).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = px - x0
    fy = py - y0
    if values.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = values[y0, x0] * (1.0 - fx) + values[y0, x1] * fx
    bottom = values[y1, x0] * (1.0 - fx) + values[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def resize_raster(img: ImageRaster, width: int, height: int) -> ImageRaster:
    """Bilinear resize with half-pixel center alignment; output clamped to [0, 1].

    Resizing to the current size returns the input unchanged (bit-identical).
    """
    if width < 1 or height < 1:
        raise ValueError(f"target size must be positive, got {width}x{height}")
    if (width, height) == (img.width, img.height):
        return img
    src = img.data.astype(np.float64)
    scale_x = img.width / width
    scale_y = img.height / height
    px = (np.arange(width, dtype=np.float64) + 0.5) * scale_x - 0.5
    py = (np.arange(height, dtype=np.float64) + 0.5) * scale_y - 0.5
    out = bilinear_sample(src, px[None, :], py[:, None])
    return ImageRaster(np.clip(out, 0.0, 1.0).astype(np.float32))
