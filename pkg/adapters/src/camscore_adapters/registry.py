"""Backend registry: model ids -> loaded stage models.

A model id is "scheme:variant". The scheme picks a registered loader for
that stage; the loader gets the variant and device and returns a live
model object implementing the stage protocol below. Heavyweight stacks
(diffusion T2I, ViT encoders, neural detectors and depth nets) plug in at
runtime through register_backend; the package ships a self-contained
procedural family (see backends) that exercises every contract path
without weights or accelerators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .config import STAGES
from .errors import ModelLoadError


@dataclass(frozen=True)
class RawDetection:
    """Detector output before normalization: pixel-coordinate box, label, confidence.

    box is (x1, y1, x2, y2) in pixels of the analyzed image; no validity
    guarantees, the pipeline clamps and filters.
    """

    box: tuple
    label: str
    confidence: float


class TextToImage(Protocol):
    def generate(self, caption: str, *, seed: int, steps: int, guidance: float) -> np.ndarray:
        """Render a caption to an (h, w, 3) float array in [0, 1]."""


class GlobalEncoder(Protocol):
    def encode(self, image: np.ndarray) -> np.ndarray:
        """Map an (h, w, 3) array to a fixed-dimension 1-d feature. Same
        encoder runs on whole frames and on object crops, so the output
        dimension must not depend on input size."""


class ObjectDetector(Protocol):
    def detect(self, image: np.ndarray) -> list:
        """Return RawDetections for an (h, w, 3) array; may be empty."""


class DepthEstimator(Protocol):
    def estimate(self, image: np.ndarray) -> np.ndarray:
        """Return a strictly positive (h, w) relative depth map."""


# (stage, scheme) -> loader(variant, device) -> model object
_LOADERS: dict[tuple[str, str], Callable] = {}
_BUILTINS_READY = False


def register_backend(stage: str, scheme: str, loader: Callable) -> None:
    """Make `loader` resolve ids "scheme:*" for `stage`; replaces any previous."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}, expected one of {STAGES}")
    _LOADERS[(stage, scheme)] = loader


def _ensure_builtins() -> None:
    # importing backends registers the procedural family as a side effect
    global _BUILTINS_READY
    if not _BUILTINS_READY:
        from . import backends  # noqa: F401

        _BUILTINS_READY = True


def resolve(stage: str, model_id: str, device: str):
    """Load the model behind `model_id` for `stage` on `device`.

    Raises ModelLoadError naming the stage when the scheme is unknown or
    the loader itself fails.
    """
    _ensure_builtins()
    scheme, _, variant = model_id.partition(":")
    loader = _LOADERS.get((stage, scheme))
    if loader is None:
        known = sorted(s for st, s in _LOADERS if st == stage)
        raise ModelLoadError(
            f"no backend for model id {model_id!r} (registered schemes: {known})", stage=stage
        )
    try:
        return loader(variant, device)
    except ModelLoadError:
        raise
    except Exception as exc:
        raise ModelLoadError(f"loading {model_id!r} failed: {exc}", stage=stage) from exc
