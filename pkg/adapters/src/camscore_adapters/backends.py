"""Procedural reference backends: one working model per pipeline stage.

These are small deterministic models, not mocks: the painter really
renders captions, the pooling encoder really summarizes appearance, the
blob detector really finds objects, the luminance depth model really
produces a relative depth map. They run on any cpu with no weights to
download, which makes the adapter layer testable end to end; production
stacks (diffusion T2I, ViT encoders, neural detectors, monocular depth
nets) register their own loaders next to these via registry.register_backend.

All four are cpu-only and bit-deterministic for fixed inputs and seeds.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np
from scipy import ndimage

from .errors import ModelLoadError
from .registry import RawDetection, register_backend

#: Named reference colors, used by the painter for caption color words and
#: by the detector to label blobs by nearest color.
COLOR_NAMES = {
    "red": (0.86, 0.12, 0.12),
    "green": (0.13, 0.65, 0.22),
    "blue": (0.15, 0.25, 0.82),
    "yellow": (0.92, 0.86, 0.14),
    "orange": (0.94, 0.55, 0.10),
    "purple": (0.56, 0.17, 0.72),
    "cyan": (0.12, 0.78, 0.80),
    "magenta": (0.85, 0.16, 0.70),
    "brown": (0.46, 0.28, 0.12),
    "black": (0.04, 0.04, 0.04),
    "white": (0.97, 0.97, 0.97),
    "gray": (0.50, 0.50, 0.50),
}

_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def nearest_color_name(rgb) -> str:
    rgb = np.asarray(rgb, dtype=np.float64)
    names = list(COLOR_NAMES)
    table = np.array([COLOR_NAMES[n] for n in names])
    return names[int(np.argmin(((table - rgb) ** 2).sum(axis=1)))]


def _check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) array, got shape {image.shape}")
    return image


class PainterT2I:
    """Caption-conditioned procedural renderer.

    Lays soft-edged shapes over a low-contrast vertical gradient. One
    shape per non-color caption token (capped); color words steer shape
    colors, with `guidance` setting how strongly (0 ignores the caption
    palette, large values follow it). `steps` anneals edge softness: more
    steps, crisper shapes. Identical (caption, seed, steps, guidance)
    reproduce the identical array.
    """

    size = 256
    max_shapes = 6

    def generate(self, caption: str, *, seed: int, steps: int, guidance: float) -> np.ndarray:
        tokens = re.findall(r"[a-z]+", caption.lower())
        color_words = [t for t in tokens if t in COLOR_NAMES]
        n_shapes = min(self.max_shapes, max(1, len(tokens) - len(color_words)))
        rng = _caption_rng(caption, seed)

        s = self.size
        # background: gentle vertical gradient near mid-gray, so vivid
        # foreground shapes stay separable from it
        c_top = 0.45 + 0.12 * rng.random(3)
        c_bot = 0.45 + 0.12 * rng.random(3)
        t = np.linspace(0.0, 1.0, s)[:, None, None]
        canvas = (1.0 - t) * c_top + t * c_bot
        canvas = np.broadcast_to(canvas, (s, s, 3)).copy()

        yy, xx = np.mgrid[0:s, 0:s].astype(np.float64)
        mix = guidance / (guidance + 1.0)
        edge = max(0.75, 8.0 / steps)
        for i in range(n_shapes):
            cx, cy = rng.uniform(0.15 * s, 0.85 * s, 2)
            rx, ry = rng.uniform(0.06 * s, 0.18 * s, 2)
            vivid = np.where(rng.random(3) < 0.5, rng.uniform(0.7, 1.0, 3), rng.uniform(0.0, 0.25, 3))
            color = vivid
            if color_words:
                wanted = np.array(COLOR_NAMES[color_words[i % len(color_words)]])
                color = (1.0 - mix) * vivid + mix * wanted
            if rng.random() < 0.5:
                d = np.sqrt(((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2)
            else:
                d = np.maximum(np.abs(xx - cx) / rx, np.abs(yy - cy) / ry)
            alpha = np.clip((1.0 - d) * min(rx, ry) / edge, 0.0, 1.0)[..., None]
            canvas = canvas * (1.0 - alpha) + color * alpha
        return np.clip(canvas, 0.0, 1.0).astype(np.float32)


def _caption_rng(caption: str, seed: int) -> np.random.Generator:
    digest = hashlib.sha256(caption.encode("utf-8")).digest()
    words = np.frombuffer(digest[:16], dtype="<u4")
    return np.random.default_rng([int(seed), *map(int, words)])


class PoolEncoder:
    """Fixed-dimension appearance summary by block mean pooling.

    The encode dimension is grid*grid*3 + 3 channel means + 1 constant
    bias, independent of input size (a 1-pixel crop and a full frame map
    to the same space). The bias keeps every feature at nonzero norm so
    cosine similarity stays defined on blank inputs.
    """

    grid = 8

    @property
    def dim(self) -> int:
        return self.grid * self.grid * 3 + 4

    def encode(self, image: np.ndarray) -> np.ndarray:
        image = _check_image(image)
        pooled = _block_pool(image, self.grid)
        return np.concatenate([pooled.ravel(), image.mean(axis=(0, 1)), [1.0]])


def _block_pool(image: np.ndarray, grid: int) -> np.ndarray:
    """Mean over a grid x grid partition; cells replicate when the input
    is smaller than the grid."""
    h, w = image.shape[:2]
    out = np.empty((grid, grid, 3), dtype=np.float64)
    for i in range(grid):
        r0 = (i * h) // grid
        r1 = max(((i + 1) * h) // grid, r0 + 1)
        for j in range(grid):
            c0 = (j * w) // grid
            c1 = max(((j + 1) * w) // grid, c0 + 1)
            out[i, j] = image[r0:r1, c0:c1].mean(axis=(0, 1))
    return out


class BlobDetector:
    """Connected-component detector against a global median background.

    A pixel is foreground when its color sits farther than `threshold`
    from the per-channel median of the frame; 8-connected components of
    at least `min_area` pixels become detections. Labels are nearest
    reference color names; confidence is fill solidity (component area
    over box area). Assumes mostly-uniform backgrounds, which is what the
    painter produces; cluttered photography needs a neural detector.
    """

    threshold = 0.15
    min_area = 9
    max_detections = 64

    def detect(self, image: np.ndarray) -> list:
        image = _check_image(image)
        background = np.median(image.reshape(-1, 3), axis=0)
        dist = np.sqrt(((image - background) ** 2).sum(axis=-1))
        labels, count = ndimage.label(dist > self.threshold, structure=np.ones((3, 3), bool))
        found = []
        for index, sl in enumerate(ndimage.find_objects(labels), start=1):
            component = labels[sl] == index
            area = int(component.sum())
            if area < self.min_area:
                continue
            y0, y1 = sl[0].start, sl[0].stop
            x0, x1 = sl[1].start, sl[1].stop
            mean_rgb = image[sl][component].mean(axis=0)
            solidity = area / ((y1 - y0) * (x1 - x0))
            found.append(
                RawDetection(
                    box=(float(x0), float(y0), float(x1), float(y1)),
                    label=nearest_color_name(mean_rgb),
                    confidence=min(1.0, solidity),
                )
            )
        found.sort(key=lambda d: (-(d.box[2] - d.box[0]) * (d.box[3] - d.box[1]), d.box))
        return found[: self.max_detections]


class LumaDepth:
    """Relative depth from smoothed inverse luminance (bright reads near).

    Output lies in [0.5, 4.5], strictly positive as the depth contract
    requires; only ratios carry meaning downstream.
    """

    smoothing = 5

    def estimate(self, image: np.ndarray) -> np.ndarray:
        image = _check_image(image)
        luma = image @ _LUMA_WEIGHTS
        depth = 0.5 + 4.0 * (1.0 - luma)
        # uniform filter is a convex combination, so the [0.5, 4.5] bounds hold
        return ndimage.uniform_filter(depth, size=self.smoothing, mode="nearest")


def _check_procedural(stage: str, scheme: str, variant: str, device: str) -> None:
    if device != "cpu":
        raise ModelLoadError(f"{scheme} models are cpu-only, got device {device!r}", stage=stage)
    if variant != "v1":
        raise ModelLoadError(f"unknown {scheme} variant {variant!r} (known: ['v1'])", stage=stage)


def _load_painter(variant, device):
    _check_procedural("t2i", "painter", variant, device)
    return PainterT2I()


def _load_pool(variant, device):
    _check_procedural("encoder", "pool", variant, device)
    return PoolEncoder()


def _load_blob(variant, device):
    _check_procedural("detector", "blob", variant, device)
    return BlobDetector()


def _load_luma(variant, device):
    _check_procedural("depth", "luma", variant, device)
    return LumaDepth()


register_backend("t2i", "painter", _load_painter)
register_backend("encoder", "pool", _load_pool)
register_backend("detector", "blob", _load_blob)
register_backend("depth", "luma", _load_luma)
