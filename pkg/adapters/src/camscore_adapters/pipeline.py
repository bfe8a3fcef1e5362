"""The extraction pipeline: image or caption in, perception bundle out.

Stage order for an image is encoder (whole frame), detector, encoder
again per object crop, depth. A caption first runs the text-to-image
stage and then takes the same path. Adapters only normalize and
serialize model outputs; no metric math happens here, so the numerical
core stays model-free.

One pipeline lives per process (get_pipeline); run several processes for
batch throughput. The T2I model loads lazily on first generation, so
extraction never pays for it.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from camscore import (
    BoundingBox,
    DepthMap,
    Detection,
    FeatureVector,
    ImageRaster,
    PerceptionBundle,
    load_bundle,
    save_bundle,
)

from . import __version__
from .config import AdapterConfig
from .errors import AdapterError, InferenceError, InputError
from .registry import resolve

log = logging.getLogger("camscore_adapters")

_GRAY_MODES = ("1", "L", "I", "I;16", "F")


@dataclass
class ModelPipeline:
    """Loaded stage models for one config; at most one per process."""

    key: tuple
    encoder: object
    detector: object
    depth: object
    device: str
    t2i_id: str
    _t2i: object = field(default=None, repr=False)

    def get_t2i(self):
        if self._t2i is None:
            self._t2i = resolve("t2i", self.t2i_id, self.device)
        return self._t2i


_ACTIVE: tuple | None = None


def get_pipeline(cfg: AdapterConfig) -> ModelPipeline:
    """Return the process pipeline for cfg, loading models on first use.

    A config naming different models replaces the previous pipeline; the
    invariant is one live pipeline per process, not one per config.
    """
    global _ACTIVE
    key = cfg.pipeline_key()
    if _ACTIVE is None or _ACTIVE[0] != key:
        pipeline = ModelPipeline(
            key=key,
            encoder=resolve("encoder", cfg.encoder, cfg.device),
            detector=resolve("detector", cfg.detector, cfg.device),
            depth=resolve("depth", cfg.depth, cfg.device),
            device=cfg.device,
            t2i_id=cfg.t2i,
        )
        _ACTIVE = (key, pipeline)
    return _ACTIVE[1]


def read_image(path) -> np.ndarray:
    """Decode an image file to an (h, w, 3) float32 array in [0, 1].

    Grayscale inputs are replicated to three channels; alpha is
    composited over white so transparency has one defined meaning.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in _GRAY_MODES:
                gray = np.asarray(img.convert("L"), dtype=np.float32) / np.float32(255.0)
                return np.repeat(gray[:, :, None], 3, axis=2)
            if "A" in img.getbands():
                rgba = img.convert("RGBA")
                white = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
                img = Image.alpha_composite(white, rgba)
            rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
    except FileNotFoundError as exc:
        raise InputError(f"image file not found: {path}") from exc
    except (OSError, UnidentifiedImageError) as exc:
        raise InputError(f"cannot decode image {path}: {exc}") from exc
    return rgb / np.float32(255.0)


def _stage(stage: str, fn):
    try:
        return fn()
    except AdapterError:
        raise
    except Exception as exc:
        raise InferenceError(str(exc), stage=stage) from exc


def _encode(pipeline, image: np.ndarray, what: str) -> np.ndarray:
    feat = _stage("encoder", lambda: pipeline.encoder.encode(image))
    feat = np.asarray(feat, dtype=np.float64)
    if feat.ndim != 1 or feat.size < 1:
        raise InferenceError(f"{what} feature must be 1-d, got shape {feat.shape}", stage="encoder")
    if not np.all(np.isfinite(feat)):
        raise InferenceError(f"{what} feature contains non-finite values", stage="encoder")
    return feat


def _normalize_box(raw_box, width: int, height: int) -> BoundingBox | None:
    """Pixel box -> normalized BoundingBox; None when degenerate."""
    try:
        x1, y1, x2, y2 = (float(v) for v in raw_box)
    except (TypeError, ValueError) as exc:
        raise InferenceError(f"detector returned unusable box {raw_box!r}", stage="detector") from exc
    if not all(math.isfinite(v) for v in (x1, y1, x2, y2)):
        return None
    x1, x2 = max(0.0, x1), min(float(width), x2)
    y1, y2 = max(0.0, y1), min(float(height), y2)
    if not (x1 < x2 and y1 < y2):
        return None
    return BoundingBox(x1 / width, y1 / height, x2 / width, y2 / height)


def _crop(image: np.ndarray, box: BoundingBox) -> np.ndarray:
    h, w = image.shape[:2]
    x0 = min(int(math.floor(box.x1 * w)), w - 1)
    y0 = min(int(math.floor(box.y1 * h)), h - 1)
    x1 = min(max(int(math.ceil(box.x2 * w)), x0 + 1), w)
    y1 = min(max(int(math.ceil(box.y2 * h)), y0 + 1), h)
    return image[y0:y1, x0:x1]


def _detections(pipeline, image: np.ndarray, global_dim: int) -> tuple:
    h, w = image.shape[:2]
    raw = _stage("detector", lambda: pipeline.detector.detect(image))
    out = []
    for r in raw:
        box = _normalize_box(r.box, w, h)
        if box is None:
            # positive area is a bundle invariant; dropping beats failing the write
            log.warning("discarding zero-area or degenerate detection box %r (%r)", r.box, r.label)
            continue
        confidence = float(r.confidence)
        if not math.isfinite(confidence):
            log.warning("discarding detection with non-finite confidence %r", r.confidence)
            continue
        feat = _encode(pipeline, _crop(image, box), f"crop {len(out)}")
        if feat.size != global_dim:
            raise InferenceError(
                f"crop feature dim {feat.size} != global feature dim {global_dim}", stage="encoder"
            )
        out.append(
            Detection(
                box=box,
                label=str(r.label),
                feature=FeatureVector(feat),
                confidence=min(1.0, max(0.0, confidence)),
            )
        )
    return tuple(out)


def _depth(pipeline, image: np.ndarray) -> DepthMap:
    h, w = image.shape[:2]
    depth = _stage("depth", lambda: pipeline.depth.estimate(image))
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != (h, w):
        raise InferenceError(f"depth shape {depth.shape} != image shape {(h, w)}", stage="depth")
    if not np.all(np.isfinite(depth)) or depth.size and depth.min() <= 0.0:
        raise InferenceError("depth values must be finite and > 0", stage="depth")
    return DepthMap(depth)


def _run_stages(pipeline, image: np.ndarray, source: str, meta: dict) -> PerceptionBundle:
    global_feat = _encode(pipeline, image, "global")
    detections = _detections(pipeline, image, global_feat.size)
    depth = _depth(pipeline, image)
    return PerceptionBundle(
        image=ImageRaster(image),
        global_feature=FeatureVector(global_feat),
        detections=detections,
        depth=depth,
        source=source,
        meta=meta,
    )


def _base_meta(cfg: AdapterConfig) -> dict:
    return {
        "adapter_version": __version__,
        "encoder_model": cfg.encoder,
        "detector_model": cfg.detector,
        "depth_model": cfg.depth,
        "device": cfg.device,
    }


def _emit(bundle: PerceptionBundle, out: Path) -> Path:
    save_bundle(bundle, out)
    load_bundle(out)  # cross-component gate: what we wrote must validate
    log.info("wrote %s bundle with %d detections to %s", bundle.source, len(bundle.detections), out)
    return out


def extract_bundle(image_file, cfg: AdapterConfig, out_dir=None) -> Path:
    """Run the perception stages on an image file and write a bundle.

    The bundle directory (out_dir, or cfg.out_dir/<image stem>) is
    validated by the scoring package's loader before this returns.
    """
    image = read_image(image_file)
    pipeline = get_pipeline(cfg)
    meta = _base_meta(cfg)
    meta["image_file"] = Path(image_file).name
    bundle = _run_stages(pipeline, image, source="original", meta=meta)
    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir) / Path(image_file).stem
    return _emit(bundle, out)


def generate_and_extract(caption: str, cfg: AdapterConfig, out_dir=None) -> Path:
    """Render a caption with the T2I stage, then extract as for an image.

    The caption, the T2I model id, and the sampling parameters all land
    in bundle meta, so a generated bundle states how it was made.
    """
    if not isinstance(caption, str) or not caption.strip():
        raise InputError("caption is empty; nothing to generate")
    pipeline = get_pipeline(cfg)
    t2i = pipeline.get_t2i()
    image = _stage(
        "t2i",
        lambda: t2i.generate(caption, seed=cfg.seed, steps=cfg.steps, guidance=cfg.guidance),
    )
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3 or 0 in image.shape:
        raise InferenceError(f"generated image has shape {image.shape}, expected (h, w, 3)", stage="t2i")
    if not np.all(np.isfinite(image)):
        raise InferenceError("generated image contains non-finite values", stage="t2i")
    image = np.clip(image, 0.0, 1.0)

    meta = _base_meta(cfg)
    meta.update(
        {
            "t2i_model": cfg.t2i,
            "caption": caption,
            "seed": cfg.seed,
            "steps": cfg.steps,
            "guidance": cfg.guidance,
        }
    )
    bundle = _run_stages(pipeline, image, source="generated", meta=meta)
    if out_dir is not None:
        out = Path(out_dir)
    else:
        tag = hashlib.sha256(caption.encode("utf-8")).hexdigest()[:12]
        out = Path(cfg.out_dir) / f"gen_{tag}_s{cfg.seed}"
    return _emit(bundle, out)
