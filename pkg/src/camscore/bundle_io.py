"""Perception-bundle directory serialization.

Layout of a bundle directory:

    manifest.json   index of everything below, with image checksum
    image.raw       "CAMR1" + u32 w, h, c (LE) + w*h*c bytes, row-major, channel-interleaved
    global.f32      "CAMF1" + u32 dim (LE) + dim float32 LE
    det_NNN.f32     one per detection, same layout as global.f32
    depth.f32       "CAMD1" + u32 w, h (LE) + w*h float32 LE, row-major

All multi-byte integers are little-endian. Raster intensities are stored
as 8 bits per channel, so save->load reproduces rasters bit-exactly for
any raster already on the k/255 grid; features and depth round-trip at
float32 precision.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import BundleError
from .types import (
    BoundingBox,
    DepthMap,
    Detection,
    FeatureVector,
    ImageRaster,
    PerceptionBundle,
    SOURCES,
)

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
RASTER_MAGIC = b"CAMR1"
FEATURE_MAGIC = b"CAMF1"
DEPTH_MAGIC = b"CAMD1"


def _read_header(raw: bytes, magic: bytes, n_fields: int, path: Path) -> tuple:
    head = len(magic) + 4 * n_fields
    if len(raw) < head:
        raise BundleError(f"file shorter than its {magic.decode()} header", path=path)
    if raw[: len(magic)] != magic:
        raise BundleError(
            f"bad magic {raw[:len(magic)]!r}, expected {magic!r}", path=path
        )
    fields = struct.unpack("<" + "I" * n_fields, raw[len(magic) : head])
    return fields, raw[head:]


def write_raster_file(path: Path, raster: ImageRaster) -> None:
    payload = np.round(raster.data.astype(np.float64) * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(RASTER_MAGIC)
        fh.write(struct.pack("<III", raster.width, raster.height, raster.channels))
        fh.write(payload.tobytes())


def read_raster_file(path: Path) -> ImageRaster:
    raw = Path(path).read_bytes()
    (w, h, c), payload = _read_header(raw, RASTER_MAGIC, 3, path)
    if c not in (1, 3):
        raise BundleError(f"raster channel count must be 1 or 3, got {c}", path=path)
    expected = w * h * c
    if len(payload) != expected:
        raise BundleError(
            f"raster payload is {len(payload)} bytes, expected {expected}", path=path
        )
    data = np.frombuffer(payload, dtype=np.uint8).reshape(h, w, c)
    return ImageRaster(data.astype(np.float32) / np.float32(255.0))


def write_feature_file(path: Path, feature: FeatureVector) -> None:
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<I", feature.dim))
        fh.write(feature.values.astype("<f4").tobytes())


def read_feature_file(path: Path) -> FeatureVector:
    raw = Path(path).read_bytes()
    (dim,), payload = _read_header(raw, FEATURE_MAGIC, 1, path)
    if len(payload) != 4 * dim:
        raise BundleError(
            f"feature payload is {len(payload)} bytes, expected {4 * dim}", path=path
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    try:
        return FeatureVector(values)
    except ValueError as exc:
        raise BundleError(str(exc), path=path) from exc


def write_depth_file(path: Path, depth: DepthMap) -> None:
    with open(path, "wb") as fh:
        fh.write(DEPTH_MAGIC)
        fh.write(struct.pack("<II", depth.width, depth.height))
        fh.write(depth.data.astype("<f4").tobytes())


def read_depth_file(path: Path) -> DepthMap:
    raw = Path(path).read_bytes()
    (w, h), payload = _read_header(raw, DEPTH_MAGIC, 2, path)
    if len(payload) != 4 * w * h:
        raise BundleError(
            f"depth payload is {len(payload)} bytes, expected {4 * w * h}", path=path
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(h, w)
    try:
        return DepthMap(values)
    except ValueError as exc:
        raise BundleError(str(exc), path=path, field="depth") from exc


def save_bundle(bundle: PerceptionBundle, path) -> None:
    """Write a bundle directory; overwrites files already present."""
    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise BundleError(f"cannot create bundle directory: {exc}", path=root) from exc

    write_raster_file(root / "image.raw", bundle.image)
    sha = hashlib.sha256((root / "image.raw").read_bytes()).hexdigest()
    write_feature_file(root / "global.f32", bundle.global_feature)

    det_entries = []
    for i, det in enumerate(bundle.detections):
        name = f"det_{i:03d}.f32"
        write_feature_file(root / name, det.feature)
        det_entries.append(
            {
                "box": [det.box.x1, det.box.y1, det.box.x2, det.box.y2],
                "label": det.label,
                "confidence": det.confidence,
                "feature_file": name,
            }
        )

    write_depth_file(root / "depth.f32", bundle.depth)

    manifest = {
        "version": MANIFEST_VERSION,
        "source": bundle.source,
        "image": {
            "w": bundle.image.width,
            "h": bundle.image.height,
            "c": bundle.image.channels,
            "file": "image.raw",
            "sha256": sha,
        },
        "global_feature": {"dim": bundle.global_feature.dim, "file": "global.f32"},
        "detections": det_entries,
        "depth": {"w": bundle.depth.width, "h": bundle.depth.height, "file": "depth.f32"},
        "meta": {str(k): str(v) for k, v in bundle.meta.items()},
    }
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")


def _require(mapping: dict, key: str, path: Path, where: str):
    if key not in mapping:
        raise BundleError("missing required key", path=path, field=f"{where}.{key}")
    return mapping[key]


def load_bundle(path) -> PerceptionBundle:
    """Load and fully validate a bundle directory.

    Raises BundleError naming the offending file and field for any schema
    violation, dimension mismatch, non-positive depth, or checksum failure.
    """
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise BundleError("manifest not found", path=manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BundleError(f"manifest is not valid JSON: {exc}", path=manifest_path) from exc
    if not isinstance(manifest, dict):
        raise BundleError("manifest must be a JSON object", path=manifest_path)

    version = _require(manifest, "version", manifest_path, "manifest")
    if version != MANIFEST_VERSION:
        raise BundleError(
            f"unsupported manifest version {version!r}", path=manifest_path, field="version"
        )
    source = _require(manifest, "source", manifest_path, "manifest")
    if source not in SOURCES:
        raise BundleError(f"unknown source {source!r}", path=manifest_path, field="source")

    img_info = _require(manifest, "image", manifest_path, "manifest")
    img_file = root / _require(img_info, "file", manifest_path, "image")
    if not img_file.is_file():
        raise BundleError("image file not found", path=img_file)
    sha = hashlib.sha256(img_file.read_bytes()).hexdigest()
    expected_sha = _require(img_info, "sha256", manifest_path, "image")
    if sha != expected_sha:
        raise BundleError(
            f"checksum failure: image file hashes to {sha[:12]}..., manifest says "
            f"{str(expected_sha)[:12]}...",
            path=img_file,
            field="image.sha256",
        )
    try:
        image = read_raster_file(img_file)
    except ValueError as exc:
        raise BundleError(str(exc), path=img_file, field="image") from exc
    for key in ("w", "h", "c"):
        declared = _require(img_info, key, manifest_path, "image")
        actual = {"w": image.width, "h": image.height, "c": image.channels}[key]
        if declared != actual:
            raise BundleError(
                f"image {key}={actual} in file but {declared} in manifest",
                path=img_file,
                field=f"image.{key}",
            )

    feat_info = _require(manifest, "global_feature", manifest_path, "manifest")
    feat_file = root / _require(feat_info, "file", manifest_path, "global_feature")
    if not feat_file.is_file():
        raise BundleError("global feature file not found", path=feat_file)
    global_feature = read_feature_file(feat_file)
    declared_dim = _require(feat_info, "dim", manifest_path, "global_feature")
    if declared_dim != global_feature.dim:
        raise BundleError(
            f"feature dim {global_feature.dim} in file but {declared_dim} in manifest",
            path=feat_file,
            field="global_feature.dim",
        )

    detections = []
    det_entries = _require(manifest, "detections", manifest_path, "manifest")
    if not isinstance(det_entries, list):
        raise BundleError("detections must be a list", path=manifest_path, field="detections")
    for i, entry in enumerate(det_entries):
        where = f"detections[{i}]"
        box_vals = _require(entry, "box", manifest_path, where)
        if not (isinstance(box_vals, list) and len(box_vals) == 4):
            raise BundleError(
                "box must be a 4-element list", path=manifest_path, field=f"{where}.box"
            )
        try:
            box = BoundingBox(*(float(v) for v in box_vals))
        except (TypeError, ValueError) as exc:
            raise BundleError(str(exc), path=manifest_path, field=f"{where}.box") from exc
        label = str(_require(entry, "label", manifest_path, where))
        confidence = _require(entry, "confidence", manifest_path, where)
        det_file = root / _require(entry, "feature_file", manifest_path, where)
        if not det_file.is_file():
            raise BundleError("detection feature file not found", path=det_file)
        feature = read_feature_file(det_file)
        try:
            detections.append(
                Detection(box=box, label=label, feature=feature, confidence=float(confidence))
            )
        except (TypeError, ValueError) as exc:
            raise BundleError(str(exc), path=manifest_path, field=where) from exc

    depth_info = _require(manifest, "depth", manifest_path, "manifest")
    depth_file = root / _require(depth_info, "file", manifest_path, "depth")
    if not depth_file.is_file():
        raise BundleError("depth file not found", path=depth_file)
    depth = read_depth_file(depth_file)
    for key in ("w", "h"):
        declared = _require(depth_info, key, manifest_path, "depth")
        actual = {"w": depth.width, "h": depth.height}[key]
        if declared != actual:
            raise BundleError(
                f"depth {key}={actual} in file but {declared} in manifest",
                path=depth_file,
                field=f"depth.{key}",
            )

    meta = manifest.get("meta", {})
    if not isinstance(meta, dict):
        raise BundleError("meta must be an object", path=manifest_path, field="meta")

    try:
        return PerceptionBundle(
            image=image,
            global_feature=global_feature,
            detections=tuple(detections),
            depth=depth,
            source=source,
            meta={str(k): str(v) for k, v in meta.items()},
        )
    except ValueError as exc:
        raise BundleError(str(exc), path=manifest_path) from exc
