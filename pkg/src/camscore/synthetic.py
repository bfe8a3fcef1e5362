"""Deterministic scene rendering: a model-free source of perception bundles.

A scene is a list of colored shapes with boxes and depths. Rendering
produces everything a real perception stack would: the raster (painter's
order, far to near), exact detections with hash-derived class features, a
per-pixel depth map, and a bag-of-classes global feature. Two renders of
one spec are bit-identical, which makes these bundles usable as exact
test fixtures for the whole scoring pipeline.

perturb_scene applies one minimal, targeted edit per call (drop, add,
move, recolor, or depth swap), each designed to disturb exactly one
evaluation level of a faithful copy.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .types import (
    BoundingBox,
    DepthMap,
    Detection,
    FeatureVector,
    ImageRaster,
    PerceptionBundle,
)

SHAPES = ("circle", "square", "triangle")

PALETTE = {
    "red": (0.85, 0.13, 0.11),
    "green": (0.15, 0.72, 0.20),
    "blue": (0.16, 0.25, 0.85),
    "yellow": (0.93, 0.86, 0.12),
    "magenta": (0.80, 0.15, 0.75),
    "cyan": (0.10, 0.78, 0.80),
}

PERTURBATION_KINDS = ("drop_object", "add_object", "move_object", "recolor", "reorder_depth")

FEATURE_DIM = 64

#: Sparse components per class embedding; few enough that distinct classes
#: rarely share support, so cross-class costs sit near 1.
_ACTIVE_COMPONENTS = 8

#: Shapes are drawn this fraction inside their declared box, so box-aligned
#: crops always include a ring of background around the object.
SHAPE_INSET = 0.08

#: Background sits far behind everything so objects dominate depth crops.
_BACKGROUND_DEPTH_FACTOR = 10.0

_DEPTH_RANGE = (0.5, 5.0)
_SIZE_RANGE = (0.12, 0.38)
_EDGE_MARGIN = 0.02


@dataclass(frozen=True)
class SceneObject:
    shape: str
    color: tuple[float, float, float]
    box: BoundingBox
    depth: float

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}, expected one of {SHAPES}")
        color = tuple(float(c) for c in self.color)
        if len(color) != 3 or any(not 0.0 <= c <= 1.0 for c in color):
            raise ValueError(f"color must be three values in [0,1], got {self.color!r}")
        if not (math.isfinite(self.depth) and self.depth > 0.0):
            raise ValueError(f"object depth must be positive, got {self.depth}")
        object.__setattr__(self, "color", color)


@dataclass(frozen=True)
class SceneSpec:
    canvas: tuple[int, int]
    objects: tuple[SceneObject, ...]
    background: tuple[float, float, float]
    seed: int

    def __post_init__(self):
        w, h = (int(v) for v in self.canvas)
        if w < 8 or h < 8:
            raise ValueError(f"canvas must be at least 8x8, got {w}x{h}")
        bg = tuple(float(c) for c in self.background)
        if len(bg) != 3 or any(not 0.0 <= c <= 1.0 for c in bg):
            raise ValueError(f"background must be three values in [0,1], got {self.background!r}")
        object.__setattr__(self, "canvas", (w, h))
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "background", bg)


def class_embedding(shape: str, color) -> FeatureVector:
    """Sparse nonnegative 64-dim embedding of a (shape, quantized color) class.

    Derived from a cryptographic digest, so it is stable across processes
    and runs (unlike the builtin hash). Identical classes get identical
    vectors; distinct classes get near-disjoint support, and nonnegative
    entries keep every pairing cost within the padding cost 1.
    """
    quantized = ",".join(str(int(round(float(c) * 7))) for c in color)
    digest = hashlib.sha256(f"{shape}|{quantized}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    vec = np.zeros(FEATURE_DIM)
    active = rng.choice(FEATURE_DIM, size=_ACTIVE_COMPONENTS, replace=False)
    vec[active] = rng.uniform(0.25, 1.0, size=_ACTIVE_COMPONENTS)
    return FeatureVector(vec)


def _inset_bounds(box: BoundingBox) -> tuple[float, float, float, float]:
    dx = SHAPE_INSET * box.width
    dy = SHAPE_INSET * box.height
    return box.x1 + dx, box.y1 + dy, box.x2 - dx, box.y2 - dy


def _shape_mask(shape: str, box: BoundingBox, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Boolean mask of the shape over pixel-center coordinate grids."""
    ix1, iy1, ix2, iy2 = _inset_bounds(box)
    cx, cy = 0.5 * (ix1 + ix2), 0.5 * (iy1 + iy2)
    hw, hh = 0.5 * (ix2 - ix1), 0.5 * (iy2 - iy1)
    if shape == "square":
        return (np.abs(xs - cx) <= hw) & (np.abs(ys - cy) <= hh)
    if shape == "circle":
        return ((xs - cx) / hw) ** 2 + ((ys - cy) / hh) ** 2 <= 1.0
    # triangle: apex at top center, base at the bottom edge
    t = (ys - iy1) / (iy2 - iy1)
    inside_y = (ys >= iy1) & (ys <= iy2)
    return inside_y & (np.abs(xs - cx) <= np.clip(t, 0.0, 1.0) * hw)


def render_scene(spec: SceneSpec) -> PerceptionBundle:
    """Rasterize a scene into a complete, exactly reproducible bundle."""
    w, h = spec.canvas
    img = np.empty((h, w, 3), dtype=np.float64)
    img[:, :] = spec.background
    if spec.objects:
        bg_depth = _BACKGROUND_DEPTH_FACTOR * max(o.depth for o in spec.objects)
    else:
        bg_depth = 1.0
    depth = np.full((h, w), bg_depth, dtype=np.float64)

    xs = ((np.arange(w, dtype=np.float64) + 0.5) / w)[np.newaxis, :]
    ys = ((np.arange(h, dtype=np.float64) + 0.5) / h)[:, np.newaxis]
    # painter's order: farthest first, nearer objects overwrite
    for obj in sorted(spec.objects, key=lambda o: -o.depth):
        mask = _shape_mask(obj.shape, obj.box, xs, ys)
        img[mask] = obj.color
        depth[mask] = obj.depth

    detections = tuple(
        Detection(
            box=o.box,
            label=o.shape,
            feature=class_embedding(o.shape, o.color),
            confidence=1.0,
        )
        for o in spec.objects
    )
    global_vec = class_embedding("scene", spec.background).values.copy()
    for o in spec.objects:
        global_vec += class_embedding(o.shape, o.color).values

    return PerceptionBundle(
        image=ImageRaster(img.astype(np.float32)),
        global_feature=FeatureVector(global_vec),
        detections=detections,
        depth=DepthMap(depth),
        source="synthetic",
        meta={"scene_seed": spec.seed, "object_count": len(spec.objects)},
    )


def _random_box(rng: np.random.Generator) -> BoundingBox:
    bw = float(rng.uniform(*_SIZE_RANGE))
    bh = float(rng.uniform(*_SIZE_RANGE))
    cx = float(rng.uniform(bw / 2 + _EDGE_MARGIN, 1.0 - bw / 2 - _EDGE_MARGIN))
    cy = float(rng.uniform(bh / 2 + _EDGE_MARGIN, 1.0 - bh / 2 - _EDGE_MARGIN))
    return BoundingBox(cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2)


def random_scene(
    seed: int,
    canvas: tuple[int, int] = (64, 64),
    min_objects: int = 2,
    max_objects: int = 5,
) -> SceneSpec:
    """A random scene of distinct (shape, color) classes on a dark background.

    Classes are sampled without replacement, so no two objects in one
    scene are interchangeable under matching.
    """
    if not 1 <= min_objects <= max_objects <= len(SHAPES) * len(PALETTE):
        raise ValueError(f"bad object count range [{min_objects}, {max_objects}]")
    rng = np.random.default_rng(seed)
    combos = [(s, name) for s in SHAPES for name in PALETTE]
    count = int(rng.integers(min_objects, max_objects + 1))
    objects = []
    for pick in rng.choice(len(combos), size=count, replace=False):
        shape, color_name = combos[int(pick)]
        objects.append(
            SceneObject(
                shape=shape,
                color=PALETTE[color_name],
                box=_random_box(rng),
                depth=float(rng.uniform(*_DEPTH_RANGE)),
            )
        )
    return SceneSpec(
        canvas=canvas, objects=tuple(objects), background=(0.12, 0.12, 0.12), seed=int(seed)
    )


def perturb_scene(spec: SceneSpec, kind: str, seed: int) -> SceneSpec:
    """One minimal targeted edit; deterministic given the seed.

    drop_object / add_object change the object count (object matching),
    move_object displaces one box by at least 0.2 (CIoU), recolor swaps
    one color for the farthest available palette entry (pixel level), and
    reorder_depth exchanges the depths of two objects (depth error).
    Raises ValueError when the scene cannot support the edit.
    """
    if kind not in PERTURBATION_KINDS:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    rng = np.random.default_rng(seed)
    objs = list(spec.objects)

    if kind == "drop_object":
        if not objs:
            raise ValueError("drop_object needs at least one object")
        del objs[int(rng.integers(len(objs)))]

    elif kind == "add_object":
        used = {(o.shape, o.color) for o in objs}
        free = [(s, c) for s in SHAPES for c in PALETTE.values() if (s, c) not in used]
        if not free:
            raise ValueError("add_object: every shape/color class is already present")
        shape, color = free[int(rng.integers(len(free)))]
        objs.append(
            SceneObject(
                shape=shape,
                color=color,
                box=_random_box(rng),
                depth=float(rng.uniform(*_DEPTH_RANGE)),
            )
        )

    elif kind == "move_object":
        if not objs:
            raise ValueError("move_object needs at least one object")
        i = int(rng.integers(len(objs)))
        target = objs[i]
        bw, bh = target.box.width, target.box.height
        ocx, ocy = target.box.center
        for _ in range(1000):
            cx = float(rng.uniform(bw / 2 + _EDGE_MARGIN, 1.0 - bw / 2 - _EDGE_MARGIN))
            cy = float(rng.uniform(bh / 2 + _EDGE_MARGIN, 1.0 - bh / 2 - _EDGE_MARGIN))
            if math.hypot(cx - ocx, cy - ocy) >= 0.2:
                break
        else:
            raise ValueError("move_object: no admissible displaced position found")
        moved = BoundingBox(cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2)
        objs[i] = replace(target, box=moved)

    elif kind == "recolor":
        if not objs:
            raise ValueError("recolor needs at least one object")
        i = int(rng.integers(len(objs)))
        target = objs[i]
        used = {(o.shape, o.color) for k, o in enumerate(objs) if k != i}
        candidates = [
            c
            for c in PALETTE.values()
            if c != target.color and (target.shape, c) not in used
        ]
        if not candidates:
            raise ValueError("recolor: no alternative color available")
        farthest = max(
            candidates, key=lambda c: sum((a - b) ** 2 for a, b in zip(c, target.color))
        )
        objs[i] = replace(target, color=farthest)

    else:  # reorder_depth
        if len(objs) < 2:
            raise ValueError("reorder_depth needs at least two objects")
        depths = [o.depth for o in objs]
        if len(set(depths)) < 2:
            raise ValueError("reorder_depth: all object depths are equal")
        i, j = (int(v) for v in rng.choice(len(objs), size=2, replace=False))
        if objs[i].depth == objs[j].depth:
            i = int(np.argmin(depths))
            j = int(np.argmax(depths))
        di, dj = objs[i].depth, objs[j].depth
        objs[i] = replace(objs[i], depth=dj)
        objs[j] = replace(objs[j], depth=di)

    return SceneSpec(
        canvas=spec.canvas, objects=tuple(objs), background=spec.background, seed=spec.seed
    )


def scene_to_dict(spec: SceneSpec) -> dict:
    return {
        "canvas": list(spec.canvas),
        "background": list(spec.background),
        "seed": spec.seed,
        "objects": [
            {
                "shape": o.shape,
                "color": list(o.color),
                "box": [o.box.x1, o.box.y1, o.box.x2, o.box.y2],
                "depth": o.depth,
            }
            for o in spec.objects
        ],
    }


def scene_from_dict(doc: dict, where: str = "scene") -> SceneSpec:
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    for key in ("canvas", "background", "seed", "objects"):
        if key not in doc:
            raise SchemaError(f"{where}: missing field {key!r}")
    try:
        objects = []
        for k, od in enumerate(doc["objects"]):
            box = od["box"]
            objects.append(
                SceneObject(
                    shape=od["shape"],
                    color=tuple(od["color"]),
                    box=BoundingBox(float(box[0]), float(box[1]), float(box[2]), float(box[3])),
                    depth=float(od["depth"]),
                )
            )
        return SceneSpec(
            canvas=tuple(doc["canvas"]),
            objects=tuple(objects),
            background=tuple(doc["background"]),
            seed=int(doc["seed"]),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: invalid scene spec: {exc}") from exc


def save_scene(spec: SceneSpec, path) -> None:
    """Write a spec as JSON; conventional extension is .scene.json."""
    Path(path).write_text(json.dumps(scene_to_dict(spec), indent=2) + "\n")


def load_scene(path) -> SceneSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"unreadable scene file {path}: {exc}") from exc
    return scene_from_dict(doc, where=str(path))
