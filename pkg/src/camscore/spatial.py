"""Spatial refinement of matched object pairs: position and depth agreement.

Two signals per matched pair:

* ciou_loss -- complete-IoU loss between the two boxes: overlap, center
  distance relative to the enclosing-box diagonal, and an aspect-ratio
  term, reported with all intermediate quantities.
* scale_invariant_depth_error -- variance of the log-depth difference,
  which cancels any global scale factor between the two depth maps.

Pair depth errors are taken over the box regions of each depth map,
bilinearly resampled to a common square grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matching import Assignment
from .types import BoundingBox, DepthMap, PerceptionBundle, bilinear_sample

#: Side of the square grid each box region is resampled to before comparison.
DEPTH_CROP_SIZE = 32


@dataclass(frozen=True)
class SpatialPairScore:
    """CIoU decomposition for one matched pair, plus its depth error.

    ciou_loss = (1 - iou) + center_distance_sq / enclosing_diag_sq
    + tradeoff * aspect_term. depth_error stays 0.0 until filled in by
    spatial scoring.
    """

    iou: float
    center_distance_sq: float
    enclosing_diag_sq: float
    aspect_term: float
    tradeoff: float
    ciou_loss: float
    depth_error: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.iou <= 1.0:
            raise ValueError(f"iou out of range: {self.iou}")
        # centers lie inside the enclosing box, so d^2 never exceeds c^2
        if self.center_distance_sq > self.enclosing_diag_sq:
            raise ValueError("center distance exceeds enclosing diagonal")
        if self.depth_error < 0.0:
            raise ValueError(f"negative depth error: {self.depth_error}")


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    union = a.area + b.area - inter
    return inter / union if union > 0.0 else 0.0


def ciou_loss(a: BoundingBox, b: BoundingBox) -> SpatialPairScore:
    """Complete-IoU loss between two boxes, with its decomposition.

    The aspect term v = (4/pi^2)(atan(w_a/h_a) - atan(w_b/h_b))^2 is
    weighted by alpha = v / ((1 - iou) + v); alpha is defined as 0 when
    that denominator vanishes (identical aspect at full overlap).
    Identical boxes score exactly 0; the loss is bounded above by 3.
    """
    iou = box_iou(a, b)

    (acx, acy), (bcx, bcy) = a.center, b.center
    d_sq = (acx - bcx) ** 2 + (acy - bcy) ** 2
    ew = max(a.x2, b.x2) - min(a.x1, b.x1)
    eh = max(a.y2, b.y2) - min(a.y1, b.y1)
    c_sq = ew**2 + eh**2

    v = (4.0 / math.pi**2) * (
        math.atan(a.width / a.height) - math.atan(b.width / b.height)
    ) ** 2
    denom = (1.0 - iou) + v
    alpha = v / denom if denom > 0.0 else 0.0

    loss = (1.0 - iou) + d_sq / c_sq + alpha * v
    return SpatialPairScore(
        iou=iou,
        center_distance_sq=d_sq,
        enclosing_diag_sq=c_sq,
        aspect_term=v,
        tradeoff=alpha,
        ciou_loss=loss,
    )


def scale_invariant_depth_error(ori: DepthMap, gen: DepthMap) -> float:
    """Variance of log(gen) - log(ori) over all pixels.

    Multiplying either map by a positive constant shifts every
    log-difference equally, and variance ignores shifts, so the error is
    zero exactly when the maps agree up to global scale. Maps must share
    dimensions; resample first if they do not.
    """
    if ori.data.shape != gen.data.shape:
        raise ValueError(
            f"depth dimensions differ: {ori.data.shape} vs {gen.data.shape}"
        )
    diff = np.log(gen.data) - np.log(ori.data)
    return float(np.var(diff))


def _crop_depth(depth: DepthMap, box: BoundingBox, size: int) -> DepthMap:
    """Resample a box region of the map onto a size x size grid."""
    h, w = depth.data.shape
    tx = (np.arange(size, dtype=np.float64) + 0.5) / size
    ty = (np.arange(size, dtype=np.float64) + 0.5) / size
    # fractional image coordinates to half-pixel sample centers
    px = (box.x1 + tx * box.width) * w - 0.5
    py = (box.y1 + ty * box.height) * h - 0.5
    return DepthMap(bilinear_sample(depth.data, px[np.newaxis, :], py[:, np.newaxis]))


def pair_spatial_scores(
    ori: PerceptionBundle,
    gen: PerceptionBundle,
    a: Assignment,
    crop_size: int = DEPTH_CROP_SIZE,
) -> tuple[SpatialPairScore, ...]:
    """Per-pair CIoU + depth error for every real matched pair of an assignment.

    Padding pairs have no boxes and are skipped. The assignment's real
    pair indices must refer to the bundles' detection lists.
    """
    scores = []
    for i, j in a.matched_real_pairs:
        det_o = ori.detections[i]
        det_g = gen.detections[j]
        pair = ciou_loss(det_o.box, det_g.box)
        crop_o = _crop_depth(ori.depth, det_o.box, crop_size)
        crop_g = _crop_depth(gen.depth, det_g.box, crop_size)
        err = scale_invariant_depth_error(crop_o, crop_g)
        scores.append(
            SpatialPairScore(
                iou=pair.iou,
                center_distance_sq=pair.center_distance_sq,
                enclosing_diag_sq=pair.enclosing_diag_sq,
                aspect_term=pair.aspect_term,
                tradeoff=pair.tradeoff,
                ciou_loss=pair.ciou_loss,
                depth_error=err,
            )
        )
    return tuple(scores)


def spatial_scores(
    ori: PerceptionBundle,
    gen: PerceptionBundle,
    a: Assignment,
    crop_size: int = DEPTH_CROP_SIZE,
) -> tuple[float, float]:
    """(l_ciou, l_dep): CIoU loss and depth error averaged over real pairs.

    Both are 0.0 when the assignment has no real pairs (nothing matched,
    or one side empty); the count mismatch is already charged by the
    object-level score.
    """
    pairs = pair_spatial_scores(ori, gen, a, crop_size=crop_size)
    if not pairs:
        return 0.0, 0.0
    l_ciou = float(np.mean([p.ciou_loss for p in pairs]))
    l_dep = float(np.mean([p.depth_error for p in pairs]))
    return l_ciou, l_dep


def whole_image_depth_error(ori: DepthMap, gen: DepthMap) -> float:
    """Scale-invariant error over the full maps; gen is resampled to ori's grid."""
    if gen.data.shape != ori.data.shape:
        h, w = ori.data.shape
        sy = gen.data.shape[0] / h
        sx = gen.data.shape[1] / w
        px = ((np.arange(w, dtype=np.float64) + 0.5) * sx - 0.5)[np.newaxis, :]
        py = ((np.arange(h, dtype=np.float64) + 0.5) * sy - 0.5)[:, np.newaxis]
        gen = DepthMap(bilinear_sample(gen.data, px, py))
    return scale_invariant_depth_error(ori, gen)
