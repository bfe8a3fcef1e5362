"""Pipeline composition: two perception bundles in, five sub-scores out.

This is the only module that strings the levels together; each level
stays independently usable. All knobs that change the numbers live in
ScoreConfig so a configuration can be logged and replayed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .aggregator import AggregatorModel, forward
from .matching import build_cost_matrix, hungarian_solve, pad_cost_matrix
from .pixel import PixelMetricConfig, pixel_distance
from .semantic import semantic_score
from .spatial import DEPTH_CROP_SIZE, spatial_scores, whole_image_depth_error
from .types import PerceptionBundle, SubScores

DEPTH_MODES = ("pairwise", "whole-image")


@dataclass(frozen=True)
class ScoreConfig:
    """Evaluation knobs; defaults match the reference configuration."""

    p: float = 2.0
    canonical_size: int = 512
    depth_mode: str = "pairwise"
    crop_size: int = DEPTH_CROP_SIZE

    def __post_init__(self):
        PixelMetricConfig(p=self.p, canonical_size=self.canonical_size)
        if self.depth_mode not in DEPTH_MODES:
            raise ValueError(f"depth_mode must be one of {DEPTH_MODES}, got {self.depth_mode!r}")
        if self.crop_size < 2:
            raise ValueError(f"crop_size must be >= 2, got {self.crop_size}")

    @property
    def pixel(self) -> PixelMetricConfig:
        return PixelMetricConfig(p=self.p, canonical_size=self.canonical_size)


def compute_subscores(
    ori: PerceptionBundle, gen: PerceptionBundle, cfg: ScoreConfig = ScoreConfig()
) -> SubScores:
    """Evaluate every level of one (original, generated) bundle pair."""
    l_pix = pixel_distance(ori.image, gen.image, cfg.pixel)
    l_sem = semantic_score(ori, gen)

    padded = pad_cost_matrix(build_cost_matrix(ori.detections, gen.detections))
    if padded.rows == 0:
        l_obj = 0.0
        l_ciou, l_dep = 0.0, 0.0
    else:
        assignment = hungarian_solve(padded)
        l_obj = assignment.total_cost / padded.rows
        l_ciou, l_dep = spatial_scores(ori, gen, assignment, crop_size=cfg.crop_size)

    if cfg.depth_mode == "whole-image":
        l_dep = whole_image_depth_error(ori.depth, gen.depth)

    return SubScores(l_pix=l_pix, l_sem=l_sem, l_obj=l_obj, l_ciou=l_ciou, l_dep=l_dep)


def score_pair(
    ori: PerceptionBundle,
    gen: PerceptionBundle,
    cfg: ScoreConfig = ScoreConfig(),
    model: AggregatorModel | None = None,
) -> tuple[SubScores, float | None]:
    """Sub-scores plus the aggregated scalar when a model is supplied."""
    subs = compute_subscores(ori, gen, cfg)
    if model is None:
        return subs, None
    return subs, forward(model, subs)
