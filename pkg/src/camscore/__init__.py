"""camscore: reference-free image-caption evaluation over perception bundles.

The caption under test is rendered back into an image (by whatever
text-to-image stack you use) and that render is compared against the
original image at four levels: raw pixels, global semantics, object
matching, and spatial layout (box geometry + depth). A small trained
aggregator folds the five resulting sub-scores into one scalar.

This package is the numerical core: it never runs neural models. It
consumes serialized perception bundles (see bundle_io), which real model
stacks or the built-in synthetic renderer produce.
"""

__version__ = "0.1.0"

from .aggregator import (
    AggregatorModel,
    TrainConfig,
    TrainRecord,
    forward,
    gradient_check,
    init_model,
    load_model,
    save_model,
    sigmoid_transform,
    train,
)
from .bundle_io import load_bundle, save_bundle
from .errors import (
    BundleError,
    CamscoreError,
    DegenerateDataError,
    ModelError,
    SchemaError,
    TrainingError,
)
from .matching import (
    Assignment,
    CostMatrix,
    brute_force_assignment,
    build_cost_matrix,
    hungarian_solve,
    object_match_score,
    pad_cost_matrix,
)
from .pixel import PixelMetricConfig, pixel_distance
from .scoring import ScoreConfig, compute_subscores, score_pair
from .semantic import cosine_similarity, semantic_score
from .spatial import (
    SpatialPairScore,
    box_iou,
    ciou_loss,
    scale_invariant_depth_error,
    spatial_scores,
    whole_image_depth_error,
)
from .stats import (
    CaptionPair,
    CorrelationReport,
    JudgedCaption,
    kendall_tau_b,
    kendall_tau_c,
    load_judgments,
    pairwise_accuracy,
)
from .synthetic import (
    SceneObject,
    SceneSpec,
    class_embedding,
    load_scene,
    perturb_scene,
    random_scene,
    render_scene,
    save_scene,
)
from .types import (
    BoundingBox,
    DepthMap,
    Detection,
    FeatureVector,
    ImageRaster,
    PerceptionBundle,
    SubScores,
    resize_raster,
)

__all__ = [
    "AggregatorModel",
    "Assignment",
    "BoundingBox",
    "BundleError",
    "CamscoreError",
    "CaptionPair",
    "CorrelationReport",
    "CostMatrix",
    "DegenerateDataError",
    "DepthMap",
    "Detection",
    "FeatureVector",
    "ImageRaster",
    "JudgedCaption",
    "ModelError",
    "PerceptionBundle",
    "PixelMetricConfig",
    "SceneObject",
    "SceneSpec",
    "SchemaError",
    "ScoreConfig",
    "SpatialPairScore",
    "SubScores",
    "TrainConfig",
    "TrainRecord",
    "TrainingError",
    "box_iou",
    "brute_force_assignment",
    "build_cost_matrix",
    "ciou_loss",
    "class_embedding",
    "compute_subscores",
    "cosine_similarity",
    "forward",
    "gradient_check",
    "hungarian_solve",
    "init_model",
    "kendall_tau_b",
    "kendall_tau_c",
    "load_bundle",
    "load_judgments",
    "load_model",
    "load_scene",
    "object_match_score",
    "pad_cost_matrix",
    "pairwise_accuracy",
    "perturb_scene",
    "pixel_distance",
    "random_scene",
    "render_scene",
    "resize_raster",
    "save_bundle",
    "save_model",
    "save_scene",
    "scale_invariant_depth_error",
    "score_pair",
    "semantic_score",
    "sigmoid_transform",
    "spatial_scores",
    "train",
    "whole_image_depth_error",
]
