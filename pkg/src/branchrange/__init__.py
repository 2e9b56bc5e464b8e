"""Stereo depth estimation and robust branch ranging.

The pipeline: census/SAD cost volumes aggregated semi-globally, a
left-right-checked winner-take-all disparity readout, weighted
least-squares refinement against the left image, triangulation to
metric depth, and a contour-sampling distance estimator with MAD
outlier rejection.  A synthetic scene generator provides exact ground
truth for end-to-end verification, and the ``branchrange`` command
exposes the stages as subcommands.
"""

from . import _kernels as kernels
from .config import RunConfig, default_rig, load_config
from .core import (
    INVALID_DEPTH,
    INVALID_DISPARITY,
    CameraRig,
    depth_map_from_disparity,
    depth_to_disparity,
    disparity_to_depth,
    pixel_to_point,
    valid_depth_mask,
    valid_disparity_mask,
)
from .errors import (
    BranchRangeError,
    DegenerateMask,
    DimensionMismatch,
    EmptyInput,
    EmptyMask,
    InvalidSceneSpec,
    NonPositiveDepth,
    NoValidDepths,
    ParseError,
    TooFewPoints,
    WindowTooLarge,
    ZeroOrNegativeDisparity,
)
from .maskio import SegMask, load_mask, sample_contour, trace_boundary
from .ranger import (
    RangeEstimate,
    RangerParams,
    centroids_of_triplets,
    estimate_distance,
    expand_centroids,
    mad_filter,
    total_point_set,
)
from .refine import WlsParams, fill_holes, wls_refine
from .stereo import (
    COST_INVALID,
    MatchParams,
    block_match,
    census_transform,
    lr_consistency,
    matching_cost,
    mirror_cost_volume,
    postprocess,
    sgbm,
    sgm_aggregate,
    wta_disparity,
)
from .synth import (
    Cylinder,
    SceneBundle,
    SceneSpec,
    benchmark_scenes,
    generate_scene,
)

__version__ = "0.1.0"

__all__ = [
    "BranchRangeError",
    "COST_INVALID",
    "CameraRig",
    "Cylinder",
    "DegenerateMask",
    "DimensionMismatch",
    "EmptyInput",
    "EmptyMask",
    "INVALID_DEPTH",
    "INVALID_DISPARITY",
    "InvalidSceneSpec",
    "MatchParams",
    "NonPositiveDepth",
    "NoValidDepths",
    "ParseError",
    "RangeEstimate",
    "RangerParams",
    "RunConfig",
    "SceneBundle",
    "SceneSpec",
    "SegMask",
    "TooFewPoints",
    "WindowTooLarge",
    "WlsParams",
    "ZeroOrNegativeDisparity",
    "benchmark_scenes",
    "block_match",
    "census_transform",
    "centroids_of_triplets",
    "default_rig",
    "depth_map_from_disparity",
    "depth_to_disparity",
    "disparity_to_depth",
    "estimate_distance",
    "expand_centroids",
    "fill_holes",
    "generate_scene",
    "kernels",
    "load_config",
    "load_mask",
    "lr_consistency",
    "mad_filter",
    "matching_cost",
    "mirror_cost_volume",
    "pixel_to_point",
    "postprocess",
    "sample_contour",
    "sgbm",
    "sgm_aggregate",
    "total_point_set",
    "trace_boundary",
    "valid_depth_mask",
    "valid_disparity_mask",
    "wls_refine",
    "wta_disparity",
]
