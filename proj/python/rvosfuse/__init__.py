"""Key-frame propagation, majority mask fusion and J&F evaluation for
referring video object segmentation."""

from ._core import (
    RvosError,
    aggregate,
    boundary,
    contour_accuracy,
    default_tolerance,
    dilate,
    evaluate,
    format_delta,
    format_percent,
    majority_fuse,
    propagate_identity,
    region_similarity,
    rle_decode,
    rle_encode,
    run_pipeline,
    select_keyframe,
    select_top_n,
)

__all__ = [
    "RvosError",
    "aggregate",
    "boundary",
    "contour_accuracy",
    "default_tolerance",
    "dilate",
    "evaluate",
    "format_delta",
    "format_percent",
    "majority_fuse",
    "propagate_identity",
    "region_similarity",
    "rle_decode",
    "rle_encode",
    "run_pipeline",
    "select_keyframe",
    "select_top_n",
]
