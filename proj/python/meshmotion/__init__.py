"""Mesh animation from monocular video via latent motion diffusion."""

from ._core import (
    PSNR_CAP,
    ConfigError,
    IoError,
    NumericError,
    chamfer_distance,
    edm_precondition,
    edm_weight,
    farthest_point_sample,
    infer,
    karras_schedule,
    load_trajectory,
    load_vertex_frames,
    psnr,
    refine_trajectory,
    save_trajectory,
    ssim,
    synthesize_dataset,
)

__all__ = [
    "PSNR_CAP",
    "ConfigError",
    "IoError",
    "NumericError",
    "chamfer_distance",
    "edm_precondition",
    "edm_weight",
    "farthest_point_sample",
    "infer",
    "karras_schedule",
    "load_trajectory",
    "load_vertex_frames",
    "psnr",
    "refine_trajectory",
    "save_trajectory",
    "ssim",
    "synthesize_dataset",
]
