"""Python bindings for the stereotrack tracking frontend."""

from ._core import (
    __version__,
    compute_ate,
    compute_rpe,
    descriptor_distance,
    extract_features,
    preintegrate_imu,
    read_trajectory,
    run_synthetic,
    subpixel_offset,
    synthetic_ground_truth,
)

__all__ = [
    "__version__",
    "compute_ate",
    "compute_rpe",
    "descriptor_distance",
    "extract_features",
    "preintegrate_imu",
    "read_trajectory",
    "run_synthetic",
    "subpixel_offset",
    "synthetic_ground_truth",
]
