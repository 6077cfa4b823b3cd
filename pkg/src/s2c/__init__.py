"""Sparse-capture scene completion toolkit.

Library + CLI for coverage-driven camera trajectory planning, CPU Gaussian
splat rendering/optimization with degradation generators, and training-free
view-consistency guided refinement with a pluggable image-repair oracle.
"""

from .errors import (
    DegenerateCloud,
    DimensionMismatch,
    EmptySurface,
    InsufficientInputCameras,
    MissingGroundTruth,
    S2CError,
    SceneBundleError,
)
from .gaussians import (
    Gaussian3D,
    GaussianSet,
    Image,
    LearningRates,
    RenderOutput,
    covariance_of,
    degrade_mask,
    degrade_noise,
    optimize,
    photometric_loss,
    psnr,
    render,
    ssim_image,
)
from .geometry import (
    Camera,
    CoverageField,
    CoverageSphere,
    Intrinsics,
    OrientedBoundingBox,
    Pose,
    compute_obb,
    point_in_frustum,
    sample_coverage_spheres,
    sample_sphere_points,
    visible_samples,
)
from .planner import (
    PlannerConfig,
    Trajectory,
    build_candidate_path,
    information_gain,
    interpolate_pair,
    mark_seen,
    plan_trajectory,
    pose_distance,
    sample_camera_in_obb,
)

__version__ = "0.1.0"
