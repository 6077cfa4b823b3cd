"""Information-gain camera trajectory planning.

Greedy loop: sample a virtual camera inside the scene's oriented bounding box,
connect it to its two nearest accepted cameras through pose interpolation, and
keep the whole candidate path only when it reveals enough previously unseen
coverage samples. Terminates after a run of consecutive rejections.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientInputCameras
from .geometry import (
    Camera,
    CoverageField,
    OrientedBoundingBox,
    Pose,
    look_at_pose,
    points_in_frustum,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    """Knobs of the greedy planning loop.

    ``gain_threshold`` is the fraction of all coverage samples a candidate path
    must newly reveal to be accepted; ``max_stall_steps`` is how many
    consecutive rejections end the search; ``interp_spacing`` is the target
    pose distance between consecutive interpolated cameras.
    """

    gain_threshold: float = 0.1
    max_stall_steps: int = 30
    interp_spacing: float = 0.2
    translation_weight: float = 1.0
    rotation_weight: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.gain_threshold <= 1.0):
            raise ValueError("gain_threshold must be in (0, 1]")
        if self.max_stall_steps < 1:
            raise ValueError("max_stall_steps must be positive")
        if self.interp_spacing <= 0:
            raise ValueError("interp_spacing must be positive")
        if self.translation_weight < 0 or self.rotation_weight < 0:
            raise ValueError("distance weights must be non-negative")


TAG_INPUT = "input"
TAG_PLANNED = "planned"


@dataclass(frozen=True)
class Trajectory:
    """Ordered cameras with their origin tags ('input' or 'planned').

    Input cameras always form the leading block, preserved verbatim.
    """

    cameras: tuple
    origin_tags: tuple

    def __post_init__(self):
        cams = tuple(self.cameras)
        tags = tuple(self.origin_tags)
        if not cams:
            raise ValueError("trajectory must be non-empty")
        if len(cams) != len(tags):
            raise ValueError("one tag per camera required")
        for t in tags:
            if t not in (TAG_INPUT, TAG_PLANNED):
                raise ValueError(f"unknown origin tag {t!r}")
        object.__setattr__(self, "cameras", cams)
        object.__setattr__(self, "origin_tags", tags)

    def __len__(self) -> int:
        return len(self.cameras)

    @property
    def input_cameras(self) -> list[Camera]:
        return [c for c, t in zip(self.cameras, self.origin_tags) if t == TAG_INPUT]

    @property
    def planned_cameras(self) -> list[Camera]:
        return [c for c, t in zip(self.cameras, self.origin_tags) if t == TAG_PLANNED]


# ---------------------------------------------------------------------------
# Pose distance and interpolation
# ---------------------------------------------------------------------------

def pose_distance(a: Pose, b: Pose, w_t: float = 1.0, w_r: float = 1.0) -> float:
    """Weighted translation + rotation distance between two poses.

    The rotation term is the geodesic angle arccos(2 (|qa . qb|)^2 - 1), which
    is invariant under quaternion sign flips; the arccos argument is clamped
    against floating-point drift.
    """
    dt = float(np.linalg.norm(a.translation - b.translation))
    dot = abs(float(np.dot(a.rotation, b.rotation)))
    ang = math.acos(min(1.0, max(-1.0, 2.0 * dot * dot - 1.0)))
    return w_t * dt + w_r * ang


def slerp(qa: np.ndarray, qb: np.ndarray, u: float) -> np.ndarray:
    """Shortest-arc spherical interpolation between unit quaternions."""
    qa = np.asarray(qa, dtype=np.float64)
    qb = np.asarray(qb, dtype=np.float64)
    dot = float(np.dot(qa, qb))
    if dot < 0.0:
        qb = -qb
        dot = -dot
    if dot > 0.9999995:
        out = qa + u * (qb - qa)
        return out / np.linalg.norm(out)
    theta = math.acos(min(1.0, dot))
    s = math.sin(theta)
    return (math.sin((1.0 - u) * theta) / s) * qa + (math.sin(u * theta) / s) * qb


def interpolate_pair(a: Pose, b: Pose, m: int) -> list[Pose]:
    """m + 1 poses from a to b inclusive: linear translation, slerp rotation."""
    if m < 1:
        raise ValueError("m must be >= 1")
    poses = [a]
    for step in range(1, m):
        u = step / m
        q = slerp(a.rotation, b.rotation, u)
        t = (1.0 - u) * a.translation + u * b.translation
        poses.append(Pose.from_unnormalized(q, t))
    poses.append(b)
    return poses


def build_candidate_path(new_cam: Camera, neighbors: tuple[Camera, Camera],
                         d_phi: float, w_t: float = 1.0, w_r: float = 1.0) -> list[Camera]:
    """Interpolated path neighbor1 -> new camera -> neighbor2.

    Step counts are floor(distance / d_phi) per side, clamped to >= 1; the
    shared middle camera appears once, so the path holds m1 + m2 + 1 cameras.
    All cameras carry the new camera's intrinsics; the endpoint poses equal
    the neighbor poses exactly.
    """
    n1, n2 = neighbors
    m1 = max(1, math.floor(pose_distance(n1.pose, new_cam.pose, w_t, w_r) / d_phi))
    m2 = max(1, math.floor(pose_distance(new_cam.pose, n2.pose, w_t, w_r) / d_phi))
    poses = interpolate_pair(n1.pose, new_cam.pose, m1) + interpolate_pair(new_cam.pose, n2.pose, m2)[1:]
    return [Camera(p, new_cam.intrinsics) for p in poses]


# ---------------------------------------------------------------------------
# Information gain
# ---------------------------------------------------------------------------

def _covered_by(cameras, field: CoverageField) -> np.ndarray:
    """Union of frustum-visibility bitmasks of the cameras over all samples."""
    pts = field.sample_positions
    covered = np.zeros(pts.shape[0], dtype=bool)
    for cam in cameras:
        covered |= points_in_frustum(cam, pts)
    return covered.reshape(field.seen.shape)


def information_gain(path, field: CoverageField) -> float:
    """Fraction of all coverage samples newly revealed by the path.

    Counts sample points visible from any path camera that are not already in
    ``field.seen``, normalized by the field's total sample count. Does not
    mutate the field.
    """
    if len(path) == 0:
        return 0.0
    new = _covered_by(path, field) & ~field.seen
    return int(np.count_nonzero(new)) / field.total_samples


def mark_seen(path, field: CoverageField) -> CoverageField:
    """Return a field with every sample covered by the path marked seen."""
    if len(path) == 0:
        return field
    return field.with_seen(field.seen | _covered_by(path, field))


# ---------------------------------------------------------------------------
# Candidate sampling and the planning loop
# ---------------------------------------------------------------------------

def sample_camera_in_obb(obb: OrientedBoundingBox, field: CoverageField,
                         rng: np.random.Generator, intrinsics) -> Camera:
    """Random camera inside the box, aimed at the unseen-sample centroid.

    Position is uniform in the box. When every sample is already seen the
    camera looks at the box center instead.
    """
    local = rng.uniform(-1.0, 1.0, size=3) * obb.half_extents
    position = obb.to_world(local)[0]
    unseen = ~field.seen.reshape(-1)
    if unseen.any():
        target = field.sample_positions[unseen].mean(axis=0)
    else:
        target = obb.center
    return Camera(look_at_pose(position, target), intrinsics)


def _two_nearest(cams, pose: Pose, w_t: float, w_r: float) -> tuple[int, int]:
    d = np.array([pose_distance(c.pose, pose, w_t, w_r) for c in cams])
    order = np.argsort(d, kind="stable")  # ties break toward lower camera index
    return int(order[0]), int(order[1])


def plan_trajectory(input_cams, field: CoverageField, obb: OrientedBoundingBox,
                    cfg: PlannerConfig, history: list | None = None) -> Trajectory:
    """Greedy coverage-driven trajectory planning.

    Seeds the field with the input cameras' coverage, then repeatedly samples
    a candidate camera, builds its interpolated path to its two nearest
    accepted cameras, and accepts the path when its information gain exceeds
    ``cfg.gain_threshold``. Rejections increment a stall counter that an
    acceptance resets; the loop stops at ``cfg.max_stall_steps`` stalls.

    ``history``, when given, receives one dict per candidate for reporting.
    """
    input_cams = list(input_cams)
    if len(input_cams) < 2:
        raise InsufficientInputCameras(
            "trajectory planning needs at least 2 input cameras",
            {"count": len(input_cams)})
    rng = np.random.default_rng(cfg.rng_seed)
    field = mark_seen(input_cams, field)
    cameras = list(input_cams)
    tags = [TAG_INPUT] * len(cameras)
    stall = 0
    iteration = 0
    while stall < cfg.max_stall_steps:
        iteration += 1
        candidate = sample_camera_in_obb(obb, field, rng, input_cams[0].intrinsics)
        i1, i2 = _two_nearest(cameras, candidate.pose, cfg.translation_weight, cfg.rotation_weight)
        path = build_candidate_path(candidate, (cameras[i1], cameras[i2]),
                                    cfg.interp_spacing, cfg.translation_weight, cfg.rotation_weight)
        gain = information_gain(path, field)
        accepted = gain > cfg.gain_threshold
        if accepted:
            field = mark_seen(path, field)
            cameras.extend(path[1:-1])  # endpoints already present
            tags.extend([TAG_PLANNED] * (len(path) - 2))
            stall = 0
            log.info("accepted path of %d cameras, gain %.4f, coverage %.4f",
                     len(path), gain, field.coverage_fraction)
        else:
            stall += 1
        if history is not None:
            history.append({"iteration": iteration, "gain": gain, "accepted": accepted,
                            "coverage": field.coverage_fraction, "path_length": len(path)})
    return Trajectory(tuple(cameras), tuple(tags))
