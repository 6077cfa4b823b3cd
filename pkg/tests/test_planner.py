import math

import numpy as np
import pytest

from s2c.errors import InsufficientInputCameras
from s2c.geometry import (
    Camera,
    CoverageField,
    CoverageSphere,
    Intrinsics,
    Pose,
    compute_obb,
    quaternion_to_matrix,
    sample_sphere_points,
)
from s2c.planner import (
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


def intr(width=32, height=32):
    return Intrinsics(fx=24.0, fy=24.0, cx=width / 2, cy=height / 2,
                      width=width, height=height, near=0.1, far=10.0)


def pose(q=(1, 0, 0, 0), t=(0, 0, 0)):
    return Pose.from_unnormalized(np.array(q, dtype=float), np.array(t, dtype=float))


def rot_z(angle):
    return (math.cos(angle / 2), 0.0, 0.0, math.sin(angle / 2))


def random_pose(rng):
    return Pose.from_unnormalized(rng.normal(size=4), rng.normal(size=3))


# ---------------------------------------------------------------------------
# pose_distance
# ---------------------------------------------------------------------------

def test_pose_distance_identity_zero():
    p = pose()
    assert pose_distance(p, p) == 0.0


def test_pose_distance_translation_345():
    a = pose(t=(0, 0, 0))
    b = pose(t=(3, 4, 0))
    assert abs(pose_distance(a, b) - 5.0) <= 1e-9


def test_pose_distance_rotation_quarter_turn():
    a = pose()
    b = pose(q=rot_z(math.pi / 2))
    assert abs(pose_distance(a, b) - math.pi / 2) <= 1e-9


def test_pose_distance_symmetric_and_weighted():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = random_pose(rng), random_pose(rng)
        wt, wr = rng.uniform(0, 2, 2)
        assert pose_distance(a, b, wt, wr) == pose_distance(b, a, wt, wr)
    assert pose_distance(pose(), pose(t=(1, 0, 0)), 3.0, 1.0) == 3.0


def test_pose_distance_sign_flip_bitwise_equal():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        a, b = random_pose(rng), random_pose(rng)
        d = pose_distance(a, b)
        a_neg = Pose(-a.rotation, a.translation)
        b_neg = Pose(-b.rotation, b.translation)
        assert pose_distance(a_neg, b) == d
        assert pose_distance(a, b_neg) == d
        assert pose_distance(a_neg, b_neg) == d


# ---------------------------------------------------------------------------
# interpolate_pair
# ---------------------------------------------------------------------------

def test_interpolate_m1_is_endpoints():
    a, b = pose(t=(1, 2, 3)), pose(q=rot_z(1.0), t=(4, 5, 6))
    out = interpolate_pair(a, b, 1)
    assert len(out) == 2
    assert np.array_equal(out[0].translation, a.translation)
    assert np.array_equal(out[1].rotation, b.rotation)


def test_interpolate_translation_midpoint():
    a = pose(t=(0, 0, 0))
    b = pose(t=(2, 0, 0))
    out = interpolate_pair(a, b, 2)
    assert np.allclose(out[1].translation, [1, 0, 0], atol=1e-15)


def test_interpolate_rotation_midpoint_against_axis_angle():
    a = pose()
    b = pose(q=rot_z(math.pi / 2))
    mid = interpolate_pair(a, b, 2)[1]
    want = np.array(rot_z(math.pi / 4))
    assert np.allclose(mid.rotation, want, atol=1e-9)


def test_interpolate_shortest_arc_under_sign_flip():
    a = pose()
    b_q = -np.array(rot_z(math.pi / 2))
    b = Pose(b_q / np.linalg.norm(b_q), np.zeros(3))
    mid = interpolate_pair(a, b, 2)[1]
    R_mid = quaternion_to_matrix(mid.rotation)
    want = quaternion_to_matrix(np.array(rot_z(math.pi / 4)))
    assert np.allclose(R_mid, want, atol=1e-9)


# ---------------------------------------------------------------------------
# build_candidate_path
# ---------------------------------------------------------------------------

def test_candidate_path_length_from_distances():
    # distance 0.4 to each neighbor, spacing 0.2 -> 2 + 2 + 1 cameras
    k = intr()
    n1 = Camera(pose(t=(-0.4, 0, 0)), k)
    n2 = Camera(pose(t=(0.4, 0, 0)), k)
    new = Camera(pose(t=(0, 0, 0)), intr(width=16, height=16))
    path = build_candidate_path(new, (n1, n2), d_phi=0.2)
    assert len(path) == 5
    assert all(c.intrinsics == new.intrinsics for c in path)


def test_candidate_path_clamped_to_three():
    k = intr()
    n1 = Camera(pose(t=(-0.05, 0, 0)), k)
    n2 = Camera(pose(t=(0.05, 0, 0)), k)
    new = Camera(pose(), k)
    path = build_candidate_path(new, (n1, n2), d_phi=0.2)
    assert len(path) == 3


def test_candidate_path_endpoints_exact():
    k = intr()
    rng = np.random.default_rng(2)
    n1 = Camera(random_pose(rng), k)
    n2 = Camera(random_pose(rng), k)
    new = Camera(random_pose(rng), k)
    path = build_candidate_path(new, (n1, n2), d_phi=0.3)
    assert np.array_equal(path[0].pose.translation, n1.pose.translation)
    assert np.array_equal(path[0].pose.rotation, n1.pose.rotation)
    assert np.array_equal(path[-1].pose.translation, n2.pose.translation)
    assert np.array_equal(path[-1].pose.rotation, n2.pose.rotation)


# ---------------------------------------------------------------------------
# information gain / mark_seen
# ---------------------------------------------------------------------------

def _random_field(rng, n_spheres=10, n_prime=16, seen_fraction=0.0):
    spheres = []
    for i in range(n_spheres):
        center = rng.uniform(-2, 2, 3) + [0, 0, 3.0]
        r = rng.uniform(0.2, 0.6)
        spheres.append(CoverageSphere(i, center, r, sample_sphere_points(center, r, n_prime)))
    seen = rng.random((n_spheres, n_prime)) < seen_fraction
    return CoverageField(tuple(spheres), seen)


def _random_cam(rng):
    q = rng.normal(size=4)
    t = rng.uniform(-3, 3, 3)
    return Camera(Pose.from_unnormalized(q, t), intr())


def _gain_oracle(path, field):
    """Exhaustive triple loop over (sphere, sample, camera), scalar math only."""
    new = 0
    for si, sphere in enumerate(field.spheres):
        for k in range(sphere.sample_count):
            if field.seen[si, k]:
                continue
            p = sphere.samples[k]
            for cam in path:
                ki = cam.intrinsics
                pc = cam.pose.world_to_camera(p[None, :])[0]
                if pc[2] < ki.near or pc[2] > ki.far:
                    continue
                u = ki.fx * pc[0] / pc[2] + ki.cx
                v = ki.fy * pc[1] / pc[2] + ki.cy
                if 0 <= u < ki.width and 0 <= v < ki.height:
                    new += 1
                    break
    return new


def test_information_gain_empty_path():
    field = _random_field(np.random.default_rng(0))
    assert information_gain([], field) == 0.0


def test_information_gain_repeated_camera_zero():
    rng = np.random.default_rng(3)
    field = _random_field(rng)
    cam = _random_cam(rng)
    marked = mark_seen([cam], field)
    assert information_gain([cam], marked) == 0.0


def test_information_gain_matches_exhaustive_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        field = _random_field(rng, seen_fraction=rng.uniform(0, 0.5))
        path = [_random_cam(rng) for _ in range(3)]
        got = information_gain(path, field)
        want = _gain_oracle(path, field)
        assert round(got * field.total_samples) == want


def test_mark_seen_idempotent_and_consistent():
    rng = np.random.default_rng(5)
    field = _random_field(rng, seen_fraction=0.2)
    path = [_random_cam(rng) for _ in range(3)]
    gain = information_gain(path, field)
    once = mark_seen(path, field)
    twice = mark_seen(path, once)
    assert np.array_equal(once.seen, twice.seen)
    assert once.seen_count - field.seen_count == round(gain * field.total_samples)
    assert information_gain(path, once) == 0.0


def test_gain_submodular_in_seen_state():
    rng = np.random.default_rng(6)
    for _ in range(20):
        field_small = _random_field(rng, seen_fraction=0.1)
        grown = field_small.with_seen(field_small.seen | (rng.random(field_small.seen.shape) < 0.3))
        path = [_random_cam(rng) for _ in range(2)]
        assert information_gain(path, field_small) >= information_gain(path, grown)


# ---------------------------------------------------------------------------
# sample_camera_in_obb
# ---------------------------------------------------------------------------

def test_sampled_cameras_inside_box():
    rng = np.random.default_rng(7)
    pts = rng.uniform(0, 1, (100, 3)) * np.array([4.0, 3.0, 2.5])
    obb = compute_obb(pts)
    field = _random_field(rng)
    gen = np.random.default_rng(0)
    for _ in range(1000):
        cam = sample_camera_in_obb(obb, field, gen, intr())
        assert obb.contains(cam.pose.translation[None, :])[0]


def test_sampled_camera_deterministic_under_seed():
    rng = np.random.default_rng(8)
    pts = rng.uniform(0, 1, (50, 3)) * 2.0
    obb = compute_obb(pts)
    field = _random_field(rng)
    a = sample_camera_in_obb(obb, field, np.random.default_rng(9), intr())
    b = sample_camera_in_obb(obb, field, np.random.default_rng(9), intr())
    assert np.array_equal(a.pose.translation, b.pose.translation)
    assert np.array_equal(a.pose.rotation, b.pose.rotation)


def test_sampled_camera_looks_at_box_center_when_all_seen():
    rng = np.random.default_rng(10)
    pts = rng.uniform(0, 1, (50, 3)) * 2.0
    obb = compute_obb(pts)
    field = _random_field(rng)
    field = field.with_seen(np.ones_like(field.seen))
    cam = sample_camera_in_obb(obb, field, np.random.default_rng(1), intr())
    fwd = cam.pose.rotation_matrix()[:, 2]
    to_center = obb.center - cam.pose.translation
    to_center /= np.linalg.norm(to_center)
    assert np.allclose(fwd, to_center, atol=1e-9)


# ---------------------------------------------------------------------------
# plan_trajectory
# ---------------------------------------------------------------------------

def _planning_setup(rng):
    pts = rng.uniform(0, 1, (300, 3)) * np.array([4.0, 3.0, 2.5])
    obb = compute_obb(pts)
    spheres = []
    for i in range(12):
        c = rng.uniform(0.3, 0.7, 3) * np.array([4.0, 3.0, 2.5])
        spheres.append(CoverageSphere(i, c, 0.4, sample_sphere_points(c, 0.4, 16)))
    field = CoverageField.unseen(spheres)
    cams = [Camera(Pose.from_unnormalized(rng.normal(size=4), rng.uniform(0.5, 1.5, 3)), intr())
            for _ in range(4)]
    return cams, field, obb


def test_plan_requires_two_cameras():
    rng = np.random.default_rng(11)
    cams, field, obb = _planning_setup(rng)
    with pytest.raises(InsufficientInputCameras):
        plan_trajectory(cams[:1], field, obb, PlannerConfig())


def test_plan_impossible_gain_returns_inputs_after_stall_budget():
    rng = np.random.default_rng(12)
    cams, field, obb = _planning_setup(rng)
    history = []
    cfg = PlannerConfig(gain_threshold=1.0, max_stall_steps=7, rng_seed=3)
    traj = plan_trajectory(cams, field, obb, cfg, history)
    assert len(traj) == 4
    assert all(t == "input" for t in traj.origin_tags)
    assert len(history) == 7
    assert not any(h["accepted"] for h in history)


def test_plan_preserves_inputs_and_is_deterministic():
    rng = np.random.default_rng(13)
    cams, field, obb = _planning_setup(rng)
    cfg = PlannerConfig(gain_threshold=0.05, max_stall_steps=10, interp_spacing=0.5, rng_seed=21)
    runs = [plan_trajectory(cams, field, obb, cfg) for _ in range(3)]
    for traj in runs:
        assert traj.origin_tags[:4] == ("input",) * 4
        for got, want in zip(traj.cameras[:4], cams):
            assert np.array_equal(got.pose.translation, want.pose.translation)
    for other in runs[1:]:
        assert len(other) == len(runs[0])
        for a, b in zip(runs[0].cameras, other.cameras):
            assert np.array_equal(a.pose.translation, b.pose.translation)
            assert np.array_equal(a.pose.rotation, b.pose.rotation)


def test_plan_increases_coverage():
    rng = np.random.default_rng(14)
    cams, field, obb = _planning_setup(rng)
    cfg = PlannerConfig(gain_threshold=0.02, max_stall_steps=15, interp_spacing=0.5, rng_seed=2)
    traj = plan_trajectory(cams, field, obb, cfg)
    base = mark_seen(cams, field).coverage_fraction
    final = mark_seen(traj.cameras, field).coverage_fraction
    assert len(traj) > 4
    assert final > base


def test_trajectory_validation():
    cam = Camera(pose(), intr())
    with pytest.raises(ValueError):
        Trajectory((), ())
    with pytest.raises(ValueError):
        Trajectory((cam,), ("bogus",))
