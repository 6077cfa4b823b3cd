import math

import numpy as np
import pytest

from s2c.errors import DegenerateCloud, EmptySurface
from s2c.geometry import (
    Camera,
    CoverageField,
    CoverageSphere,
    Intrinsics,
    Pose,
    compute_obb,
    farthest_point_indices,
    look_at_pose,
    point_in_frustum,
    points_in_frustum,
    quaternion_to_matrix,
    sample_coverage_spheres,
    sample_sphere_points,
    visible_samples,
)


def make_camera(width=32, height=24, near=0.1, far=10.0, pose=None):
    intr = Intrinsics(fx=30.0, fy=30.0, cx=width / 2.0, cy=height / 2.0,
                      width=width, height=height, near=near, far=far)
    return Camera(pose or Pose.identity(), intr)


def rot_z(angle):
    return np.array([math.cos(angle / 2), 0.0, 0.0, math.sin(angle / 2)])


# ---------------------------------------------------------------------------
# Pose / Intrinsics
# ---------------------------------------------------------------------------

def test_pose_requires_unit_quaternion():
    with pytest.raises(ValueError):
        Pose(np.array([1.0, 1.0, 0.0, 0.0]), np.zeros(3))


def test_pose_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = rng.normal(size=4)
        pose = Pose.from_unnormalized(q, rng.normal(size=3))
        pts = rng.normal(size=(5, 3))
        back = pose.camera_to_world(pose.world_to_camera(pts))
        assert np.allclose(back, pts, atol=1e-12)


def test_intrinsics_validation():
    with pytest.raises(ValueError):
        Intrinsics(fx=-1, fy=1, cx=0, cy=0, width=4, height=4, near=0.1, far=1.0)
    with pytest.raises(ValueError):
        Intrinsics(fx=1, fy=1, cx=8, cy=0, width=4, height=4, near=0.1, far=1.0)
    with pytest.raises(ValueError):
        Intrinsics(fx=1, fy=1, cx=0, cy=0, width=4, height=4, near=1.0, far=0.5)


# ---------------------------------------------------------------------------
# compute_obb
# ---------------------------------------------------------------------------

def test_obb_unit_cube_corners():
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    obb = compute_obb(corners)
    assert np.allclose(obb.center, [0.5, 0.5, 0.5], atol=1e-12)
    assert np.allclose(sorted(obb.half_extents), [0.51, 0.51, 0.51], atol=1e-9)
    assert obb.contains(corners).all()


def test_obb_identical_points_degenerate():
    pts = np.tile([1.0, 2.0, 3.0], (8, 1))
    with pytest.raises(DegenerateCloud):
        compute_obb(pts)


def test_obb_coplanar_degenerate():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(50, 3))
    pts[:, 2] = 0.0
    with pytest.raises(DegenerateCloud):
        compute_obb(pts)


def room_surface_points(rng, dims, n):
    lx, ly, lz = dims
    areas = np.array([lx * ly, lx * ly, ly * lz, ly * lz, lx * lz, lx * lz])
    faces = rng.choice(6, size=n, p=areas / areas.sum())
    pts = np.empty((n, 3))
    for i, f in enumerate(faces):
        u, v = rng.uniform(0, 1, 2)
        if f < 2:
            pts[i] = [u * lx, v * ly, 0.0 if f == 0 else lz]
        elif f < 4:
            pts[i] = [0.0 if f == 2 else lx, u * ly, v * lz]
        else:
            pts[i] = [u * lx, 0.0 if f == 4 else ly, v * lz]
    return pts


def test_obb_room_containment_and_volume():
    # brute-force containment over all points, volume close to the expected box
    rng = np.random.default_rng(7)
    dims = (4.0, 3.0, 2.5)
    pts = room_surface_points(rng, dims, 200)
    obb = compute_obb(pts)
    assert obb.contains(pts).all()
    expected = float(np.prod(dims)) * 1.02 ** 3
    assert abs(obb.volume - expected) / expected < 0.10


def test_obb_containment_random_rotations():
    rng = np.random.default_rng(11)
    for _ in range(10):
        pose = Pose.from_unnormalized(rng.normal(size=4), np.zeros(3))
        pts = rng.uniform(-1, 1, (60, 3)) * np.array([3.0, 1.5, 0.5])
        pts = pts @ pose.rotation_matrix().T + rng.normal(size=3)
        obb = compute_obb(pts)
        assert obb.contains(pts).all()


# ---------------------------------------------------------------------------
# sample_sphere_points
# ---------------------------------------------------------------------------

def test_sphere_single_sample_at_pole():
    pts = sample_sphere_points([1.0, 2.0, 3.0], 0.5, 1)
    assert np.allclose(pts, [[1.0, 2.0, 3.5]])


def test_sphere_points_on_surface_and_centered():
    center = np.array([0.3, -0.2, 1.0])
    pts = sample_sphere_points(center, 1.0, 64)
    dist = np.linalg.norm(pts - center, axis=1)
    assert np.max(np.abs(dist - 1.0)) <= 1e-9
    assert np.linalg.norm(pts.mean(axis=0) - center) < 0.05


def test_sphere_points_spacing_uniformity():
    # nearest-neighbor angular spacing varies by < 2x across points
    pts = sample_sphere_points(np.zeros(3), 1.0, 64)
    cosines = np.clip(pts @ pts.T, -1.0, 1.0)
    np.fill_diagonal(cosines, -1.0)
    nn_angle = np.arccos(cosines.max(axis=1))
    assert nn_angle.max() / nn_angle.min() < 2.0


def test_sphere_points_deterministic():
    a = sample_sphere_points(np.zeros(3), 2.0, 17)
    b = sample_sphere_points(np.zeros(3), 2.0, 17)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# frustum queries
# ---------------------------------------------------------------------------

def test_point_at_camera_center_outside():
    cam = make_camera()
    assert not point_in_frustum(cam, [0.0, 0.0, 0.0])


def test_point_on_axis_inside():
    cam = make_camera()
    assert point_in_frustum(cam, [0.0, 0.0, 1.0])


def _frustum_plane_oracle(cam, pts):
    """Independent verdicts via half-space tests against the six planes."""
    k = cam.intrinsics
    pc = cam.pose.world_to_camera(pts)
    x, y, z = pc[:, 0], pc[:, 1], pc[:, 2]
    ok = (z >= k.near) & (z <= k.far)
    ok &= (k.fx * x + k.cx * z >= 0) & (k.fx * x + (k.cx - k.width) * z < 0)
    ok &= (k.fy * y + k.cy * z >= 0) & (k.fy * y + (k.cy - k.height) * z < 0)
    return ok


def test_frustum_matches_plane_clipping_oracle():
    rng = np.random.default_rng(3)
    pose = Pose.from_unnormalized(rng.normal(size=4), rng.normal(size=3))
    cam = make_camera(pose=pose)
    pts = rng.uniform(-6, 6, (1000, 3))
    got = points_in_frustum(cam, pts)
    want = _frustum_plane_oracle(cam, pts)
    assert np.array_equal(got, want)
    assert got.any() and not got.all()


def test_frustum_monotone_under_growth():
    rng = np.random.default_rng(4)
    cam = make_camera()
    pts = rng.uniform(-4, 4, (500, 3))
    base = points_in_frustum(cam, pts)
    grown = Camera(cam.pose, Intrinsics(fx=30.0, fy=30.0, cx=16.0, cy=12.0,
                                        width=64, height=48, near=0.1, far=20.0))
    assert not np.any(base & ~points_in_frustum(grown, pts))


# ---------------------------------------------------------------------------
# visible_samples
# ---------------------------------------------------------------------------

def _sphere_at(center, radius=0.5, n=32, sid=0):
    return CoverageSphere(sid, center, radius, sample_sphere_points(center, radius, n))


def test_visible_samples_behind_camera_all_false():
    cam = make_camera()
    sphere = _sphere_at([0.0, 0.0, -5.0])
    assert not visible_samples(cam, sphere).any()


def test_visible_samples_fully_inside_all_true():
    cam = make_camera(width=64, height=64, far=20.0)
    sphere = _sphere_at([0.0, 0.0, 5.0], radius=0.4)
    mask = visible_samples(cam, sphere)
    assert mask.all() and mask.size == 32


def test_visible_samples_straddling_matches_per_point_oracle():
    cam = make_camera()
    sphere = _sphere_at([0.53, 0.0, 2.0], radius=0.6, n=64)
    mask = visible_samples(cam, sphere)
    want = np.array([point_in_frustum(cam, p) for p in sphere.samples])
    assert np.array_equal(mask, want)
    assert 0 < mask.sum() < 64


# ---------------------------------------------------------------------------
# sample_coverage_spheres
# ---------------------------------------------------------------------------

def test_obb_only_spheres_one_per_face():
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    obb = compute_obb(corners, margin=0.0)
    spheres = sample_coverage_spheres([], obb, 0, 6, radius=0.3, n_point_samples=8, seed=0)
    assert len(spheres) == 6
    for s in spheres:
        local = np.abs(obb.to_local(s.center)[0])
        assert np.isclose(local.max(), obb.half_extents[np.argmax(local)], atol=1e-9)


def test_surface_spheres_match_fps_reference():
    rng = np.random.default_rng(5)
    dims = np.array([4.0, 3.0, 2.5])
    pts = rng.uniform(0, 1, (600, 3)) * dims
    obb = compute_obb(pts)
    spheres = sample_coverage_spheres(pts, obb, 100, 60, radius=0.5, n_point_samples=4, seed=1)
    assert len(spheres) == 160

    # naive FPS reference, same start rule
    centroid = pts.mean(axis=0)
    start = int(np.argmax(np.linalg.norm(pts - centroid, axis=1)))
    chosen = [start]
    dist = np.linalg.norm(pts - pts[start], axis=1)
    last = None
    for _ in range(99):
        nxt = int(np.argmax(dist))
        last = dist[nxt]
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    centers = np.array([s.center for s in spheres[:100]])
    assert np.allclose(centers, pts[chosen])

    d = np.linalg.norm(centers[:, None] - centers[None, :], axis=2)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= last - 1e-9


def test_coverage_radius_zero_rejected():
    corners = np.eye(3).tolist() + [[1.0, 1.0, 1.0], [0.2, 0.4, 0.3]]
    obb = compute_obb(corners)
    with pytest.raises(ValueError):
        sample_coverage_spheres(corners, obb, 1, 0, radius=0.0)


def test_coverage_empty_surface_rejected():
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    obb = compute_obb(corners)
    with pytest.raises(EmptySurface):
        sample_coverage_spheres([], obb, 4, 0, radius=0.5)


def test_coverage_spheres_deterministic_under_seed():
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 1, (100, 3)) * 3.0
    obb = compute_obb(pts)
    a = sample_coverage_spheres(pts, obb, 10, 20, 0.4, 8, seed=42)
    b = sample_coverage_spheres(pts, obb, 10, 20, 0.4, 8, seed=42)
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.center, sb.center)
        assert np.array_equal(sa.samples, sb.samples)


def test_coverage_field_shape_and_flat_positions():
    spheres = [_sphere_at([float(i), 0, 0], sid=i, n=16) for i in range(5)]
    field = CoverageField.unseen(spheres)
    assert field.seen.shape == (5, 16)
    assert field.total_samples == 80
    assert field.sample_positions.shape == (80, 3)
    assert field.coverage_fraction == 0.0


def test_farthest_point_indices_bounds():
    pts = np.random.default_rng(2).normal(size=(50, 3))
    idx, last = farthest_point_indices(pts, 10)
    assert len(set(idx.tolist())) == 10
    assert last > 0


def test_look_at_points_camera_at_target():
    pose = look_at_pose([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    fwd = pose.rotation_matrix()[:, 2]
    want = np.array([3.0, 3.0, 3.0]) / np.linalg.norm([3.0, 3.0, 3.0])
    assert np.allclose(fwd, want, atol=1e-12)
    assert np.allclose(quaternion_to_matrix(pose.rotation) @ quaternion_to_matrix(pose.rotation).T,
                       np.eye(3), atol=1e-12)
