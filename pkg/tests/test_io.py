import json

import numpy as np
import pytest

from s2c.errors import PlyParseError, SceneBundleError
from s2c.gaussians import GaussianSet, Image
from s2c.geometry import Camera, Intrinsics, Pose
from s2c.image_io import read_pfm, read_png, read_raw_float32, write_pfm, write_png, write_raw_float32
from s2c.planner import Trajectory
from s2c.ply import (
    read_gaussian_set,
    read_point_cloud,
    read_ply,
    write_coverage_cloud,
    write_gaussian_set,
    write_point_cloud,
)
from s2c.serial import camera_from_dict, camera_to_dict, load_cameras, load_trajectory, save_cameras, save_trajectory


def random_gaussians(rng, n=20):
    return GaussianSet(
        position=rng.normal(size=(n, 3)),
        log_scale=rng.uniform(-3, 0, (n, 3)),
        rotation=(lambda q: q / np.linalg.norm(q, axis=1)[:, None])(rng.normal(size=(n, 4))),
        opacity_logit=rng.normal(size=n),
        color=rng.uniform(0, 1, (n, 3)),
    )


# ---------------------------------------------------------------------------
# PLY
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("binary", [True, False])
def test_point_cloud_round_trip(tmp_path, binary):
    rng = np.random.default_rng(0)
    pos = rng.normal(size=(50, 3)).astype(np.float32)
    col = rng.integers(0, 256, (50, 3)).astype(np.uint8)
    path = tmp_path / "cloud.ply"
    write_point_cloud(path, pos, col, binary=binary)
    back_pos, back_col, back_nrm = read_point_cloud(path)
    assert np.allclose(back_pos, pos, atol=1e-6)
    assert np.allclose(back_col, col.astype(np.float64) / 255.0)
    assert back_nrm is None


def test_point_cloud_with_normals(tmp_path):
    rng = np.random.default_rng(1)
    pos = rng.normal(size=(10, 3)).astype(np.float32)
    nrm = rng.normal(size=(10, 3)).astype(np.float32)
    path = tmp_path / "cloud.ply"
    write_point_cloud(path, pos, normals=nrm)
    _, _, back = read_point_cloud(path)
    assert np.allclose(back, nrm, atol=1e-6)


@pytest.mark.parametrize("binary", [True, False])
def test_gaussian_set_round_trip_bit_exact(tmp_path, binary):
    rng = np.random.default_rng(2)
    gset = random_gaussians(rng)
    path = tmp_path / "splats.ply"
    write_gaussian_set(path, gset, binary=binary)
    back = read_gaussian_set(path)
    assert np.array_equal(back.position, gset.position)
    assert np.array_equal(back.log_scale, gset.log_scale)
    assert np.array_equal(back.rotation, gset.rotation)
    assert np.array_equal(back.opacity_logit, gset.opacity_logit)
    assert np.array_equal(back.color, gset.color)


def test_gaussian_set_save_load_save_identical_bytes(tmp_path):
    rng = np.random.default_rng(3)
    gset = random_gaussians(rng)
    p1 = tmp_path / "a.ply"
    p2 = tmp_path / "b.ply"
    write_gaussian_set(p1, gset)
    write_gaussian_set(p2, read_gaussian_set(p1))
    assert p1.read_bytes() == p2.read_bytes()


def test_coverage_cloud_colors(tmp_path):
    pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    path = tmp_path / "cov.ply"
    write_coverage_cloud(path, pos, ["seen_input", "seen_planned", "unseen"])
    props = read_ply(path)
    assert props["red"].tolist() == [255, 0, 128]
    assert props["green"].tolist() == [0, 255, 128]
    assert props["blue"].tolist() == [0, 0, 128]


def test_ply_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ply"
    path.write_bytes(b"not a ply\n")
    with pytest.raises(PlyParseError):
        read_ply(path)


def test_ply_truncated_body(tmp_path):
    rng = np.random.default_rng(4)
    path = tmp_path / "trunc.ply"
    write_point_cloud(path, rng.normal(size=(10, 3)))
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(PlyParseError):
        read_point_cloud(path)


def test_ply_ascii_bad_row(tmp_path):
    path = tmp_path / "bad_row.ply"
    path.write_text("ply\nformat ascii 1.0\nelement vertex 2\n"
                    "property float x\nproperty float y\nproperty float z\n"
                    "end_header\n0 0 0\n1 2\n")
    with pytest.raises(PlyParseError) as err:
        read_ply(path)
    assert err.value.context.get("line") is not None


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

def test_png_round_trip_8bit(tmp_path):
    rng = np.random.default_rng(5)
    img = Image((rng.integers(0, 256, (12, 9, 3)) / 255.0).astype(np.float32))
    path = tmp_path / "img.png"
    write_png(path, img)
    back = read_png(path)
    assert np.allclose(back.data, img.data, atol=1e-7)


def test_png_grayscale(tmp_path):
    img = Image(np.linspace(0, 1, 64, dtype=np.float32).reshape(8, 8, 1))
    path = tmp_path / "gray.png"
    write_png(path, img)
    back = read_png(path)
    assert back.channels == 1
    assert np.abs(back.data - img.data).max() <= 1.0 / 255.0


@pytest.mark.parametrize("channels", [1, 3])
def test_pfm_round_trip_lossless(tmp_path, channels):
    rng = np.random.default_rng(6)
    img = Image(rng.uniform(0, 7, (10, 14, channels)).astype(np.float32))
    path = tmp_path / "img.pfm"
    write_pfm(path, img)
    back = read_pfm(path)
    assert np.array_equal(back.data, img.data)


def test_raw_float32_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    img = Image(rng.uniform(0, 3, (6, 5, 3)).astype(np.float32))
    path = tmp_path / "img.raw"
    write_raw_float32(path, img)
    back = read_raw_float32(path)
    assert np.array_equal(back.data, img.data)
    meta = json.loads((tmp_path / "img.raw.json").read_text())
    assert meta["width"] == 5 and meta["height"] == 6


# ---------------------------------------------------------------------------
# camera / trajectory JSON
# ---------------------------------------------------------------------------

def _camera(rng):
    pose = Pose.from_unnormalized(rng.normal(size=4), rng.normal(size=3))
    intr = Intrinsics(fx=30.0, fy=31.0, cx=16.0, cy=12.0, width=32, height=24,
                      near=0.1, far=9.0)
    return Camera(pose, intr)


def test_camera_dict_round_trip():
    rng = np.random.default_rng(8)
    cam = _camera(rng)
    ident, back = camera_from_dict(camera_to_dict(cam, 7))
    assert ident == 7
    assert np.allclose(back.pose.rotation, cam.pose.rotation)
    assert np.allclose(back.pose.translation, cam.pose.translation)
    assert back.intrinsics == cam.intrinsics


def test_cameras_file_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    cams = [_camera(rng) for _ in range(4)]
    path = tmp_path / "cameras.json"
    save_cameras(path, cams)
    back = load_cameras(path)
    assert [i for i, _ in back] == [0, 1, 2, 3]
    for (_, b), c in zip(back, cams):
        assert np.allclose(b.pose.translation, c.pose.translation)


def test_trajectory_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    cams = tuple(_camera(rng) for _ in range(5))
    traj = Trajectory(cams, ("input", "input", "planned", "planned", "planned"))
    path = tmp_path / "traj.json"
    save_trajectory(path, traj)
    back = load_trajectory(path)
    assert back.origin_tags == traj.origin_tags
    for b, c in zip(back.cameras, traj.cameras):
        assert np.allclose(b.pose.rotation, c.pose.rotation)


def test_bad_camera_record_raises():
    with pytest.raises(SceneBundleError):
        camera_from_dict({"id": 0, "quaternion": [1, 0, 0, 0]})


def test_load_cameras_bad_json(tmp_path):
    path = tmp_path / "cams.json"
    path.write_text("{not json")
    with pytest.raises(SceneBundleError):
        load_cameras(path)
