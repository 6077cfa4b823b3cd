"""Procedural desk-scale test scenes and the on-disk scene bundle.

A synthetic scene is a ground-truth Gaussian set built from jittered splat
patches on walls, floors and props, plus a small camera rig: a cluster of
input cameras near one corner (mimicking a sparse handheld capture) and a
held-out evaluation ring. The bundle writer renders ground truth at every
camera and lays the scene out as files; everything is deterministic under
the seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SceneBundleError
from .gaussians import GaussianSet, Image, render
from .geometry import Camera, Intrinsics, look_at_pose, matrix_to_quaternion
from .image_io import read_pfm, read_png, write_pfm, write_png
from .ply import read_gaussian_set, read_point_cloud, write_gaussian_set, write_point_cloud
from .serial import load_cameras, save_cameras

SCENE_KINDS = ("box_room", "l_room", "shelf")


@dataclass
class SyntheticScene:
    kind: str
    seed: int
    gt_gaussians: GaussianSet
    surface_points: np.ndarray
    surface_colors: np.ndarray
    input_cameras: list
    heldout_cameras: list


@dataclass(frozen=True)
class SceneBundle:
    """Paths of an on-disk scene; see ``load_scene_bundle`` for validation."""

    root: Path
    point_cloud: Path
    cameras: Path
    images_dir: Path
    mesh: Path | None = None
    heldout_cameras: Path | None = None
    heldout_dir: Path | None = None
    gt_gaussians: Path | None = None


# ---------------------------------------------------------------------------
# Splat patch construction
# ---------------------------------------------------------------------------

def _patch(rng: np.random.Generator, corner, edge_u, edge_v, normal,
           spacing: float, base_color, color_jitter: float = 0.06,
           normal_sigma: float = 0.012, opacity_logit: float = 2.5):
    """Jittered grid of flat splats spanning a rectangle.

    Tangential scales are half the cell size so neighboring splats overlap;
    the normal scale is thin. Returns attribute arrays for GaussianSet.
    """
    corner = np.asarray(corner, dtype=np.float64)
    edge_u = np.asarray(edge_u, dtype=np.float64)
    edge_v = np.asarray(edge_v, dtype=np.float64)
    normal = np.asarray(normal, dtype=np.float64)
    lu = float(np.linalg.norm(edge_u))
    lv = float(np.linalg.norm(edge_v))
    nu = max(1, round(lu / spacing))
    nv = max(1, round(lv / spacing))
    ii, jj = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    ii = ii.reshape(-1).astype(np.float64)
    jj = jj.reshape(-1).astype(np.float64)
    n = ii.size
    ju = rng.uniform(-0.3, 0.3, n)
    jv = rng.uniform(-0.3, 0.3, n)
    fu = (ii + 0.5 + ju) / nu
    fv = (jj + 0.5 + jv) / nv
    positions = corner + fu[:, None] * edge_u + fv[:, None] * edge_v
    u_hat = edge_u / lu
    v_hat = edge_v / lv
    n_hat = normal / np.linalg.norm(normal)
    quat = matrix_to_quaternion(np.stack([u_hat, v_hat, n_hat], axis=1))
    su = 0.5 * lu / nu
    sv = 0.5 * lv / nv
    log_scale = np.tile(np.log([su, sv, normal_sigma]), (n, 1))
    colors = np.clip(np.asarray(base_color) + rng.uniform(-color_jitter, color_jitter, (n, 3)),
                     0.02, 0.98)
    return (positions, log_scale, np.tile(quat, (n, 1)),
            np.full(n, opacity_logit), colors)


def _box(rng, origin, size, color, spacing: float):
    """Five visible faces of an axis-aligned box sitting on the floor."""
    ox, oy, oz = origin
    lx, ly, lz = size
    parts = []
    parts.append(_patch(rng, (ox, oy, oz + lz), (lx, 0, 0), (0, ly, 0), (0, 0, 1), spacing, color))
    parts.append(_patch(rng, (ox, oy, oz), (0, ly, 0), (0, 0, lz), (-1, 0, 0), spacing, color))
    parts.append(_patch(rng, (ox + lx, oy, oz), (0, ly, 0), (0, 0, lz), (1, 0, 0), spacing, color))
    parts.append(_patch(rng, (ox, oy, oz), (lx, 0, 0), (0, 0, lz), (0, -1, 0), spacing, color))
    parts.append(_patch(rng, (ox, oy + ly, oz), (lx, 0, 0), (0, 0, lz), (0, 1, 0), spacing, color))
    return parts


def _assemble(parts) -> GaussianSet:
    return GaussianSet(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        np.concatenate([p[3] for p in parts]),
        np.concatenate([p[4] for p in parts]),
    )


def _default_intrinsics(resolution: int) -> Intrinsics:
    return Intrinsics(fx=0.7 * resolution, fy=0.7 * resolution,
                      cx=resolution / 2.0, cy=resolution / 2.0,
                      width=resolution, height=resolution, near=0.05, far=25.0)


def _corner_rig(intr: Intrinsics, anchor, targets, count: int) -> list:
    """Input cameras clustered near one corner, aimed across the room."""
    cams = []
    for k in range(count):
        ang = 2.0 * math.pi * k / max(count, 1)
        pos = np.asarray(anchor, dtype=np.float64) + np.array(
            [0.28 * math.cos(ang), 0.28 * math.sin(ang), 0.12 * math.sin(2.0 * ang)])
        cams.append(Camera(look_at_pose(pos, targets[k % len(targets)]), intr))
    return cams


def _ring_rig(intr: Intrinsics, center, radius: float, z: float, count: int = 6) -> list:
    cams = []
    look = np.array([center[0], center[1], z - 0.1])
    for k in range(count):
        ang = 2.0 * math.pi * (k + 0.5) / count
        pos = np.array([center[0] + radius * math.cos(ang),
                        center[1] + radius * math.sin(ang), z])
        cams.append(Camera(look_at_pose(pos, look), intr))
    return cams


WALL_COLORS = {
    "floor": (0.50, 0.44, 0.36),
    "ceiling": (0.87, 0.87, 0.84),
    "wall_x0": (0.75, 0.35, 0.30),
    "wall_x1": (0.30, 0.50, 0.75),
    "wall_y0": (0.40, 0.65, 0.40),
    "wall_y1": (0.80, 0.70, 0.35),
}


def _room_shell(rng, lx, ly, lz, spacing):
    c = WALL_COLORS
    return [
        _patch(rng, (0, 0, 0), (lx, 0, 0), (0, ly, 0), (0, 0, 1), spacing, c["floor"]),
        _patch(rng, (0, 0, lz), (lx, 0, 0), (0, ly, 0), (0, 0, -1), spacing, c["ceiling"]),
        _patch(rng, (0, 0, 0), (0, ly, 0), (0, 0, lz), (1, 0, 0), spacing, c["wall_x0"]),
        _patch(rng, (lx, 0, 0), (0, ly, 0), (0, 0, lz), (-1, 0, 0), spacing, c["wall_x1"]),
        _patch(rng, (0, 0, 0), (lx, 0, 0), (0, 0, lz), (0, 1, 0), spacing, c["wall_y0"]),
        _patch(rng, (0, ly, 0), (lx, 0, 0), (0, 0, lz), (0, -1, 0), spacing, c["wall_y1"]),
    ]


def _build_box_room(rng, intr, n_views):
    lx, ly, lz = 4.0, 3.0, 2.5
    parts = _room_shell(rng, lx, ly, lz, spacing=0.34)
    parts += _box(rng, (2.4, 1.8, 0.0), (0.8, 0.6, 0.7), (0.85, 0.25, 0.45), 0.18)
    parts += _box(rng, (3.0, 0.6, 0.0), (0.6, 0.6, 1.1), (0.25, 0.65, 0.75), 0.18)
    targets = [(3.4, 2.3, 1.2), (2.6, 2.8, 0.9), (3.5, 1.0, 1.6),
               (2.3, 1.6, 2.2), (3.2, 0.7, 0.5), (1.9, 2.7, 1.8)]
    inputs = _corner_rig(intr, (0.75, 0.70, 1.45), targets, n_views)
    heldout = _ring_rig(intr, (lx / 2, ly / 2), 1.15, 1.35)
    return parts, inputs, heldout


def _build_l_room(rng, intr, n_views):
    lz = 2.5
    parts = [
        _patch(rng, (0, 0, 0), (4.0, 0, 0), (0, 2.0, 0), (0, 0, 1), 0.34, WALL_COLORS["floor"]),
        _patch(rng, (0, 2.0, 0), (1.8, 0, 0), (0, 1.4, 0), (0, 0, 1), 0.34, WALL_COLORS["floor"]),
        _patch(rng, (0, 0, lz), (4.0, 0, 0), (0, 2.0, 0), (0, 0, -1), 0.34, WALL_COLORS["ceiling"]),
        _patch(rng, (0, 2.0, lz), (1.8, 0, 0), (0, 1.4, 0), (0, 0, -1), 0.34, WALL_COLORS["ceiling"]),
        _patch(rng, (0, 0, 0), (4.0, 0, 0), (0, 0, lz), (0, 1, 0), 0.34, WALL_COLORS["wall_y0"]),
        _patch(rng, (4.0, 0, 0), (0, 2.0, 0), (0, 0, lz), (-1, 0, 0), 0.34, WALL_COLORS["wall_x1"]),
        _patch(rng, (1.8, 2.0, 0), (2.2, 0, 0), (0, 0, lz), (0, -1, 0), 0.34, WALL_COLORS["wall_y1"]),
        _patch(rng, (1.8, 2.0, 0), (0, 1.4, 0), (0, 0, lz), (-1, 0, 0), 0.34, (0.55, 0.45, 0.65)),
        _patch(rng, (0, 3.4, 0), (1.8, 0, 0), (0, 0, lz), (0, -1, 0), 0.34, (0.65, 0.55, 0.35)),
        _patch(rng, (0, 0, 0), (0, 3.4, 0), (0, 0, lz), (1, 0, 0), 0.34, WALL_COLORS["wall_x0"]),
    ]
    parts += _box(rng, (2.9, 0.9, 0.0), (0.7, 0.6, 0.8), (0.85, 0.25, 0.45), 0.18)
    targets = [(3.4, 1.2, 1.2), (2.4, 1.8, 0.8), (3.6, 0.6, 1.7), (0.9, 3.0, 1.3)]
    inputs = _corner_rig(intr, (0.7, 0.6, 1.45), targets, n_views)
    heldout = _ring_rig(intr, (2.0, 1.0), 0.85, 1.3)
    return parts, inputs, heldout


def _build_shelf(rng, intr, n_views):
    lx, ly, lz = 3.2, 2.6, 2.3
    parts = _room_shell(rng, lx, ly, lz, spacing=0.32)
    shelf_color = (0.45, 0.30, 0.20)
    x0, x1, y0, y1 = 0.9, 2.3, 2.25, 2.6
    for z in (0.45, 0.95, 1.45):
        parts.append(_patch(rng, (x0, y0, z), (x1 - x0, 0, 0), (0, y1 - y0, 0),
                            (0, 0, 1), 0.12, shelf_color))
        parts.append(_patch(rng, (x0, y0, z - 0.04), (x1 - x0, 0, 0), (0, y1 - y0, 0),
                            (0, 0, -1), 0.12, shelf_color))
    for x in (x0, x1):
        parts.append(_patch(rng, (x, y0, 0.0), (0, y1 - y0, 0), (0, 0, 1.6),
                            (1, 0, 0), 0.12, shelf_color))
    parts += _box(rng, (1.2, 0.7, 0.0), (0.6, 0.5, 0.5), (0.25, 0.65, 0.75), 0.16)
    targets = [(2.6, 2.0, 1.2), (1.6, 2.4, 0.9), (2.9, 1.0, 1.4), (1.5, 1.5, 2.0)]
    inputs = _corner_rig(intr, (0.6, 0.55, 1.35), targets, n_views)
    heldout = _ring_rig(intr, (lx / 2, ly / 2), 0.9, 1.25)
    return parts, inputs, heldout


_BUILDERS = {"box_room": _build_box_room, "l_room": _build_l_room, "shelf": _build_shelf}


def generate_synthetic_scene(kind: str, rng_seed: int, resolution: int = 64,
                             n_input_views: int = 4) -> SyntheticScene:
    """Build a ground-truth scene with its camera rig, deterministically."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")
    rng = np.random.default_rng(rng_seed)
    intr = _default_intrinsics(resolution)
    parts, inputs, heldout = _BUILDERS[kind](rng, intr, n_input_views)
    gt = _assemble(parts)
    return SyntheticScene(kind=kind, seed=rng_seed, gt_gaussians=gt,
                          surface_points=gt.position.copy(),
                          surface_colors=gt.color.copy(),
                          input_cameras=inputs, heldout_cameras=heldout)


# ---------------------------------------------------------------------------
# Bundle I/O
# ---------------------------------------------------------------------------

def _write_views(gset: GaussianSet, cameras, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for i, cam in enumerate(cameras):
        out = render(gset, cam)
        write_png(directory / f"view_{i:03d}.png", out.color)
        write_pfm(directory / f"view_{i:03d}.pfm", out.color)


def write_scene_bundle(scene: SyntheticScene, out_dir) -> SceneBundle:
    """Render ground truth at every camera and lay the scene out on disk."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    write_point_cloud(root / "points.ply", scene.surface_points, scene.surface_colors)
    save_cameras(root / "cameras.json", scene.input_cameras)
    save_cameras(root / "heldout_cameras.json", scene.heldout_cameras)
    _write_views(scene.gt_gaussians, scene.input_cameras, root / "images")
    _write_views(scene.gt_gaussians, scene.heldout_cameras, root / "heldout")
    write_gaussian_set(root / "gt_gaussians.ply", scene.gt_gaussians)
    manifest = {
        "kind": scene.kind,
        "seed": scene.seed,
        "point_cloud": "points.ply",
        "mesh": None,
        "cameras": "cameras.json",
        "images_dir": "images",
        "heldout_cameras": "heldout_cameras.json",
        "heldout_dir": "heldout",
        "gt_gaussians": "gt_gaussians.ply",
    }
    (root / "scene.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return load_scene_bundle(root)


def load_scene_bundle(root) -> SceneBundle:
    """Resolve and validate a scene directory against its manifest.

    Checks that referenced files exist and that camera ids match the image
    filenames (``view_{id:03d}``).
    """
    root = Path(root)
    manifest_path = root / "scene.json"
    if not manifest_path.exists():
        raise SceneBundleError(f"no scene.json in {root}", {"path": str(root)})
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneBundleError(f"scene.json is not valid JSON: {exc}",
                               {"path": str(manifest_path)}) from exc

    def _resolve(key, required):
        rel = manifest.get(key)
        if rel is None:
            if required:
                raise SceneBundleError(f"scene.json lacks {key!r}", {"path": str(manifest_path)})
            return None
        p = root / rel
        if not p.exists():
            raise SceneBundleError(f"{key} file missing: {p}", {"path": str(p)})
        return p

    bundle = SceneBundle(
        root=root,
        point_cloud=_resolve("point_cloud", True),
        cameras=_resolve("cameras", True),
        images_dir=_resolve("images_dir", True),
        mesh=_resolve("mesh", False),
        heldout_cameras=_resolve("heldout_cameras", False),
        heldout_dir=_resolve("heldout_dir", False),
        gt_gaussians=_resolve("gt_gaussians", False),
    )
    for cam_id, _ in load_cameras(bundle.cameras):
        if not (bundle.images_dir / f"view_{cam_id:03d}.png").exists():
            raise SceneBundleError(f"no image for camera id {cam_id}",
                                   {"images_dir": str(bundle.images_dir), "id": cam_id})
    return bundle


def load_views(cameras_path, images_dir) -> list[tuple[Camera, Image]]:
    """(camera, image) pairs; prefers lossless PFM over PNG when present."""
    views = []
    images_dir = Path(images_dir)
    for cam_id, cam in load_cameras(cameras_path):
        pfm = images_dir / f"view_{cam_id:03d}.pfm"
        png = images_dir / f"view_{cam_id:03d}.png"
        if pfm.exists():
            views.append((cam, read_pfm(pfm)))
        elif png.exists():
            views.append((cam, read_png(png)))
        else:
            raise SceneBundleError(f"no image for camera id {cam_id}",
                                   {"images_dir": str(images_dir), "id": cam_id})
    return views


def load_surface_points(bundle: SceneBundle):
    """Surface points for coverage sampling: mesh vertices when a mesh is
    present, otherwise the raw point cloud."""
    source = bundle.mesh if bundle.mesh is not None else bundle.point_cloud
    positions, colors, _ = read_point_cloud(source)
    return positions, colors


def load_gt_gaussians(bundle: SceneBundle) -> GaussianSet:
    if bundle.gt_gaussians is None:
        raise SceneBundleError("scene bundle has no ground-truth splats",
                               {"root": str(bundle.root)})
    return read_gaussian_set(bundle.gt_gaussians)
