"""JSON serialization for cameras and trajectories."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import SceneBundleError
from .geometry import Camera, Intrinsics, Pose
from .planner import Trajectory


def camera_to_dict(cam: Camera, cam_id: int) -> dict:
    k = cam.intrinsics
    return {
        "id": int(cam_id),
        "quaternion": [float(v) for v in cam.pose.rotation],
        "translation": [float(v) for v in cam.pose.translation],
        "fx": k.fx, "fy": k.fy, "cx": k.cx, "cy": k.cy,
        "width": k.width, "height": k.height,
        "near": k.near, "far": k.far,
    }


def camera_from_dict(rec: dict) -> tuple[int, Camera]:
    try:
        pose = Pose.from_unnormalized(rec["quaternion"], rec["translation"])
        intr = Intrinsics(fx=float(rec["fx"]), fy=float(rec["fy"]),
                          cx=float(rec["cx"]), cy=float(rec["cy"]),
                          width=int(rec["width"]), height=int(rec["height"]),
                          near=float(rec["near"]), far=float(rec["far"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise SceneBundleError(f"bad camera record: {exc}", {"record": rec}) from exc
    return int(rec["id"]), Camera(pose, intr)


def save_cameras(path, cameras, ids=None) -> None:
    ids = ids if ids is not None else range(len(cameras))
    records = [camera_to_dict(c, i) for i, c in zip(ids, cameras)]
    Path(path).write_text(json.dumps(records, indent=2) + "\n")


def load_cameras(path) -> list[tuple[int, Camera]]:
    path = Path(path)
    try:
        records = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneBundleError(f"cannot read cameras from {path}: {exc}",
                               {"path": str(path)}) from exc
    if not isinstance(records, list):
        raise SceneBundleError("camera file must hold a JSON array", {"path": str(path)})
    return [camera_from_dict(r) for r in records]


def save_trajectory(path, trajectory: Trajectory) -> None:
    records = []
    for i, (cam, tag) in enumerate(zip(trajectory.cameras, trajectory.origin_tags)):
        rec = camera_to_dict(cam, i)
        rec["origin"] = tag
        records.append(rec)
    Path(path).write_text(json.dumps(records, indent=2) + "\n")


def load_trajectory(path) -> Trajectory:
    path = Path(path)
    try:
        records = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneBundleError(f"cannot read trajectory from {path}: {exc}",
                               {"path": str(path)}) from exc
    cams = []
    tags = []
    for rec in records:
        _, cam = camera_from_dict(rec)
        cams.append(cam)
        tags.append(rec.get("origin", "planned"))
    return Trajectory(tuple(cams), tuple(tags))
