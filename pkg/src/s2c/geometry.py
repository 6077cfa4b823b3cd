"""Core geometric types and visibility queries.

Camera poses (unit quaternion + position), pinhole intrinsics, oriented
bounding boxes, and the coverage spheres whose surface samples the trajectory
planner uses for visibility accounting.

Conventions:
  * quaternions are (w, x, y, z);
  * a pose is camera-to-world: ``x_world = R(q) @ x_cam + t``, so ``t`` is the
    camera position and the camera looks along its local +z axis;
  * pixel (row i, col j) is sampled at image-plane position (j + 0.5, i + 0.5).

All types are immutable values; all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCloud, EmptySurface

QUAT_NORM_TOL = 1e-9


# ---------------------------------------------------------------------------
# Quaternion helpers
# ---------------------------------------------------------------------------

def normalize_quaternion(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).reshape(4)
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise ValueError("zero quaternion cannot be normalized")
    return q / n


def quaternion_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = np.asarray(q, dtype=np.float64).reshape(4)
    return np.array([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])


def quaternion_to_matrix_batch(q: np.ndarray) -> np.ndarray:
    """Vectorized quaternion_to_matrix for an (N, 4) array."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    R = np.empty((q.shape[0], 3, 3))
    R[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    R[:, 0, 1] = 2.0 * (x * y - w * z)
    R[:, 0, 2] = 2.0 * (x * z + w * y)
    R[:, 1, 0] = 2.0 * (x * y + w * z)
    R[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    R[:, 1, 2] = 2.0 * (y * z - w * x)
    R[:, 2, 0] = 2.0 * (x * z - w * y)
    R[:, 2, 1] = 2.0 * (y * z + w * x)
    R[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return R


def matrix_to_quaternion(R) -> np.ndarray:
    """Unit quaternion (w >= 0) of a rotation matrix, via Shepperd's method."""
    R = np.asarray(R, dtype=np.float64)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] >= R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0.0:
        q = -q
    return normalize_quaternion(q)


def quaternion_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = np.asarray(a, dtype=np.float64).reshape(4)
    bw, bx, by, bz = np.asarray(b, dtype=np.float64).reshape(4)
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def _freeze(obj, name: str, arr: np.ndarray) -> None:
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Pose:
    """Camera-to-world rigid transform.

    ``rotation`` is a unit quaternion (w, x, y, z); ``q`` and ``-q`` denote the
    identical pose. ``translation`` is the camera position in world units.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.array(self.rotation, dtype=np.float64).reshape(4)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        n = float(np.linalg.norm(q))
        if abs(n - 1.0) > QUAT_NORM_TOL:
            raise ValueError(f"quaternion norm {n!r} not unit within {QUAT_NORM_TOL}")
        _freeze(self, "rotation", q)
        _freeze(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_unnormalized(cls, q, t) -> "Pose":
        return cls(normalize_quaternion(q), t)

    def rotation_matrix(self) -> np.ndarray:
        return quaternion_to_matrix(self.rotation)

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        """Map world-space points (M, 3) into the camera frame."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return (pts - self.translation) @ self.rotation_matrix()

    def camera_to_world(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return pts @ self.rotation_matrix().T + self.translation


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics plus near/far clip distances."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    near: float
    far: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (isinstance(self.width, int) and isinstance(self.height, int)):
            object.__setattr__(self, "width", int(self.width))
            object.__setattr__(self, "height", int(self.height))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if not (0 <= self.cx < self.width) or not (0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if not (0 < self.near < self.far):
            raise ValueError("require 0 < near < far")


@dataclass(frozen=True)
class Camera:
    pose: Pose
    intrinsics: Intrinsics

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project world points to continuous pixel coordinates.

        Returns (uv (M, 2), depth (M,)). Points at or behind the camera plane
        yield non-finite uv; callers must mask on depth.
        """
        pc = self.pose.world_to_camera(points)
        z = pc[:, 2]
        k = self.intrinsics
        with np.errstate(divide="ignore", invalid="ignore"):
            u = k.fx * pc[:, 0] / z + k.cx
            v = k.fy * pc[:, 1] / z + k.cy
        return np.stack([u, v], axis=1), z


def points_in_frustum(camera: Camera, points: np.ndarray) -> np.ndarray:
    """Boolean mask: which world points fall inside the camera frustum.

    A point is inside iff it projects to a pixel coordinate in
    [0, width) x [0, height) with camera-space depth in [near, far].
    """
    uv, z = camera.project(points)
    k = camera.intrinsics
    ok = (z >= k.near) & (z <= k.far)
    ok &= (uv[:, 0] >= 0.0) & (uv[:, 0] < k.width)
    ok &= (uv[:, 1] >= 0.0) & (uv[:, 1] < k.height)
    return ok


def point_in_frustum(camera: Camera, point) -> bool:
    return bool(points_in_frustum(camera, np.asarray(point, dtype=np.float64).reshape(1, 3))[0])


@dataclass(frozen=True, eq=False)
class OrientedBoundingBox:
    """Oriented box: center, orthonormal axes (columns), positive half extents."""

    center: np.ndarray
    axes: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        c = np.array(self.center, dtype=np.float64).reshape(3)
        a = np.array(self.axes, dtype=np.float64).reshape(3, 3)
        h = np.array(self.half_extents, dtype=np.float64).reshape(3)
        if np.max(np.abs(a.T @ a - np.eye(3))) > 1e-6:
            raise ValueError("axes must be orthonormal within 1e-6")
        if np.any(h <= 0):
            raise ValueError("half extents must be positive")
        _freeze(self, "center", c)
        _freeze(self, "axes", a)
        _freeze(self, "half_extents", h)

    def to_local(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return (pts - self.center) @ self.axes

    def to_world(self, local: np.ndarray) -> np.ndarray:
        loc = np.atleast_2d(np.asarray(local, dtype=np.float64))
        return loc @ self.axes.T + self.center

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        local = self.to_local(points)
        return np.all(np.abs(local) <= self.half_extents + tol, axis=1)

    def corners(self) -> np.ndarray:
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64)
        return self.to_world(signs * self.half_extents)

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * self.half_extents))


@dataclass(frozen=True, eq=False)
class CoverageSphere:
    """A sphere proxying local scene area, with fixed surface sample points."""

    id: int
    center: np.ndarray
    radius: float
    samples: np.ndarray

    def __post_init__(self):
        c = np.array(self.center, dtype=np.float64).reshape(3)
        s = np.array(self.samples, dtype=np.float64).reshape(-1, 3)
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")
        dist = np.linalg.norm(s - c, axis=1)
        if np.max(np.abs(dist - self.radius)) > 1e-6 * self.radius:
            raise ValueError("samples must lie on the sphere surface")
        _freeze(self, "center", c)
        _freeze(self, "samples", s)

    @property
    def sample_count(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class CoverageField:
    """Coverage spheres plus a per-sample seen/unseen bitmask.

    ``seen`` has shape (num spheres, samples per sphere); a set bit means the
    sample was observed by at least one accepted camera.
    """

    spheres: tuple
    seen: np.ndarray

    def __post_init__(self):
        spheres = tuple(self.spheres)
        if not spheres:
            raise ValueError("coverage field needs at least one sphere")
        n_prime = spheres[0].sample_count
        for s in spheres:
            if s.sample_count != n_prime:
                raise ValueError("all spheres must share one sample count")
        seen = np.array(self.seen, dtype=bool).reshape(len(spheres), n_prime)
        object.__setattr__(self, "spheres", spheres)
        _freeze(self, "seen", seen)
        flat = np.concatenate([s.samples for s in spheres], axis=0)
        _freeze(self, "_sample_positions", flat)

    @classmethod
    def unseen(cls, spheres) -> "CoverageField":
        spheres = tuple(spheres)
        n_prime = spheres[0].sample_count
        return cls(spheres, np.zeros((len(spheres), n_prime), dtype=bool))

    @property
    def sample_positions(self) -> np.ndarray:
        """All sample points, flattened to (N * N', 3), sphere-major order."""
        return self._sample_positions

    @property
    def total_samples(self) -> int:
        return int(self.seen.size)

    @property
    def seen_count(self) -> int:
        return int(np.count_nonzero(self.seen))

    @property
    def coverage_fraction(self) -> float:
        return self.seen_count / self.total_samples

    def with_seen(self, seen: np.ndarray) -> "CoverageField":
        return CoverageField(self.spheres, seen)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _axis_rotation(axis: int, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    a, b = [i for i in range(3) if i != axis]
    R = np.eye(3)
    R[a, a] = c
    R[a, b] = -s
    R[b, a] = s
    R[b, b] = c
    return R


def _box_volume(centered: np.ndarray, axes: np.ndarray) -> float:
    local = centered @ axes
    return float(np.prod(local.max(axis=0) - local.min(axis=0)))


def _refine_axes(centered: np.ndarray, axes: np.ndarray, sweeps: int = 3) -> np.ndarray:
    """Deterministic volume-minimizing rotation refinement of the PCA frame.

    Sample covariance misaligns the PCA axes by several degrees on sparse
    clouds, which inflates the min/max box badly; golden-section sweeps over
    in-frame rotations shrink it back to a local volume minimum.
    """
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(sweeps):
        for axis in range(3):
            lo, hi = -0.35, 0.35
            f = lambda th: _box_volume(centered, axes @ _axis_rotation(axis, th))
            a, b = lo, hi
            c1 = b - gr * (b - a)
            c2 = a + gr * (b - a)
            f1, f2 = f(c1), f(c2)
            for _ in range(40):
                if f1 < f2:
                    b, c2, f2 = c2, c1, f1
                    c1 = b - gr * (b - a)
                    f1 = f(c1)
                else:
                    a, c1, f1 = c1, c2, f2
                    c2 = a + gr * (b - a)
                    f2 = f(c2)
            theta = (a + b) / 2.0
            if f((a + b) / 2.0) < _box_volume(centered, axes):
                axes = axes @ _axis_rotation(axis, theta)
    return axes


def compute_obb(points, margin: float = 0.02) -> OrientedBoundingBox:
    """Fit an oriented bounding box around a point cloud.

    Axes start from PCA of the centered points and are tightened by a
    deterministic volume-minimizing rotation refinement; extents are the
    min/max of the points in that frame, inflated by ``margin`` on each side.
    Raises DegenerateCloud for collinear/coplanar/collapsed input.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] < 4:
        raise DegenerateCloud("need at least 4 points", {"count": int(pts.shape[0])})
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / pts.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    if float(evals.max()) <= 0.0 or float(evals.min()) <= 1e-12 * float(evals.max()):
        raise DegenerateCloud("points are coplanar or collinear within tolerance",
                              {"eigenvalues": evals.tolist()})
    axes = evecs[:, np.argsort(evals)[::-1]]
    axes = _refine_axes(centered, axes)
    # canonical axis signs for determinism
    for k in range(3):
        j = int(np.argmax(np.abs(axes[:, k])))
        if axes[j, k] < 0:
            axes[:, k] = -axes[:, k]
    if np.linalg.det(axes) < 0:
        axes[:, 2] = -axes[:, 2]
    local = centered @ axes
    lo = local.min(axis=0)
    hi = local.max(axis=0)
    extent = hi - lo
    max_extent = float(extent.max())
    if max_extent <= 0.0 or float(extent.min()) <= 1e-9 * max_extent:
        raise DegenerateCloud("points are coplanar or collinear within tolerance",
                              {"extents": extent.tolist()})
    center = mean + axes @ ((lo + hi) / 2.0)
    half = (extent / 2.0) * (1.0 + margin)
    return OrientedBoundingBox(center, axes, half)


def sample_sphere_points(sphere_center, radius: float, n_prime: int) -> np.ndarray:
    """Deterministic near-uniform points on a sphere via the Fibonacci spiral.

    Returns an (n_prime, 3) array. A single sample sits at the +z pole.
    """
    if n_prime < 1:
        raise ValueError("n_prime must be >= 1")
    c = np.asarray(sphere_center, dtype=np.float64).reshape(3)
    if n_prime == 1:
        return c + np.array([[0.0, 0.0, radius]])
    k = np.arange(n_prime, dtype=np.float64)
    z = 1.0 - (2.0 * k + 1.0) / n_prime
    phi = k * math.pi * (3.0 - math.sqrt(5.0))
    rxy = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    unit = np.stack([rxy * np.cos(phi), rxy * np.sin(phi), z], axis=1)
    return c + radius * unit


def farthest_point_indices(points: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Greedy farthest-point subsampling.

    Starts at the point farthest from the centroid (lowest index on ties) and
    returns (selected indices, distance at which the last point was selected).
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = pts.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k={k} out of range for {n} points")
    centroid = pts.mean(axis=0)
    start = int(np.argmax(np.linalg.norm(pts - centroid, axis=1)))
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = start
    dist = np.linalg.norm(pts - pts[start], axis=1)
    last = math.inf
    for i in range(1, k):
        nxt = int(np.argmax(dist))
        last = float(dist[nxt])
        chosen[i] = nxt
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return chosen, (last if k > 1 else math.inf)


def suggest_sphere_radius(surface_points, centers) -> float:
    """Default coverage radius: 1.5x the covering radius of the chosen centers.

    Falls back to 1.5x the mean nearest-neighbor spacing among centers when no
    surface points are available. Slight overlap avoids blind spots between
    neighboring spheres.
    """
    ctr = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    surf = np.asarray(surface_points, dtype=np.float64).reshape(-1, 3)
    if surf.shape[0] > 0:
        d = np.linalg.norm(surf[:, None, :] - ctr[None, :, :], axis=2).min(axis=1)
        r = float(d.max())
        if r > 0:
            return 1.5 * r
    if ctr.shape[0] < 2:
        raise ValueError("cannot suggest a radius from fewer than 2 centers")
    d = np.linalg.norm(ctr[:, None, :] - ctr[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    return 1.5 * float(d.min(axis=1).mean())


def _obb_face_counts(obb: OrientedBoundingBox, n_obb: int) -> list[int]:
    """Split n_obb over the six faces proportionally to area (largest remainder)."""
    h = obb.half_extents
    areas = []
    for axis in range(3):
        a, b = [i for i in range(3) if i != axis]
        areas.extend([4.0 * h[a] * h[b]] * 2)
    areas = np.asarray(areas)
    quota = areas / areas.sum() * n_obb
    counts = np.floor(quota).astype(int)
    rem = n_obb - counts.sum()
    for idx in np.argsort(-(quota - counts), kind="stable")[:rem]:
        counts[idx] += 1
    return counts.tolist()


def _face_grid(rng: np.random.Generator, count: int, length_u: float, length_v: float) -> np.ndarray:
    """Jittered stratified samples in [-1, 1]^2 for one face, count rows kept."""
    if count == 0:
        return np.zeros((0, 2))
    cols = max(1, round(math.sqrt(count * length_u / max(length_v, 1e-12))))
    rows = math.ceil(count / cols)
    cells = [(r, c) for r in range(rows) for c in range(cols)][:count]
    jitter = rng.random((count, 2))
    out = np.empty((count, 2))
    for i, (r, c) in enumerate(cells):
        out[i, 0] = ((c + jitter[i, 0]) / cols) * 2.0 - 1.0
        out[i, 1] = ((r + jitter[i, 1]) / rows) * 2.0 - 1.0
    return out


def sample_coverage_spheres(surface_points, obb: OrientedBoundingBox,
                            n_surface: int, n_obb: int, radius: float,
                            n_point_samples: int = 64, seed: int = 0) -> list[CoverageSphere]:
    """Place coverage spheres on the scene surface and on the OBB faces.

    ``n_surface`` centers are chosen from ``surface_points`` by farthest-point
    subsampling; ``n_obb`` centers are stratified jittered grids over the six
    box faces, with per-face counts proportional to face area. Deterministic
    under ``seed``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_surface < 0 or n_obb < 0 or n_surface + n_obb < 1:
        raise ValueError("need n_surface >= 0, n_obb >= 0 and at least one sphere")
    centers = []
    if n_surface > 0:
        surf = np.asarray(surface_points, dtype=np.float64).reshape(-1, 3)
        if surf.shape[0] == 0:
            raise EmptySurface("surface sphere sampling requested on an empty point set")
        if surf.shape[0] < n_surface:
            raise ValueError(f"n_surface={n_surface} exceeds {surf.shape[0]} surface points")
        idx, _ = farthest_point_indices(surf, n_surface)
        centers.append(surf[idx])
    if n_obb > 0:
        rng = np.random.default_rng(seed)
        counts = _obb_face_counts(obb, n_obb)
        h = obb.half_extents
        face_centers = []
        face = 0
        for axis in range(3):
            a, b = [i for i in range(3) if i != axis]
            for sign in (-1.0, 1.0):
                uv = _face_grid(rng, counts[face], 2.0 * h[a], 2.0 * h[b])
                local = np.zeros((uv.shape[0], 3))
                local[:, axis] = sign * h[axis]
                local[:, a] = uv[:, 0] * h[a]
                local[:, b] = uv[:, 1] * h[b]
                face_centers.append(obb.to_world(local))
                face += 1
        centers.append(np.concatenate(face_centers, axis=0))
    all_centers = np.concatenate(centers, axis=0)
    return [CoverageSphere(i, c, radius, sample_sphere_points(c, radius, n_point_samples))
            for i, c in enumerate(all_centers)]


def visible_samples(camera: Camera, sphere: CoverageSphere) -> np.ndarray:
    """Bitmask over the sphere's samples: inside the camera frustum or not."""
    return points_in_frustum(camera, sphere.samples)


def look_at_pose(position, target, up=(0.0, 0.0, 1.0)) -> Pose:
    """Pose at ``position`` with the +z (optical) axis pointing at ``target``.

    The image x axis is kept perpendicular to ``up`` by Gram-Schmidt; a
    fallback axis handles views parallel to ``up``.
    """
    position = np.asarray(position, dtype=np.float64).reshape(3)
    target = np.asarray(target, dtype=np.float64).reshape(3)
    forward = target - position
    n = float(np.linalg.norm(forward))
    if n < 1e-12:
        forward = np.array([1.0, 0.0, 0.0])
    else:
        forward = forward / n
    up = np.asarray(up, dtype=np.float64).reshape(3)
    if abs(float(np.dot(forward, up))) > 0.999:
        up = np.array([1.0, 0.0, 0.0]) if abs(forward[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward], axis=1)
    return Pose(matrix_to_quaternion(R), position)
