"""CPU 3D Gaussian splatting: rendering, optimization, degradation, metrics.

Each splat is a tuple (position, log-scales, unit quaternion, opacity logit,
RGB color). Rendering projects splats to 2D with the first-order perspective
Jacobian on the covariance, sorts front to back by center depth, truncates
support at 3 standard deviations, and alpha-composites color, center depth
and accumulated opacity.

The renderer has a hand-derived backward pass producing analytic gradients of
the photometric loss (L1 + 1 - SSIM) with respect to every splat attribute;
``optimize`` runs Adam on those gradients. All internal math is float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import DimensionMismatch
from .geometry import Camera, normalize_quaternion, quaternion_to_matrix_batch

LOG_SCALE_MIN = math.log(1e-6)
LOG_SCALE_MAX = math.log(1e3)
TRUNCATION_MAHA = 9.0  # 3 sigma
GRAD_RMS_FLOOR = 1e-7  # below this a group is converged at float32 resolution


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian3D:
    """One splat: position, log-scales, rotation, opacity logit, RGB color."""

    position: np.ndarray
    log_scale: np.ndarray
    rotation: np.ndarray
    opacity_logit: float
    color: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64).reshape(3))
        object.__setattr__(self, "log_scale", np.asarray(self.log_scale, dtype=np.float64).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(4))
        object.__setattr__(self, "color", np.asarray(self.color, dtype=np.float64).reshape(3))
        object.__setattr__(self, "opacity_logit", float(self.opacity_logit))

    @property
    def opacity(self) -> float:
        return 1.0 / (1.0 + math.exp(-self.opacity_logit))


class GaussianSet:
    """Array-of-attributes container for a set of splats.

    Attributes are float64 arrays: ``position`` (N, 3), ``log_scale`` (N, 3),
    ``rotation`` (N, 4) unit quaternions, ``opacity_logit`` (N,), ``color``
    (N, 3) in [0, 1].
    """

    __slots__ = ("position", "log_scale", "rotation", "opacity_logit", "color")

    def __init__(self, position, log_scale, rotation, opacity_logit, color):
        self.position = np.asarray(position, dtype=np.float64).reshape(-1, 3).copy()
        n = self.position.shape[0]
        self.log_scale = np.asarray(log_scale, dtype=np.float64).reshape(n, 3).copy()
        self.rotation = np.asarray(rotation, dtype=np.float64).reshape(n, 4).copy()
        self.opacity_logit = np.asarray(opacity_logit, dtype=np.float64).reshape(n).copy()
        self.color = np.asarray(color, dtype=np.float64).reshape(n, 3).copy()

    @classmethod
    def from_gaussians(cls, gaussians) -> "GaussianSet":
        gs = list(gaussians)
        return cls(
            np.array([g.position for g in gs]),
            np.array([g.log_scale for g in gs]),
            np.array([g.rotation for g in gs]),
            np.array([g.opacity_logit for g in gs]),
            np.array([g.color for g in gs]),
        )

    def __len__(self) -> int:
        return self.position.shape[0]

    def __getitem__(self, i: int) -> Gaussian3D:
        return Gaussian3D(self.position[i], self.log_scale[i], self.rotation[i],
                          float(self.opacity_logit[i]), self.color[i])

    def copy(self) -> "GaussianSet":
        return GaussianSet(self.position, self.log_scale, self.rotation,
                           self.opacity_logit, self.color)

    def select(self, indices) -> "GaussianSet":
        idx = np.asarray(indices)
        return GaussianSet(self.position[idx], self.log_scale[idx], self.rotation[idx],
                           self.opacity_logit[idx], self.color[idx])


@dataclass
class Image:
    """Row-major float32 image, (H, W, C) with C = 1 (depth) or 3 (RGB)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (H, W, 1|3), got {arr.shape}")
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @classmethod
    def zeros(cls, height: int, width: int, channels: int = 3) -> "Image":
        return cls(np.zeros((height, width, channels), dtype=np.float32))

    def copy(self) -> "Image":
        return Image(self.data.copy())


@dataclass
class RenderOutput:
    color: Image
    depth: Image
    alpha_acc: Image


# ---------------------------------------------------------------------------
# Covariance
# ---------------------------------------------------------------------------

def covariance_of(g: Gaussian3D) -> np.ndarray:
    """World-space 3x3 covariance R diag(exp(s))^2 R^T of one splat."""
    q = normalize_quaternion(g.rotation)
    R = quaternion_to_matrix_batch(q[None, :])[0]
    M = R * np.exp(g.log_scale)[None, :]
    return M @ M.T


# ---------------------------------------------------------------------------
# Forward rendering
# ---------------------------------------------------------------------------

def _splat_setup(gset: GaussianSet, cam: Camera):
    """Per-splat camera-frame quantities shared by forward and backward."""
    k = cam.intrinsics
    Rc2w = cam.pose.rotation_matrix()
    W = Rc2w.T  # world-to-camera rotation
    qn_norm = np.linalg.norm(gset.rotation, axis=1)
    qn = gset.rotation / qn_norm[:, None]
    Rg = quaternion_to_matrix_batch(qn)
    s = np.exp(np.clip(gset.log_scale, LOG_SCALE_MIN, LOG_SCALE_MAX))
    M3 = Rg * s[:, None, :]
    sigma3 = M3 @ np.transpose(M3, (0, 2, 1))
    p_cam = (gset.position - cam.pose.translation) @ W.T
    x, y, z = p_cam[:, 0], p_cam[:, 1], p_cam[:, 2]
    in_depth = (z >= k.near) & (z <= k.far)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        zi = np.where(z != 0.0, 1.0 / z, 0.0)
        u = k.fx * x * zi + k.cx
        v = k.fy * y * zi + k.cy
        J = np.zeros((len(gset), 2, 3))
        J[:, 0, 0] = k.fx * zi
        J[:, 0, 2] = -k.fx * x * zi * zi
        J[:, 1, 1] = k.fy * zi
        J[:, 1, 2] = -k.fy * y * zi * zi
    Mc = J @ W[None, :, :]
    cov2 = Mc @ sigma3 @ np.transpose(Mc, (0, 2, 1))
    op = 1.0 / (1.0 + np.exp(-gset.opacity_logit))
    return {
        "W": W, "qn": qn, "qn_norm": qn_norm, "Rg": Rg, "s": s, "M3": M3,
        "sigma3": sigma3, "p_cam": p_cam, "in_depth": in_depth, "u": u, "v": v,
        "J": J, "Mc": Mc, "cov2": cov2, "op": op,
    }


def _splat_rect(u, v, cov2, width, height):
    """Pixel-index bounds of the 3-sigma ellipse, or None when off screen."""
    rx = 3.0 * math.sqrt(max(cov2[0, 0], 0.0))
    ry = 3.0 * math.sqrt(max(cov2[1, 1], 0.0))
    j0 = max(0, math.ceil(u - rx - 0.5))
    j1 = min(width - 1, math.floor(u + rx - 0.5))
    i0 = max(0, math.ceil(v - ry - 0.5))
    i1 = min(height - 1, math.floor(v + ry - 0.5))
    if j0 > j1 or i0 > i1:
        return None
    return i0, i1, j0, j1


def _render_arrays(gset: GaussianSet, cam: Camera, want_tape: bool):
    """Float64 forward pass. Returns (color, depth, alpha, tape, setup, n_active)."""
    k = cam.intrinsics
    h, w = k.height, k.width
    color = np.zeros((h, w, 3))
    depth = np.zeros((h, w))
    trans = np.ones((h, w))
    tape = [] if want_tape else None
    n_active = 0
    if len(gset) == 0:
        return color, depth, trans, tape, None, 0
    st = _splat_setup(gset, cam)
    idx_all = np.where(st["in_depth"])[0]
    order = idx_all[np.argsort(st["p_cam"][idx_all, 2], kind="stable")]
    for i in order:
        cov2 = st["cov2"][i]
        det = cov2[0, 0] * cov2[1, 1] - cov2[0, 1] * cov2[1, 0]
        if not np.isfinite(det) or det <= 1e-300:
            continue
        rect = _splat_rect(st["u"][i], st["v"][i], cov2, w, h)
        if rect is None:
            continue
        i0, i1, j0, j1 = rect
        A = np.array([[cov2[1, 1], -cov2[0, 1]], [-cov2[1, 0], cov2[0, 0]]]) / det
        dx = (np.arange(j0, j1 + 1) + 0.5) - st["u"][i]
        dy = (np.arange(i0, i1 + 1) + 0.5) - st["v"][i]
        maha = (A[0, 0] * dx * dx)[None, :] + (A[1, 1] * dy * dy)[:, None] \
            + (2.0 * A[0, 1]) * dy[:, None] * dx[None, :]
        inside = maha <= TRUNCATION_MAHA
        if not inside.any():
            continue
        n_active += int(np.count_nonzero(inside))
        g = np.where(inside, np.exp(-0.5 * maha), 0.0)
        sigma = st["op"][i] * g
        sl = (slice(i0, i1 + 1), slice(j0, j1 + 1))
        t_before = trans[sl].copy()
        weight = t_before * sigma
        color[sl] += weight[:, :, None] * gset.color[i]
        depth[sl] += weight * st["p_cam"][i, 2]
        trans[sl] = t_before * (1.0 - sigma)
        if want_tape:
            tape.append({"i": int(i), "sl": sl, "g": g, "sigma": sigma,
                         "t_before": t_before, "A": A, "dx": dx, "dy": dy})
    return color, depth, trans, tape, st, n_active


def render(gset: GaussianSet, cam: Camera) -> RenderOutput:
    """Render color, alpha-composited center depth, and accumulated opacity."""
    if len(gset) == 0:
        raise ValueError("cannot render an empty GaussianSet")
    color, depth, trans, _, _, _ = _render_arrays(gset, cam, want_tape=False)
    return RenderOutput(color=Image(color), depth=Image(depth), alpha_acc=Image(1.0 - trans))


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------

# partials of the quaternion-to-matrix map at a unit quaternion (w, x, y, z)
def _rotation_partials(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    dw = 2.0 * np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    dx = 2.0 * np.array([[0.0, y, z], [y, -2.0 * x, -w], [z, w, -2.0 * x]])
    dy = 2.0 * np.array([[-2.0 * y, x, w], [x, 0.0, z], [-w, z, -2.0 * y]])
    dz = 2.0 * np.array([[-2.0 * z, -w, x], [w, -2.0 * z, y], [x, y, 0.0]])
    return np.stack([dw, dx, dy, dz])


def _render_backward(gset: GaussianSet, cam: Camera, tape, st, d_color: np.ndarray) -> dict:
    """Chain d loss / d rendered-color back to all splat attributes."""
    k = cam.intrinsics
    n = len(gset)
    grads = {
        "position": np.zeros((n, 3)),
        "log_scale": np.zeros((n, 3)),
        "rotation": np.zeros((n, 4)),
        "opacity_logit": np.zeros(n),
        "color": np.zeros((n, 3)),
    }
    if not tape:
        return grads
    W = st["W"]
    behind = np.zeros(d_color.shape)  # composited color strictly behind each splat
    for entry in reversed(tape):
        i = entry["i"]
        sl = entry["sl"]
        g = entry["g"]
        sigma = entry["sigma"]
        t_before = entry["t_before"]
        A = entry["A"]
        dx, dy = entry["dx"], entry["dy"]
        dc = d_color[sl]
        weight = t_before * sigma
        grads["color"][i] += np.einsum("hwc,hw->c", dc, weight)
        b = behind[sl]
        d_sigma = np.einsum("hwc,hwc->hw", dc, gset.color[i][None, None, :] - b) * t_before
        behind[sl] = sigma[:, :, None] * gset.color[i] + (1.0 - sigma[:, :, None]) * b
        op = st["op"][i]
        d_op = float(np.sum(d_sigma * g))
        grads["opacity_logit"][i] += d_op * op * (1.0 - op)
        d_g = d_sigma * op
        d_maha = -0.5 * g * d_g
        # maha = d^T A d with d = pixel - mean2d
        ax = A[0, 0] * dx[None, :] + A[0, 1] * dy[:, None]
        ay = A[0, 1] * dx[None, :] + A[1, 1] * dy[:, None]
        d_mu2 = np.array([-2.0 * np.sum(d_maha * ax), -2.0 * np.sum(d_maha * ay)])
        sxx = np.sum(d_maha * dx[None, :] ** 2)
        syy = np.sum(d_maha * dy[:, None] ** 2)
        sxy = np.sum(d_maha * dy[:, None] * dx[None, :])
        dL_dA = np.array([[sxx, sxy], [sxy, syy]])
        d_cov2 = -A @ dL_dA @ A
        Mc = st["Mc"][i]
        sigma3 = st["sigma3"][i]
        d_Mc = 2.0 * d_cov2 @ Mc @ sigma3
        d_sigma3 = Mc.T @ d_cov2 @ Mc
        d_J = d_Mc @ W.T
        x, y, z = st["p_cam"][i]
        zi = 1.0 / z
        fx, fy = k.fx, k.fy
        d_pc = np.zeros(3)
        d_pc[0] += d_J[0, 2] * (-fx * zi * zi)
        d_pc[1] += d_J[1, 2] * (-fy * zi * zi)
        d_pc[2] += (d_J[0, 0] * (-fx * zi * zi) + d_J[0, 2] * (2.0 * fx * x * zi ** 3)
                    + d_J[1, 1] * (-fy * zi * zi) + d_J[1, 2] * (2.0 * fy * y * zi ** 3))
        d_pc[0] += d_mu2[0] * fx * zi
        d_pc[1] += d_mu2[1] * fy * zi
        d_pc[2] += -d_mu2[0] * fx * x * zi * zi - d_mu2[1] * fy * y * zi * zi
        grads["position"][i] += W.T @ d_pc
        M3 = st["M3"][i]
        d_M3 = 2.0 * d_sigma3 @ M3
        d_Rg = d_M3 * st["s"][i][None, :]
        grads["log_scale"][i] += np.diag(st["Rg"][i].T @ d_M3) * st["s"][i]
        qn = st["qn"][i]
        partials = _rotation_partials(qn)
        g_unit = np.einsum("kab,ab->k", partials, d_Rg)
        nq = st["qn_norm"][i]
        grads["rotation"][i] += (g_unit - qn * float(np.dot(qn, g_unit))) / nq
    return grads


# ---------------------------------------------------------------------------
# Photometric loss and optimization
# ---------------------------------------------------------------------------

def _check_rgb_pair(a: Image, b: Image) -> None:
    if a.data.shape != b.data.shape:
        raise DimensionMismatch(
            f"image dimensions differ: {a.data.shape} vs {b.data.shape}")
    if a.channels != 3:
        raise DimensionMismatch("photometric loss expects RGB images")


def _loss_from_arrays(rendered: np.ndarray, target: np.ndarray, want_grad: bool,
                      l1_deadband: float = 0.0):
    diff = rendered - target
    l1 = float(np.mean(np.abs(diff)))
    if want_grad:
        sv, sg = metrics.ssim_with_gradient(rendered, target)
        sign = np.sign(diff)
        if l1_deadband > 0.0:
            # differences below float32 quantization carry no signal
            sign = sign * (np.abs(diff) > l1_deadband)
        grad = sign / rendered.size - sg
        return l1 + (1.0 - sv), grad
    return l1 + (1.0 - metrics.ssim(rendered, target)), None


def photometric_loss(rendered: Image, target: Image) -> float:
    """L1 plus structural dissimilarity (1 - SSIM) between two RGB images."""
    _check_rgb_pair(rendered, target)
    loss, _ = _loss_from_arrays(np.asarray(rendered.data, dtype=np.float64),
                                np.asarray(target.data, dtype=np.float64), False)
    return loss


def evaluation_loss(gset: GaussianSet, views, return_support: bool = False,
                    quantize_render: bool = False):
    """Mean photometric loss of the set over (camera, target) pairs.

    By default the float64 render feeds the loss directly, keeping the value
    smooth enough for finite differencing; ``quantize_render`` first rounds
    the rendering to float32 like an Image value, matching what ``optimize``
    minimizes. With ``return_support`` also returns the total number of
    composited (splat, pixel) pairs, which changes exactly when a parameter
    crosses a truncation or clip boundary.
    """
    total = 0.0
    support = 0
    for cam_i, target in views:
        color, _, _, _, _, n_act = _render_arrays(gset, cam_i, want_tape=False)
        if quantize_render:
            color = color.astype(np.float32).astype(np.float64)
        loss, _ = _loss_from_arrays(color, np.asarray(target.data, dtype=np.float64), False)
        total += loss
        support += n_act
    total /= len(views)
    return (total, support) if return_support else total


def loss_gradients(gset: GaussianSet, views, quantize_render: bool = False) -> tuple[float, dict]:
    """Mean photometric loss over the views and its analytic attribute gradients.

    ``quantize_render`` rounds renders to float32 before the loss so that a
    target equal to the set's own rendered Image yields exactly zero gradient
    (the cast itself backpropagates as identity).
    """
    n = len(gset)
    acc = {
        "position": np.zeros((n, 3)),
        "log_scale": np.zeros((n, 3)),
        "rotation": np.zeros((n, 4)),
        "opacity_logit": np.zeros(n),
        "color": np.zeros((n, 3)),
    }
    total = 0.0
    deadband = 1e-6 if quantize_render else 0.0
    for cam_i, target in views:
        color, _, _, tape, st, _ = _render_arrays(gset, cam_i, want_tape=True)
        if quantize_render:
            color = color.astype(np.float32).astype(np.float64)
        loss, d_color = _loss_from_arrays(color, np.asarray(target.data, dtype=np.float64),
                                          True, l1_deadband=deadband)
        total += loss
        g = _render_backward(gset, cam_i, tape, st, d_color)
        for key in acc:
            acc[key] += g[key]
    nv = len(views)
    for key in acc:
        acc[key] /= nv
    return total / nv, acc


@dataclass(frozen=True)
class LearningRates:
    position: float = 2e-2
    log_scale: float = 5e-2
    rotation: float = 2e-2
    opacity_logit: float = 2.5e-1
    color: float = 1e-1


def _clamp_invariants(gset: GaussianSet) -> None:
    np.clip(gset.log_scale, LOG_SCALE_MIN, LOG_SCALE_MAX, out=gset.log_scale)
    np.clip(gset.color, 0.0, 1.0, out=gset.color)
    gset.rotation /= np.linalg.norm(gset.rotation, axis=1)[:, None]


def optimize(gset: GaussianSet, views, steps: int,
             lr: LearningRates | None = None,
             history: list | None = None) -> GaussianSet:
    """Descent of the photometric loss over all five attribute groups.

    Adam-style first/second-moment schedule, with the second moment shared
    per attribute group: per-parameter normalization turns the vanishing L1
    gradients of near-converged splats into full-size sign steps that churn on
    the loss kinks, while the group-shared moment keeps steps proportional to
    each parameter's gradient. A short warmup and cosine step-size decay tame
    the kinks near convergence. Full-batch over the views, deterministic;
    quaternions are renormalized and scale/color clamps reapplied after every
    step. Returns a new set; ``history`` receives the per-step loss.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not views:
        raise ValueError("need at least one (camera, image) view")
    lr = lr or LearningRates()
    out = gset.copy()
    params = ("position", "log_scale", "rotation", "opacity_logit", "color")
    m = {p: np.zeros_like(getattr(out, p)) for p in params}
    v = {p: 0.0 for p in params}
    b1, b2, eps = 0.9, 0.999, 1e-8
    warmup = max(1, min(5, steps // 4))
    for step in range(1, steps + 1):
        loss, grads = loss_gradients(out, views, quantize_render=True)
        if history is not None:
            history.append(loss)
        factor = min(1.0, step / warmup) * (0.05 + 0.95 * 0.5 * (1.0 + math.cos(math.pi * (step - 1) / steps)))
        for p in params:
            g = grads[p]
            m[p] = b1 * m[p] + (1.0 - b1) * g
            v[p] = b2 * v[p] + (1.0 - b2) * float(np.mean(g * g))
            mh = m[p] / (1.0 - b1 ** step)
            vh = v[p] / (1.0 - b2 ** step)
            if math.sqrt(vh) < GRAD_RMS_FLOOR:
                continue  # flat to float32 precision: nothing left to fit
            getattr(out, p)[...] -= getattr(lr, p) * factor * mh / (math.sqrt(vh) + eps)
        _clamp_invariants(out)
    return out


# ---------------------------------------------------------------------------
# Degradation generators
# ---------------------------------------------------------------------------

def degrade_noise(gset: GaussianSet, sigma_position: float, sigma_log_scale: float,
                  sigma_rotation: float, sigma_opacity: float, sigma_color: float,
                  rng_seed: int = 0) -> GaussianSet:
    """Perturb every attribute with zero-mean Gaussian noise of its sigma.

    Quaternions are renormalized and invariant clamps reapplied afterwards.
    Deterministic under the seed.
    """
    for s in (sigma_position, sigma_log_scale, sigma_rotation, sigma_opacity, sigma_color):
        if s < 0:
            raise ValueError("noise sigmas must be non-negative")
    rng = np.random.default_rng(rng_seed)
    out = gset.copy()
    n = len(out)
    out.position += rng.normal(0.0, 1.0, (n, 3)) * sigma_position
    out.log_scale += rng.normal(0.0, 1.0, (n, 3)) * sigma_log_scale
    out.rotation += rng.normal(0.0, 1.0, (n, 4)) * sigma_rotation
    out.opacity_logit += rng.normal(0.0, 1.0, n) * sigma_opacity
    out.color += rng.normal(0.0, 1.0, (n, 3)) * sigma_color
    _clamp_invariants(out)
    return out


def degrade_mask(gset: GaussianSet, remove_fraction: float, rng_seed: int = 0) -> GaussianSet:
    """Remove a uniformly random subset of round(fraction * N) splats."""
    if not (0.0 <= remove_fraction < 1.0):
        raise ValueError("remove_fraction must be in [0, 1)")
    n = len(gset)
    n_remove = round(remove_fraction * n)
    if n_remove == 0:
        return gset.copy()
    rng = np.random.default_rng(rng_seed)
    removed = rng.choice(n, size=n_remove, replace=False)
    keep = np.setdiff1d(np.arange(n), removed)  # preserves original order
    return gset.select(keep)


def seed_from_point_cloud(positions: np.ndarray, colors: np.ndarray | None = None,
                          opacity: float = 0.7) -> GaussianSet:
    """One isotropic splat per point; scale from nearest-neighbor distance."""
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("cannot seed splats from an empty point cloud")
    nn = np.full(n, 1e-2)
    if n > 1:
        # chunked brute force keeps memory bounded for large clouds
        for start in range(0, n, 512):
            block = pts[start:start + 512]
            d = np.linalg.norm(block[:, None, :] - pts[None, :, :], axis=2)
            d[np.arange(block.shape[0]), np.arange(start, start + block.shape[0])] = np.inf
            nn[start:start + 512] = d.min(axis=1)
    log_scale = np.tile(np.log(np.clip(nn, 1e-4, None))[:, None], (1, 3))
    if colors is None:
        color = np.full((n, 3), 0.5)
    else:
        color = np.clip(np.asarray(colors, dtype=np.float64).reshape(n, 3), 0.0, 1.0)
    rotation = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (n, 1))
    logit = math.log(opacity / (1.0 - opacity))
    return GaussianSet(pts, log_scale, rotation, np.full(n, logit), color)


# ---------------------------------------------------------------------------
# Image metrics on Image values
# ---------------------------------------------------------------------------

def psnr(a: Image, b: Image) -> float:
    """PSNR in dB between two images; identical inputs report the 99.0 cap."""
    if a.data.shape != b.data.shape:
        raise DimensionMismatch(f"image dimensions differ: {a.data.shape} vs {b.data.shape}")
    return metrics.psnr_from_arrays(a.data, b.data)


def ssim_image(a: Image, b: Image) -> float:
    if a.data.shape != b.data.shape:
        raise DimensionMismatch(f"image dimensions differ: {a.data.shape} vs {b.data.shape}")
    return metrics.ssim(np.asarray(a.data, dtype=np.float64), np.asarray(b.data, dtype=np.float64))
