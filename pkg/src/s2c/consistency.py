"""Cross-view warping, the view-consistency energy, and Gaussian refinement.

Neighboring rendered views are lifted to colored 3D points through their
rendered depth, re-projected into a target view as z-buffered point renders
with validity masks, and compared against the repaired target image by a
masked L1 energy. The energy's subgradient drives a training-free guidance
step on the repaired images between optimization rounds; the repair itself is
delegated to a pluggable single-step oracle.
"""

from __future__ import annotations

import json
import logging
import math
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, MissingGroundTruth
from .gaussians import GaussianSet, Image, LearningRates, optimize, psnr, render
from .geometry import Camera
from .planner import Trajectory

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass
class WarpResult:
    """A point-rendered warp: RGB image, {0,1} validity mask, view indices."""

    image: Image
    mask: Image
    source_view: int = -1
    target_view: int = -1


class RepairOracle:
    """Single-step image repair interface.

    ``repair`` must return an image of the same dimensions with RGB in [0, 1],
    be stateless per call, and be deterministic. ``parallel_safe`` declares
    whether the loop may call it from several threads at once.
    """

    parallel_safe = True

    def repair(self, rendered: Image, view_index: int) -> Image:
        raise NotImplementedError


class IdentityOracle(RepairOracle):
    def repair(self, rendered: Image, view_index: int) -> Image:
        return rendered.copy()


class GroundTruthOracle(RepairOracle):
    """Returns the stored ground-truth image for the view."""

    def __init__(self, views):
        self.views = list(views)

    def repair(self, rendered: Image, view_index: int) -> Image:
        return self.views[view_index].copy()


class NoisyGroundTruthOracle(RepairOracle):
    """Ground truth plus per-view i.i.d. noise, simulating inconsistent repairs."""

    def __init__(self, views, sigma: float, rng_seed: int = 0):
        self.views = list(views)
        self.sigma = float(sigma)
        self.rng_seed = int(rng_seed)

    def repair(self, rendered: Image, view_index: int) -> Image:
        gt = self.views[view_index].data.astype(np.float64)
        rng = np.random.default_rng((self.rng_seed, view_index))
        noisy = gt + rng.normal(0.0, self.sigma, gt.shape)
        return Image(np.clip(noisy, 0.0, 1.0))


class CommandOracle(RepairOracle):
    """Shells out per view: the command template receives {input}, {output},
    {view} placeholders and must write a PNG to the output path."""

    parallel_safe = False

    def __init__(self, command_template: str):
        self.command_template = command_template

    def repair(self, rendered: Image, view_index: int) -> Image:
        from .image_io import read_png, write_png
        with tempfile.TemporaryDirectory(prefix="s2c_oracle_") as tmp:
            src = Path(tmp) / f"in_{view_index:03d}.png"
            dst = Path(tmp) / f"out_{view_index:03d}.png"
            write_png(src, rendered)
            cmd = self.command_template.format(input=src, output=dst, view=view_index)
            subprocess.run(cmd, shell=True, check=True)
            repaired = read_png(dst)
        if repaired.data.shape != rendered.data.shape:
            raise DimensionMismatch("oracle command changed image dimensions")
        return repaired


ORACLE_KINDS = ("identity", "ground_truth", "noisy_ground_truth", "command")


def make_oracle(kind: str, ground_truth_views=None, noise_sigma: float = 0.05,
                rng_seed: int = 0, command: str | None = None) -> RepairOracle:
    """Build a repair oracle by kind name."""
    if kind == "identity":
        return IdentityOracle()
    if kind == "ground_truth":
        if not ground_truth_views:
            raise MissingGroundTruth("ground_truth oracle needs GT views")
        return GroundTruthOracle(ground_truth_views)
    if kind == "noisy_ground_truth":
        if not ground_truth_views:
            raise MissingGroundTruth("noisy_ground_truth oracle needs GT views")
        return NoisyGroundTruthOracle(ground_truth_views, noise_sigma, rng_seed)
    if kind == "command":
        if not command:
            raise ValueError("command oracle needs a command template")
        return CommandOracle(command)
    raise ValueError(f"unknown oracle kind {kind!r}; expected one of {ORACLE_KINDS}")


@dataclass(frozen=True)
class RefineConfig:
    """Refinement loop parameters.

    ``refine_steps`` is the number of rounds; the final round skips guidance.
    ``guidance_scale`` multiplies the energy subgradient in the image update.
    """

    refine_steps: int = 4
    guidance_scale: float = 1.0
    opt_steps_per_round: int = 30
    oracle_kind: str = "identity"
    oracle_noise_sigma: float = 0.05
    oracle_command: str | None = None

    def __post_init__(self):
        if self.refine_steps < 1:
            raise ValueError("refine_steps must be >= 1")
        if self.guidance_scale < 0:
            raise ValueError("guidance_scale must be >= 0")
        if self.opt_steps_per_round < 1:
            raise ValueError("opt_steps_per_round must be >= 1")
        if self.oracle_kind not in ORACLE_KINDS:
            raise ValueError(f"oracle_kind must be one of {ORACLE_KINDS}")


@dataclass
class ViewSet:
    """Aligned per-view image bundle maintained by one refinement round."""

    cameras: list
    rendered: list       # color renders the oracle repairs
    repaired: list       # oracle outputs, later guided
    rerendered: list     # color renders after the first optimize
    depths: list         # depth renders after the first optimize


# ---------------------------------------------------------------------------
# Warping
# ---------------------------------------------------------------------------

def unproject(color: Image, depth: Image, cam: Camera) -> tuple[np.ndarray, np.ndarray]:
    """Lift pixels with positive depth to colored world-space points.

    Returns (positions (P, 3), colors (P, 3)); one point per pixel whose depth
    is > 0, through the inverse pinhole projection at the pixel center.
    """
    if color.data.shape[:2] != depth.data.shape[:2]:
        raise DimensionMismatch("color and depth dimensions differ")
    d = depth.data[:, :, 0].astype(np.float64)
    if not np.all(np.isfinite(d)):
        raise ValueError("depth must be finite")
    ii, jj = np.nonzero(d > 0.0)
    z = d[ii, jj]
    k = cam.intrinsics
    x = ((jj + 0.5) - k.cx) / k.fx * z
    y = ((ii + 0.5) - k.cy) / k.fy * z
    pts_cam = np.stack([x, y, z], axis=1)
    positions = cam.pose.camera_to_world(pts_cam)
    colors = color.data[ii, jj].astype(np.float64)
    return positions, colors


def point_render(points: np.ndarray, colors: np.ndarray, cam: Camera,
                 source_view: int = -1, target_view: int = -1) -> WarpResult:
    """Nearest-pixel z-buffered splatting of colored points into a view.

    The mask is 1 exactly where at least one point with positive camera-space
    depth landed; the closest point wins each pixel (ties go to the earliest
    point in the input order).
    """
    k = cam.intrinsics
    h, w = k.height, k.width
    img = np.zeros((h, w, 3), dtype=np.float32)
    mask = np.zeros((h, w, 1), dtype=np.float32)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        return WarpResult(Image(img), Image(mask), source_view, target_view)
    cols = np.asarray(colors, dtype=np.float32).reshape(-1, 3)
    uv, z = cam.project(pts)
    ok = z > 0.0
    ok &= (uv[:, 0] >= 0.0) & (uv[:, 0] < w) & (uv[:, 1] >= 0.0) & (uv[:, 1] < h)
    if not ok.any():
        return WarpResult(Image(img), Image(mask), source_view, target_view)
    jj = np.floor(uv[ok, 0]).astype(np.int64)
    ii = np.floor(uv[ok, 1]).astype(np.int64)
    zz = z[ok]
    cc = cols[ok]
    lin = ii * w + jj
    order = np.lexsort((np.arange(lin.size), zz, lin))
    lin_sorted = lin[order]
    first = np.ones(lin_sorted.size, dtype=bool)
    first[1:] = lin_sorted[1:] != lin_sorted[:-1]
    win = order[first]
    img[ii[win], jj[win]] = cc[win]
    mask[ii[win], jj[win], 0] = 1.0
    return WarpResult(Image(img), Image(mask), source_view, target_view)


def warp_view(source_color: Image, source_depth: Image, source_cam: Camera,
              target_cam: Camera, source_view: int = -1, target_view: int = -1) -> WarpResult:
    """unproject + point_render: carry one rendered view into another."""
    positions, colors = unproject(source_color, source_depth, source_cam)
    return point_render(positions, colors, target_cam, source_view, target_view)


# ---------------------------------------------------------------------------
# Consistency energy and guidance
# ---------------------------------------------------------------------------

def _energy_term(x: np.ndarray, warp: WarpResult):
    if warp.image.data.shape != x.shape:
        raise DimensionMismatch("warp and image dimensions differ")
    valid = warp.mask.data[:, :, 0] > 0.5
    count = int(np.count_nonzero(valid)) * x.shape[2]
    if count == 0:
        return 0.0, 0
    diff = x[valid].astype(np.float64) - warp.image.data[valid].astype(np.float64)
    # fsum keeps the reduction exactly rounded, independent of summation order
    return math.fsum(np.abs(diff).ravel().tolist()) / count, count


def consistency_energy(x0: Image, warp_prev: WarpResult | None,
                       warp_next: WarpResult | None) -> float:
    """Masked L1 discrepancy against the neighbor warps.

    Each warp contributes its mean absolute difference over valid
    pixel-channels; warps with empty masks (or absent neighbors at trajectory
    endpoints) contribute zero.
    """
    x = x0.data
    total = 0.0
    for warp in (warp_prev, warp_next):
        if warp is not None:
            total += _energy_term(x, warp)[0]
    return total


def energy_gradient(x0: Image, warp_prev: WarpResult | None,
                    warp_next: WarpResult | None) -> Image:
    """Per-pixel subgradient of the consistency energy w.r.t. the image.

    sign(0) is taken as 0, so the gradient vanishes where the image already
    agrees with a warp, and everywhere outside the union of the masks.
    """
    x = x0.data.astype(np.float64)
    grad = np.zeros_like(x)
    for warp in (warp_prev, warp_next):
        if warp is None:
            continue
        if warp.image.data.shape != x.shape:
            raise DimensionMismatch("warp and image dimensions differ")
        valid = warp.mask.data[:, :, 0] > 0.5
        count = int(np.count_nonzero(valid)) * x.shape[2]
        if count == 0:
            continue
        diff = np.sign(x - warp.image.data.astype(np.float64))
        grad += valid[:, :, None] * diff / count
    return Image(grad)


def guidance_step(x0: Image, g: Image, rho: float) -> Image:
    """x - rho * g, clamped to [0, 1]."""
    if x0.data.shape != g.data.shape:
        raise DimensionMismatch("image and gradient dimensions differ")
    out = x0.data.astype(np.float64) - rho * g.data.astype(np.float64)
    return Image(np.clip(out, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Refinement loop
# ---------------------------------------------------------------------------

def _map_views(fn, indices, oracle_safe: bool, threads: int):
    if threads > 1 and oracle_safe:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, indices))
    return [fn(j) for j in indices]


def _neighbor_warps(viewset: ViewSet, j: int):
    """Warps of the trajectory-order neighbors into view j (None at ends)."""
    prev_warp = next_warp = None
    if j - 1 >= 0:
        prev_warp = warp_view(viewset.rerendered[j - 1], viewset.depths[j - 1],
                              viewset.cameras[j - 1], viewset.cameras[j], j - 1, j)
    if j + 1 < len(viewset.cameras):
        next_warp = warp_view(viewset.rerendered[j + 1], viewset.depths[j + 1],
                              viewset.cameras[j + 1], viewset.cameras[j], j + 1, j)
    return prev_warp, next_warp


def refine(g0: GaussianSet, trajectory: Trajectory, oracle: RepairOracle,
           cfg: RefineConfig, lr: LearningRates | None = None,
           eval_views=None, diag_sink=None, threads: int = 1) -> GaussianSet:
    """View-consistency guided refinement of a Gaussian set.

    Per round: render every trajectory view, repair each through the oracle,
    and optimize the splats on the repaired images. The final round stops
    there; earlier rounds then re-render color and depth, warp each view's
    trajectory neighbors into its frame, take a guidance step on the repaired
    images along the consistency-energy subgradient, and optimize again.

    ``eval_views`` (camera, GT image) pairs add a PSNR column to diagnostics;
    ``diag_sink`` receives one dict per round.
    """
    if len(trajectory) == 0:
        raise ValueError("trajectory must be non-empty")
    cams = list(trajectory.cameras)
    n_views = len(cams)
    current = g0.copy()
    for round_index in range(cfg.refine_steps, 0, -1):
        round_no = cfg.refine_steps - round_index + 1
        renders = _map_views(lambda j: render(current, cams[j]).color,
                             range(n_views), True, threads)
        repaired = _map_views(lambda j: oracle.repair(renders[j], j),
                              range(n_views), oracle.parallel_safe, threads)
        history: list = []
        current = optimize(current, list(zip(cams, repaired)),
                           cfg.opt_steps_per_round, lr, history)
        diag = {"round": round_no, "train_loss": history[-1],
                "mean_energy_before_guidance": None,
                "mean_energy_after_guidance": None, "psnr_vs_gt": None}
        if round_index == 1:
            _finish_diag(diag, current, eval_views, diag_sink)
            break
        outs = _map_views(lambda j: render(current, cams[j]),
                          range(n_views), True, threads)
        viewset = ViewSet(cameras=cams,
                          rendered=renders,
                          repaired=repaired,
                          rerendered=[o.color for o in outs],
                          depths=[o.depth for o in outs])
        warps = _map_views(lambda j: _neighbor_warps(viewset, j),
                           range(n_views), True, threads)
        before = [consistency_energy(viewset.repaired[j], *warps[j]) for j in range(n_views)]
        for j in range(n_views):
            grad = energy_gradient(viewset.repaired[j], *warps[j])
            viewset.repaired[j] = guidance_step(viewset.repaired[j], grad, cfg.guidance_scale)
        after = [consistency_energy(viewset.repaired[j], *warps[j]) for j in range(n_views)]
        diag["mean_energy_before_guidance"] = float(np.mean(before))
        diag["mean_energy_after_guidance"] = float(np.mean(after))
        history = []
        current = optimize(current, list(zip(cams, viewset.repaired)),
                           cfg.opt_steps_per_round, lr, history)
        diag["train_loss"] = history[-1]
        _finish_diag(diag, current, eval_views, diag_sink)
    return current


def _finish_diag(diag: dict, current: GaussianSet, eval_views, diag_sink) -> None:
    if eval_views:
        vals = [psnr(render(current, cam).color, gt) for cam, gt in eval_views]
        diag["psnr_vs_gt"] = float(np.mean(vals))
    log.info("refine round %s: %s", diag["round"], json.dumps(diag))
    if diag_sink is not None:
        diag_sink(diag)
