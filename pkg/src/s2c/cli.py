"""The ``s2c`` command line interface.

Subcommands: gen-scene, init, plan, degrade, refine, eval, export-coverage.
Common flags: --config (JSON), --seed, --threads, --deterministic, --out.
Failures exit nonzero with a JSON error envelope {code, message, context} on
stderr. Report-producing commands write matplotlib figures next to their
JSON/CSV outputs unless --no-figures is given. Log level comes from S2C_LOG.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import figures
from .config import RunConfig, load_run_config, save_run_config
from .consistency import make_oracle, refine
from .errors import S2CError, SceneBundleError
from .gaussians import (
    GaussianSet,
    degrade_mask,
    degrade_noise,
    optimize,
    psnr,
    render,
    seed_from_point_cloud,
    ssim_image,
)
from .geometry import compute_obb, farthest_point_indices, sample_coverage_spheres, suggest_sphere_radius
from .geometry import CoverageField
from .image_io import read_pfm, read_png, write_pfm, write_png
from .planner import information_gain, mark_seen, plan_trajectory
from .ply import read_gaussian_set, write_coverage_cloud, write_gaussian_set
from .scenes import (
    SCENE_KINDS,
    generate_synthetic_scene,
    load_gt_gaussians,
    load_scene_bundle,
    load_surface_points,
    load_views,
    write_scene_bundle,
)
from .serial import load_cameras, load_trajectory, save_trajectory

log = logging.getLogger("s2c")


def _setup_logging() -> None:
    level = os.environ.get("S2C_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _emit_error(code: str, message: str, context: dict) -> None:
    print(json.dumps({"code": code, "message": message, "context": context}),
          file=sys.stderr)


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _effective_config(args, **flag_overrides) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    cfg = cfg.replacing(**flag_overrides)
    if args.seed is not None:
        cfg = cfg.replacing(rng_seed=args.seed, **{"planner.rng_seed": args.seed})
    if args.threads is not None:
        cfg = cfg.replacing(threads=args.threads)
    if args.deterministic:
        cfg = cfg.replacing(deterministic=True, threads=1)
    return cfg


def _echo_config(cfg: RunConfig, out: Path) -> None:
    save_run_config(out / "run_config.json", cfg)


def _build_field(bundle, cfg: RunConfig):
    """Coverage field + OBB from a scene bundle, per the coverage config."""
    points, _ = load_surface_points(bundle)
    if points.shape[0] == 0:
        raise SceneBundleError("point cloud is empty", {"path": str(bundle.point_cloud)})
    obb = compute_obb(points)
    cov = cfg.coverage
    radius = cov.sphere_radius
    if radius is None:
        if cov.surface_spheres > 0:
            idx, _ = farthest_point_indices(points, min(cov.surface_spheres, points.shape[0]))
            centers = points[idx]
        else:
            centers = obb.corners()
        radius = suggest_sphere_radius(points, centers)
    spheres = sample_coverage_spheres(points, obb, cov.surface_spheres, cov.obb_spheres,
                                      radius, cov.samples_per_sphere, seed=cfg.rng_seed)
    return CoverageField.unseen(spheres), obb


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen_scene(args) -> int:
    cfg = _effective_config(args, resolution=args.resolution)
    out = _out_dir(args)
    scene = generate_synthetic_scene(args.kind, cfg.rng_seed, cfg.resolution, args.views)
    bundle = write_scene_bundle(scene, out)
    _echo_config(cfg, out)
    print(json.dumps({"scene": str(bundle.root), "kind": args.kind,
                      "splats": len(scene.gt_gaussians),
                      "input_views": len(scene.input_cameras),
                      "heldout_views": len(scene.heldout_cameras)}))
    return 0


def cmd_init(args) -> int:
    cfg = _effective_config(args)
    out = _out_dir(args)
    bundle = load_scene_bundle(args.scene)
    points, colors = load_surface_points(bundle)
    if points.shape[0] == 0:
        raise SceneBundleError("point cloud is empty", {"path": str(bundle.point_cloud)})
    views = load_views(bundle.cameras, bundle.images_dir)
    gset = seed_from_point_cloud(points, colors)
    history: list = []
    gset = optimize(gset, views, args.steps, history=history)
    write_gaussian_set(out / "g0.ply", gset)
    per_view = [psnr(render(gset, cam).color, img) for cam, img in views]
    metrics_rec = {"steps": args.steps, "final_loss": history[-1],
                   "mean_psnr_inputs": float(np.mean(per_view)),
                   "splats": len(gset)}
    (out / "init_metrics.json").write_text(json.dumps(metrics_rec, indent=2) + "\n")
    _echo_config(cfg, out)
    print(json.dumps(metrics_rec))
    return 0


def cmd_plan(args) -> int:
    cfg = _effective_config(
        args,
        **{"planner.gain_threshold": args.gain_threshold,
           "planner.max_stall_steps": args.max_stall_steps,
           "planner.interp_spacing": args.interp_spacing,
           "planner.translation_weight": args.translation_weight,
           "planner.rotation_weight": args.rotation_weight,
           "coverage.surface_spheres": args.surface_spheres,
           "coverage.obb_spheres": args.obb_spheres,
           "coverage.sphere_radius": args.sphere_radius})
    out = _out_dir(args)
    bundle = load_scene_bundle(args.scene)
    field, obb = _build_field(bundle, cfg)
    input_cams = [cam for _, cam in sorted(load_cameras(bundle.cameras), key=lambda x: x[0])]
    history: list = []
    trajectory = plan_trajectory(input_cams, field, obb, cfg.planner, history)
    save_trajectory(out / "trajectory.json", trajectory)
    input_cov = mark_seen(trajectory.input_cameras, field).coverage_fraction
    final_cov = mark_seen(trajectory.cameras, field).coverage_fraction
    summary = {"cameras": len(trajectory), "input_cameras": len(trajectory.input_cameras),
               "planned_cameras": len(trajectory.planned_cameras),
               "input_coverage": input_cov, "final_coverage": final_cov,
               "candidates_tried": len(history)}
    (out / "plan_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    with open(out / "plan_history.jsonl", "w") as f:
        for rec in history:
            f.write(json.dumps(rec) + "\n")
    if not args.no_figures:
        figures.save_plan_figure(history, out / "coverage_gain.png")
    _echo_config(cfg, out)
    print(json.dumps(summary))
    return 0


def cmd_degrade(args) -> int:
    cfg = _effective_config(
        args,
        **{"degrade.sigma_position": args.sigma_position,
           "degrade.sigma_log_scale": args.sigma_log_scale,
           "degrade.sigma_rotation": args.sigma_rotation,
           "degrade.sigma_opacity": args.sigma_opacity,
           "degrade.sigma_color": args.sigma_color,
           "degrade.remove_fraction": args.remove_fraction})
    out = _out_dir(args)
    gset = read_gaussian_set(args.gaussians)
    d = cfg.degrade
    sigma_pos = d.sigma_position
    if sigma_pos is None:
        extent = gset.position.max(axis=0) - gset.position.min(axis=0)
        sigma_pos = 0.01 * float(np.linalg.norm(extent))
    noisy = degrade_noise(gset, sigma_pos, d.sigma_log_scale, d.sigma_rotation,
                          d.sigma_opacity, d.sigma_color, cfg.rng_seed)
    masked = degrade_mask(noisy, d.remove_fraction, cfg.rng_seed)
    write_gaussian_set(out / "degraded.ply", masked)
    _echo_config(cfg, out)
    print(json.dumps({"input_splats": len(gset), "output_splats": len(masked),
                      "sigma_position": sigma_pos, "remove_fraction": d.remove_fraction}))
    return 0


def cmd_refine(args) -> int:
    cfg = _effective_config(
        args,
        **{"refine.refine_steps": args.rounds,
           "refine.guidance_scale": args.guidance_scale,
           "refine.opt_steps_per_round": args.opt_steps,
           "refine.oracle_kind": args.oracle,
           "refine.oracle_noise_sigma": args.oracle_noise_sigma,
           "refine.oracle_command": args.oracle_command})
    out = _out_dir(args)
    bundle = load_scene_bundle(args.scene)
    gset = read_gaussian_set(args.gaussians)
    trajectory = load_trajectory(args.trajectory)
    gt_views = None
    if cfg.refine.oracle_kind in ("ground_truth", "noisy_ground_truth"):
        gt = load_gt_gaussians(bundle)
        gt_views = [render(gt, cam).color for cam in trajectory.cameras]
    oracle = make_oracle(cfg.refine.oracle_kind, gt_views,
                         cfg.refine.oracle_noise_sigma, cfg.rng_seed,
                         cfg.refine.oracle_command)
    eval_views = None
    if bundle.heldout_cameras is not None and bundle.heldout_dir is not None:
        eval_views = load_views(bundle.heldout_cameras, bundle.heldout_dir)
    rounds: list = []
    with open(out / "diagnostics.jsonl", "w") as diag_file:
        def sink(rec: dict) -> None:
            rounds.append(rec)
            diag_file.write(json.dumps(rec) + "\n")
            diag_file.flush()

        refined = refine(gset, trajectory, oracle, cfg.refine,
                         eval_views=eval_views, diag_sink=sink, threads=cfg.threads)
    write_gaussian_set(out / "g_star.ply", refined)
    if not args.no_figures and rounds:
        figures.save_refine_figure(rounds, out / "refine_rounds.png")
    _echo_config(cfg, out)
    print(json.dumps({"rounds": len(rounds), "splats": len(refined),
                      "final": rounds[-1] if rounds else None}))
    return 0


def _load_image_any(stem: Path):
    pfm = stem.with_suffix(".pfm")
    if pfm.exists():
        return read_pfm(pfm)
    return read_png(stem.with_suffix(".png"))


def _eval_pairs(pairs, out: Path, make_figures: bool) -> dict:
    per_view = []
    for name, img_a, img_b in pairs:
        per_view.append({"view": name, "psnr": psnr(img_a, img_b), "ssim": ssim_image(img_a, img_b)})
    summary = {"mean_psnr": float(np.mean([r["psnr"] for r in per_view])),
               "mean_ssim": float(np.mean([r["ssim"] for r in per_view])),
               "views": len(per_view)}
    (out / "metrics.json").write_text(json.dumps({"summary": summary, "per_view": per_view},
                                                 indent=2) + "\n")
    with open(out / "metrics.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["view", "psnr", "ssim"])
        writer.writeheader()
        writer.writerows(per_view)
    if make_figures:
        figures.save_eval_figure(per_view, out / "metrics.png")
    return summary


def cmd_eval(args) -> int:
    cfg = _effective_config(args)
    out = _out_dir(args)
    pairs = []
    if args.renders and args.reference:
        ra = Path(args.renders)
        rb = Path(args.reference)
        stems = sorted({p.stem for p in ra.iterdir() if p.suffix in (".png", ".pfm")})
        if not stems:
            raise SceneBundleError("no images found to evaluate", {"renders": str(ra)})
        for stem in stems:
            pairs.append((stem, _load_image_any(ra / stem), _load_image_any(rb / stem)))
    elif args.gaussians and args.scene:
        bundle = load_scene_bundle(args.scene)
        gset = read_gaussian_set(args.gaussians)
        if args.split == "heldout":
            if bundle.heldout_cameras is None or bundle.heldout_dir is None:
                raise SceneBundleError("scene has no held-out split", {"root": str(bundle.root)})
            views = load_views(bundle.heldout_cameras, bundle.heldout_dir)
        else:
            views = load_views(bundle.cameras, bundle.images_dir)
        rdir = out / "renders"
        rdir.mkdir(parents=True, exist_ok=True)
        for i, (cam, ref) in enumerate(views):
            rendered = render(gset, cam).color
            write_png(rdir / f"view_{i:03d}.png", rendered)
            write_pfm(rdir / f"view_{i:03d}.pfm", rendered)
            pairs.append((f"view_{i:03d}", rendered, ref))
    else:
        raise S2CError("eval needs either --renders/--reference or --gaussians/--scene")
    summary = _eval_pairs(pairs, out, not args.no_figures)
    _echo_config(cfg, out)
    print(json.dumps(summary))
    return 0


def cmd_export_coverage(args) -> int:
    cfg = _effective_config(args)
    out = _out_dir(args)
    bundle = load_scene_bundle(args.scene)
    field, _ = _build_field(bundle, cfg)
    trajectory = load_trajectory(args.trajectory)
    seen_input = mark_seen(trajectory.input_cameras, field).seen.reshape(-1)
    seen_all = mark_seen(trajectory.cameras, field).seen.reshape(-1)
    labels = np.where(seen_input, "seen_input",
                      np.where(seen_all, "seen_planned", "unseen"))
    write_coverage_cloud(out / "coverage.ply", field.sample_positions, labels.tolist())
    counts = {"red_seen_input": int(seen_input.sum()),
              "green_seen_planned": int((seen_all & ~seen_input).sum()),
              "gray_unseen": int((~seen_all).sum()),
              "total": int(field.total_samples)}
    (out / "coverage_summary.json").write_text(json.dumps(counts, indent=2) + "\n")
    _echo_config(cfg, out)
    print(json.dumps(counts))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="RNG seed")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--deterministic", action="store_true",
                   help="force single-threaded, bit-reproducible execution")
    p.add_argument("--out", help="output directory (default: cwd)")
    p.add_argument("--no-figures", action="store_true", help="skip matplotlib reports")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="s2c", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="generate a synthetic scene bundle")
    p.add_argument("--kind", choices=SCENE_KINDS, default="box_room")
    p.add_argument("--views", type=int, default=4, help="input camera count")
    p.add_argument("--resolution", type=int, default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("init", help="seed splats from the point cloud and fit the input views")
    p.add_argument("--scene", required=True)
    p.add_argument("--steps", type=int, default=300)
    _common_flags(p)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("plan", help="plan a coverage-driven camera trajectory")
    p.add_argument("--scene", required=True)
    p.add_argument("--gain-threshold", type=float, default=None)
    p.add_argument("--max-stall-steps", type=int, default=None)
    p.add_argument("--interp-spacing", type=float, default=None)
    p.add_argument("--translation-weight", type=float, default=None)
    p.add_argument("--rotation-weight", type=float, default=None)
    p.add_argument("--surface-spheres", type=int, default=None)
    p.add_argument("--obb-spheres", type=int, default=None)
    p.add_argument("--sphere-radius", type=float, default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("degrade", help="noise + random-removal degradation of a splat set")
    p.add_argument("--gaussians", required=True)
    p.add_argument("--sigma-position", type=float, default=None)
    p.add_argument("--sigma-log-scale", type=float, default=None)
    p.add_argument("--sigma-rotation", type=float, default=None)
    p.add_argument("--sigma-opacity", type=float, default=None)
    p.add_argument("--sigma-color", type=float, default=None)
    p.add_argument("--remove-fraction", type=float, default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("refine", help="view-consistency guided refinement")
    p.add_argument("--scene", required=True)
    p.add_argument("--gaussians", required=True)
    p.add_argument("--trajectory", required=True)
    p.add_argument("--oracle", default=None,
                   help="identity | ground_truth | noisy_ground_truth | command")
    p.add_argument("--oracle-command", default=None,
                   help="shell template with {input} {output} {view} placeholders")
    p.add_argument("--oracle-noise-sigma", type=float, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--guidance-scale", type=float, default=None)
    p.add_argument("--opt-steps", type=int, default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="PSNR/SSIM between renders and references")
    p.add_argument("--renders", help="directory of rendered images")
    p.add_argument("--reference", help="directory of reference images")
    p.add_argument("--gaussians", help="splat PLY to render and evaluate")
    p.add_argument("--scene", help="scene bundle providing the reference split")
    p.add_argument("--split", choices=("input", "heldout"), default="heldout")
    _common_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-coverage", help="colored coverage point cloud")
    p.add_argument("--scene", required=True)
    p.add_argument("--trajectory", required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_export_coverage)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except S2CError as exc:
        _emit_error(exc.code, str(exc), exc.context)
        return 1
    except FileNotFoundError as exc:
        _emit_error("file_not_found", str(exc), {"filename": getattr(exc, "filename", None)})
        return 1
    except ValueError as exc:
        _emit_error("invalid_value", str(exc), {})
        return 1


if __name__ == "__main__":
    sys.exit(main())
