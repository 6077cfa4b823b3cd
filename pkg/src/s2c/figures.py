"""Report figures written next to the delimited/JSON outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_plan_figure(history: list[dict], path) -> None:
    """Coverage fraction and per-candidate gain over the planning run."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    it = [h["iteration"] for h in history]
    ax1.plot(it, [h["coverage"] for h in history], color="tab:blue")
    ax1.set_ylabel("coverage fraction")
    ax1.set_ylim(0, 1)
    ax1.grid(alpha=0.3)
    gains = np.array([h["gain"] for h in history])
    accepted = np.array([h["accepted"] for h in history])
    ax2.scatter(np.array(it)[accepted], gains[accepted], s=18, color="tab:green", label="accepted")
    ax2.scatter(np.array(it)[~accepted], gains[~accepted], s=10, color="tab:red", label="rejected")
    ax2.set_xlabel("candidate")
    ax2.set_ylabel("path gain")
    ax2.legend(loc="upper right")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_refine_figure(rounds: list[dict], path) -> None:
    """Per-round train loss, consistency energy, and PSNR when available."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    rs = [r["round"] for r in rounds]
    axes[0].plot(rs, [r["train_loss"] for r in rounds], marker="o", color="tab:blue")
    axes[0].set_title("train loss")
    eb = [(r["round"], r["mean_energy_before_guidance"]) for r in rounds
          if r["mean_energy_before_guidance"] is not None]
    ea = [(r["round"], r["mean_energy_after_guidance"]) for r in rounds
          if r["mean_energy_after_guidance"] is not None]
    if eb:
        axes[1].plot(*zip(*eb), marker="o", label="before guidance", color="tab:red")
        axes[1].plot(*zip(*ea), marker="o", label="after guidance", color="tab:green")
        axes[1].legend()
    axes[1].set_title("mean consistency energy")
    ps = [(r["round"], r["psnr_vs_gt"]) for r in rounds if r.get("psnr_vs_gt") is not None]
    if ps:
        axes[2].plot(*zip(*ps), marker="o", color="tab:purple")
    axes[2].set_title("PSNR vs GT (dB)")
    for ax in axes:
        ax.set_xlabel("round")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_eval_figure(per_view: list[dict], path) -> None:
    """Per-view PSNR/SSIM bars."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
    names = [str(r["view"]) for r in per_view]
    ax1.bar(names, [r["psnr"] for r in per_view], color="tab:blue")
    ax1.set_ylabel("PSNR (dB)")
    ax2.bar(names, [r["ssim"] for r in per_view], color="tab:orange")
    ax2.set_ylabel("SSIM")
    ax2.set_ylim(0, 1.05)
    for ax in (ax1, ax2):
        ax.set_xlabel("view")
        ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
