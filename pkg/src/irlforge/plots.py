"""Report figures rendered next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: Path) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def render_calibration(cal_samples: np.ndarray, t_star: float, p_value: float, path) -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    xs = np.sort(cal_samples)
    ax.step(xs, np.arange(1, xs.size + 1) / xs.size, where="post", label="empirical CDF of M")
    ax.axvline(t_star, color="crimson", ls="--", label=f"T* = {t_star:.3g}")
    ax.set_xlabel("M")
    ax.set_ylabel("F(M)")
    ax.set_title(f"detector calibration (p = {p_value:.3g})")
    ax.legend(loc="lower right", fontsize=8)
    return _save(fig, Path(path))


def render_trace(values: np.ndarray, ylabel: str, path, xlabel: str = "iteration") -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.plot(values, lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return _save(fig, Path(path))


def render_cloud(samples: np.ndarray, path, title: str = "sample cloud") -> str:
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.4))
    if samples.shape[1] >= 2:
        h = axes[0].hist2d(samples[:, 0], samples[:, 1], bins=60)
        fig.colorbar(h[3], ax=axes[0])
        axes[0].set_xlabel("coord 1")
        axes[0].set_ylabel("coord 2")
    axes[1].hist(samples[:, 0], bins=80, density=True, alpha=0.7, label="coord 1")
    if samples.shape[1] >= 2:
        axes[1].hist(samples[:, 1], bins=80, density=True, alpha=0.5, label="coord 2")
    axes[1].legend(fontsize=8)
    fig.suptitle(title)
    return _save(fig, Path(path))


def render_marginal_comparison(samples_a, samples_b, labels, path) -> str:
    fig, axes = plt.subplots(1, samples_a.shape[1], figsize=(8, 3.2))
    axes = np.atleast_1d(axes)
    for j, ax in enumerate(axes):
        ax.hist(samples_a[:, j], bins=80, density=True, alpha=0.6, label=labels[0])
        ax.hist(samples_b[:, j], bins=80, density=True, alpha=0.6, label=labels[1])
        ax.set_xlabel(f"coord {j + 1}")
        ax.legend(fontsize=8)
    return _save(fig, Path(path))


def render_grid(values: np.ndarray, axis: np.ndarray, path, title: str, band=None) -> str:
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    masked = np.ma.masked_invalid(values)
    pm = ax.pcolormesh(axis, axis, masked.T, shading="auto")
    fig.colorbar(pm, ax=ax)
    if band is not None:
        b_grid, budget, width = band
        ax.contour(axis, axis, (np.abs(b_grid - budget) < width).T.astype(float),
                   levels=[0.5], colors="w", linewidths=1.0)
    ax.set_xlabel("phi(1|1)")
    ax.set_ylabel("phi(1|2)")
    ax.set_title(title)
    return _save(fig, Path(path))


def render_masking(beta: np.ndarray, masked: np.ndarray, path) -> str:
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    ax.scatter(beta[:, 0], beta[:, 1], label="optimal", marker="o")
    ax.scatter(masked[:, 0], masked[:, 1], label="masked", marker="x")
    for b, m in zip(beta, masked):
        ax.plot([b[0], m[0]], [b[1], m[1]], color="gray", lw=0.6)
    ax.set_xlabel("good 1")
    ax.set_ylabel("good 2")
    ax.legend(fontsize=8)
    return _save(fig, Path(path))


def render_window_modes(window_modes: np.ndarray, majority: np.ndarray, path) -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.plot(window_modes[:, 0], marker="o", label="window mode (coord 1)")
    ax2 = ax.twinx()
    ax2.step(range(len(majority)), majority, where="mid", color="crimson", alpha=0.6,
             label="majority regime")
    ax.set_xlabel("window")
    ax.set_ylabel("mode location")
    ax2.set_ylabel("regime")
    return _save(fig, Path(path))
