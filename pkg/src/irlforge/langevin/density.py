"""Density estimation over sample clouds: histograms, Gaussian KDE, reward
reconstruction up to an additive constant, mode finding, and marginal
variational distances.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptyCloud
from .samplers import SampleCloud


def freedman_diaconis_bins(x: np.ndarray, max_bins: int = 200) -> int:
    n = x.shape[0]
    q75, q25 = np.percentile(x, [75, 25])
    iqr = q75 - q25
    if iqr <= 0:
        return 10
    width = 2 * iqr / n ** (1 / 3)
    return int(np.clip(math.ceil((x.max() - x.min()) / width), 10, max_bins))


def histogram_density(cloud: SampleCloud, edges: list[np.ndarray] | None = None):
    """Normalized histogram density on bin edges (Freedman-Diaconis default).

    Returns (density, edges); the density integrates to one over the grid.
    """
    if cloud.samples.shape[0] == 0:
        raise EmptyCloud("no post-burn-in samples")
    dim = cloud.samples.shape[1]
    if edges is None:
        edges = [
            np.histogram_bin_edges(
                cloud.samples[:, j], bins=freedman_diaconis_bins(cloud.samples[:, j])
            )
            for j in range(dim)
        ]
    hist, edges = np.histogramdd(cloud.samples, bins=edges, density=True)
    return hist, edges


def kde_marginal(samples: np.ndarray, grid: np.ndarray, bandwidth: float) -> np.ndarray:
    """1-d Gaussian KDE on a grid, renormalized over the grid."""
    z = (grid[:, None] - samples[None, :]) / bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (samples.size * bandwidth * math.sqrt(2 * math.pi))
    total = np.trapz(dens, grid)
    return dens / max(total, 1e-300)


def kde_marginal_blocked(samples, grid, bandwidth, block=20_000):
    out = np.zeros_like(grid)
    c = 1.0 / (samples.size * bandwidth * math.sqrt(2 * math.pi))
    for start in range(0, samples.size, block):
        z = (grid[:, None] - samples[None, start:start + block]) / bandwidth
        out += np.exp(-0.5 * z * z).sum(axis=1)
    out *= c
    total = np.trapz(out, grid)
    return out / max(total, 1e-300)


def estimate_reward(
    cloud: SampleCloud,
    edges: list[np.ndarray] | None = None,
    beta: float = 1.0,
    method: str = "hist",
    kde_bandwidth: float = 0.1,
):
    """log empirical density / beta on a grid, shifted so max = 0.

    Cells never visited come back as -inf (histogram) which max-shifts
    ignore.  Returns (reward_grid, edges).
    """
    if method == "hist":
        dens, edges = histogram_density(cloud, edges)
        with np.errstate(divide="ignore"):
            r = np.log(dens) / beta
        r -= r[np.isfinite(r)].max()
        return r, edges
    if method != "kde":
        raise ValueError("method must be 'hist' or 'kde'")
    if cloud.samples.shape[0] == 0:
        raise EmptyCloud("no post-burn-in samples")
    if edges is None:
        raise ValueError("kde method needs explicit grid edges")
    centers = [0.5 * (e[1:] + e[:-1]) for e in edges]
    mesh = np.meshgrid(*centers, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    dens = np.zeros(pts.shape[0])
    inv = 1.0 / (2 * kde_bandwidth**2)
    c = (2 * math.pi) ** (-pts.shape[1] / 2) * kde_bandwidth ** (-pts.shape[1])
    sub = cloud.samples[:: max(1, cloud.samples.shape[0] // 50_000)]
    for start in range(0, sub.shape[0], 5000):
        blk = sub[start:start + 5000]
        d2 = ((pts[:, None, :] - blk[None, :, :]) ** 2).sum(axis=2)
        dens += np.exp(-d2 * inv).sum(axis=1)
    dens = dens * c / sub.shape[0]
    r = np.log(np.maximum(dens, 1e-300)) / beta
    r -= r.max()
    return r.reshape([c.size for c in centers]), edges


def find_modes(
    cloud: SampleCloud,
    edges: list[np.ndarray],
    n_modes: int = 2,
    min_separation: float = 0.5,
    smooth_bandwidth: float = 0.15,
) -> np.ndarray:
    """Greedy mode extraction from a KDE evaluated at histogram cell centers."""
    r, edges = estimate_reward(cloud, edges, method="kde", kde_bandwidth=smooth_bandwidth)
    centers = [0.5 * (e[1:] + e[:-1]) for e in edges]
    mesh = np.meshgrid(*centers, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = r.ravel()
    order = np.argsort(-vals)
    modes: list[np.ndarray] = []
    for i in order:
        p = pts[i]
        if all(np.linalg.norm(p - q) >= min_separation for q in modes):
            modes.append(p)
            if len(modes) == n_modes:
                break
    return np.asarray(modes)


def marginal_variational_distance(
    samples_a: np.ndarray,
    samples_b: np.ndarray,
    coord: int,
    bandwidth: float = 0.1,
    grid_points: int = 512,
) -> float:
    """Half the L1 distance between KDE-smoothed marginals on a shared grid."""
    xa = samples_a[:, coord]
    xb = samples_b[:, coord]
    lo = min(xa.min(), xb.min()) - 3 * bandwidth
    hi = max(xa.max(), xb.max()) + 3 * bandwidth
    grid = np.linspace(lo, hi, grid_points)
    fa = kde_marginal_blocked(xa, grid, bandwidth)
    fb = kde_marginal_blocked(xb, grid, bandwidth)
    return 0.5 * float(np.trapz(np.abs(fa - fb), grid))
