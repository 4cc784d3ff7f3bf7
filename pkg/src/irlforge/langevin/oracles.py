"""Reward oracles: batched noisy-gradient sources with optional ground truth
for validation, including the Bayesian-learning mixture posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class RewardOracle:
    """Stream of unbiased noisy gradients of an expected reward."""

    dim: int
    noisy_grad: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    true_r: Callable[[np.ndarray], float] | None = None
    true_grad: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class SwitchingOracle:
    """Regime-indexed reward family for the Markov-switching scenario."""

    dim: int
    regimes: tuple[RewardOracle, ...]

    @property
    def n_regimes(self) -> int:
        return len(self.regimes)


def quadratic_oracle(dim: int, curvature: float = 1.0, noise: float = 0.5, center=None) -> RewardOracle:
    """R(theta) = -curvature * ||theta - center||^2 / 2, additive noise."""
    center_v = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def noisy_grad(theta, rng):
        theta = np.atleast_2d(theta)
        return -curvature * (theta - center_v) + noise * rng.standard_normal(theta.shape)

    def true_r(theta):
        d = np.asarray(theta, dtype=float) - center_v
        return -0.5 * curvature * float(d @ d)

    def true_grad(theta):
        return -curvature * (np.asarray(theta, dtype=float) - center_v)

    return RewardOracle(dim, noisy_grad, true_r, true_grad)


def _mixture_logpdf_grad(y: np.ndarray, theta: np.ndarray, var: float):
    """log p(y|theta) and its gradient for the two-component location mixture
    0.5 N(theta1, var) + 0.5 N(theta1 + theta2, var); vectorized over rows.
    """
    t1 = theta[:, 0]
    t2 = theta[:, 1]
    r1 = y - t1
    r2 = y - t1 - t2
    e1 = np.exp(-0.5 * r1 * r1 / var)
    e2 = np.exp(-0.5 * r2 * r2 / var)
    norm = 1.0 / math.sqrt(2 * math.pi * var)
    p = 0.5 * norm * (e1 + e2)
    w1 = e1 / np.maximum(e1 + e2, 1e-300)
    w2 = 1.0 - w1
    g1 = w1 * r1 / var + w2 * r2 / var
    g2 = w2 * r2 / var
    logp = np.log(np.maximum(p, 1e-300))
    return logp, np.stack([g1, g2], axis=1)


@dataclass(frozen=True)
class MixturePosteriorModel:
    """Two-parameter location mixture with Gaussian prior, the adaptive
    Bayesian-learning testbed.
    """

    theta_true: np.ndarray
    n_obs: int = 100
    prior_var: tuple[float, float] = (10.0, 2.0)
    mix_var: float = 2.0

    def sample_observations(self, rng: np.random.Generator, size: int) -> np.ndarray:
        comp = rng.integers(2, size=size)
        means = np.where(comp == 0, self.theta_true[0], self.theta_true[0] + self.theta_true[1])
        return means + math.sqrt(self.mix_var) * rng.standard_normal(size)

    def prior_grad(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_2d(theta)
        pv = np.asarray(self.prior_var)
        return -theta / pv[None, :]

    def log_posterior(self, theta: np.ndarray, y_path: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        pv = np.asarray(self.prior_var)
        lp = -0.5 * float(np.sum(theta * theta / pv))
        logp, _ = _mixture_logpdf_grad(y_path, np.tile(theta, (y_path.size, 1)), self.mix_var)
        return lp + float(logp.sum())

    def stochastic_oracle(self) -> RewardOracle:
        """Fresh observations per gradient call: targets the expected
        log-posterior (relative entropy) surface.
        """

        def noisy_grad(theta, rng):
            theta = np.atleast_2d(theta)
            y = self.sample_observations(rng, theta.shape[0])
            _, g = _mixture_logpdf_grad(y, theta, self.mix_var)
            return self.prior_grad(theta) + self.n_obs * g

        return RewardOracle(2, noisy_grad)

    def fixed_path_oracle(self, y_path: np.ndarray) -> RewardOracle:
        """Random sweeps over a fixed observation record: targets the
        realized posterior.
        """
        y_path = np.asarray(y_path, dtype=float)

        def noisy_grad(theta, rng):
            theta = np.atleast_2d(theta)
            y = y_path[rng.integers(y_path.size, size=theta.shape[0])]
            _, g = _mixture_logpdf_grad(y, theta, self.mix_var)
            return self.prior_grad(theta) + y_path.size * g

        return RewardOracle(2, noisy_grad)


def validate_oracle_unbiased(
    oracle: RewardOracle,
    points: np.ndarray,
    draws: int = 10_000,
    seed: int = 0,
    fd_step: float = 1e-5,
) -> float:
    """Largest z-score of (mean noisy gradient - finite-difference gradient)
    over the probe points; requires `true_r`.
    """
    if oracle.true_r is None:
        raise ValueError("oracle has no ground-truth reward to validate against")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for point in np.atleast_2d(points):
        batch = np.tile(point, (draws, 1))
        g = oracle.noisy_grad(batch, rng)
        mean = g.mean(axis=0)
        se = g.std(axis=0, ddof=1) / math.sqrt(draws)
        for j in range(oracle.dim):
            e = np.zeros(oracle.dim)
            e[j] = fd_step
            fd = (oracle.true_r(point + e) - oracle.true_r(point - e)) / (2 * fd_step)
            worst = max(worst, abs(mean[j] - fd) / max(se[j], 1e-300))
    return worst
