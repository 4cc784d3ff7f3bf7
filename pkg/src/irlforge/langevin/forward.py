"""Forward agent swarms: randomly initialized constant-step gradient
ascenders emitting the (theta, gradient) trace the passive samplers consume.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .oracles import RewardOracle, SwitchingOracle

log = logging.getLogger("irlforge")


@dataclass(frozen=True)
class GaussianInit:
    """Diagonal Gaussian initialization density with pdf and gradient access."""

    mean: np.ndarray
    var: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.mean + np.sqrt(self.var) * rng.standard_normal((size, self.dim))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        z = (x - self.mean) ** 2 / self.var
        c = (2 * math.pi) ** (-self.dim / 2) / math.sqrt(float(np.prod(self.var)))
        return c * np.exp(-0.5 * z.sum(axis=1))

    def grad_pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return -(x - self.mean) / self.var * self.pdf(x)[:, None]


def standard_gaussian_init(dim: int) -> GaussianInit:
    return GaussianInit(np.zeros(dim), np.ones(dim))


@dataclass(frozen=True)
class ProductCauchyInit:
    """Heavy-tailed initialization density (independent Cauchy coordinates).

    The polynomial tail keeps 1/pi bounded by a polynomial, which tames the
    kick sizes of the 1/pi-weighted sampler variants far from the origin.
    """

    scale: float
    dim: int

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.scale * rng.standard_cauchy((size, self.dim))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        z = 1.0 + (x / self.scale) ** 2
        return np.prod(1.0 / (math.pi * self.scale * z), axis=1)

    def grad_pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        z = 1.0 + (x / self.scale) ** 2
        return self.pdf(x)[:, None] * (-2.0 * x / (self.scale**2 * z))


@dataclass(frozen=True)
class GridDensity2D:
    """Bilinear-interpolated density (and gradient) on a rectangular grid.

    Fitted from an observed trace, this is the stationary marginal the
    passive averaging argument actually requires when the forward agents
    move materially away from their initialization.
    """

    x_axis: np.ndarray
    y_axis: np.ndarray
    values: np.ndarray        # (nx, ny), nonnegative, integrates to ~1
    grad_x: np.ndarray
    grad_y: np.ndarray

    @property
    def dim(self) -> int:
        return 2

    def _interp(self, table: np.ndarray, pts: np.ndarray) -> np.ndarray:
        xi = np.clip(np.searchsorted(self.x_axis, pts[:, 0]) - 1, 0, self.x_axis.size - 2)
        yi = np.clip(np.searchsorted(self.y_axis, pts[:, 1]) - 1, 0, self.y_axis.size - 2)
        dx = self.x_axis[1] - self.x_axis[0]
        dy = self.y_axis[1] - self.y_axis[0]
        tx = np.clip((pts[:, 0] - self.x_axis[xi]) / dx, 0.0, 1.0)
        ty = np.clip((pts[:, 1] - self.y_axis[yi]) / dy, 0.0, 1.0)
        v00 = table[xi, yi]
        v10 = table[xi + 1, yi]
        v01 = table[xi, yi + 1]
        v11 = table[xi + 1, yi + 1]
        return (v00 * (1 - tx) * (1 - ty) + v10 * tx * (1 - ty)
                + v01 * (1 - tx) * ty + v11 * tx * ty)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(self._interp(self.values, np.atleast_2d(x)), 1e-12)

    def grad_pdf(self, x: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(x)
        return np.stack(
            [self._interp(self.grad_x, pts), self._interp(self.grad_y, pts)], axis=1
        )


def fit_trace_density(
    theta: np.ndarray,
    bandwidth: float = 0.05,
    grid_shape: tuple[int, int] = (220, 220),
    pad: float = 0.5,
) -> GridDensity2D:
    """Gaussian-smoothed histogram estimate of the trace marginal."""
    lo = theta.min(axis=0) - pad
    hi = theta.max(axis=0) + pad
    nx, ny = grid_shape
    x_axis = np.linspace(lo[0], hi[0], nx)
    y_axis = np.linspace(lo[1], hi[1], ny)
    dx = x_axis[1] - x_axis[0]
    dy = y_axis[1] - y_axis[0]
    hist, _, _ = np.histogram2d(
        theta[:, 0], theta[:, 1],
        bins=[np.concatenate([x_axis - dx / 2, [x_axis[-1] + dx / 2]]),
              np.concatenate([y_axis - dy / 2, [y_axis[-1] + dy / 2]])],
    )
    dens = hist / (theta.shape[0] * dx * dy)

    def smooth(arr, step, axis):
        half = max(1, int(3 * bandwidth / step))
        ker = np.exp(-0.5 * (np.arange(-half, half + 1) * step / bandwidth) ** 2)
        ker /= ker.sum()
        return np.apply_along_axis(lambda v: np.convolve(v, ker, mode="same"), axis, arr)

    dens = smooth(smooth(dens, dx, 0), dy, 1)
    dens = np.maximum(dens, 1e-12)
    gx = np.gradient(dens, dx, axis=0)
    gy = np.gradient(dens, dy, axis=1)
    return GridDensity2D(x_axis, y_axis, dens, gx, gy)


@dataclass(frozen=True)
class SwarmConfig:
    init: GaussianInit
    step: float                 # epsilon
    tau_min: int
    tau_max: int
    n_agents: int
    step_jitter: float = 0.0    # heterogeneous steps eps_n = eps (1 + nu_n)


@dataclass
class GradientTrace:
    theta: np.ndarray
    grad: np.ndarray

    def __len__(self) -> int:
        return self.theta.shape[0]

    def chunks(self, size: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for start in range(0, len(self), size):
            yield self.theta[start:start + size], self.grad[start:start + size]


def iter_forward_chunks(
    oracle: RewardOracle,
    swarm: SwarmConfig,
    seed: int,
    agents_per_chunk: int = 2000,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Agent-major trace chunks: each agent's run is contiguous, matching a
    sequential global clock.  Diverging agents are aborted and logged.
    """
    rng = np.random.default_rng(seed)
    dim = oracle.dim
    remaining = swarm.n_agents
    while remaining > 0:
        batch = min(agents_per_chunk, remaining)
        remaining -= batch
        theta = swarm.init.sample(rng, batch)
        horizons = rng.integers(swarm.tau_min, swarm.tau_max + 1, size=batch)
        steps = np.full(batch, swarm.step)
        if swarm.step_jitter > 0:
            steps *= 1.0 + rng.uniform(-swarm.step_jitter, swarm.step_jitter, size=batch)
        max_h = int(horizons.max())
        th_buf = np.zeros((batch, max_h, dim))
        g_buf = np.zeros((batch, max_h, dim))
        alive = np.ones(batch, dtype=bool)
        for t in range(max_h):
            active = alive & (horizons > t)
            if not active.any():
                break
            g = oracle.noisy_grad(theta[active], rng)
            bad = ~np.isfinite(g).all(axis=1)
            if bad.any():
                idx = np.flatnonzero(active)[bad]
                alive[idx] = False
                horizons[idx] = t
                log.warning("aborted %d diverging agents at step %d", bad.sum(), t)
                active = alive & (horizons > t)
                if not active.any():
                    break
                g = g[~bad]
            th_buf[active, t] = theta[active]
            g_buf[active, t] = g
            theta[active] = theta[active] + steps[active, None] * g
            blow = active & ~np.isfinite(theta).all(axis=1)
            if blow.any():
                alive[blow] = False
                horizons[blow] = t + 1
                log.warning("aborted %d non-finite iterates at step %d", blow.sum(), t)
        rows_t = [th_buf[i, :horizons[i]] for i in range(batch)]
        rows_g = [g_buf[i, :horizons[i]] for i in range(batch)]
        yield np.concatenate(rows_t), np.concatenate(rows_g)


def run_forward_agents(oracle: RewardOracle, swarm: SwarmConfig, seed: int) -> GradientTrace:
    """Materialized trace; deterministic given the seed."""
    thetas, grads = [], []
    for th, g in iter_forward_chunks(oracle, swarm, seed):
        thetas.append(th)
        grads.append(g)
    return GradientTrace(np.concatenate(thetas), np.concatenate(grads))


def simulate_regime_path(
    n_regimes: int, generator: np.ndarray, eta: float, length: int, rng: np.random.Generator
) -> np.ndarray:
    """Markov regime path with transition matrix I + eta * Q."""
    p = np.eye(n_regimes) + eta * np.asarray(generator, dtype=float)
    if np.any(p < -1e-12) or np.abs(p.sum(axis=1) - 1.0).max() > 1e-9:
        raise ValueError("I + eta Q is not a stochastic matrix; reduce eta")
    p = np.clip(p, 0.0, 1.0)
    cum = np.cumsum(p, axis=1)
    path = np.empty(length, dtype=np.int64)
    state = 0
    u = rng.uniform(size=length)
    for k in range(length):
        state = int(np.searchsorted(cum[state], u[k], side="right"))
        state = min(state, n_regimes - 1)
        path[k] = state
    return path


def run_switching_agents(
    oracle: SwitchingOracle,
    swarm: SwarmConfig,
    generator: np.ndarray,
    eta: float,
    seed: int,
) -> tuple[GradientTrace, np.ndarray]:
    """Sequential agents on a global clock shared with the regime chain: the
    gradient at global step k uses the regime active at k.
    """
    rng = np.random.default_rng(seed)
    dim = oracle.dim
    total = 0
    horizons = rng.integers(swarm.tau_min, swarm.tau_max + 1, size=swarm.n_agents)
    total = int(horizons.sum())
    regimes = simulate_regime_path(oracle.n_regimes, generator, eta, total, rng)
    theta_rows = np.empty((total, dim))
    grad_rows = np.empty((total, dim))
    k = 0
    inits = swarm.init.sample(rng, swarm.n_agents)
    for n in range(swarm.n_agents):
        theta = inits[n].copy()
        for _ in range(horizons[n]):
            g = oracle.regimes[regimes[k]].noisy_grad(theta[None, :], rng)[0]
            theta_rows[k] = theta
            grad_rows[k] = g
            theta = theta + swarm.step * g
            k += 1
    return GradientTrace(theta_rows, grad_rows), regimes
