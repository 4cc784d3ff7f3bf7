"""Flagship reconstruction experiments: the mixture-posterior (KL) study,
the constrained-MDP policy-reward study in spherical coordinates, and the
Markov-switching tracking scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonUnichainDetected
from .density import find_modes, kde_marginal_blocked, marginal_variational_distance
from .forward import (
    GaussianInit,
    GradientTrace,
    SwarmConfig,
    fit_trace_density,
    run_forward_agents,
    run_switching_agents,
    standard_gaussian_init,
)


def _wrapped_stream(trace: GradientTrace, start: int, total: int, chunk: int = 65_536):
    """Sweep `total` rows of the trace starting at `start`, wrapping around."""
    n = len(trace)
    pos = start % n
    remaining = total
    while remaining > 0:
        take = min(chunk, remaining, n - pos)
        yield trace.theta[pos:pos + take], trace.grad[pos:pos + take]
        remaining -= take
        pos = (pos + take) % n
from .oracles import MixturePosteriorModel, RewardOracle, SwitchingOracle
from .samplers import LangevinConfig, SampleCloud, run_sampler, run_sampler_ensemble


def run_classical_langevin(
    oracle: RewardOracle,
    steps: int,
    mu: float,
    beta: float,
    seed: int,
    init: np.ndarray | None = None,
    burn_in_frac: float = 0.2,
    batch: int = 4096,
) -> SampleCloud:
    """Baseline chain with gradients evaluated at its own location."""
    rng = np.random.default_rng(seed)
    dim = oracle.dim
    x = np.zeros(dim) if init is None else np.asarray(init, dtype=float)
    sqmu = math.sqrt(mu)
    bh = 0.5 * beta
    out = np.empty((steps, dim))
    k = 0
    while k < steps:
        n = min(batch, steps - k)
        noise = rng.standard_normal((n, dim))
        for i in range(n):
            g = oracle.noisy_grad(x[None, :], rng)[0]
            x = x + mu * bh * g + sqmu * noise[i]
            out[k] = x
            k += 1
    burn = int(burn_in_frac * steps)
    return SampleCloud(out[burn:], burn, "classical")


def metropolis_hastings(logpdf, x0: np.ndarray, steps: int, prop_sigma: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = np.asarray(x0, dtype=float).copy()
    lp = logpdf(x)
    out = np.empty((steps, x.size))
    jumps = prop_sigma * rng.standard_normal((steps, x.size))
    logu = np.log(rng.uniform(size=steps))
    for k in range(steps):
        cand = x + jumps[k]
        lc = logpdf(cand)
        if lc - lp >= logu[k]:
            x, lp = cand, lc
        out[k] = x
    return out[steps // 5:]


@dataclass
class KlReport:
    modes: np.ndarray                  # (2, 2) recovered maximizer locations
    d_marginals: tuple[float, float]   # passive vs classical baseline
    d_classical_vs_oracle: tuple[float, float] | None
    d_passive_vs_oracle: tuple[float, float] | None
    passive_samples: np.ndarray
    baseline_samples: np.ndarray
    mode_kind: str


def kl_experiment(
    seed: int,
    trace_len: int = 1_000_000,
    mode: str = "stochastic",
    variant: str = "generalized",
    mu: float = 5e-4,
    delta: float = 0.1,
    beta: float = 1.0,
    eps_forward: float = 1e-3,
    horizon: int = 100,
    n_obs: int = 100,
    kde_bandwidth: float = 0.12,
    mh_steps: int = 100_000,
    epochs: int = 10,
    n_chains: int = 50,
    pool_size: int = 25,
    proposal_sigma: float = 0.07,
    baseline_steps: int | None = None,
) -> KlReport:
    """Mixture-posterior reconstruction: forward agents explore the reward,
    a passive sampler reconstructs it, and a classical Langevin chain (plus a
    Metropolis-Hastings oracle in fixed-path mode) benchmarks the marginals.

    The passive chain sweeps the recorded trace `epochs` times: the trace is
    a fixed dataset, and re-sweeping raises the chain's effective sample size
    without inventing new observations.
    """
    model = MixturePosteriorModel(np.array([0.0, 1.0]), n_obs=n_obs)
    data_rng = np.random.default_rng([seed, 101])
    if mode == "stochastic":
        oracle = model.stochastic_oracle()
        oracle_samples = None
    elif mode == "fixed_path":
        y_path = model.sample_observations(data_rng, n_obs)
        oracle = model.fixed_path_oracle(y_path)
        oracle_samples = metropolis_hastings(
            lambda t: model.log_posterior(t, y_path),
            np.array([0.5, 0.0]),
            mh_steps,
            prop_sigma=0.25,
            seed=seed + 7,
        )
    else:
        raise ValueError("mode must be 'stochastic' or 'fixed_path'")

    init = standard_gaussian_init(2)
    swarm = SwarmConfig(init, eps_forward, horizon, horizon, trace_len // horizon)
    trace = run_forward_agents(oracle, swarm, seed)

    total_steps = epochs * len(trace)
    if variant == "multikernel":
        # pool weights self-normalize, so no trace-marginal estimate is
        # needed and the injected noise never freezes: one long chain
        cfg = LangevinConfig(variant=variant, mu=mu, beta=beta,
                             pool_size=pool_size, proposal_sigma=proposal_sigma,
                             thin=max(1, epochs), init=np.array([0.5, 0.0]))
        passive = run_sampler(
            _wrapped_stream(trace, 0, total_steps), cfg, seed=seed + 1
        )
    else:
        # the kernel-weighted variants need the trace's stationary marginal,
        # which the observer estimates from the recorded iterates themselves
        pi_hat = fit_trace_density(trace.theta)
        chain_steps = total_steps // n_chains
        rng = np.random.default_rng([seed, 5])
        offsets = rng.integers(len(trace), size=n_chains)
        # chains start where the trace accumulates mass; low-density
        # transient path points would freeze under the pi^2 time dilation
        dens_at = pi_hat.pdf(trace.theta)
        cutoff = np.quantile(dens_at, 0.75)
        candidates = np.flatnonzero(dens_at >= cutoff)
        inits = trace.theta[rng.choice(candidates, size=n_chains)]
        cfg = LangevinConfig(variant=variant, mu=mu, delta=delta, beta=beta,
                             thin=max(1, epochs))

        def chain_stream(c):
            return _wrapped_stream(trace, int(offsets[c]), chain_steps)

        passive = run_sampler_ensemble(
            chain_stream, cfg, inits, init_density=pi_hat, seed=seed + 1,
            oracle=oracle if variant == "active" else None,
        )
    if baseline_steps is None:
        baseline_steps = trace_len
    baseline = run_classical_langevin(
        oracle, baseline_steps, mu, beta, seed + 2, init=np.array([0.5, 0.0])
    )

    d_pb = tuple(
        marginal_variational_distance(passive.samples, baseline.samples, j, kde_bandwidth)
        for j in (0, 1)
    )
    d_co = d_po = None
    if oracle_samples is not None:
        d_co = tuple(
            marginal_variational_distance(baseline.samples, oracle_samples, j, kde_bandwidth)
            for j in (0, 1)
        )
        d_po = tuple(
            marginal_variational_distance(passive.samples, oracle_samples, j, kde_bandwidth)
            for j in (0, 1)
        )

    edges = [np.linspace(-2.0, 3.0, 81), np.linspace(-3.0, 3.0, 97)]
    modes = find_modes(passive, edges, n_modes=2, min_separation=0.8)
    return KlReport(modes, d_pb, d_co, d_po, passive.samples, baseline.samples, mode)


# ---------------------------------------------------------------------------
# constrained MDP experiment


@dataclass(frozen=True)
class CmdpModel:
    transitions: np.ndarray   # (U, X, X)
    rewards: np.ndarray       # (X, U)
    constraints: np.ndarray   # (X, U)
    budget: float             # gamma
    penalty: float            # lambda

    @property
    def n_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rewards.shape[1]


def paper_cmdp() -> CmdpModel:
    return CmdpModel(
        transitions=np.array([
            [[0.8, 0.2], [0.3, 0.7]],
            [[0.6, 0.4], [0.1, 0.9]],
        ]),
        rewards=np.array([[1.0, 100.0], [30.0, 2.0]]),
        constraints=np.array([[0.2, 0.3], [2.0, 1.0]]),
        budget=1.0,
        penalty=1e5,
    )


def spherical_to_policy(angles: np.ndarray, n_actions: int = 2) -> np.ndarray:
    """Angles (X, U-1) -> row-stochastic policy (X, U): squared-cosine chain."""
    angles = np.atleast_2d(angles)
    x_dim = angles.shape[0]
    phi = np.empty((x_dim, n_actions))
    for i in range(x_dim):
        sin_prod = 1.0
        for u in range(n_actions - 1):
            phi[i, u] = sin_prod * math.cos(angles[i, u]) ** 2
            sin_prod *= math.sin(angles[i, u]) ** 2
        phi[i, n_actions - 1] = sin_prod
    return phi


def policy_to_spherical(phi: np.ndarray) -> np.ndarray:
    """Inverse of the squared-cosine map on [0, pi/2] angles."""
    phi = np.atleast_2d(phi)
    x_dim, n_actions = phi.shape
    angles = np.empty((x_dim, n_actions - 1))
    for i in range(x_dim):
        rem = 1.0
        for u in range(n_actions - 1):
            ratio = 0.0 if rem <= 1e-300 else min(max(phi[i, u] / rem, 0.0), 1.0)
            angles[i, u] = math.acos(math.sqrt(ratio))
            rem *= 1.0 - ratio
    return angles


def cmdp_stationary(model: CmdpModel, phi: np.ndarray) -> np.ndarray:
    """Stationary joint pi(x, u) under the randomized policy phi(u|x)."""
    x_dim = model.n_states
    m = np.zeros((x_dim, x_dim))
    for u in range(model.n_actions):
        m += phi[:, u][:, None] * model.transitions[u]
    a = np.vstack([m.T - np.eye(x_dim), np.ones(x_dim)])
    b = np.concatenate([np.zeros(x_dim), [1.0]])
    sol, residuals, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < x_dim or np.any(sol < -1e-8):
        raise NonUnichainDetected("stationary distribution solve failed")
    pi_state = np.maximum(sol, 0.0)
    pi_state /= pi_state.sum()
    return pi_state[:, None] * phi


def cmdp_objectives(model: CmdpModel, phi: np.ndarray) -> tuple[float, float]:
    """(J, B): exact average reward and constraint via occupation measures."""
    joint = cmdp_stationary(model, phi)
    return float((joint * model.rewards).sum()), float((joint * model.constraints).sum())


def penalized_reward(model: CmdpModel, phi: np.ndarray) -> float:
    j, b = cmdp_objectives(model, phi)
    return j - model.penalty * (b - model.budget) ** 2


def _simulate_penalized_batch(
    model: CmdpModel, phis: np.ndarray, n_steps: int, uniforms: np.ndarray
) -> np.ndarray:
    """Sample-path penalized objective for a batch of policies, using shared
    uniforms (common random numbers for the SPSA pairs).
    """
    b = phis.shape[0]
    states = np.zeros(b, dtype=np.int64)
    j_acc = np.zeros(b)
    b_acc = np.zeros(b)
    p_cum = np.cumsum(model.transitions, axis=2)   # (U, X, X)
    for t in range(n_steps):
        pa = phis[np.arange(b), states, 0]
        actions = (uniforms[t, :, 0] >= pa).astype(np.int64)
        j_acc += model.rewards[states, actions]
        b_acc += model.constraints[states, actions]
        states = (uniforms[t, :, 1][:, None] >= p_cum[actions, states]).sum(axis=1)
    j_acc /= n_steps
    b_acc /= n_steps
    return j_acc - model.penalty * (b_acc - model.budget) ** 2


def cmdp_pool_stream(
    model: CmdpModel,
    total_rows: int,
    seed: int,
    omega: float = 0.05,
    n_steps: int = 150,
    block: int = 5000,
):
    """SPSA policy-gradient pool: angles drawn uniformly, gradients from
    paired common-random-number trajectory evaluations.
    """
    if model.n_actions != 2:
        raise ValueError("the pool stream is specialized to two actions")
    rng = np.random.default_rng(seed)
    produced = 0
    while produced < total_rows:
        b = min(block, total_rows - produced)
        produced += b
        angles = rng.uniform(0.0, math.pi / 2, size=(b, model.n_states))
        delta = rng.choice([-1.0, 1.0], size=(b, model.n_states))
        uniforms = rng.uniform(size=(n_steps, b, 2))
        c_plus = np.cos(angles + omega * delta) ** 2    # phi(a=0 | x)
        c_minus = np.cos(angles - omega * delta) ** 2
        both = np.stack(
            [np.concatenate([c_plus, c_minus]), 1.0 - np.concatenate([c_plus, c_minus])],
            axis=2,
        )
        vals = _simulate_penalized_batch(
            model, both, n_steps, np.concatenate([uniforms, uniforms], axis=1)
        )
        grad = ((vals[:b] - vals[b:]) / (2 * omega))[:, None] * delta
        yield angles, grad


@dataclass
class CmdpReport:
    reward_grid: np.ndarray     # R-hat over the policy square
    j_grid: np.ndarray
    b_grid: np.ndarray
    grid_axis: np.ndarray
    overlap: float
    samples: np.ndarray         # policy-space samples (phi(1|1), phi(1|2))


def cmdp_experiment(
    seed: int,
    iters: int = 100_000,
    pool_size: int = 50,
    mu: float = 5e-6,
    proposal_sigma: float = 0.1,
    beta: float = 0.05,
    omega: float = 0.05,
    traj_steps: int = 150,
    grid_n: int = 50,
    band: float = 0.05,
    model: CmdpModel | None = None,
) -> CmdpReport:
    """Reconstruct the penalized CMDP reward over policy space with the
    multikernel sampler in spherical coordinates, and score the overlap of
    the top-decile density mass with the analytic active-constraint band.
    """
    model = paper_cmdp() if model is None else model
    total_rows = iters * pool_size
    stream = cmdp_pool_stream(model, total_rows, seed, omega, traj_steps)
    cfg = LangevinConfig(
        variant="multikernel",
        mu=mu,
        beta=beta,
        pool_size=pool_size,
        proposal_sigma=proposal_sigma,
        init=policy_to_spherical(np.array([[0.5, 0.5], [0.5, 0.5]]))[:, 0],
    )
    cloud = run_sampler(stream, cfg, seed=seed + 1)
    phi_samples = np.stack(
        [spherical_to_policy(s[:, None])[:, 0] for s in cloud.samples]
    )

    axis = np.linspace(0.0, 1.0, grid_n + 1)
    centers = 0.5 * (axis[1:] + axis[:-1])
    j_grid = np.empty((grid_n, grid_n))
    b_grid = np.empty((grid_n, grid_n))
    for i, p1 in enumerate(centers):
        for j, p2 in enumerate(centers):
            phi = np.array([[p1, 1 - p1], [p2, 1 - p2]])
            j_grid[i, j], b_grid[i, j] = cmdp_objectives(model, phi)

    hist, _ = np.histogramdd(phi_samples, bins=[axis, axis])
    mass = hist / hist.sum()
    with np.errstate(divide="ignore"):
        reward_grid = np.log(np.maximum(hist, 1e-300))
    reward_grid -= reward_grid.max()

    order = np.argsort(-mass.ravel())
    cum = np.cumsum(mass.ravel()[order])
    top = order[: int(np.searchsorted(cum, 0.10)) + 1]
    in_band = (np.abs(b_grid - model.budget) < band).ravel()[top]
    top_mass = mass.ravel()[top]
    overlap = float((top_mass * in_band).sum() / top_mass.sum())
    return CmdpReport(reward_grid, j_grid, b_grid, centers, overlap, phi_samples)


# ---------------------------------------------------------------------------
# Markov-switching tracking


@dataclass
class SwitchReport:
    regime_path: np.ndarray
    window_modes: np.ndarray
    window_majority: np.ndarray
    window_accuracy: float
    overall_modes: np.ndarray
    samples: np.ndarray


def switching_scenario(
    oracle: SwitchingOracle,
    generator: np.ndarray,
    eta: float,
    seed: int,
    swarm: SwarmConfig | None = None,
    mu: float = 0.05,
    delta: float = 0.2,
    beta: float = 2.0,
    n_windows: int = 20,
    true_modes: np.ndarray | None = None,
) -> SwitchReport:
    """Track a regime-switching reward with a constant-step passive sampler;
    reports per-window mode estimates classified to the nearest true mode.
    """
    dim = oracle.dim
    init = standard_gaussian_init(dim)
    if swarm is None:
        swarm = SwarmConfig(init, step=0.05, tau_min=20, tau_max=60, n_agents=8000)
    trace, regimes = run_switching_agents(oracle, swarm, generator, eta, seed)
    cfg = LangevinConfig(variant="classical_passive", mu=mu, delta=delta, beta=beta)
    cloud = run_sampler(trace, cfg, init_density=init, seed=seed + 1)
    samples = cloud.samples
    offset = cloud.burn_in
    n = samples.shape[0]
    bounds = np.linspace(0, n, n_windows + 1, dtype=int)
    window_modes = np.empty((n_windows, dim))
    window_majority = np.empty(n_windows, dtype=np.int64)
    grid = np.linspace(samples.min() - 0.5, samples.max() + 0.5, 301)
    for w in range(n_windows):
        seg = samples[bounds[w]:bounds[w + 1]]
        reg_seg = regimes[offset + bounds[w]: offset + bounds[w + 1]]
        window_majority[w] = np.bincount(reg_seg, minlength=oracle.n_regimes).argmax()
        for j in range(dim):
            dens = kde_marginal_blocked(seg[:, j], grid, bandwidth=0.2)
            window_modes[w, j] = grid[int(np.argmax(dens))]
    accuracy = float("nan")
    if true_modes is not None:
        true_modes = np.atleast_2d(true_modes)
        classified = np.array([
            int(np.argmin([np.linalg.norm(m - tm) for tm in true_modes]))
            for m in window_modes
        ])
        accuracy = float(np.mean(classified == window_majority))
    dens_all = kde_marginal_blocked(samples[:, 0], grid, bandwidth=0.2)
    # gather up to n_regimes separated peaks of the pooled density
    order = np.argsort(-dens_all)
    peaks: list[float] = []
    for i in order:
        if all(abs(grid[i] - p) >= 1.0 for p in peaks):
            peaks.append(float(grid[i]))
            if len(peaks) == oracle.n_regimes:
                break
    overall = np.asarray(peaks)
    return SwitchReport(regimes, window_modes, window_majority, accuracy, overall, samples)
