"""Statistical detection of utility maximization from noisy responses:
the LP line-search test statistic, Monte-Carlo calibration of the
M-statistic, the gamma-level detector, and SPSA probe optimization.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CalibrationMismatch, DimensionMismatch, GeneratorNotViolating
from .rp import check_garp, make_budget_dataset
from .solvers import LinearSystem, lp_feasible, scalar_bisect_lp

ALPHA_MIN = 1e-3      # probe positivity floor for SPSA
BISECT_REL_TOL = 1e-8  # tol_T = BISECT_REL_TOL * T_hi


@dataclass(frozen=True)
class NoisyDataset:
    alpha: np.ndarray      # (N, m), strictly positive
    beta_obs: np.ndarray   # (N, m), may be negative

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def m(self) -> int:
        return self.alpha.shape[1]


def make_noisy_dataset(alpha, beta_obs) -> NoisyDataset:
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    beta_obs = np.atleast_2d(np.asarray(beta_obs, dtype=float))
    if alpha.shape != beta_obs.shape:
        raise DimensionMismatch(f"alpha {alpha.shape} vs beta_obs {beta_obs.shape}")
    return NoisyDataset(alpha, beta_obs)


@dataclass(frozen=True)
class NoiseModel:
    """Joint noise draw for all N responses; independent of the responses."""

    draw: Callable[[np.random.Generator, tuple[int, int]], np.ndarray]
    tag: str


def gaussian_noise(sigma: float) -> NoiseModel:
    return NoiseModel(lambda rng, shape: rng.normal(0.0, sigma, size=shape), f"gauss:sigma={sigma}")


def uniform_noise(half_width: float) -> NoiseModel:
    return NoiseModel(
        lambda rng, shape: rng.uniform(-half_width, half_width, size=shape),
        f"uniform:half={half_width}",
    )


def _probe_hash(alpha: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(alpha, dtype=float).tobytes()).hexdigest()


def _pairwise_a(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """a_ks = alpha_k . (beta_s - beta_k) without any normalization."""
    return alpha @ beta.T - np.einsum("ij,ij->i", alpha, beta)[:, None]


def _afriat_t_system(a: np.ndarray, t: float) -> LinearSystem:
    n = a.shape[0]
    n_rows = n * (n - 1)
    mat = np.zeros((n_rows, 2 * n))
    r = 0
    for k in range(n):
        for s in range(n):
            if s == k:
                continue
            mat[r, s] = 1.0
            mat[r, k] -= 1.0
            mat[r, n + k] = -(a[k, s] + t)
            r += 1
    lower = np.concatenate([np.full(n, -np.inf), np.ones(n)])
    return LinearSystem.from_arrays(mat, np.zeros(n_rows), ("<=",) * n_rows, lower, np.inf, 2 * n)


def test_statistic(ds: NoisyDataset) -> float:
    """Smallest T >= 0 making the T-relaxed Afriat system feasible."""
    a = _pairwise_a(ds.alpha, ds.beta_obs)
    if ds.n <= 1:
        return 0.0
    off = ~np.eye(ds.n, dtype=bool)
    t_hi = float(np.abs(a[off]).max())
    if t_hi == 0.0 or lp_feasible(_afriat_t_system(a, 0.0)).feasible:
        return 0.0
    t_star, _ = scalar_bisect_lp(
        lambda t: _afriat_t_system(a, t), 0.0, t_hi, BISECT_REL_TOL * t_hi
    )
    return float(t_star)


@dataclass(frozen=True)
class MCalibration:
    samples: np.ndarray     # sorted ascending
    trials: int
    probe_hash: str
    noise_tag: str

    def cdf(self, t: float) -> float:
        """Right-continuous empirical CDF of M."""
        return float(np.searchsorted(self.samples, t, side="right")) / self.trials


def _m_statistic(alpha: np.ndarray, eps: np.ndarray) -> float:
    """M = max_{k != s} alpha_k . (eps_k - eps_s)."""
    proj = alpha @ eps.T                     # proj[k, s] = alpha_k . eps_s
    diag = np.diag(proj)
    off = ~np.eye(alpha.shape[0], dtype=bool)
    return float((diag[:, None] - proj)[off].max())


def calibrate_m(
    noise: NoiseModel, probes: np.ndarray, trials: int, seed: int
) -> MCalibration:
    """Monte-Carlo distribution of M; per-trial seeds keyed by a counter so
    parallel and serial runs agree bit-exactly after the sorted merge.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    samples = np.empty(trials)
    for l in range(trials):
        rng = np.random.default_rng([l, seed])
        eps = noise.draw(rng, probes.shape)
        samples[l] = _m_statistic(probes, eps)
    samples.sort()
    return MCalibration(samples, trials, _probe_hash(probes), noise.tag)


@dataclass(frozen=True)
class DetectReport:
    verdict: str      # 'H0' (utility maximizer) or 'H1'
    t_star: float
    p_value: float


def detect(ds: NoisyDataset, cal: MCalibration, gamma: float) -> DetectReport:
    """Declare H0 iff 1 - F_M(T*) exceeds the significance level."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if cal.probe_hash != _probe_hash(ds.alpha):
        raise CalibrationMismatch("calibration was built for different probes")
    t_star = test_statistic(ds)
    p_value = 1.0 - cal.cdf(t_star)
    verdict = "H0" if p_value > gamma else "H1"
    return DetectReport(verdict, t_star, p_value)


@dataclass(frozen=True)
class SpsaResult:
    probes: np.ndarray
    type2_trace: np.ndarray


def _type2_estimate(
    probes: np.ndarray,
    scenario: Callable[[np.ndarray, np.random.Generator], np.ndarray],
    noise: NoiseModel,
    gamma: float,
    n_trials: int,
    cal_draws: int,
    seed_key: tuple[int, ...],
    resample_cap: int = 50,
) -> float:
    """Empirical Type-II error: fraction of violating-response trials the
    detector still accepts H0.  Conditioning on a violation is implemented
    by resampling the scenario until its noise-free output fails GARP.
    """
    cal = calibrate_m(noise, probes, cal_draws, abs(hash(("cal",) + seed_key)) % 2**31)
    hits = 0
    for l in range(n_trials):
        rng = np.random.default_rng(list(seed_key) + [l])
        beta = None
        for _ in range(resample_cap):
            cand = scenario(probes, rng)
            if not check_garp(make_budget_dataset(probes, cand)).consistent:
                beta = cand
                break
        if beta is None:
            raise GeneratorNotViolating("scenario produced only GARP-consistent data")
        eps = noise.draw(rng, probes.shape)
        t_star = test_statistic(NoisyDataset(probes, beta + eps))
        if cal.cdf(t_star) <= 1.0 - gamma:   # detector accepts H0: a miss
            hits += 1
    return hits / n_trials


def spsa_probe_opt(
    probes0: np.ndarray,
    scenario: Callable[[np.ndarray, np.random.Generator], np.ndarray],
    noise: NoiseModel,
    gamma: float,
    iters: int,
    step_omega: float,
    mu_schedule: Callable[[int], float],
    seed: int,
    n_trials: int = 40,
    cal_draws: int = 200,
) -> SpsaResult:
    """SPSA descent on the empirical Type-II error over probe matrices.

    Bernoulli +-1 perturbations, common random numbers across the paired
    evaluations, probes floored at ALPHA_MIN.
    """
    probes = np.array(probes0, dtype=float)
    if np.any(probes <= 0):
        raise ValueError("initial probes must be strictly positive")
    check_rng = np.random.default_rng([seed, 0xC0FFEE])
    consistent = 0
    for _ in range(10):
        beta = scenario(probes, check_rng)
        consistent += check_garp(make_budget_dataset(probes, beta)).consistent
    if consistent == 10:
        raise GeneratorNotViolating("scenario never violates GARP at the initial probes")

    trace = np.empty(iters)
    master = np.random.default_rng(seed)
    for i in range(iters):
        trace[i] = _type2_estimate(
            probes, scenario, noise, gamma, n_trials, cal_draws, (seed, i, 2)
        )
        delta = master.choice([-1.0, 1.0], size=probes.shape)
        j_plus = _type2_estimate(
            np.maximum(probes + step_omega * delta, ALPHA_MIN),
            scenario, noise, gamma, n_trials, cal_draws, (seed, i, 0),
        )
        j_minus = _type2_estimate(
            np.maximum(probes - step_omega * delta, ALPHA_MIN),
            scenario, noise, gamma, n_trials, cal_draws, (seed, i, 0),
        )
        grad = (j_plus - j_minus) / (2.0 * step_omega) * delta
        probes = np.maximum(probes - mu_schedule(i) * grad, ALPHA_MIN)
    return SpsaResult(probes, trace)


def random_split_scenario(seed_fractions: bool = True):
    """Stock violating-response generator: spend the whole budget on a random
    allocation, ignoring any utility.
    """

    def scenario(probes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n, m = probes.shape
        frac = rng.dirichlet(np.ones(m), size=n)
        return frac / probes   # alpha_k . beta_k = sum frac = 1
    return scenario
