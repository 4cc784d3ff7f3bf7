"""Ground-truth scenario generators: budget-constrained maximizer datasets
from waveform-adaptation and beam-allocation setups, with known utilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OptimizerStall
from .rp import BudgetDataset, NonlinearBudget, make_budget_dataset
from .solvers import RiccatiSpec, solve_are


class CobbDouglas:
    """U(beta) = prod beta_i^gamma_i with gamma > 0 summing to 1."""

    def __init__(self, gamma):
        self.gamma = np.asarray(gamma, dtype=float)
        if np.any(self.gamma <= 0):
            raise ValueError("gamma must be strictly positive")
        self.gamma = self.gamma / self.gamma.sum()

    def __call__(self, beta: np.ndarray) -> float:
        b = np.maximum(np.asarray(beta, dtype=float), 1e-300)
        return float(np.prod(b ** self.gamma))

    def grad(self, beta: np.ndarray) -> np.ndarray:
        b = np.maximum(np.asarray(beta, dtype=float), 1e-12)
        return self(b) * self.gamma / b

    def demand(self, alpha: np.ndarray) -> np.ndarray:
        # closed form for the budget alpha . beta <= 1
        return self.gamma / np.asarray(alpha, dtype=float)


class CES:
    """U(beta) = (sum w_i beta_i^rho)^(1/rho), rho < 1, rho != 0."""

    def __init__(self, weights, rho: float):
        self.w = np.asarray(weights, dtype=float)
        if rho >= 1.0 or rho == 0.0:
            raise ValueError("rho must be < 1 and nonzero")
        self.rho = rho

    def __call__(self, beta: np.ndarray) -> float:
        b = np.maximum(np.asarray(beta, dtype=float), 1e-300)
        return float(np.sum(self.w * b ** self.rho) ** (1.0 / self.rho))

    def grad(self, beta: np.ndarray) -> np.ndarray:
        b = np.maximum(np.asarray(beta, dtype=float), 1e-12)
        inner = np.sum(self.w * b ** self.rho)
        return inner ** (1.0 / self.rho - 1.0) * self.w * b ** (self.rho - 1.0)

    def demand(self, alpha: np.ndarray) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        s = 1.0 / (1.0 - self.rho)
        raw = (self.w / alpha) ** s
        return raw / (alpha @ raw)


def _project_budget(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {beta >= 0, alpha . beta = 1}."""
    lo, hi = -1e6, 1e6
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        val = alpha @ np.maximum(0.0, x - tau * alpha)
        if val > 1.0:
            lo = tau
        else:
            hi = tau
    return np.maximum(0.0, x - 0.5 * (lo + hi) * alpha)


def _kkt_residual(beta, alpha, g, kkt_tol):
    """Relative spread of grad_i/alpha_i over active coords, plus slack check."""
    ratios = g / alpha
    active = beta > 1e-10
    if not active.any():
        return np.inf
    r_act = ratios[active]
    resid = (r_act.max() - r_act.min()) / max(abs(r_act.max()), 1e-300)
    if (~active).any() and ratios[~active].max() > r_act.max() * (1 + kkt_tol):
        resid = max(resid, 1.0)
    return resid


def maximize_on_budget(
    utility,
    alpha: np.ndarray,
    iters: int = 2000,
    kkt_tol: float = 1e-8,
    grad: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """argmax of a monotone utility on {beta >= 0, alpha . beta <= 1}.

    Projected gradient with step halving locates the active face; a Newton
    polish on that face (eliminating one coordinate through the budget)
    pushes the KKT residual to the 1e-8 contract.
    """
    if grad is None:
        grad = utility.grad
    alpha = np.asarray(alpha, dtype=float)
    m = alpha.size
    beta = 1.0 / (m * alpha)  # uniform split start
    step = 1.0
    val = utility(beta)
    for _ in range(iters):
        g = grad(beta)
        cand = _project_budget(beta + step * g, alpha)
        cval = utility(cand)
        if cval > val + 1e-16:
            beta, val = cand, cval
            step *= 1.3
        else:
            step *= 0.5
            if step < 1e-12:
                break
        if _kkt_residual(beta, alpha, grad(beta), kkt_tol) <= kkt_tol:
            return beta

    # Newton polish on the active face: beta_piv carries the budget residual
    active = np.flatnonzero(beta > 1e-10)
    if active.size >= 2:
        piv = active[int(np.argmax(beta[active] * alpha[active]))]
        free = np.array([i for i in active if i != piv])

        def full_beta(x):
            b = np.zeros(m)
            b[free] = x
            b[piv] = (1.0 - alpha[free] @ x) / alpha[piv]
            return b

        def reduced_grad(x):
            b = full_beta(x)
            g = grad(b)
            return g[free] - (g[piv] / alpha[piv]) * alpha[free]

        x = beta[free].copy()
        for _ in range(60):
            r = reduced_grad(x)
            if np.abs(r).max() < 1e-13:
                break
            jac = np.empty((free.size, free.size))
            h = 1e-7
            for j in range(free.size):
                e = np.zeros(free.size)
                e[j] = h
                jac[:, j] = (reduced_grad(x + e) - reduced_grad(x - e)) / (2 * h)
            try:
                delta = np.linalg.solve(jac, -r)
            except np.linalg.LinAlgError:
                break
            t = 1.0
            while t > 1e-6:
                xn = x + t * delta
                bn = full_beta(xn)
                if np.all(bn > 0) and np.abs(reduced_grad(xn)).max() < np.abs(r).max():
                    x = xn
                    break
                t *= 0.5
            else:
                break
        cand = full_beta(x)
        if np.all(cand >= 0) and _kkt_residual(cand, alpha, grad(cand), kkt_tol) <= _kkt_residual(
            beta, alpha, grad(beta), kkt_tol
        ):
            beta = cand

    resid = _kkt_residual(beta, alpha, grad(beta), kkt_tol)
    if resid > kkt_tol:
        raise OptimizerStall(f"KKT residual {resid:.3g} above {kkt_tol}")
    return beta


@dataclass(frozen=True)
class SpectralScenario:
    """Waveform-adaptation abstraction: probe spectrum drives Q = diag(alpha),
    response spectrum drives R^-1 = diag(beta) in the tracker's model.
    """

    a: np.ndarray
    c: np.ndarray
    probe_low: float = 0.5
    probe_high: float = 2.0


def kinematic_state_matrix(sampling_interval: float = 1.0) -> np.ndarray:
    """6x6 block-diagonal constant-velocity model (three position/velocity pairs)."""
    t = sampling_interval
    blk = np.array([[1.0, t], [0.0, 1.0]])
    return np.kron(np.eye(3), blk)


def gen_waveform_dataset(
    scn: SpectralScenario,
    utility,
    n: int,
    seed: int,
    m: int | None = None,
) -> tuple[BudgetDataset, object]:
    """Random probes, responses from constrained maximization; returns the
    dataset together with the true utility handle.
    """
    rng = np.random.default_rng(seed)
    if m is None:
        m = getattr(utility, "gamma", getattr(utility, "w", None)).shape[0]
    alpha = rng.uniform(scn.probe_low, scn.probe_high, size=(n, m))
    beta = np.array([maximize_on_budget(utility, alpha[k]) for k in range(n)])
    return make_budget_dataset(alpha, beta), utility


@dataclass(frozen=True)
class BeamScenario:
    """Multi-target beam allocation: per-target tracker models set the
    precision probes alpha_k(i) = tr(inverse predicted covariance).
    """

    a: np.ndarray
    c: np.ndarray
    q_targets: tuple[np.ndarray, ...]
    r_targets: tuple[np.ndarray, ...]
    p_star: float = 1.0
    maneuver_low: float = 0.5
    maneuver_high: float = 2.0


def gen_beam_dataset(scn: BeamScenario, utility, n: int, seed: int) -> BudgetDataset:
    rng = np.random.default_rng(seed)
    m = len(scn.q_targets)
    alpha = np.empty((n, m))
    for k in range(n):
        scale = rng.uniform(scn.maneuver_low, scn.maneuver_high, size=m)
        for i in range(m):
            spec = RiccatiSpec(scn.a, scn.c, scale[i] * scn.q_targets[i], scn.r_targets[i])
            sigma = solve_are(spec, tol=1e-11)
            alpha[k, i] = float(np.trace(np.linalg.inv(sigma)))
    alpha = alpha / scn.p_star  # budget beta . alpha <= p* scaled to 1
    beta = np.array([maximize_on_budget(utility, alpha[k]) for k in range(n)])
    return make_budget_dataset(alpha, beta)


def tracker_lmax(scn: SpectralScenario, alpha_k: np.ndarray, beta: np.ndarray) -> float:
    """Largest eigenvalue of the tracker's steady-state predicted covariance
    under probe spectrum Q^-1 = diag(alpha) and response spectrum R = diag(beta).
    Increasing in beta.
    """
    q = np.diag(1.0 / np.asarray(alpha_k, dtype=float))
    r = np.diag(np.maximum(np.asarray(beta, dtype=float), 1e-12))
    sigma = solve_are(RiccatiSpec(scn.a, scn.c, q, r), tol=1e-11)
    return float(np.linalg.eigvalsh(sigma).max())


def nonlinear_radar_budget(
    scn: SpectralScenario, alpha_rows: np.ndarray, lam_bar: float
) -> NonlinearBudget:
    """Budgets g_k(beta) = lmax(Sigma*(alpha_k, beta)) - lam_bar."""
    evals = tuple(
        (lambda b, ak=alpha_rows[k]: tracker_lmax(scn, ak, b) - lam_bar)
        for k in range(alpha_rows.shape[0])
    )
    return NonlinearBudget(evals)


def gen_nonlinear_radar_dataset(
    scn: SpectralScenario,
    utility,
    n: int,
    seed: int,
    lam_bar: float,
    n_dirs: int = 60,
):
    """m=2 nonlinear-budget scenario: responses maximize a monotone utility
    on {beta >= 0 : lmax(Sigma*(alpha_k, beta)) <= lam_bar}.  The constraint
    is increasing in beta, so the optimum sits on the boundary; each boundary
    point is found by radial bisection, the best direction by a grid sweep.
    """
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(scn.probe_low, scn.probe_high, size=(n, 2))
    beta = np.empty((n, 2))
    for k in range(n):
        best_val, best_beta = -np.inf, None
        for theta in np.linspace(0.05, np.pi / 2 - 0.05, n_dirs):
            d = np.array([np.cos(theta), np.sin(theta)])
            lo, hi = 1e-6, 1.0
            while tracker_lmax(scn, alpha[k], hi * d) < lam_bar:
                hi *= 2.0
                if hi > 1e8:
                    break
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if tracker_lmax(scn, alpha[k], mid * d) <= lam_bar:
                    lo = mid
                else:
                    hi = mid
            cand = lo * d
            val = utility(cand)
            if val > best_val:
                best_val, best_beta = val, cand
        beta[k] = best_beta
    budget = nonlinear_radar_budget(scn, alpha, lam_bar)
    return beta, budget, alpha
