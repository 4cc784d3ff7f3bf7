"""Inverse Bayesian stopping problems: sequential hypothesis testing,
optimal search, and quickest detection, each with an exactly-optimal forward
simulator (grid dynamic programming) for validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch
from ..solvers import LinearSystem, lp_feasible
from .brp import BehaviorDataset, BRPCertificate, brp_feasible, make_behavior_dataset


# ---------------------------------------------------------------------------
# inverse sequential hypothesis testing


@dataclass(frozen=True)
class SHTDataset:
    behavior: BehaviorDataset      # X = A = 2
    continue_costs: np.ndarray     # (M,) expected continue cost E[tau]


def make_sht_dataset(behavior: BehaviorDataset, continue_costs) -> SHTDataset:
    cc = np.asarray(continue_costs, dtype=float)
    if behavior.n_states != 2 or behavior.n_actions != 2:
        raise DimensionMismatch("SHT datasets need X = A = 2")
    if cc.shape != (behavior.n_env,):
        raise DimensionMismatch("one continue cost per environment required")
    if np.any(cc < 0):
        raise ValueError("continue costs must be nonnegative")
    return SHTDataset(behavior, cc)


def inverse_sht(ds: SHTDataset, margin: float = 0.0) -> np.ndarray | None:
    """Feasible misclassification costs [(L1_m, L2_m)] or None (NotOptimal).

    Delegates to the min-cost BRP test with z pinned to the known continue
    costs and the stopping costs forced to the zero-diagonal pattern.
    """
    m_env = ds.behavior.n_env
    diag = np.zeros((m_env, 2, 2), dtype=bool)
    diag[:, 0, 0] = diag[:, 1, 1] = True
    cert = brp_feasible(
        ds.behavior,
        mode="min",
        margin=margin,
        fixed_z=ds.continue_costs,
        zero_pattern=diag,
    )
    if cert is None:
        return None
    costs = np.stack([cert.values[:, 0, 1], cert.values[:, 1, 0]], axis=1)
    return costs


def sht_cost_table(costs_pair) -> np.ndarray:
    """(L1, L2) -> the 2x2 stopping-cost matrix s(x, a)."""
    l1, l2 = costs_pair
    return np.array([[0.0, l1], [l2, 0.0]])


def sht_value_function(
    l1: float, l2: float, q1: float, q2: float, c: float = 1.0, grid: int = 2001
) -> tuple[np.ndarray, np.ndarray]:
    """Value iteration on the belief pi = P(x=2); observations are Bernoulli
    with P(y=1 | x=1) = q1 and P(y=1 | x=2) = q2.
    """
    pis = np.linspace(0.0, 1.0, grid)
    stop = np.minimum(pis * l2, (1 - pis) * l1)
    v = stop.copy()
    lik = {0: (1 - q1, 1 - q2), 1: (q1, q2)}
    for _ in range(10_000):
        cont = np.full(grid, c)
        for y in (0, 1):
            f1, f2 = lik[y]
            py = (1 - pis) * f1 + pis * f2
            post = np.where(py > 0, pis * f2 / np.maximum(py, 1e-300), pis)
            cont += py * np.interp(post, pis, v)
        v_new = np.minimum(stop, cont)
        if np.abs(v_new - v).max() < 1e-10:
            v = v_new
            break
        v = v_new
    return pis, v


def simulate_sht(
    l1: float,
    l2: float,
    prior2: float,
    q1: float,
    q2: float,
    n_episodes: int,
    seed: int,
    c: float = 1.0,
    grid: int = 2001,
    max_steps: int = 500,
) -> tuple[np.ndarray, float]:
    """Monte-Carlo action kernel p(a|x) and mean stopping time of the agent
    that plays the grid-optimal policy.
    """
    pis, v = sht_value_function(l1, l2, q1, q2, c, grid)
    rng = np.random.default_rng(seed)
    x = (rng.uniform(size=n_episodes) < prior2).astype(int)  # 0 -> state 1
    pi = np.full(n_episodes, prior2)
    active = np.ones(n_episodes, dtype=bool)
    actions = np.zeros(n_episodes, dtype=int)
    taus = np.zeros(n_episodes, dtype=int)
    lik = {0: (1 - q1, 1 - q2), 1: (q1, q2)}
    for step in range(max_steps):
        if not active.any():
            break
        pia = pi[active]
        stop1 = pia * l2
        stop2 = (1 - pia) * l1
        cont = np.full(pia.shape, c)
        for y in (0, 1):
            f1, f2 = lik[y]
            py = (1 - pia) * f1 + pia * f2
            post = np.where(py > 0, pia * f2 / np.maximum(py, 1e-300), pia)
            cont += py * np.interp(post, pis, v)
        stop_now = np.minimum(stop1, stop2) <= cont
        idx = np.flatnonzero(active)
        stopping = idx[stop_now]
        actions[stopping] = np.where(stop1[stop_now] <= stop2[stop_now], 0, 1)
        taus[stopping] = step
        active[stopping] = False
        going = idx[~stop_now]
        if going.size == 0:
            continue
        qx = np.where(x[going] == 0, q1, q2)
        y = (rng.uniform(size=going.size) < qx).astype(int)
        f1 = np.where(y == 1, q1, 1 - q1)
        f2 = np.where(y == 1, q2, 1 - q2)
        py = (1 - pi[going]) * f1 + pi[going] * f2
        pi[going] = pi[going] * f2 / np.maximum(py, 1e-300)
    if active.any():  # force stop at the horizon
        idx = np.flatnonzero(active)
        actions[idx] = np.where(pi[idx] * l2 <= (1 - pi[idx]) * l1, 0, 1)
        taus[idx] = max_steps
    kernel = np.zeros((2, 2))
    for xv in (0, 1):
        sel = x == xv
        if sel.any():
            for a in (0, 1):
                kernel[xv, a] = np.mean(actions[sel] == a)
    return kernel, float(taus.mean())


# ---------------------------------------------------------------------------
# inverse optimal search


@dataclass(frozen=True)
class SearchDataset:
    prior: np.ndarray   # (X,) over target locations
    counts: np.ndarray  # (M, X, A): expected visits g_m(a | x)


def make_search_dataset(prior, counts) -> SearchDataset:
    prior = np.asarray(prior, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 3 or counts.shape[1] != prior.shape[0]:
        raise DimensionMismatch("counts must be (M, X, A) matching the prior")
    if np.any(counts < 0):
        raise ValueError("expected visit counts must be nonnegative")
    return SearchDataset(prior, counts)


def inverse_search(ds: SearchDataset) -> np.ndarray | None:
    """Feasible search costs (M, A) with c_m(1) = 1, or None (NotOptimal)."""
    m_env, x_dim, a_dim = ds.counts.shape
    if m_env < 2:
        raise DimensionMismatch("need at least two environments")
    n_vars = m_env * (a_dim - 1)   # c_m(0) pinned to 1

    def cidx(m, a):
        return m * (a_dim - 1) + (a - 1)

    rows = []
    for m in range(m_env):
        for l in range(m_env):
            if m == l:
                continue
            diff = np.einsum("x,xa->a", ds.prior, ds.counts[m] - ds.counts[l])
            c = np.zeros(n_vars)
            for a in range(1, a_dim):
                c[cidx(m, a)] = diff[a]
            rows.append((c, -float(diff[0]), "<="))
    sys_ = LinearSystem.build(n_vars, rows, lower=0.0)
    res = lp_feasible(sys_)
    if not res.feasible:
        return None
    costs = np.ones((m_env, a_dim))
    for m in range(m_env):
        for a in range(1, a_dim):
            costs[m, a] = res.witness[cidx(m, a)]
    return costs


def simulate_search(
    costs: np.ndarray,
    prior: np.ndarray,
    overlook: np.ndarray,
    n_episodes: int,
    seed: int,
    max_steps: int = 2000,
) -> np.ndarray:
    """Expected visit counts g(a|x) of the optimal stationary searcher that
    picks argmax of pi(a) (1 - overlook(a)) / cost(a).
    """
    x_dim = prior.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.choice(x_dim, size=n_episodes, p=prior)
    pi = np.tile(prior, (n_episodes, 1))
    active = np.ones(n_episodes, dtype=bool)
    visits = np.zeros((n_episodes, x_dim))
    for _ in range(max_steps):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        score = pi[idx] * (1 - overlook)[None, :] / costs[None, :]
        a = score.argmax(axis=1)
        visits[idx, a] += 1
        at_target = x[idx] == a
        found = at_target & (rng.uniform(size=idx.size) >= overlook[a])
        active[idx[found]] = False
        cont = idx[~found]
        a_cont = a[~found]
        pi[cont, a_cont] *= overlook[a_cont]
        pi[cont] /= pi[cont].sum(axis=1, keepdims=True)
    counts = np.zeros((x_dim, x_dim))
    for xv in range(x_dim):
        sel = x == xv
        if sel.any():
            counts[xv] = visits[sel].mean(axis=0)
    return counts


# ---------------------------------------------------------------------------
# inverse quickest detection


@dataclass(frozen=True)
class QuickestDataset:
    change_prior: np.ndarray   # (H,) over change times 1..H
    kernels: np.ndarray        # (M, H, K): p_m(declare tau | true tau0)


def make_quickest_dataset(change_prior, kernels) -> QuickestDataset:
    change_prior = np.asarray(change_prior, dtype=float)
    kernels = np.asarray(kernels, dtype=float)
    if kernels.ndim != 3 or kernels.shape[1] != change_prior.shape[0]:
        raise DimensionMismatch("kernels must be (M, H, K) matching the prior")
    return QuickestDataset(change_prior, kernels)


def quickest_delay_and_false_alarm(ds: QuickestDataset) -> tuple[np.ndarray, np.ndarray]:
    """Expected delay E|tau - tau0|+ and false-alarm rate P(tau < tau0)."""
    h, k = ds.kernels.shape[1:]
    tau0 = np.arange(1, h + 1)[:, None]
    tau = np.arange(1, k + 1)[None, :]
    delay_w = np.maximum(tau - tau0, 0)
    fa_w = (tau < tau0).astype(float)
    delays = np.einsum("h,mhk,hk->m", ds.change_prior, ds.kernels, delay_w)
    fas = np.einsum("h,mhk,hk->m", ds.change_prior, ds.kernels, fa_w)
    return delays, fas


def inverse_quickest(ds: QuickestDataset) -> np.ndarray | None:
    """Feasible false-alarm penalties f_m >= 0 (delay penalty d = 1), or
    None when no penalties rationalize the detectors (NotOptimal).
    """
    m_env = ds.kernels.shape[0]
    if m_env == 1:
        return np.zeros(1)
    delays, fas = quickest_delay_and_false_alarm(ds)
    rows = []
    for m in range(m_env):
        for n_ in range(m_env):
            if m == n_:
                continue
            c = np.zeros(m_env)
            c[m] = fas[m] - fas[n_]
            rows.append((c, float(delays[n_] - delays[m]), "<="))
    sys_ = LinearSystem.build(m_env, rows, lower=0.0)
    res = lp_feasible(sys_)
    return res.witness.copy() if res.feasible else None


def quickest_policy(
    f_penalty: float,
    hazard: np.ndarray,
    q0: float,
    q1: float,
    grid: int = 801,
) -> np.ndarray:
    """Backward DP over the horizon: stop_k(pi) boolean table (K, grid).

    hazard[k] = P(tau0 = k+1 | tau0 >= k+1); observations Bernoulli with
    P(y=1) = q0 pre-change and q1 post-change; delay penalty 1 per period.
    """
    k_max = hazard.shape[0]
    pis = np.linspace(0.0, 1.0, grid)
    stop_cost = f_penalty * (1 - pis)
    v = stop_cost.copy()                      # value at k = K (forced stop)
    stop = np.zeros((k_max, grid), dtype=bool)
    stop[k_max - 1] = True
    for k in range(k_max - 2, -1, -1):
        pred = pis + (1 - pis) * hazard[k + 1]
        cont = pis.copy()                      # expected delay increment
        for y in (0, 1):
            f_pre = q0 if y == 1 else 1 - q0
            f_post = q1 if y == 1 else 1 - q1
            py = (1 - pred) * f_pre + pred * f_post
            post = np.where(py > 0, pred * f_post / np.maximum(py, 1e-300), pred)
            cont += py * np.interp(post, pis, v)
        stop[k] = stop_cost <= cont
        v = np.minimum(stop_cost, cont)
    return stop


def simulate_quickest(
    f_penalty: float,
    change_prior: np.ndarray,
    q0: float,
    q1: float,
    n_episodes: int,
    seed: int,
    k_max: int,
    grid: int = 801,
) -> np.ndarray:
    """p(tau | tau0) for the DP-optimal detector, estimated by Monte Carlo."""
    h = change_prior.shape[0]
    surv = np.concatenate([[1.0], 1.0 - np.cumsum(change_prior)])
    hazard = np.array([
        change_prior[k] / surv[k] if surv[k] > 1e-12 else 1.0 for k in range(h)
    ])
    hazard = np.concatenate([hazard, np.ones(max(0, k_max - h))])[:k_max]
    stop_table = quickest_policy(f_penalty, hazard, q0, q1, grid)
    pis = np.linspace(0.0, 1.0, grid)
    rng = np.random.default_rng(seed)
    tau0 = rng.choice(np.arange(1, h + 1), size=n_episodes, p=change_prior)
    pi = np.zeros(n_episodes)
    taus = np.zeros(n_episodes, dtype=int)
    active = np.ones(n_episodes, dtype=bool)
    for k in range(k_max):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        pred = pi[idx] + (1 - pi[idx]) * hazard[k]
        changed = tau0[idx] <= k + 1
        py1 = np.where(changed, q1, q0)
        y = (rng.uniform(size=idx.size) < py1).astype(int)
        f_pre = np.where(y == 1, q0, 1 - q0)
        f_post = np.where(y == 1, q1, 1 - q1)
        den = (1 - pred) * f_pre + pred * f_post
        pi[idx] = pred * f_post / np.maximum(den, 1e-300)
        cells = np.clip(np.searchsorted(pis, pi[idx]), 0, grid - 1)
        stopping = stop_table[k][cells]
        taus[idx[stopping]] = k + 1
        active[idx[stopping]] = False
    if active.any():
        taus[active] = k_max
    kernel = np.zeros((h, k_max))
    for t0 in range(1, h + 1):
        sel = tau0 == t0
        if sel.any():
            for t in range(1, k_max + 1):
                kernel[t0 - 1, t - 1] = np.mean(taus[sel] == t)
    return kernel
