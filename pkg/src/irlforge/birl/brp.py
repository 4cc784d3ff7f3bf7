"""Bayesian revealed preferences: NIAS/NIAC linear feasibility, certificate
residuals, information-cost reconstruction, and the combinatorial cycle form
used for cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from ..errors import AllActionsUnused, CertificateMismatch, DimensionMismatch
from ..solvers import LinearSystem, lp_feasible

_MARGINAL_FLOOR = 1e-12


@dataclass(frozen=True)
class BehaviorDataset:
    """Sufficient statistic for a Bayesian agent: prior and per-environment
    action kernels p_m(a|x).
    """

    prior: np.ndarray      # (X,)
    kernels: np.ndarray    # (M, X, A), rows sum to 1

    @property
    def n_env(self) -> int:
        return self.kernels.shape[0]

    @property
    def n_states(self) -> int:
        return self.kernels.shape[1]

    @property
    def n_actions(self) -> int:
        return self.kernels.shape[2]


def make_behavior_dataset(prior, kernels) -> BehaviorDataset:
    prior = np.asarray(prior, dtype=float)
    kernels = np.asarray(kernels, dtype=float)
    if kernels.ndim != 3 or kernels.shape[1] != prior.shape[0]:
        raise DimensionMismatch("kernels must be (M, X, A) matching the prior")
    if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-9:
        raise ValueError("prior must be a probability vector")
    if np.any(kernels < 0) or np.abs(kernels.sum(axis=2) - 1.0).max() > 1e-9:
        raise ValueError("each p_m(.|x) must be a probability vector")
    return BehaviorDataset(prior, kernels)


def action_marginals(ds: BehaviorDataset) -> np.ndarray:
    """p_m(a) = sum_x prior(x) p_m(a|x), shape (M, A)."""
    return np.einsum("x,mxa->ma", ds.prior, ds.kernels)


def revealed_posteriors(ds: BehaviorDataset) -> np.ndarray:
    """p_m(x|a) by Bayes rule; zero-marginal actions get a zero column."""
    joint = ds.prior[None, :, None] * ds.kernels            # (M, X, A)
    marg = joint.sum(axis=1)                                # (M, A)
    out = np.zeros_like(joint)
    ok = marg > _MARGINAL_FLOOR
    for m in range(ds.n_env):
        for a in range(ds.n_actions):
            if ok[m, a]:
                out[m, :, a] = joint[m, :, a] / marg[m, a]
    return out


@dataclass(frozen=True)
class BRPCertificate:
    """Feasible rewards (or stopping costs in min mode) and scalar costs z."""

    values: np.ndarray   # (M, X, A) >= 0
    z: np.ndarray        # (M,) >= 0
    mode: str            # 'max' | 'min'


def _reward_dev(prior, kernel, values_m):
    """sum_a opt_abar sum_x prior(x) kernel(a|x) values_m(x, abar):
    max for rewards, min for costs is handled by the caller via sign."""
    scores = np.einsum("x,xa,xb->ab", prior, kernel, values_m)  # rows a, cols abar
    return scores


def expected_value_own(prior, kernel, values_m) -> float:
    """sum_{x,a} prior(x) kernel(a|x) values_m(x,a)."""
    return float(np.einsum("x,xa,xa->", prior, kernel, values_m))


def expected_value_swapped(prior, kernel_other, values_m, mode: str) -> float:
    scores = _reward_dev(prior, kernel_other, values_m)
    if mode == "max":
        return float(scores.max(axis=1).sum())
    return float(scores.min(axis=1).sum())


def brp_feasible(
    ds: BehaviorDataset,
    mode: str = "max",
    margin: float = 0.0,
    fixed_z: np.ndarray | None = None,
    zero_pattern: np.ndarray | None = None,
    tol: float = 1e-9,
) -> BRPCertificate | None:
    """NIAS/NIAC linear feasibility test.

    mode='max' searches rewards r >= 0 maximized by the agent; mode='min'
    searches stopping costs s >= 0 minimized by the agent (signs flipped).
    `fixed_z` pins the scalar costs (e.g. known expected continue costs);
    `zero_pattern` forces selected value entries to zero.  Returns None when
    the dataset cannot come from the corresponding optimal agent (NotUMRI).
    """
    if mode not in ("max", "min"):
        raise ValueError("mode must be 'max' or 'min'")
    m_env, x_dim, a_dim = ds.kernels.shape
    marg = action_marginals(ds)
    if np.any(marg.sum(axis=1) < 1.0 - 1e-9) or np.any((marg > _MARGINAL_FLOOR).sum(axis=1) == 0):
        raise AllActionsUnused("an environment uses no action with positive probability")
    post = revealed_posteriors(ds)

    n_val = m_env * x_dim * a_dim
    pairs = [(m, l) for m in range(m_env) for l in range(m_env) if m != l]
    n_z = m_env
    n_aux = len(pairs) * a_dim
    n_vars = n_val + n_z + n_aux

    def vidx(m, x, a):
        return (m * x_dim + x) * a_dim + a

    def zidx(m):
        return n_val + m

    def tidx(pair_i, a):
        return n_val + n_z + pair_i * a_dim + a

    rows = []
    sgn = 1.0 if mode == "max" else -1.0   # min mode flips value/aux terms only

    # NIAS: the chosen action beats every deviation under the revealed posterior
    for m in range(m_env):
        for a in range(a_dim):
            if marg[m, a] <= _MARGINAL_FLOOR:
                continue
            for ab in range(a_dim):
                if ab == a:
                    continue
                c = np.zeros(n_vars)
                for x in range(x_dim):
                    c[vidx(m, x, ab)] += sgn * post[m, x, a]
                    c[vidx(m, x, a)] -= sgn * post[m, x, a]
                rows.append((c, -margin, "<="))

    # epigraph of the swapped-kernel value: t bounds the inner opt from the
    # feasible side (t >= each deviation for rewards, t <= each for costs)
    for pi, (m, l) in enumerate(pairs):
        for a in range(a_dim):
            for ab in range(a_dim):
                c = np.zeros(n_vars)
                for x in range(x_dim):
                    c[vidx(m, x, ab)] += sgn * ds.prior[x] * ds.kernels[l, x, a]
                c[tidx(pi, a)] -= sgn * 1.0
                rows.append((c, 0.0, "<="))

    # NIAC over ordered pairs; z coefficients do not flip with the mode
    for pi, (m, l) in enumerate(pairs):
        c = np.zeros(n_vars)
        rhs = -margin
        for a in range(a_dim):
            c[tidx(pi, a)] += sgn * 1.0
        for x in range(x_dim):
            for a in range(a_dim):
                c[vidx(m, x, a)] -= sgn * ds.prior[x] * ds.kernels[m, x, a]
        if fixed_z is None:
            c[zidx(l)] -= 1.0
            c[zidx(m)] += 1.0
        else:
            rhs += float(fixed_z[l]) - float(fixed_z[m])
        rows.append((c, rhs, "<="))

    lower = np.full(n_vars, -np.inf)
    upper = np.full(n_vars, np.inf)
    lower[:n_val] = 0.0
    if fixed_z is None:
        lower[n_val:n_val + n_z] = 0.0
    else:
        lower[n_val:n_val + n_z] = 0.0
        upper[n_val:n_val + n_z] = 0.0   # unused slots pinned at zero
    if zero_pattern is not None:
        zp = np.asarray(zero_pattern, dtype=bool)
        if zp.shape != (m_env, x_dim, a_dim):
            raise DimensionMismatch("zero_pattern must match (M, X, A)")
        for m in range(m_env):
            for x in range(x_dim):
                for a in range(a_dim):
                    if zp[m, x, a]:
                        upper[vidx(m, x, a)] = 0.0

    sys_ = LinearSystem.build(n_vars, rows, lower=lower, upper=upper)
    res = lp_feasible(sys_, tol)
    if not res.feasible:
        return None
    values = res.witness[:n_val].reshape(m_env, x_dim, a_dim).copy()
    z = (np.asarray(fixed_z, dtype=float).copy() if fixed_z is not None
         else res.witness[n_val:n_val + n_z].copy())
    return BRPCertificate(values, z, mode)


def brp_residuals(
    ds: BehaviorDataset, values: np.ndarray, z: np.ndarray, mode: str = "max"
) -> dict[str, np.ndarray]:
    """NIAS/NIAC left-hand sides for given values; all <= 0 when satisfied."""
    m_env, x_dim, a_dim = ds.kernels.shape
    marg = action_marginals(ds)
    post = revealed_posteriors(ds)
    sgn = 1.0 if mode == "max" else -1.0
    nias = []
    for m in range(m_env):
        for a in range(a_dim):
            if marg[m, a] <= _MARGINAL_FLOOR:
                continue
            for ab in range(a_dim):
                if ab == a:
                    continue
                lhs = sgn * float(post[m, :, a] @ (values[m, :, ab] - values[m, :, a]))
                nias.append(lhs)
    niac = []
    for m in range(m_env):
        for l in range(m_env):
            if m == l:
                continue
            own = expected_value_own(ds.prior, ds.kernels[m], values[m])
            swp = expected_value_swapped(ds.prior, ds.kernels[l], values[m], mode)
            if mode == "max":
                lhs = (swp - z[l]) - (own - z[m])
            else:
                lhs = (own + z[m]) - (swp + z[l])
            niac.append(lhs)
    return {"nias": np.asarray(nias), "niac": np.asarray(niac)}


def reconstruct_info_cost(
    cert: BRPCertificate, ds: BehaviorDataset, kernel_query: np.ndarray
) -> float:
    """Piecewise-linear convex reconstruction of the information-acquisition
    cost (max mode) or cumulative continue cost (min mode) at a query kernel.
    """
    kernel_query = np.asarray(kernel_query, dtype=float)
    if cert.values.shape != ds.kernels.shape[:1] + ds.kernels.shape[1:]:
        raise CertificateMismatch("certificate does not match the dataset")
    if kernel_query.shape != ds.kernels.shape[1:]:
        raise CertificateMismatch("query kernel has the wrong shape")
    best = -np.inf
    for m in range(ds.n_env):
        own = expected_value_own(ds.prior, ds.kernels[m], cert.values[m])
        dev = expected_value_swapped(ds.prior, kernel_query, cert.values[m], cert.mode)
        if cert.mode == "max":
            val = cert.z[m] + dev - own
        else:
            val = cert.z[m] + own - dev
        best = max(best, val)
    return float(best)


def environment_cycles(m_env: int):
    """All directed simple cycles (length >= 2) over environment labels."""
    for size in range(2, m_env + 1):
        for subset in combinations(range(m_env), size):
            first = subset[0]
            for rest in permutations(subset[1:]):
                yield (first,) + rest


def niac_combinatorial_holds(
    ds: BehaviorDataset, values: np.ndarray, mode: str = "max", tol: float = 1e-9
) -> bool:
    """Cycle form of NIAC for fixed values (no z variables)."""
    for cycle in environment_cycles(ds.n_env):
        total = 0.0
        for j, m in enumerate(cycle):
            nxt = cycle[(j + 1) % len(cycle)]
            own = expected_value_own(ds.prior, ds.kernels[m], values[m])
            swp = expected_value_swapped(ds.prior, ds.kernels[nxt], values[m], mode)
            total += (swp - own) if mode == "max" else (own - swp)
        if total > tol:
            return False
    return True


def niac_pairwise_z_exists(
    ds: BehaviorDataset, values: np.ndarray, mode: str = "max", tol: float = 1e-9
) -> bool:
    """Existence of z >= 0 satisfying the pairwise NIAC for fixed values."""
    m_env = ds.n_env
    rows = []
    for m in range(m_env):
        for l in range(m_env):
            if m == l:
                continue
            own = expected_value_own(ds.prior, ds.kernels[m], values[m])
            swp = expected_value_swapped(ds.prior, ds.kernels[l], values[m], mode)
            c = np.zeros(m_env)
            c[m] = 1.0
            c[l] = -1.0
            rhs = (own - swp) if mode == "max" else (swp - own)
            rows.append((c, rhs, "<="))
    sys_ = LinearSystem.build(m_env, rows, lower=0.0)
    return lp_feasible(sys_, tol).feasible
