"""Multiagent coordination tests: Pareto-optimal collective rationality via
mixed-integer feasibility, and Nash rationality for concave potential games.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NodeBudgetExceeded, NonPositiveProbe
from .rp import RationalityCertificate, afriat_certificate_from_a
from .solvers import LinearSystem, MixedSystem, lp_feasible, milp_feasible

DELTA_STRICT = 1e-6   # relaxation of the strict inequality (iii), scaled by y_s


@dataclass(frozen=True)
class AggregateDataset:
    """Probes, aggregate responses, and per-agent assignable lower bounds."""

    alpha: np.ndarray          # (N, m)
    beta_total: np.ndarray     # (N, m)
    lower: np.ndarray          # (P, N, m)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def m(self) -> int:
        return self.alpha.shape[1]

    @property
    def p(self) -> int:
        return self.lower.shape[0]


def make_aggregate_dataset(alpha, beta_total, lower) -> AggregateDataset:
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    beta_total = np.atleast_2d(np.asarray(beta_total, dtype=float))
    lower = np.asarray(lower, dtype=float)
    if lower.ndim != 3 or lower.shape[1:] != alpha.shape or beta_total.shape != alpha.shape:
        raise DimensionMismatch("lower bounds must be (P, N, m) matching probes")
    if np.any(alpha <= 0):
        raise NonPositiveProbe("probes must be strictly positive")
    if np.any(lower.sum(axis=0) > beta_total + 1e-12):
        raise ValueError("assignable lower bounds exceed the aggregate response")
    return AggregateDataset(alpha, beta_total, lower)


@dataclass(frozen=True)
class MultiAgentDataset:
    alpha: np.ndarray   # (N, m)
    beta: np.ndarray    # (P, N, m)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def m(self) -> int:
        return self.alpha.shape[1]

    @property
    def p(self) -> int:
        return self.beta.shape[0]


def make_multiagent_dataset(alpha, beta) -> MultiAgentDataset:
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 3 or beta.shape[1:] != alpha.shape:
        raise DimensionMismatch("per-agent responses must be (P, N, m)")
    if np.any(alpha <= 0):
        raise NonPositiveProbe("probes must be strictly positive")
    if np.any(beta < 0):
        raise ValueError("responses must be nonnegative")
    return MultiAgentDataset(alpha, beta)


@dataclass(frozen=True)
class ParetoResult:
    status: str                                   # coordinated | not_coordinated | undecided
    personalized: np.ndarray | None               # (P, N, m)
    certificates: tuple[RationalityCertificate, ...] | None


@dataclass(frozen=True)
class FeasibilityResultShim:
    """Adapter so a directly verified warm start reads like a solver result."""

    witness: np.ndarray
    feasible: bool = True


def build_pareto_system(ds: AggregateDataset) -> tuple[MixedSystem, dict]:
    """Mixed-integer encoding of Pareto coordination.

    Continuous variables are the personalized quantities; binaries encode the
    per-agent revealed-preference relation, with transitivity and the GARP
    conclusion as linear rows.  Returns the system plus index helpers.
    """
    n, m, p = ds.n, ds.m, ds.p
    y = np.einsum("ij,ij->i", ds.alpha, ds.beta_total)   # group cost per epoch

    n_beta = p * n * m
    pairs = [(s, k) for s in range(n) for k in range(n) if s != k]
    pair_index = {pk: i for i, pk in enumerate(pairs)}
    n_bin = p * len(pairs)
    n_vars = n_beta + n_bin

    def bvar(q, k, i):
        return (q * n + k) * m + i

    def xvar(q, s, k):
        return n_beta + q * len(pairs) + pair_index[(s, k)]

    rows_a: list[np.ndarray] = []
    rows_b: list[float] = []
    senses: list[str] = []

    def add(coeffs, rhs, sense):
        rows_a.append(coeffs)
        rows_b.append(rhs)
        senses.append(sense)

    # (i) personalized quantities add up to the aggregate
    for k in range(n):
        for i in range(m):
            c = np.zeros(n_vars)
            for q in range(p):
                c[bvar(q, k, i)] = 1.0
            add(c, float(ds.beta_total[k, i]), "=")

    for q in range(p):
        for (s, k) in pairs:
            # (iii) with eta substituted: a_s.bhat_s - a_s.bhat_k - y_s x_sk <= -delta
            c = np.zeros(n_vars)
            for i in range(m):
                c[bvar(q, s, i)] += ds.alpha[s, i]
                c[bvar(q, k, i)] -= ds.alpha[s, i]
            c[xvar(q, s, k)] = -y[s]
            add(c, -DELTA_STRICT * y[s], "<=")
            # (v): a_k.bhat_k - a_k.bhat_s + y_k x_sk <= y_k
            c = np.zeros(n_vars)
            for i in range(m):
                c[bvar(q, k, i)] += ds.alpha[k, i]
                c[bvar(q, s, i)] -= ds.alpha[k, i]
            c[xvar(q, s, k)] = y[k]
            add(c, float(y[k]), "<=")
        # (iv) transitivity: x_su + x_uk - x_sk <= 1
        for s in range(n):
            for u in range(n):
                for k in range(n):
                    if len({s, u, k}) < 3:
                        continue
                    c = np.zeros(n_vars)
                    c[xvar(q, s, u)] = 1.0
                    c[xvar(q, u, k)] = 1.0
                    c[xvar(q, s, k)] = -1.0
                    add(c, 1.0, "<=")

    lower = np.zeros(n_vars)
    lower[:n_beta] = ds.lower.reshape(-1)
    upper = np.full(n_vars, np.inf)
    upper[n_beta:] = 1.0
    sys_ = LinearSystem.from_arrays(
        np.asarray(rows_a), np.asarray(rows_b), tuple(senses), lower, upper, n_vars
    )
    meta = {"n_beta": n_beta, "n_bin": n_bin, "bvar": bvar, "xvar": xvar, "pairs": pairs}
    return MixedSystem(sys_, tuple(range(n_beta, n_vars))), meta


def proportional_split_candidate(ds: AggregateDataset, meta: dict) -> np.ndarray:
    """Warm-start point: proportional split plus relation binaries by sign."""
    n, m, p = ds.n, ds.m, ds.p
    slack = (ds.beta_total - ds.lower.sum(axis=0)) / p
    bhat = ds.lower + slack[None, :, :]
    x = np.zeros(meta["n_bin"] + meta["n_beta"])
    x[: meta["n_beta"]] = bhat.reshape(-1)
    for q in range(p):
        for (s, k) in meta["pairs"]:
            a_sk = float(ds.alpha[s] @ (bhat[q, k] - bhat[q, s]))
            if a_sk <= 0:
                x[meta["xvar"](q, s, k)] = 1.0
    return x


def pareto_test(ds: AggregateDataset, node_budget: int = 50_000) -> ParetoResult:
    """Mixed-integer feasibility test for Pareto-optimal coordination.

    On success the personalized quantities carry per-agent Afriat
    certificates; an exhausted node budget reports `undecided`.
    """
    n, m, p = ds.n, ds.m, ds.p
    if p == 1:
        a = ds.alpha @ ds.beta_total.T - np.einsum("ij,ij->i", ds.alpha, ds.beta_total)[:, None]
        cert = afriat_certificate_from_a(a)
        if cert is None:
            return ParetoResult("not_coordinated", None, None)
        return ParetoResult("coordinated", ds.beta_total[None, :, :].copy(), (cert,))

    msys, meta = build_pareto_system(ds)
    n_beta = meta["n_beta"]

    from .solvers import violation

    warm = proportional_split_candidate(ds, meta)
    if violation(msys.base, warm) <= 1e-9:
        res = FeasibilityResultShim(warm)
    else:
        try:
            res = milp_feasible(msys, max_nodes=node_budget, max_binaries=max(30, meta["n_bin"]))
        except NodeBudgetExceeded:
            return ParetoResult("undecided", None, None)
        if not res.feasible:
            return ParetoResult("not_coordinated", None, None)

    personalized = res.witness[:n_beta].reshape(p, n, m)
    certs = []
    for q in range(p):
        bq = personalized[q]
        a = ds.alpha @ bq.T - np.einsum("ij,ij->i", ds.alpha, bq)[:, None]
        cert = afriat_certificate_from_a(a)
        if cert is None:
            # should not happen: (iii)-(v) encode per-agent GARP
            return ParetoResult("not_coordinated", None, None)
        certs.append(cert)
    return ParetoResult("coordinated", personalized, tuple(certs))


@dataclass(frozen=True)
class PotentialCertificate:
    phi: np.ndarray    # (N,)
    lam: np.ndarray    # (P, N)


@dataclass(frozen=True)
class NashResult:
    certificate: PotentialCertificate

    def potential(self, betas: np.ndarray, ds: MultiAgentDataset) -> float:
        """Evaluate the reconstructed potential at a full profile (P, m)."""
        betas = np.asarray(betas, dtype=float)
        vals = self.certificate.phi.copy()
        for k in range(ds.n):
            for q in range(ds.p):
                vals[k] += self.certificate.lam[q, k] * float(
                    ds.alpha[k] @ (betas[q] - ds.beta[q, k])
                )
        return float(vals.min())


def nash_potential_test(ds: MultiAgentDataset) -> NashResult | None:
    """LP feasibility for Nash play from a concave potential game.

    None means the dataset is not Nash-rationalizable by any strictly
    monotone concave ordinal potential.
    """
    n, p = ds.n, ds.p
    n_vars = n + p * n   # phi then lam (agent-major)
    rows = []
    for k in range(n):
        for s in range(n):
            if s == k:
                continue
            c = np.zeros(n_vars)
            c[s] = 1.0
            c[k] -= 1.0
            for q in range(p):
                c[n + q * n + k] = -float(ds.alpha[k] @ (ds.beta[q, s] - ds.beta[q, k]))
            rows.append((c, 0.0, "<="))
    lower = np.concatenate([np.full(n, -np.inf), np.ones(p * n)])
    sys_ = LinearSystem.build(n_vars, rows, lower=lower)
    res = lp_feasible(sys_)
    if not res.feasible:
        return None
    phi = res.witness[:n].copy()
    lam = res.witness[n:].reshape(p, n).copy()
    return NashResult(PotentialCertificate(phi, lam))
