"""Classical revealed preferences: GARP, Afriat feasibility and utility
reconstruction (linear and nonlinear budgets), response prediction,
feasibility margin, utility masking, and rationality indices.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BudgetNotActive,
    CertificateInvalid,
    DimensionMismatch,
    InfeasibleMask,
    NonPositiveProbe,
    TooLargeForExact,
)
from .solvers import TOL_LP, LinearSystem, lp_feasible

TOL_GARP = 1e-7    # sign tolerance on a-matrix entries
TOL_NORM = 1e-6    # budget-activeness tolerance


@dataclass(frozen=True)
class BudgetDataset:
    """Probe/response series with probes rescaled so alpha_k . beta_k = 1."""

    alpha: np.ndarray
    beta: np.ndarray

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def m(self) -> int:
        return self.alpha.shape[1]


def make_budget_dataset(alpha: np.ndarray, beta: np.ndarray) -> BudgetDataset:
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    if alpha.shape != beta.shape:
        raise DimensionMismatch(f"alpha {alpha.shape} vs beta {beta.shape}")
    if alpha.shape[1] < 2:
        raise DimensionMismatch("need at least two goods (m >= 2)")
    if np.any(alpha <= 0):
        raise NonPositiveProbe("all probe entries must be strictly positive")
    if np.any(beta < 0):
        raise ValueError("responses must be nonnegative")
    spend = np.einsum("ij,ij->i", alpha, beta)
    if np.any(spend <= 0):
        raise ValueError("each response must have positive cost under its probe")
    return BudgetDataset(alpha / spend[:, None], beta.copy())


@dataclass(frozen=True)
class NonlinearBudget:
    """Increasing continuous budget evaluators g_k with g_k(beta_k) = 0."""

    evaluators: tuple[Callable[[np.ndarray], float], ...]


@dataclass(frozen=True)
class NonlinearDataset:
    beta: np.ndarray
    budget: NonlinearBudget

    @property
    def n(self) -> int:
        return self.beta.shape[0]

    @property
    def m(self) -> int:
        return self.beta.shape[1]


def make_nonlinear_dataset(beta: np.ndarray, budget: NonlinearBudget) -> NonlinearDataset:
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    if len(budget.evaluators) != beta.shape[0]:
        raise DimensionMismatch("one budget evaluator per observation required")
    for k, g in enumerate(budget.evaluators):
        if abs(float(g(beta[k]))) > TOL_NORM:
            raise BudgetNotActive(f"g_{k}(beta_{k}) != 0: budget not active")
    return NonlinearDataset(beta, budget)


def a_matrix(ds: BudgetDataset | NonlinearDataset) -> np.ndarray:
    """a_ij = alpha_i.(beta_j - beta_i), or g_i(beta_j) for nonlinear budgets."""
    if isinstance(ds, BudgetDataset):
        spend = np.einsum("ij,ij->i", ds.alpha, ds.beta)
        return ds.alpha @ ds.beta.T - spend[:, None]
    n = ds.n
    a = np.empty((n, n))
    for i, g in enumerate(ds.budget.evaluators):
        for j in range(n):
            a[i, j] = float(g(ds.beta[j]))
    return a


@dataclass(frozen=True)
class GarpReport:
    consistent: bool
    violating_cycle: tuple[int, ...]
    a_matrix: np.ndarray


def _closure(edges: np.ndarray) -> np.ndarray:
    """Reflexive-transitive closure by Warshall, O(N^3)."""
    reach = edges.copy()
    np.fill_diagonal(reach, True)
    n = reach.shape[0]
    for k in range(n):
        reach |= reach[:, k][:, None] & reach[k, :][None, :]
    return reach


def _shortest_cycle(edges: np.ndarray, strict: np.ndarray) -> tuple[int, ...]:
    """Shortest cycle through some strict edge; BFS per strict edge."""
    n = edges.shape[0]
    best: tuple[int, ...] | None = None
    for u in range(n):
        for v in range(n):
            if not strict[u, v]:
                continue
            # BFS path v -> u over edges
            if v == u:
                continue
            prev = {v: None}
            queue = deque([v])
            while queue:
                x = queue.popleft()
                if x == u:
                    break
                for y in range(n):
                    if edges[x, y] and y not in prev:
                        prev[y] = x
                        queue.append(y)
            if u not in prev:
                continue
            path = [u]
            x = u
            while prev[x] is not None:
                x = prev[x]
                path.append(x)
            path.reverse()          # v ... u
            cycle = tuple([u] + path[:-1])
            if best is None or len(cycle) < len(best) or (
                len(cycle) == len(best) and cycle < best
            ):
                best = cycle
    return best if best is not None else ()


def check_garp(ds: BudgetDataset | NonlinearDataset, tol: float = TOL_GARP) -> GarpReport:
    """Transitive-closure GARP test; returns the shortest violating cycle."""
    a = a_matrix(ds)
    n = a.shape[0]
    if n <= 1:
        return GarpReport(True, (), a)
    off = ~np.eye(n, dtype=bool)
    edges = (a <= tol) & off
    strict = (a < -tol) & off
    reach = _closure(edges)
    # violation: a strict edge (u, v) with v reaching u again through edges
    violating = strict & reach.T
    if not violating.any():
        return GarpReport(True, (), a)
    cycle = _shortest_cycle(edges, violating)
    return GarpReport(False, cycle, a)


@dataclass(frozen=True)
class RationalityCertificate:
    phi: np.ndarray
    lam: np.ndarray


def afriat_certificate_from_a(a: np.ndarray, tol: float = TOL_LP) -> RationalityCertificate | None:
    """Feasibility of phi_s - phi_k - lam_k a_ks <= 0 with lam_k >= 1."""
    n = a.shape[0]
    if n == 1:
        return RationalityCertificate(np.zeros(1), np.ones(1))
    n_rows = n * (n - 1)
    mat = np.zeros((n_rows, 2 * n))
    r = 0
    for k in range(n):
        for s in range(n):
            if s == k:
                continue
            mat[r, s] = 1.0
            mat[r, k] -= 1.0
            mat[r, n + k] = -a[k, s]
            r += 1
    lower = np.concatenate([np.full(n, -np.inf), np.ones(n)])
    sys_ = LinearSystem.from_arrays(mat, np.zeros(n_rows), ("<=",) * n_rows, lower, np.inf, 2 * n)
    res = lp_feasible(sys_, tol)
    if not res.feasible:
        return None
    return RationalityCertificate(res.witness[:n].copy(), res.witness[n:].copy())


def afriat_certificate(ds: BudgetDataset | NonlinearDataset, tol: float = TOL_LP) -> RationalityCertificate | None:
    """Afriat feasibility; None means the dataset is not rationalizable."""
    return afriat_certificate_from_a(a_matrix(ds), tol)


@dataclass(frozen=True)
class PiecewiseUtility:
    """Lower envelope of the certificate hyperplanes; U(beta_k) = phi_k."""

    certificate: RationalityCertificate
    dataset: BudgetDataset | NonlinearDataset

    def __call__(self, beta: np.ndarray) -> float:
        return evaluate_utility(self, beta)


def evaluate_utility(u: PiecewiseUtility, beta: np.ndarray) -> float:
    beta = np.asarray(beta, dtype=float)
    ds = u.dataset
    if beta.shape != (ds.m,):
        raise DimensionMismatch(f"expected response of dimension {ds.m}")
    phi, lam = u.certificate.phi, u.certificate.lam
    if isinstance(ds, BudgetDataset):
        vals = phi + lam * (ds.alpha @ beta - np.einsum("ij,ij->i", ds.alpha, ds.beta))
    else:
        vals = phi + lam * np.array([g(beta) for g in ds.budget.evaluators])
    return float(vals.min())


def predict_member(
    ds: BudgetDataset,
    alpha_new: np.ndarray,
    beta_candidate: np.ndarray,
    tol_norm: float = TOL_NORM,
) -> bool:
    """True iff the candidate pair extends the dataset without breaking GARP."""
    alpha_new = np.asarray(alpha_new, dtype=float)
    beta_candidate = np.asarray(beta_candidate, dtype=float)
    if alpha_new.shape != (ds.m,) or beta_candidate.shape != (ds.m,):
        raise DimensionMismatch("new probe/response dimension mismatch")
    if abs(alpha_new @ beta_candidate - 1.0) > tol_norm:
        raise BudgetNotActive("candidate must exhaust the new budget")
    ext = make_budget_dataset(
        np.vstack([ds.alpha, alpha_new]), np.vstack([ds.beta, beta_candidate])
    )
    return check_garp(ext).consistent


def certificate_slacks(ds: BudgetDataset | NonlinearDataset, cert: RationalityCertificate) -> np.ndarray:
    """Slack -(phi_s - phi_k - lam_k a_ks) for every ordered pair k != s."""
    a = a_matrix(ds)
    n = a.shape[0]
    phi, lam = cert.phi, cert.lam
    if phi.shape != (n,) or lam.shape != (n,):
        raise DimensionMismatch("certificate length mismatch")
    rows = -(phi[None, :] - phi[:, None] - lam[:, None] * a)
    return rows[~np.eye(n, dtype=bool)]


def feasibility_margin(
    ds: BudgetDataset | NonlinearDataset,
    cert: RationalityCertificate,
    mode: str = "min",
    tol: float = TOL_LP,
) -> float:
    """Distance of a certificate from losing feasibility.

    mode='min' (default) is the minimal slack over the Afriat inequalities:
    the smallest perturbation that breaks at least one of them.  mode='all'
    is the literal all-constraints reading (epsilon large enough to flip
    every inequality at once), i.e. the largest slack.
    """
    if ds.n == 1:
        return 0.0
    slacks = certificate_slacks(ds, cert)
    if slacks.min() < -tol:
        raise CertificateInvalid(
            f"certificate violates Afriat's inequalities by {-slacks.min():.3g}"
        )
    if mode == "min":
        return float(max(0.0, slacks.min()))
    if mode == "all":
        return float(max(0.0, slacks.max()))
    raise ValueError("mode must be 'min' or 'all'")


def _numeric_grad(fn: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.empty_like(x, dtype=float)
    for i in range(x.size):
        e = np.zeros_like(x, dtype=float)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def canonical_certificate(
    ds: BudgetDataset,
    utility: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray] | None = None,
    coord: int = 0,
) -> RationalityCertificate:
    """Certificate induced by a known utility: phi_k = U(beta_k) and
    lam_k = dU/dbeta_coord (beta_k) / alpha_k(coord), rescaled so min lam = 1.
    """
    if grad is None:
        grad = lambda b: _numeric_grad(utility, b)  # noqa: E731
    phi = np.array([float(utility(b)) for b in ds.beta])
    lam = np.array([float(grad(b)[coord]) / ds.alpha[k, coord] for k, b in enumerate(ds.beta)])
    if np.any(lam <= 0):
        raise CertificateInvalid("utility gradient must be strictly positive")
    scale = 1.0 / lam.min()
    return RationalityCertificate(phi * scale, lam * scale)


def _margin_raw(alpha: np.ndarray, beta: np.ndarray, utility, grad, coord: int) -> float:
    """Min slack of the canonical certificate on possibly non-active data."""
    phi = np.array([float(utility(b)) for b in beta])
    lam = np.array([float(grad(b)[coord]) / alpha[k, coord] for k, b in enumerate(beta)])
    scale = 1.0 / max(lam.min(), 1e-300)
    phi, lam = phi * scale, lam * scale
    spend = np.einsum("ij,ij->i", alpha, beta)
    a = alpha @ beta.T - spend[:, None]
    rows = -(phi[None, :] - phi[:, None] - lam[:, None] * a)
    n = alpha.shape[0]
    return float(rows[~np.eye(n, dtype=bool)].min())


def mask_responses(
    ds: BudgetDataset,
    utility: Callable[[np.ndarray], float],
    eta: float,
    iters: int = 120,
    grad: Callable[[np.ndarray], np.ndarray] | None = None,
    coord: int = 0,
    tol_mask: float = 1e-3,
) -> tuple[np.ndarray, float]:
    """Perturb responses so the utility's feasibility margin shrinks to
    (1 - eta) of its original value while sacrificing as little utility as
    possible.  Projected coordinate descent with step halving on a penalized
    objective; the problem is nonconvex, so this is a local method.

    Returns (masked responses, achieved margin).
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if grad is None:
        grad = lambda b: _numeric_grad(utility, b)  # noqa: E731
    cert0 = canonical_certificate(ds, utility, grad, coord)
    margin0 = feasibility_margin(ds, cert0)
    target = (1.0 - eta) * margin0
    if eta == 0.0:
        return ds.beta.copy(), margin0

    alpha = ds.alpha
    beta = ds.beta.copy()
    base_value = sum(float(utility(b)) for b in beta)
    scale_m = max(margin0, 1e-12)

    def sacrifice(b):
        return base_value - sum(float(utility(x)) for x in b)

    def penalized(b, rho):
        m = _margin_raw(alpha, b, utility, grad, coord)
        over = max(0.0, m - target) / scale_m
        under = max(0.0, -m) / scale_m
        return sacrifice(b) + rho * (over * over + under * under), m

    rho = 1.0
    steps = 0.1 * (np.abs(beta) + 0.1)
    current, margin = penalized(beta, rho)
    for sweep in range(iters):
        improved = False
        for k in range(ds.n):
            for i in range(ds.m):
                for sign in (-1.0, 1.0):
                    cand = beta.copy()
                    cand[k, i] = max(0.0, cand[k, i] + sign * steps[k, i])
                    spend = float(alpha[k] @ cand[k])
                    if spend > 1.0:
                        cand[k] = cand[k] / spend
                    val, m = penalized(cand, rho)
                    if val < current - 1e-15:
                        beta, current, margin = cand, val, m
                        steps[k, i] *= 1.2
                        improved = True
                        break
                else:
                    steps[k, i] *= 0.5
        if margin <= target + tol_mask and not improved:
            break
        if not improved and margin > target + tol_mask:
            rho *= 10.0
            if rho > 1e9:
                break
            current, margin = penalized(beta, rho)
            steps = np.maximum(steps, 0.02 * (np.abs(beta) + 0.1))
    if margin > target + tol_mask:
        raise InfeasibleMask(
            f"margin {margin:.4g} above target {target:.4g} after {iters} sweeps"
        )
    return beta, float(margin)


@dataclass(frozen=True)
class RationalityIndices:
    hmi: float
    afriat_index: float
    varian_lower_bound: np.ndarray
    mci: float


def _egarp_holds(cross: np.ndarray, e: np.ndarray, tol: float = TOL_GARP) -> bool:
    """e-GARP with per-observation relaxation; cross_ij = alpha_i . beta_j
    on normalized data (so alpha_i . beta_i = 1).
    """
    n = cross.shape[0]
    off = ~np.eye(n, dtype=bool)
    edges = (cross <= e[:, None] + tol) & off
    reach = _closure(edges)
    bad = (cross < e[:, None] - tol) & off   # conclusion failures, row = i_l
    return not (reach & bad.T).any()


def _mci_exact(a: np.ndarray, denom: float, tol: float, budget: int = 200_000) -> float:
    """Min-cost relation removal restoring GARP, by best-first hitting-set
    search over violating cycles.  Exact: children cover every way to break
    the cheapest remaining violating cycle.
    """
    n = a.shape[0]
    off = ~np.eye(n, dtype=bool)
    base_edges = (a <= tol) & off
    strict = (a < -tol) & off
    cost = np.where(base_edges, np.maximum(-a, 0.0), np.inf)

    def find_cycle(removed: frozenset) -> tuple[int, ...]:
        edges = base_edges.copy()
        for (i, j) in removed:
            edges[i, j] = False
        st = strict & edges
        reach = _closure(edges)
        if not (st & reach.T).any():
            return ()
        return _shortest_cycle(edges, st & reach.T)

    heap = [(0.0, 0, frozenset())]
    seen = {frozenset()}
    counter = 1
    pops = 0
    while heap:
        total, _, removed = heapq.heappop(heap)
        pops += 1
        if pops > budget:
            raise TooLargeForExact("MCI search budget exhausted")
        cycle = find_cycle(removed)
        if not cycle:
            return total / denom
        ln = len(cycle)
        for t in range(ln):
            edge = (cycle[t], cycle[(t + 1) % ln])
            child = removed | {edge}
            if child in seen:
                continue
            seen.add(child)
            heapq.heappush(heap, (total + cost[edge], counter, child))
            counter += 1
    raise TooLargeForExact("MCI search space exhausted unexpectedly")


def rationality_indices(ds: BudgetDataset, exact_limit: int = 12) -> RationalityIndices:
    """Exact HMI, Afriat index and MCI at desk scale; heuristic Varian bound."""
    n = ds.n
    if n > exact_limit:
        raise TooLargeForExact(f"N={n} exceeds exact_limit={exact_limit}")
    report = check_garp(ds)
    a = report.a_matrix
    spend = np.einsum("ij,ij->i", ds.alpha, ds.beta)  # all 1 after normalization
    cross = a + spend[:, None]                        # alpha_i . beta_j

    if report.consistent:
        return RationalityIndices(1.0, 1.0, np.ones(n), 0.0)

    # HMI: largest GARP-consistent subset, searched by decreasing size
    hmi = 1.0 / n
    done = False
    for size in range(n - 1, 0, -1):
        for subset in combinations(range(n), size):
            idx = np.asarray(subset)
            sub = BudgetDataset(ds.alpha[idx], ds.beta[idx])
            if check_garp(sub).consistent:
                hmi = size / n
                done = True
                break
        if done:
            break

    # Afriat index: largest common e; e-GARP flips only at cross values
    cand = np.unique(np.clip(cross[~np.eye(n, dtype=bool)], 0.0, 1.0))
    cand = np.concatenate([[0.0], cand, [1.0]])
    lo_i, hi_i = 0, len(cand) - 1
    if _egarp_holds(cross, np.full(n, cand[hi_i])):
        lo_i = hi_i
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if _egarp_holds(cross, np.full(n, cand[mid])):
            lo_i = mid
        else:
            hi_i = mid
    afriat_idx = float(cand[lo_i])

    # Varian heuristic: coordinate ascent from the common-e point
    e = np.full(n, afriat_idx)
    for _ in range(3):
        for k in range(n):
            best = e[k]
            for v in cand[cand >= best]:
                trial = e.copy()
                trial[k] = v
                if _egarp_holds(cross, trial):
                    best = v
            e[k] = best
    varian = e

    mci = _mci_exact(a, float(spend.sum()), TOL_GARP)
    return RationalityIndices(float(hmi), afriat_idx, varian, float(mci))
