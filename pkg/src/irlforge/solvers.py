"""Dense LP feasibility (two-phase simplex), small MILP feasibility by
branch-and-bound, scalar line search over LP feasibility, and a Riccati
fixed-point solver.

Everything here is deterministic for identical inputs: the simplex uses
Bland's rule, branching order is fixed, and no randomness enters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NoConvergence,
    NodeBudgetExceeded,
    NonMonotoneDetected,
    NonPDInnovation,
    NotFeasibleAtHi,
)

TOL_LP = 1e-9          # absolute tolerance on row violation
_TOL_PIVOT = 1e-10     # reduced-cost / pivot threshold inside the simplex
_MAX_PIVOTS = 50_000


@dataclass(frozen=True)
class LinearSystem:
    """Dense system of linear rows `a_i . x (sense_i) b_i` with box bounds.

    senses are '<=', '=' or '>='.  Bounds may be +-inf.
    """

    a: np.ndarray
    b: np.ndarray
    senses: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n_vars(self) -> int:
        return self.lower.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    @staticmethod
    def build(
        n_vars: int,
        rows: Sequence[tuple[np.ndarray, float, str]] = (),
        lower: np.ndarray | float = -np.inf,
        upper: np.ndarray | float = np.inf,
    ) -> "LinearSystem":
        if rows:
            a = np.asarray([np.asarray(r[0], dtype=float) for r in rows])
            b = np.asarray([float(r[1]) for r in rows])
            senses = tuple(r[2] for r in rows)
        else:
            a = np.zeros((0, n_vars))
            b = np.zeros(0)
            senses = ()
        return LinearSystem.from_arrays(a, b, senses, lower, upper, n_vars)

    @staticmethod
    def from_arrays(
        a: np.ndarray,
        b: np.ndarray,
        senses: Sequence[str],
        lower: np.ndarray | float = -np.inf,
        upper: np.ndarray | float = np.inf,
        n_vars: int | None = None,
    ) -> "LinearSystem":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if n_vars is None:
            n_vars = a.shape[1]
        if a.size == 0:
            a = a.reshape(0, n_vars)
        lo = np.broadcast_to(np.asarray(lower, dtype=float), (n_vars,)).copy()
        hi = np.broadcast_to(np.asarray(upper, dtype=float), (n_vars,)).copy()
        if a.shape[1] != n_vars or a.shape[0] != b.shape[0] or len(senses) != b.shape[0]:
            raise DimensionMismatch(
                f"rows {a.shape} vs rhs {b.shape} vs senses {len(senses)} (n_vars={n_vars})"
            )
        if any(s not in ("<=", "=", ">=") for s in senses):
            raise ValueError("sense must be one of '<=', '=', '>='")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        return LinearSystem(a, b, tuple(senses), lo, hi)


@dataclass(frozen=True)
class FeasibilityResult:
    status: str                      # 'feasible' | 'infeasible'
    witness: np.ndarray | None
    max_violation: float

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


@dataclass(frozen=True)
class MixedSystem:
    base: LinearSystem
    binary_vars: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(j < 0 or j >= self.base.n_vars for j in self.binary_vars):
            raise DimensionMismatch("binary index out of range")


@dataclass(frozen=True)
class RiccatiSpec:
    a: np.ndarray
    c: np.ndarray
    q: np.ndarray
    r: np.ndarray

    def __post_init__(self) -> None:
        n = self.a.shape[0]
        if self.a.shape != (n, n) or self.q.shape != (n, n):
            raise DimensionMismatch("state matrices must be square and consistent")
        if self.c.shape[1] != n or self.r.shape != (self.c.shape[0],) * 2:
            raise DimensionMismatch("observation matrices inconsistent")


def violation(system: LinearSystem, x: np.ndarray) -> float:
    """Largest absolute violation of rows and bounds at `x`."""
    worst = 0.0
    if system.n_rows:
        ax = system.a @ x
        for i, s in enumerate(system.senses):
            r = ax[i] - system.b[i]
            if s == "<=":
                worst = max(worst, r)
            elif s == ">=":
                worst = max(worst, -r)
            else:
                worst = max(worst, abs(r))
    finite_lo = np.isfinite(system.lower)
    finite_hi = np.isfinite(system.upper)
    if finite_lo.any():
        worst = max(worst, float(np.max(system.lower[finite_lo] - x[finite_lo], initial=0.0)))
    if finite_hi.any():
        worst = max(worst, float(np.max(x[finite_hi] - system.upper[finite_hi], initial=0.0)))
    return float(worst)


def _standardize(system: LinearSystem):
    """Rewrite as A z (<=|=) b with z >= 0, keeping the map back to x.

    Bounded-below vars are shifted, bounded-above-only vars flipped, free
    vars split into a positive pair.  Finite upper bounds on shifted vars
    become extra '<=' rows.
    """
    n = system.n_vars
    cols: list[np.ndarray] = []   # column of each standard var in original x
    shift = np.zeros(n)
    plan: list[tuple[str, int, int]] = []  # (kind, std index, extra std index)
    extra_rows: list[tuple[np.ndarray, float]] = []

    std_idx = 0
    for j in range(n):
        lo, hi = system.lower[j], system.upper[j]
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo):
            shift[j] = lo
            cols.append(e)
            plan.append(("shift", std_idx, -1))
            if np.isfinite(hi):
                row = np.zeros(n)
                row[j] = 1.0
                extra_rows.append((row, hi))  # x-space; shifted like any row below
            std_idx += 1
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append(-e)
            plan.append(("flip", std_idx, -1))
            std_idx += 1
        else:
            cols.append(e)
            cols.append(-e)
            plan.append(("split", std_idx, std_idx + 1))
            std_idx += 2

    cmat = np.asarray(cols).T  # (n, n_std): x = shift + cmat @ z
    a_rows = []
    b_rows = []
    eq_rows = []
    for i in range(system.n_rows):
        coeffs = system.a[i]
        rhs = system.b[i] - coeffs @ shift
        row = coeffs @ cmat
        s = system.senses[i]
        if s == "<=":
            a_rows.append(row)
            b_rows.append(rhs)
        elif s == ">=":
            a_rows.append(-row)
            b_rows.append(-rhs)
        else:
            eq_rows.append((row, rhs))
    for coeffs, rhs in extra_rows:
        row = coeffs @ cmat
        a_rows.append(row)
        b_rows.append(rhs - coeffs @ shift)

    return cmat, shift, plan, a_rows, b_rows, eq_rows


def _phase_one(a_le, b_le, eq_rows, n_std):
    """Minimize the sum of artificials; returns (objective, z) or raises."""
    n_le = len(a_le)
    n_eq = len(eq_rows)
    n_rows = n_le + n_eq
    if n_rows == 0:
        return 0.0, np.zeros(n_std)

    A = np.zeros((n_rows, n_std))
    b = np.zeros(n_rows)
    for i in range(n_le):
        A[i] = a_le[i]
        b[i] = b_le[i]
    for i, (row, rhs) in enumerate(eq_rows):
        A[n_le + i] = row
        b[n_le + i] = rhs

    # flip rows so every rhs is nonnegative
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    # slack sign: '<=' rows get +1 slack unless flipped (then -1 surplus)
    slack_sign = np.zeros(n_rows)
    slack_sign[:n_le] = 1.0
    slack_sign[:n_le][neg[:n_le]] = -1.0

    # columns: [z | slack/surplus (<= rows only) | artificials | rhs]
    n_slack = n_le
    n_art = n_rows
    width = n_std + n_slack + n_art + 1
    T = np.zeros((n_rows + 1, width))
    T[:n_rows, :n_std] = A
    for i in range(n_le):
        T[i, n_std + i] = slack_sign[i]
    for i in range(n_rows):
        T[i, n_std + n_slack + i] = 1.0
    T[:n_rows, -1] = b

    basis = np.arange(n_std + n_slack, n_std + n_slack + n_art)
    # rows with a positive slack could start with the slack basic instead,
    # but starting from the all-artificial basis keeps the code uniform.
    T[-1, :] = -T[:n_rows, :].sum(axis=0)
    T[-1, n_std + n_slack:n_std + n_slack + n_art] = 0.0

    n_cols = width - 1
    art_start = n_std + n_slack
    scale = max(1.0, float(np.abs(T).max()))
    enter_tol = _TOL_PIVOT * scale

    def rebuild_objective_row():
        # exact phase-1 reduced costs for the current basis: c_j - sum of
        # tableau rows whose basic variable is an artificial
        T[-1, :] = 0.0
        T[-1, art_start:art_start + n_art] = 1.0
        for i in range(n_rows):
            if basis[i] >= art_start:
                T[-1, :] -= T[i, :]

    refreshed = False
    pivots = 0
    for _ in range(_MAX_PIVOTS):
        red = T[-1, :n_cols]
        enter = leave = -1
        for j in range(n_cols):          # Bland: lowest eligible index
            if red[j] >= -enter_tol:
                continue
            col = T[:n_rows, j]
            best_ratio = np.inf
            cand = -1
            for i in range(n_rows):
                if col[i] > 1e-9:
                    ratio = T[i, -1] / col[i]
                    if ratio < best_ratio - 1e-15 or (
                        abs(ratio - best_ratio) <= 1e-15
                        and (cand < 0 or basis[i] < basis[cand])
                    ):
                        best_ratio = ratio
                        cand = i
            if cand >= 0:
                enter, leave = j, cand
                break
        if enter < 0:
            # either optimal, or roundoff corrupted the objective row;
            # a rebuilt row settles it (phase-1 cannot be unbounded)
            if refreshed:
                break
            rebuild_objective_row()
            refreshed = True
            continue
        refreshed = False
        piv = T[leave, enter]
        T[leave] /= piv
        colv = T[:, enter].copy()
        colv[leave] = 0.0
        T -= np.outer(colv, T[leave])
        basis[leave] = enter
        pivots += 1
        if pivots % 64 == 0:
            rebuild_objective_row()
    else:
        raise NoConvergence("simplex pivot budget exhausted")
    rebuild_objective_row()

    obj = -T[-1, -1]
    z = np.zeros(n_std)
    for i, bj in enumerate(basis):
        if bj < n_std:
            z[bj] = T[i, -1]
    return float(obj), z


def lp_feasible(system: LinearSystem, tol: float = TOL_LP) -> FeasibilityResult:
    """Decide feasibility of `system` and return a witness when feasible."""
    cmat, shift, _plan, a_le, b_le, eq_rows = _standardize(system)
    obj, z = _phase_one(a_le, b_le, eq_rows, cmat.shape[1])
    x = shift + cmat @ z
    worst = violation(system, x)
    if obj <= max(tol, 1e-7 * max(1.0, float(np.abs(system.b).max(initial=0.0)))) and worst <= tol:
        return FeasibilityResult("feasible", x, worst)
    return FeasibilityResult("infeasible", None, worst)


def milp_feasible(
    msys: MixedSystem,
    max_nodes: int = 100_000,
    tol: float = TOL_LP,
    max_binaries: int = 30,
) -> FeasibilityResult:
    """Exact MILP feasibility by depth-first branch-and-bound.

    Branches on the most fractional binary; the LP relaxation prunes
    infeasible subtrees.  `max_binaries` guards against accidental use far
    beyond desk scale (the Pareto test raises it deliberately).
    """
    base = msys.base
    binaries = msys.binary_vars
    if len(binaries) > max_binaries:
        raise ValueError(
            f"{len(binaries)} binaries exceeds the max_binaries={max_binaries} guard"
        )
    if not binaries:
        return lp_feasible(base, tol)

    lower = base.lower.copy()
    upper = base.upper.copy()
    for j in binaries:
        lower[j] = max(lower[j], 0.0)
        upper[j] = min(upper[j], 1.0)

    nodes = 0
    # stack of bound patches {var: (lo, hi)}
    stack: list[dict[int, tuple[float, float]]] = [{}]
    while stack:
        patch = stack.pop()
        nodes += 1
        if nodes > max_nodes:
            raise NodeBudgetExceeded(f"exceeded {max_nodes} nodes")
        lo = lower.copy()
        hi = upper.copy()
        for j, (l, h) in patch.items():
            lo[j], hi[j] = l, h
        relax = LinearSystem(base.a, base.b, base.senses, lo, hi)
        res = lp_feasible(relax, tol)
        if not res.feasible:
            continue
        x = res.witness
        fracs = [(abs(x[j] - round(x[j])), j) for j in binaries]
        worst_frac, branch_j = max(fracs)
        if worst_frac <= 1e-6:
            xi = x.copy()
            for j in binaries:
                xi[j] = round(xi[j])
            worst = violation(base, xi)
            if worst <= 10 * tol:
                return FeasibilityResult("feasible", xi, worst)
            # rounding broke a row: branch anyway on the first binary
            branch_j = binaries[0]
        far_first = x[branch_j] >= 0.5  # explore the nearer value first (LIFO)
        if far_first:
            stack.append({**patch, branch_j: (0.0, 0.0)})
            stack.append({**patch, branch_j: (1.0, 1.0)})
        else:
            stack.append({**patch, branch_j: (1.0, 1.0)})
            stack.append({**patch, branch_j: (0.0, 0.0)})
    return FeasibilityResult("infeasible", None, np.inf)


def scalar_bisect_lp(
    make_sys: Callable[[float], LinearSystem],
    lo: float,
    hi: float,
    tol_t: float,
    tol: float = TOL_LP,
) -> tuple[float, FeasibilityResult]:
    """Smallest t in [lo, hi] with `make_sys(t)` feasible, assuming
    feasibility is monotone nondecreasing in t.
    """
    log: list[tuple[float, bool]] = []

    def check(t: float) -> FeasibilityResult:
        res = lp_feasible(make_sys(t), tol)
        log.append((t, res.feasible))
        for tf, okf in log:
            for ti, oki in log:
                if okf and not oki and tf < ti - 1e-15:
                    raise NonMonotoneDetected(
                        f"feasible at {tf} but infeasible at {ti}"
                    )
        return res

    res_hi = check(hi)
    if not res_hi.feasible:
        raise NotFeasibleAtHi(f"system infeasible at upper bracket {hi}")
    res_lo = check(lo)
    if res_lo.feasible:
        return lo, res_lo

    a, b = lo, hi
    best = res_hi
    while b - a > tol_t:
        mid = 0.5 * (a + b)
        res = check(mid)
        if res.feasible:
            b, best = mid, res
        else:
            a = mid
    return b, best


def are_residual(spec: RiccatiSpec, sigma: np.ndarray) -> float:
    """Max-abs residual of the predicted-covariance Riccati equation."""
    s = spec.c @ sigma @ spec.c.T + spec.r
    upd = sigma - sigma @ spec.c.T @ np.linalg.solve(s, spec.c @ sigma)
    nxt = spec.a @ upd @ spec.a.T + spec.q
    return float(np.abs(nxt - sigma).max())


def solve_are(spec: RiccatiSpec, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Fixed point of the Kalman prediction/update map (predicted covariance).

    Plain iteration: adequate at desk scale and free of eigen-decompositions.
    """
    sigma = spec.q.copy().astype(float)
    for _ in range(max_iter):
        s = spec.c @ sigma @ spec.c.T + spec.r
        try:
            np.linalg.cholesky(s + s.T - s)  # symmetrize view before testing
            gain = np.linalg.solve(s, spec.c @ sigma)
        except np.linalg.LinAlgError as exc:
            raise NonPDInnovation("innovation covariance not PD") from exc
        upd = sigma - sigma @ spec.c.T @ gain
        nxt = spec.a @ upd @ spec.a.T + spec.q
        nxt = 0.5 * (nxt + nxt.T)
        if np.abs(nxt - sigma).max() < tol:
            return nxt
        sigma = nxt
    raise NoConvergence(f"Riccati iteration did not reach tol={tol}")
