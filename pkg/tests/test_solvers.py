import numpy as np
import pytest

from irlforge.errors import (
    NodeBudgetExceeded,
    NonPDInnovation,
    NotFeasibleAtHi,
)
from irlforge.solvers import (
    FeasibilityResult,
    LinearSystem,
    MixedSystem,
    RiccatiSpec,
    are_residual,
    lp_feasible,
    milp_feasible,
    scalar_bisect_lp,
    solve_are,
    violation,
)

from oracles import (
    garp_consistent_bruteforce,
    kalman_predicted_covariance,
    lp_feasible_vertices,
    milp_feasible_enumeration,
)


def afriat_system(alpha, beta):
    """Afriat inequalities with the lambda >= 1 homogeneity encoding."""
    n = alpha.shape[0]
    a = alpha @ beta.T - np.einsum("ij,ij->i", alpha, beta)[:, None]
    rows = []
    for k in range(n):
        for s in range(n):
            if s == k:
                continue
            coeffs = np.zeros(2 * n)
            coeffs[s] = 1.0
            coeffs[k] = -1.0
            coeffs[n + k] = -a[k, s]
            rows.append((coeffs, 0.0, "<="))
    lower = np.concatenate([np.full(n, -np.inf), np.ones(n)])
    return LinearSystem.build(2 * n, rows, lower=lower), a


class TestLpFeasible:
    def test_contradictory_bounds_infeasible(self):
        sys_ = LinearSystem.build(
            1, [(np.array([1.0]), 0.0, "<="), (np.array([1.0]), 1.0, ">=")]
        )
        assert not lp_feasible(sys_).feasible

    def test_vacuous_system_feasible_at_origin(self):
        sys_ = LinearSystem.build(2, [])
        res = lp_feasible(sys_)
        assert res.feasible
        assert np.allclose(res.witness, [0.0, 0.0])

    def test_afriat_system_of_consistent_pair(self):
        alpha = np.array([[1.0, 2.0], [2.0, 1.0]])
        beta = np.array([[2.0, 0.0], [0.0, 2.0]])
        # normalize so alpha_k . beta_k = 1
        alpha = alpha / (np.einsum("ij,ij->i", alpha, beta))[:, None]
        sys_, a = afriat_system(alpha, beta)
        assert garp_consistent_bruteforce(a)
        res = lp_feasible(sys_)
        assert res.feasible
        assert res.max_violation <= 1e-9

    def test_equality_rows(self):
        sys_ = LinearSystem.build(
            2,
            [
                (np.array([1.0, 1.0]), 1.0, "="),
                (np.array([1.0, -1.0]), 0.0, "="),
            ],
        )
        res = lp_feasible(sys_)
        assert res.feasible
        assert np.allclose(res.witness, [0.5, 0.5], atol=1e-8)

    def test_witness_respects_bounds(self):
        sys_ = LinearSystem.build(
            2,
            [(np.array([1.0, 1.0]), -3.0, "<=")],
            lower=np.array([-2.0, -2.0]),
            upper=np.array([2.0, 2.0]),
        )
        res = lp_feasible(sys_)
        assert res.feasible
        assert violation(sys_, res.witness) <= 1e-9

    def test_agrees_with_vertex_enumeration(self):
        rng = np.random.default_rng(0)
        n_feas = 0
        for _ in range(1000):
            n = int(rng.integers(1, 4))
            n_rows = int(rng.integers(0, 7))
            a = rng.normal(size=(n_rows, n)).round(2)
            b = rng.normal(size=n_rows).round(2)
            senses = tuple(rng.choice(["<=", ">=", "="], size=n_rows))
            lower = np.full(n, -4.0)
            upper = np.full(n, 4.0)
            sys_ = LinearSystem.from_arrays(a, b, senses, lower, upper, n)
            got = lp_feasible(sys_).feasible
            want = lp_feasible_vertices(a, b, senses, lower, upper)
            assert got == want
            n_feas += got
        assert 0 < n_feas < 1000  # both verdicts exercised

    def test_deterministic(self):
        sys_ = LinearSystem.build(
            3,
            [
                (np.array([1.0, 1.0, 1.0]), 1.0, "<="),
                (np.array([1.0, -1.0, 0.0]), -0.5, ">="),
            ],
            lower=0.0,
        )
        w1 = lp_feasible(sys_).witness
        w2 = lp_feasible(sys_).witness
        assert np.array_equal(w1, w2)


class TestMilpFeasible:
    def test_no_binaries_delegates_to_lp(self):
        sys_ = LinearSystem.build(2, [(np.array([1.0, 0.0]), 1.0, ">=")])
        m = MixedSystem(sys_, ())
        assert milp_feasible(m).feasible == lp_feasible(sys_).feasible

    def test_contradictory_binary(self):
        sys_ = LinearSystem.build(
            1,
            [(np.array([1.0]), 0.5, ">="), (np.array([1.0]), 0.4, "<=")],
        )
        m = MixedSystem(sys_, (0,))
        assert not milp_feasible(m).feasible

    def test_binary_forced_choice(self):
        # x0 + x1 = 1, x0 = x1 has no binary solution; x0 + x1 = 1 alone does
        sys_ = LinearSystem.build(
            2,
            [
                (np.array([1.0, 1.0]), 1.0, "="),
                (np.array([1.0, -1.0]), 0.0, "="),
            ],
        )
        assert not milp_feasible(MixedSystem(sys_, (0, 1))).feasible
        sys2 = LinearSystem.build(2, [(np.array([1.0, 1.0]), 1.0, "=")])
        res = milp_feasible(MixedSystem(sys2, (0, 1)))
        assert res.feasible
        assert set(np.round(res.witness, 6)) == {0.0, 1.0}

    def test_agrees_with_enumeration(self):
        rng = np.random.default_rng(7)
        hits = 0
        for _ in range(150):
            n_bin = int(rng.integers(1, 7))
            n_cont = int(rng.integers(0, 3))
            n = n_bin + n_cont
            n_rows = int(rng.integers(1, 6))
            a = rng.normal(size=(n_rows, n)).round(1)
            b = rng.normal(size=n_rows).round(1)
            senses = tuple(rng.choice(["<=", ">="], size=n_rows))
            lower = np.full(n, -2.0)
            upper = np.full(n, 2.0)
            sys_ = LinearSystem.from_arrays(a, b, senses, lower, upper, n)
            m = MixedSystem(sys_, tuple(range(n_bin)))
            got = milp_feasible(m).feasible
            want = milp_feasible_enumeration(m, lp_feasible)
            assert got == want
            hits += got
        assert 0 < hits < 150

    def test_node_budget(self):
        sys_ = LinearSystem.build(
            8, [(np.ones(8), 3.5, "=")], lower=0.0, upper=1.0
        )
        with pytest.raises(NodeBudgetExceeded):
            milp_feasible(MixedSystem(sys_, tuple(range(8))), max_nodes=2)

    def test_binary_cap_guard(self):
        sys_ = LinearSystem.build(31, [], lower=0.0, upper=1.0)
        with pytest.raises(ValueError):
            milp_feasible(MixedSystem(sys_, tuple(range(31))))


class TestSolveAre:
    def test_nilpotent_dynamics(self):
        n = 3
        spec = RiccatiSpec(
            np.zeros((n, n)), np.eye(n), np.eye(n), 0.5 * np.eye(n)
        )
        sigma = solve_are(spec)
        assert np.allclose(sigma, np.eye(n), atol=1e-9)

    def test_scalar_closed_form(self):
        a, c, q, r = 0.9, 1.0, 1.0, 1.0
        spec = RiccatiSpec(
            np.array([[a]]), np.array([[c]]), np.array([[q]]), np.array([[r]])
        )
        sigma = solve_are(spec, tol=1e-13)
        # positive root of s^2 + s (1 - q - a^2) - q = 0
        coef = 1.0 - q - a * a
        root = (-coef + np.sqrt(coef * coef + 4 * q)) / 2.0
        assert abs(sigma[0, 0] - root) < 1e-10

    def test_kinematic_6x6_matches_long_run_kalman(self):
        t = 1.0
        blk = np.array([[1.0, t], [0.0, 1.0]])
        a = np.kron(np.eye(3), blk)
        c = np.zeros((3, 6))
        c[0, 0] = c[1, 2] = c[2, 4] = 1.0
        q = np.diag([0.2, 0.5, 0.3, 0.6, 0.4, 0.7])
        r = np.diag([1.0, 2.0, 1.5])
        spec = RiccatiSpec(a, c, q, r)
        sigma = solve_are(spec, tol=1e-12)
        ref = kalman_predicted_covariance(a, c, q, r, steps=1000)
        assert np.abs(sigma - ref).max() < 1e-9

    def test_output_symmetric_psd_with_small_residual(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = 3
            a = 0.5 * rng.normal(size=(n, n))
            c = rng.normal(size=(2, n))
            qh = rng.normal(size=(n, n))
            q = qh @ qh.T + 0.1 * np.eye(n)
            r = np.diag(rng.uniform(0.5, 2.0, size=2))
            spec = RiccatiSpec(a, c, q, r)
            sigma = solve_are(spec, tol=1e-12)
            assert np.allclose(sigma, sigma.T)
            assert np.linalg.eigvalsh(sigma).min() > -1e-10
            assert are_residual(spec, sigma) < 1e-10

    def test_non_pd_innovation(self):
        spec = RiccatiSpec(
            np.array([[1.0]]), np.array([[0.0]]), np.array([[0.0]]), np.array([[0.0]])
        )
        with pytest.raises(NonPDInnovation):
            solve_are(spec)


class TestScalarBisectLp:
    @staticmethod
    def threshold_system(t):
        return LinearSystem.build(
            1, [(np.array([1.0]), t, "<="), (np.array([1.0]), 1.0, ">=")]
        )

    def test_already_feasible_returns_lo(self):
        def make(t):
            return LinearSystem.build(1, [(np.array([1.0]), t, "<=")])

        t_star, res = scalar_bisect_lp(make, 0.0, 2.0, 1e-9)
        assert t_star == 0.0
        assert res.feasible

    def test_threshold_located(self):
        t_star, _ = scalar_bisect_lp(self.threshold_system, 0.0, 2.0, 1e-9)
        assert abs(t_star - 1.0) <= 1e-8

    def test_not_feasible_at_hi(self):
        def make(t):
            return LinearSystem.build(
                1, [(np.array([1.0]), t, "<="), (np.array([1.0]), 5.0, ">=")]
            )

        with pytest.raises(NotFeasibleAtHi):
            scalar_bisect_lp(make, 0.0, 2.0, 1e-9)

    def test_idempotent(self):
        a = scalar_bisect_lp(self.threshold_system, 0.0, 2.0, 1e-10)[0]
        b = scalar_bisect_lp(self.threshold_system, 0.0, 2.0, 1e-10)[0]
        assert a == b
