import numpy as np
import pytest

from irlforge.errors import (
    BudgetNotActive,
    CertificateInvalid,
    NonPositiveProbe,
    TooLargeForExact,
)
from irlforge.rp import (
    BudgetDataset,
    PiecewiseUtility,
    RationalityCertificate,
    a_matrix,
    afriat_certificate,
    canonical_certificate,
    check_garp,
    evaluate_utility,
    feasibility_margin,
    make_budget_dataset,
    make_nonlinear_dataset,
    mask_responses,
    NonlinearBudget,
    predict_member,
    rationality_indices,
)
from irlforge.sim import CobbDouglas, SpectralScenario, gen_waveform_dataset

from oracles import garp_consistent_bruteforce, grid_max_on_budget


@pytest.fixture
def violating_pair():
    # hand-checked: a01 = a10 = -0.5 after normalization
    alpha = np.array([[1.0, 2.0], [2.0, 1.0]])
    beta = np.array([[0.0, 0.5], [0.5, 0.0]])
    return make_budget_dataset(alpha, beta)


@pytest.fixture
def cobb_douglas_ds():
    scn = SpectralScenario(np.eye(2), np.eye(2))
    ds, util = gen_waveform_dataset(scn, CobbDouglas([0.5, 0.5]), n=20, seed=11, m=2)
    return ds, util


def random_dataset(rng, m, n):
    alpha = rng.uniform(0.5, 2.0, size=(n, m))
    beta = rng.uniform(0.05, 1.0, size=(n, m))
    return make_budget_dataset(alpha, beta)


class TestDataset:
    def test_normalization(self):
        ds = make_budget_dataset(
            np.array([[2.0, 2.0], [1.0, 3.0]]), np.array([[1.0, 1.0], [2.0, 1.0]])
        )
        assert np.allclose(np.einsum("ij,ij->i", ds.alpha, ds.beta), 1.0)

    def test_nonpositive_probe_rejected(self):
        with pytest.raises(NonPositiveProbe):
            make_budget_dataset(np.array([[1.0, 0.0]]), np.array([[1.0, 1.0]]))


class TestCheckGarp:
    def test_single_observation_consistent(self):
        ds = make_budget_dataset(np.array([[1.0, 1.0]]), np.array([[0.5, 0.5]]))
        rep = check_garp(ds)
        assert rep.consistent and rep.violating_cycle == ()

    def test_two_point_violation(self, violating_pair):
        rep = check_garp(violating_pair)
        assert not rep.consistent
        assert sorted(rep.violating_cycle) == [0, 1]
        assert rep.a_matrix[0, 1] == pytest.approx(-0.5)
        assert rep.a_matrix[1, 0] == pytest.approx(-0.5)
        assert not garp_consistent_bruteforce(rep.a_matrix)

    def test_cobb_douglas_consistent(self, cobb_douglas_ds):
        ds, _ = cobb_douglas_ds
        assert check_garp(ds).consistent

    def test_cycle_entries_nonpositive_one_strict(self):
        rng = np.random.default_rng(5)
        found = 0
        for _ in range(200):
            ds = random_dataset(rng, 2, 5)
            rep = check_garp(ds)
            if rep.consistent:
                continue
            found += 1
            cyc = rep.violating_cycle
            edges = [
                rep.a_matrix[cyc[i], cyc[(i + 1) % len(cyc)]]
                for i in range(len(cyc))
            ]
            assert all(e <= 1e-7 for e in edges)
            assert any(e < -1e-7 for e in edges)
        assert found > 10

    def test_scale_invariance(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            alpha = rng.uniform(0.5, 2.0, size=(5, 2))
            beta = rng.uniform(0.05, 1.0, size=(5, 2))
            base = check_garp(make_budget_dataset(alpha, beta)).consistent
            scales = rng.uniform(0.1, 10.0, size=(5, 1))
            scaled = check_garp(make_budget_dataset(alpha * scales, beta)).consistent
            assert base == scaled


class TestAfriatCertificate:
    def test_violating_pair_not_rationalizable(self, violating_pair):
        assert afriat_certificate(violating_pair) is None

    def test_cobb_douglas_certificate(self, cobb_douglas_ds):
        ds, _ = cobb_douglas_ds
        cert = afriat_certificate(ds)
        assert cert is not None
        assert np.all(cert.lam >= 1.0 - 1e-9)

    def test_single_point(self):
        ds = make_budget_dataset(np.array([[1.0, 1.0]]), np.array([[0.5, 0.5]]))
        cert = afriat_certificate(ds)
        assert cert is not None and cert.lam[0] == 1.0

    def test_equivalence_with_garp_and_bruteforce(self):
        rng = np.random.default_rng(2024)
        verdicts = set()
        for _ in range(300):
            m = int(rng.integers(2, 4))
            n = int(rng.integers(2, 7))
            ds = random_dataset(rng, m, n)
            garp = check_garp(ds)
            cert = afriat_certificate(ds)
            brute = garp_consistent_bruteforce(garp.a_matrix)
            assert garp.consistent == (cert is not None) == brute
            verdicts.add(garp.consistent)
        assert verdicts == {True, False}

    def test_nonlinear_reduction_matches_linear(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            ds = random_dataset(rng, 2, 4)
            evals = tuple(
                (lambda b, ak=ds.alpha[k], bk=ds.beta[k]: float(ak @ (b - bk)))
                for k in range(ds.n)
            )
            nl = make_nonlinear_dataset(ds.beta, NonlinearBudget(evals))
            assert check_garp(nl).consistent == check_garp(ds).consistent
            assert (afriat_certificate(nl) is None) == (afriat_certificate(ds) is None)


class TestEvaluateUtility:
    def test_value_at_observations_is_phi(self, cobb_douglas_ds):
        ds, _ = cobb_douglas_ds
        cert = afriat_certificate(ds)
        u = PiecewiseUtility(cert, ds)
        for k in range(ds.n):
            assert evaluate_utility(u, ds.beta[k]) == pytest.approx(cert.phi[k], abs=1e-9)

    def test_monotone(self, cobb_douglas_ds):
        ds, _ = cobb_douglas_ds
        cert = afriat_certificate(ds)
        u = PiecewiseUtility(cert, ds)
        for k in range(0, ds.n, 5):
            assert evaluate_utility(u, ds.beta[k] + 0.3) >= evaluate_utility(u, ds.beta[k])

    def test_grid_max_on_budget_attained_at_observation(self):
        scn = SpectralScenario(np.eye(2), np.eye(2))
        ds, _ = gen_waveform_dataset(scn, CobbDouglas([0.3, 0.7]), n=8, seed=3, m=2)
        cert = afriat_certificate(ds)
        u = PiecewiseUtility(cert, ds)
        for k in range(ds.n):
            gmax = grid_max_on_budget(lambda b: evaluate_utility(u, b), ds.alpha[k], 80)
            assert gmax <= cert.phi[k] + 1e-9
            assert evaluate_utility(u, ds.beta[k]) == pytest.approx(cert.phi[k], abs=1e-9)


class TestPredictMember:
    def test_duplicate_observation(self, cobb_douglas_ds):
        ds, _ = cobb_douglas_ds
        assert predict_member(ds, ds.alpha[-1], ds.beta[-1])

    def test_true_demand_is_member(self, cobb_douglas_ds):
        ds, util = cobb_douglas_ds
        alpha_new = np.array([0.8, 1.6])
        beta_new = util.demand(alpha_new)
        assert predict_member(ds, alpha_new, beta_new)

    def test_constructed_cycle_rejected(self, cobb_douglas_ds):
        ds, _ = cobb_douglas_ds
        beta0 = ds.beta[0]
        found = False
        rng = np.random.default_rng(1)
        for _ in range(400):
            beta_c = rng.uniform(0.05, 1.0, size=2)
            if ds.alpha[0] @ beta_c >= 1.0:  # need a_{0,new} < 0
                continue
            w = rng.uniform(0.1, 3.0, size=2)
            alpha_c = w / (w @ beta_c)
            if alpha_c @ beta0 < 1.0:        # need a_{new,0} < 0
                found = True
                break
        assert found
        assert not predict_member(ds, alpha_c, beta_c)

    def test_budget_not_active_raises(self, cobb_douglas_ds):
        ds, _ = cobb_douglas_ds
        with pytest.raises(BudgetNotActive):
            predict_member(ds, np.array([1.0, 1.0]), np.array([0.2, 0.2]))


class TestFeasibilityMargin:
    def test_boundary_certificate_zero_margin(self):
        # two points where one inequality binds exactly under this certificate
        ds = make_budget_dataset(
            np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([[0.5, 0.5], [0.2, 0.8]])
        )
        cert = RationalityCertificate(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
        # a01 = 0, so the (0,1) row binds: slack 0
        assert feasibility_margin(ds, cert) == pytest.approx(0.0, abs=1e-12)

    def test_cobb_douglas_positive_margin(self, cobb_douglas_ds):
        ds, util = cobb_douglas_ds
        cert = canonical_certificate(ds, util, util.grad)
        assert feasibility_margin(ds, cert) > 0.0

    def test_margin_equals_direct_slack_computation(self, cobb_douglas_ds):
        ds, util = cobb_douglas_ds
        cert = canonical_certificate(ds, util, util.grad)
        a = a_matrix(ds)
        slacks = []
        for k in range(ds.n):
            for s in range(ds.n):
                if s != k:
                    slacks.append(-(cert.phi[s] - cert.phi[k] - cert.lam[k] * a[k, s]))
        assert feasibility_margin(ds, cert) == pytest.approx(min(slacks))
        assert feasibility_margin(ds, cert, mode="all") == pytest.approx(max(slacks))

    def test_invalid_certificate_rejected(self, violating_pair):
        cert = RationalityCertificate(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        with pytest.raises(CertificateInvalid):
            feasibility_margin(violating_pair, cert)


class TestMaskResponses:
    @pytest.fixture
    def small_cd(self):
        scn = SpectralScenario(np.eye(2), np.eye(2))
        return gen_waveform_dataset(scn, CobbDouglas([0.4, 0.6]), n=5, seed=7, m=2)

    def test_eta_zero_no_perturbation(self, small_cd):
        ds, util = small_cd
        masked, margin = mask_responses(ds, util, 0.0, grad=util.grad)
        assert np.array_equal(masked, ds.beta)
        cert = canonical_certificate(ds, util, util.grad)
        assert margin == pytest.approx(feasibility_margin(ds, cert))

    def test_eta_one_zero_margin_with_sacrifice(self, small_cd):
        ds, util = small_cd
        masked, margin = mask_responses(ds, util, 1.0, grad=util.grad)
        assert margin <= 1e-3
        sacrifice = sum(util(b) for b in ds.beta) - sum(util(b) for b in masked)
        assert sacrifice > 0.0
        assert np.all(np.einsum("ij,ij->i", ds.alpha, masked) <= 1.0 + 1e-9)

    def test_eta_grid_monotone(self, small_cd):
        ds, util = small_cd
        cert = canonical_certificate(ds, util, util.grad)
        m0 = feasibility_margin(ds, cert)
        margins, sacrifices = [], []
        for eta in (0.0, 0.5, 1.0):
            masked, margin = mask_responses(ds, util, eta, grad=util.grad)
            margins.append(margin)
            sacrifices.append(sum(util(b) for b in ds.beta) - sum(util(b) for b in masked))
        assert margins[1] <= 0.5 * m0 + 1e-3
        assert sacrifices[0] <= sacrifices[1] + 1e-9
        assert sacrifices[1] <= sacrifices[2] + 1e-9


class TestRationalityIndices:
    def test_consistent_dataset(self, cobb_douglas_ds):
        ds, _ = cobb_douglas_ds
        small = BudgetDataset(ds.alpha[:8], ds.beta[:8])
        idx = rationality_indices(small)
        assert idx.hmi == 1.0 and idx.afriat_index == 1.0 and idx.mci == 0.0

    def test_two_point_violation_hmi(self, violating_pair):
        idx = rationality_indices(violating_pair)
        assert idx.hmi == pytest.approx(0.5)
        assert idx.afriat_index < 1.0
        assert idx.mci > 0.0

    def test_mci_matches_exhaustive_oracle(self, violating_pair):
        # relations R = {(0,1), (1,0)}, each with cost 0.5; removing either
        # breaks the only cycle, so MCI = 0.5 / (sum spend = 2) = 0.25
        idx = rationality_indices(violating_pair)
        assert idx.mci == pytest.approx(0.25)

    def test_mci_exhaustive_on_random_violators(self):
        from itertools import chain, combinations

        rng = np.random.default_rng(17)
        checked = 0
        for _ in range(60):
            ds = random_dataset(rng, 2, 4)
            rep = check_garp(ds)
            if rep.consistent:
                continue
            idx = rationality_indices(ds)
            a = rep.a_matrix
            n = ds.n
            rel = [
                (i, j)
                for i in range(n)
                for j in range(n)
                if i != j and a[i, j] <= 1e-7
            ]
            best = np.inf
            for size in range(len(rel) + 1):
                for b in combinations(rel, size):
                    keep = set(rel) - set(b)
                    edges = np.zeros((n, n), dtype=bool)
                    for (i, j) in keep:
                        edges[i, j] = True
                    # cycle with strict edge inside `keep`?
                    reach = edges.copy()
                    np.fill_diagonal(reach, True)
                    for kk in range(n):
                        reach |= reach[:, kk][:, None] & reach[kk, :][None, :]
                    strict = (a < -1e-7) & edges
                    if not (strict & reach.T).any():
                        cost = sum(max(-a[i, j], 0.0) for (i, j) in b)
                        best = min(best, cost)
                if best < np.inf:
                    break
            assert idx.mci == pytest.approx(best / ds.n, abs=1e-9)
            checked += 1
            if checked >= 8:
                break
        assert checked >= 8

    def test_varian_dominates_afriat(self, violating_pair):
        idx = rationality_indices(violating_pair)
        assert np.all(idx.varian_lower_bound >= idx.afriat_index - 1e-12)

    def test_too_large_raises(self):
        rng = np.random.default_rng(0)
        ds = random_dataset(rng, 2, 13)
        with pytest.raises(TooLargeForExact):
            rationality_indices(ds)
