import numpy as np
import pytest

from irlforge.rp import afriat_certificate, check_garp, make_nonlinear_dataset
from irlforge.sim import (
    CES,
    BeamScenario,
    CobbDouglas,
    SpectralScenario,
    gen_beam_dataset,
    gen_nonlinear_radar_dataset,
    gen_waveform_dataset,
    kinematic_state_matrix,
    maximize_on_budget,
    tracker_lmax,
)
from irlforge.solvers import RiccatiSpec, solve_are


class TestMaximizeOnBudget:
    def test_cobb_douglas_matches_closed_form(self):
        rng = np.random.default_rng(0)
        util = CobbDouglas([0.2, 0.5, 0.3])
        for _ in range(25):
            alpha = rng.uniform(0.5, 2.0, size=3)
            got = maximize_on_budget(util, alpha)
            assert np.abs(got - util.demand(alpha)).max() < 1e-8

    def test_ces_matches_closed_form(self):
        rng = np.random.default_rng(1)
        util = CES([0.6, 0.4], rho=0.5)
        for _ in range(25):
            alpha = rng.uniform(0.5, 2.0, size=2)
            got = maximize_on_budget(util, alpha)
            assert np.abs(got - util.demand(alpha)).max() < 1e-8


class TestWaveformDataset:
    def test_generator_matches_closed_form_demand(self):
        scn = SpectralScenario(np.eye(2), np.eye(2))
        util = CobbDouglas([0.5, 0.5])
        ds, _ = gen_waveform_dataset(scn, util, n=10, seed=4, m=2)
        # after normalization alpha is rescaled; demand in normalized prices
        for k in range(ds.n):
            assert np.abs(ds.beta[k] - util.demand(ds.alpha[k])).max() < 1e-8

    def test_dataset_consistent_and_rationalizable(self):
        scn = SpectralScenario(np.eye(3), np.eye(3))
        ds, _ = gen_waveform_dataset(scn, CobbDouglas([0.2, 0.3, 0.5]), n=20, seed=5, m=3)
        assert check_garp(ds).consistent
        assert afriat_certificate(ds) is not None

    def test_budget_active(self):
        scn = SpectralScenario(np.eye(2), np.eye(2))
        ds, _ = gen_waveform_dataset(scn, CES([0.5, 0.5], rho=-1.0), n=12, seed=6, m=2)
        assert np.abs(np.einsum("ij,ij->i", ds.alpha, ds.beta) - 1.0).max() < 1e-8


class TestBeamDataset:
    @staticmethod
    def scenario(p_star=1.0):
        a = kinematic_state_matrix(1.0)[:2, :2]
        c = np.array([[1.0, 0.0]])
        q = (np.diag([0.3, 0.5]), np.diag([0.6, 0.2]), np.diag([0.4, 0.4]))
        r = (np.array([[1.0]]), np.array([[1.5]]), np.array([[0.8]]))
        return BeamScenario(a, c, q, r, p_star=p_star)

    def test_static_targets_constant_probes(self):
        scn = self.scenario()
        scn = BeamScenario(
            scn.a, scn.c, scn.q_targets, scn.r_targets, 1.0, maneuver_low=1.0, maneuver_high=1.0
        )
        ds = gen_beam_dataset(scn, CobbDouglas([0.3, 0.3, 0.4]), n=5, seed=0)
        assert np.abs(ds.beta - ds.beta[0]).max() < 1e-7

    def test_maneuvering_targets_pass_afriat(self):
        ds = gen_beam_dataset(self.scenario(), CobbDouglas([0.3, 0.3, 0.4]), n=10, seed=2)
        assert afriat_certificate(ds) is not None

    def test_budget_scale_leaves_verdict_unchanged(self):
        ds1 = gen_beam_dataset(self.scenario(1.0), CobbDouglas([0.3, 0.3, 0.4]), n=8, seed=3)
        ds2 = gen_beam_dataset(self.scenario(2.0), CobbDouglas([0.3, 0.3, 0.4]), n=8, seed=3)
        assert check_garp(ds1).consistent == check_garp(ds2).consistent


class TestAreMonotoneCoupling:
    def test_inverse_covariance_increasing_in_beta(self):
        # waveform convention: Q = diag(alpha), R^-1 = diag(beta)
        rng = np.random.default_rng(8)
        a = 0.9 * np.eye(2)
        c = np.eye(2)
        alpha = np.array([0.8, 1.2])
        beta = np.array([1.0, 1.0])
        base = solve_are(RiccatiSpec(a, c, np.diag(alpha), np.diag(1.0 / beta)), tol=1e-12)
        base_prec = np.linalg.inv(base)
        for _ in range(20):
            i = rng.integers(0, 2)
            bump = beta.copy()
            bump[i] += rng.uniform(0.05, 0.5)
            pert = solve_are(
                RiccatiSpec(a, c, np.diag(alpha), np.diag(1.0 / bump)), tol=1e-12
            )
            pert_prec = np.linalg.inv(pert)
            assert np.all(np.diag(pert_prec) >= np.diag(base_prec) - 1e-10)
            assert np.all(np.diag(pert) <= np.diag(base) + 1e-10)


class TestNonlinearRadar:
    def test_nonlinear_dataset_rationalizable(self):
        scn = SpectralScenario(0.9 * np.eye(2), np.eye(2))
        util = CobbDouglas([0.5, 0.5])
        beta, budget, alpha = gen_nonlinear_radar_dataset(
            scn, util, n=5, seed=9, lam_bar=2.0, n_dirs=40
        )
        ds = make_nonlinear_dataset(beta, budget)
        assert check_garp(ds).consistent
        assert afriat_certificate(ds) is not None

    def test_lmax_increasing_in_beta(self):
        scn = SpectralScenario(0.9 * np.eye(2), np.eye(2))
        alpha = np.array([1.0, 1.0])
        v1 = tracker_lmax(scn, alpha, np.array([0.5, 0.5]))
        v2 = tracker_lmax(scn, alpha, np.array([0.8, 0.5]))
        assert v2 > v1
