import numpy as np
import pytest

from irlforge.detect import (
    DetectReport,
    NoisyDataset,
    calibrate_m,
    detect,
    gaussian_noise,
    make_noisy_dataset,
    random_split_scenario,
    spsa_probe_opt,
)
from irlforge.detect import test_statistic as t_statistic
from irlforge.errors import CalibrationMismatch, GeneratorNotViolating
from irlforge.sim import CobbDouglas, SpectralScenario, gen_waveform_dataset

from oracles import folded_gaussian_diff_mean


@pytest.fixture
def rational_data():
    scn = SpectralScenario(np.eye(2), np.eye(2))
    ds, util = gen_waveform_dataset(scn, CobbDouglas([0.5, 0.5]), n=5, seed=21, m=2)
    return ds.alpha, ds.beta, util


@pytest.fixture
def violating_pair():
    alpha = np.array([[1.0, 2.0], [2.0, 1.0]])
    beta = np.array([[0.0, 0.5], [0.5, 0.0]])
    return alpha, beta


class TestTestStatistic:
    def test_noise_free_rational_is_zero(self, rational_data):
        alpha, beta, _ = rational_data
        assert t_statistic(make_noisy_dataset(alpha, beta)) == 0.0

    def test_two_point_cycle_slack(self, violating_pair):
        alpha, beta = violating_pair
        # hand bisection: both inequalities become weak at T = 0.5
        t = t_statistic(make_noisy_dataset(alpha, beta))
        assert t == pytest.approx(0.5, abs=1e-6)

    def test_tiny_noise_perturbation_bound(self, rational_data):
        alpha, beta, _ = rational_data
        rng = np.random.default_rng(0)
        eps = 1e-6 * rng.choice([-1.0, 1.0], size=beta.shape)
        t = t_statistic(make_noisy_dataset(alpha, beta + eps))
        bound = 2e-6 * np.abs(alpha).sum(axis=1).max()
        assert t <= bound + 1e-12

    def test_nonincreasing_toward_rational_projection(self, rational_data, violating_pair):
        alpha, bad = violating_pair
        scn = SpectralScenario(np.eye(2), np.eye(2))
        util = CobbDouglas([0.5, 0.5])
        good = np.array([util.demand(a / (a @ b)) for a, b in zip(alpha, bad)])
        prev = np.inf
        for t in np.linspace(0.0, 1.0, 9):
            mix = (1 - t) * bad + t * good
            stat = t_statistic(make_noisy_dataset(alpha, mix))
            assert stat <= prev + 1e-9
            prev = stat


class TestCalibrateM:
    def test_zero_noise_degenerate(self):
        probes = np.array([[1.0, 1.0], [2.0, 1.0]])
        noise = gaussian_noise(0.0)
        cal = calibrate_m(noise, probes, 200, seed=1)
        assert np.all(cal.samples == 0.0)
        assert cal.cdf(0.0) == 1.0

    def test_folded_normal_mean(self):
        # N = 2, m = 1, alpha = 1: M = |e1 - e2| for iid N(0, sigma^2)
        sigma = 0.3
        probes = np.array([[1.0], [1.0]])
        cal = calibrate_m(gaussian_noise(sigma), probes, 4000, seed=2)
        want = folded_gaussian_diff_mean(sigma)
        se = cal.samples.std() / np.sqrt(cal.trials)
        assert abs(cal.samples.mean() - want) <= 3 * se

    def test_probe_scaling_doubles_samples(self):
        probes = np.array([[1.0, 0.5], [0.3, 2.0], [1.5, 0.7]])
        noise = gaussian_noise(0.2)
        c1 = calibrate_m(noise, probes, 300, seed=3)
        c2 = calibrate_m(noise, 2.0 * probes, 300, seed=3)
        assert np.allclose(c2.samples, 2.0 * c1.samples)

    def test_determinism(self):
        probes = np.array([[1.0, 1.0], [2.0, 1.0]])
        c1 = calibrate_m(gaussian_noise(0.1), probes, 100, seed=9)
        c2 = calibrate_m(gaussian_noise(0.1), probes, 100, seed=9)
        assert np.array_equal(c1.samples, c2.samples)


class TestDetect:
    def test_zero_statistic_accepts_h0(self, rational_data):
        alpha, beta, _ = rational_data
        cal = calibrate_m(gaussian_noise(0.1), alpha, 500, seed=4)
        rep = detect(make_noisy_dataset(alpha, beta), cal, gamma=0.05)
        assert rep.verdict == "H0" and rep.p_value == 1.0

    def test_strong_violation_rejected(self, violating_pair):
        alpha, beta = violating_pair
        cal = calibrate_m(gaussian_noise(0.01), alpha, 2000, seed=5)
        rep = detect(make_noisy_dataset(alpha, beta), cal, gamma=0.05)
        assert rep.verdict == "H1" and rep.p_value <= 0.01

    def test_calibration_mismatch(self, rational_data):
        alpha, beta, _ = rational_data
        cal = calibrate_m(gaussian_noise(0.1), alpha * 1.01, 100, seed=6)
        with pytest.raises(CalibrationMismatch):
            detect(make_noisy_dataset(alpha, beta), cal, gamma=0.05)

    def test_verdict_flips_at_most_once_over_gamma(self, rational_data):
        alpha, beta, _ = rational_data
        rng = np.random.default_rng(7)
        noisy = beta + rng.normal(0, 0.05, size=beta.shape)
        cal = calibrate_m(gaussian_noise(0.05), alpha, 400, seed=8)
        verdicts = [
            detect(make_noisy_dataset(alpha, noisy), cal, g).verdict
            for g in np.linspace(0.01, 0.99, 25)
        ]
        flips = sum(a != b for a, b in zip(verdicts, verdicts[1:]))
        assert flips <= 1

    def test_type1_rate_small_scale(self, rational_data):
        # small-scale version of the acceptance criterion
        alpha, beta, _ = rational_data
        sigma, gamma = 0.1, 0.05
        noise = gaussian_noise(sigma)
        cal = calibrate_m(noise, alpha, 400, seed=10)
        false_pos = 0
        trials = 200
        for l in range(trials):
            rng = np.random.default_rng([l, 77])
            eps = noise.draw(rng, alpha.shape)
            rep = detect(NoisyDataset(alpha, beta + eps), cal, gamma)
            false_pos += rep.verdict == "H1"
        assert false_pos / trials <= gamma + 2.5 * np.sqrt(gamma * (1 - gamma) / trials)


class TestSpsa:
    def test_zero_steps_leave_probes_unchanged(self):
        rng = np.random.default_rng(11)
        probes0 = rng.uniform(0.5, 2.0, size=(4, 2))
        res = spsa_probe_opt(
            probes0,
            random_split_scenario(),
            gaussian_noise(0.1),
            gamma=0.05,
            iters=3,
            step_omega=0.0 + 1e-12,
            mu_schedule=lambda i: 0.0,
            seed=12,
            n_trials=10,
            cal_draws=100,
        )
        assert np.allclose(res.probes, probes0)
        assert res.type2_trace.shape == (3,)

    def test_bernoulli_perturbation_frequencies(self):
        rng = np.random.default_rng(13)
        draws = rng.choice([-1.0, 1.0], size=10_000)
        assert abs((draws == 1.0).mean() - 0.5) <= 0.05
        assert set(np.unique(draws)) == {-1.0, 1.0}

    def test_generator_not_violating(self):
        util = CobbDouglas([0.5, 0.5])

        def rational_scenario(probes, rng):
            return np.array([util.demand(a) for a in probes])

        with pytest.raises(GeneratorNotViolating):
            spsa_probe_opt(
                np.full((3, 2), 1.0),
                rational_scenario,
                gaussian_noise(0.1),
                gamma=0.05,
                iters=1,
                step_omega=0.05,
                mu_schedule=lambda i: 0.1,
                seed=14,
            )
