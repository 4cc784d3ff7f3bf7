import math

import numpy as np
import pytest

from irlforge.errors import MissingDensity, NonUnichainDetected
from irlforge.langevin import (
    run_sampler_ensemble,
    GaussianInit,
    GradientTrace,
    LangevinConfig,
    MixturePosteriorModel,
    ProductCauchyInit,
    SwarmConfig,
    cmdp_objectives,
    estimate_reward,
    find_modes,
    gaussian_kernel,
    histogram_density,
    iter_forward_chunks,
    metropolis_hastings,
    paper_cmdp,
    penalized_reward,
    policy_to_spherical,
    quadratic_oracle,
    run_forward_agents,
    run_sampler,
    simulate_regime_path,
    spherical_to_policy,
    standard_gaussian_init,
    validate_oracle_unbiased,
)
from irlforge.langevin.samplers import SampleCloud


class TestKernelContract:
    def test_gaussian_kernel_symmetric_and_normalized(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            u = rng.normal(size=2)
            assert gaussian_kernel(u, 2) == pytest.approx(gaussian_kernel(-u, 2))
        # quadrature over a wide box
        xs = np.linspace(-8, 8, 401)
        w = xs[1] - xs[0]
        vals = np.array([[gaussian_kernel(np.array([a, b]), 2) for b in xs] for a in xs])
        assert abs(vals.sum() * w * w - 1.0) < 1e-4


class TestOracles:
    def test_quadratic_unbiased(self):
        oracle = quadratic_oracle(2, curvature=1.3, noise=0.5)
        points = np.array([[0.0, 0.0], [1.0, -0.5], [0.3, 0.8], [-1.2, 0.1], [2.0, 2.0]])
        worst = validate_oracle_unbiased(oracle, points, draws=100_000, seed=1)
        assert worst <= 3.0

    def test_mixture_gradient_matches_finite_differences(self):
        model = MixturePosteriorModel(np.array([0.0, 1.0]), n_obs=1)
        rng = np.random.default_rng(2)
        y = model.sample_observations(rng, 1)
        from irlforge.langevin.oracles import _mixture_logpdf_grad

        theta = np.array([[0.3, -0.2]])
        _, g = _mixture_logpdf_grad(y, theta, model.mix_var)
        h = 1e-6
        for j in range(2):
            e = np.zeros((1, 2))
            e[0, j] = h
            lp_p, _ = _mixture_logpdf_grad(y, theta + e, model.mix_var)
            lp_m, _ = _mixture_logpdf_grad(y, theta - e, model.mix_var)
            fd = (lp_p - lp_m)[0] / (2 * h)
            assert fd == pytest.approx(g[0, j], rel=1e-5, abs=1e-7)


class TestForwardAgents:
    def test_frozen_dynamics_match_init_distribution(self):
        oracle = quadratic_oracle(2, noise=0.0)
        init = standard_gaussian_init(2)
        swarm = SwarmConfig(init, step=0.0, tau_min=1, tau_max=1, n_agents=10_000)
        trace = run_forward_agents(oracle, swarm, seed=3)
        # KS distance of each marginal against the standard normal CDF
        for j in range(2):
            xs = np.sort(trace.theta[:, j])
            ecdf = np.arange(1, xs.size + 1) / xs.size
            cdf = 0.5 * (1 + np.vectorize(math.erf)(xs / math.sqrt(2)))
            assert np.abs(ecdf - cdf).max() < 0.05

    def test_exact_gradient_contraction(self):
        oracle = quadratic_oracle(1, curvature=1.0, noise=0.0)
        init = standard_gaussian_init(1)
        eps = 0.1
        swarm = SwarmConfig(init, step=eps, tau_min=5, tau_max=5, n_agents=1)
        trace = run_forward_agents(oracle, swarm, seed=4)
        th = trace.theta[:, 0]
        for k in range(len(th) - 1):
            assert th[k + 1] == pytest.approx((1 - eps) * th[k])

    def test_trace_length_and_determinism(self):
        oracle = quadratic_oracle(2, noise=0.3)
        init = standard_gaussian_init(2)
        swarm = SwarmConfig(init, step=1e-3, tau_min=10, tau_max=30, n_agents=500)
        t1 = run_forward_agents(oracle, swarm, seed=5)
        t2 = run_forward_agents(oracle, swarm, seed=5)
        assert np.array_equal(t1.theta, t2.theta)
        assert 500 * 10 <= len(t1) <= 500 * 30

    def test_paper_scale_trace_length(self):
        # 100 iterations per agent: trace length = agents x horizon exactly
        oracle = quadratic_oracle(2, noise=0.1)
        init = standard_gaussian_init(2)
        swarm = SwarmConfig(init, step=1e-3, tau_min=100, tau_max=100, n_agents=1000)
        trace = run_forward_agents(oracle, swarm, seed=6)
        assert len(trace) == 100_000


class TestSamplers:
    @staticmethod
    def quadratic_trace(total, seed, init=None):
        oracle = quadratic_oracle(2, curvature=1.0, noise=0.5)
        init = init or standard_gaussian_init(2)
        swarm = SwarmConfig(init, step=1e-4, tau_min=5, tau_max=20, n_agents=total // 12 + 1)
        return run_forward_agents(oracle, swarm, seed), init

    def test_missing_density_raises(self):
        trace, _ = self.quadratic_trace(1000, 7)
        cfg = LangevinConfig(variant="generalized", mu=0.01)
        with pytest.raises(MissingDensity):
            run_sampler(trace, cfg, init_density=None, seed=0)

    @staticmethod
    def ensemble_cloud(variant, mu, delta, beta, init, n_chains, chain_steps, seed):
        oracle = quadratic_oracle(2, curvature=1.0, noise=0.5)
        swarm = SwarmConfig(init, step=1e-4, tau_min=5, tau_max=20,
                            n_agents=chain_steps // 12 + 2)
        rng = np.random.default_rng(seed)
        inits = math.sqrt(1.0 / beta) * rng.standard_normal((n_chains, 2))
        cfg = LangevinConfig(variant=variant, mu=mu, delta=delta, beta=beta)
        return run_sampler_ensemble(
            lambda c: run_forward_agents(oracle, swarm, seed * 100_000 + c),
            cfg, inits, init_density=init, seed=seed,
        )

    def test_gibbs_moments_generalized_ensemble(self):
        # module-scale version of the acceptance check
        init = standard_gaussian_init(2)
        cloud = self.ensemble_cloud("generalized", 0.005, 0.1, 2.0, init, 400, 500, 8)
        assert cloud.samples.var(axis=0) == pytest.approx([0.5, 0.5], abs=0.05)

    def test_gibbs_moment_scaling_in_beta(self):
        # variance tracks 1/beta within 10 percent across a beta grid
        init = standard_gaussian_init(2)
        for beta, target in ((1.0, 1.0), (2.0, 0.5), (4.0, 0.25)):
            cloud = self.ensemble_cloud("generalized", 0.005, 0.1, beta, init, 300, 500,
                                        int(20 + beta))
            var = cloud.samples.var(axis=0).mean()
            assert abs(var - target) <= 0.1 * target + 0.02

    def test_gibbs_moments_classical_passive_ensemble(self):
        init = ProductCauchyInit(3.0, 2)
        cloud = self.ensemble_cloud("classical_passive", 1e-4, 0.4, 2.0, init, 400, 500, 9)
        assert cloud.samples.var(axis=0) == pytest.approx([0.5, 0.5], abs=0.05)

    def test_multikernel_single_pool_reduces_to_classical_point(self):
        # L = 1: the normalized weight is exactly one regardless of distance
        theta = np.array([[0.5, -0.2]])
        grad = np.array([[0.3, 0.1]])
        trace = GradientTrace(np.tile(theta, (100, 1)), np.tile(grad, (100, 1)))
        cfg = LangevinConfig(variant="multikernel", mu=0.01, beta=2.0, pool_size=1,
                             burn_in_frac=0.0)
        cloud = run_sampler(trace, cfg, seed=12)
        # reconstruct the expected chain with the same noise stream
        rng = np.random.default_rng(12)
        noise = rng.standard_normal((100, 2))
        x = np.zeros(2)
        for i in range(100):
            x = x + 0.01 * 1.0 * grad[0] + math.sqrt(0.01) * noise[i]
            assert np.allclose(cloud.samples[i], x)

    def test_nonreversible_zero_skew_identical_to_classical(self):
        trace, init = self.quadratic_trace(200_000, 13)
        base = LangevinConfig(variant="classical_passive", mu=1e-4, delta=0.1, beta=2.0)
        skew = LangevinConfig(variant="nonreversible", mu=1e-4, delta=0.1, beta=2.0,
                              skew=np.zeros((2, 2)))
        init_c = ProductCauchyInit(3.0, 2)
        c1 = run_sampler(trace, base, init_density=init_c, seed=14)
        c2 = run_sampler(trace, skew, init_density=init_c, seed=14)
        assert np.array_equal(c1.samples, c2.samples)

    def test_kernel_variant_updates_match_formula(self):
        # white-box one-step check: the production increments equal an
        # independent vectorized transcription of the update equations
        oracle = quadratic_oracle(2, curvature=1.0, noise=0.5)
        init = standard_gaussian_init(2)
        rng = np.random.default_rng(15)
        n = 200
        theta = init.sample(rng, n)
        grad = oracle.noisy_grad(theta, rng)
        x0 = np.array([0.6, -0.4])
        mu, delta, beta = 0.01, 0.15, 2.0
        kc = (2 * math.pi) ** (-1) * delta ** (-2)
        kstd = (2 * math.pi) ** (-1)

        for variant in ("generalized", "generalized_alt", "classical_passive"):
            for r in range(0, n, 37):
                row_t = theta[r:r + 1]
                row_g = grad[r:r + 1]
                cfg = LangevinConfig(variant=variant, mu=mu, delta=delta, beta=beta,
                                     burn_in_frac=0.0, init=x0)
                seed = 1000 + r
                cloud = run_sampler(GradientTrace(row_t, row_g), cfg,
                                    init_density=init, seed=seed)
                got = cloud.samples[0]
                noise = np.random.default_rng(seed).standard_normal((1, 2))[0]
                q = float(((row_t[0] - x0) ** 2).sum())
                kw = math.exp(-q / (2 * delta ** 2))
                pix = float(init.pdf(x0[None])[0])
                gpx = init.grad_pdf(x0[None])[0]
                if variant == "generalized":
                    want = x0 + mu * (kc * kw * (beta / 2) * row_g[0] + gpx) * pix \
                        + math.sqrt(mu) * pix * noise
                elif variant == "generalized_alt":
                    pit = float(init.pdf(row_t)[0])
                    gpt = init.grad_pdf(row_t)[0]
                    ku = kstd * kw
                    want = x0 + mu * delta ** (-2) * ku * ((beta / 2) * row_g[0] * pit + gpt) \
                        + math.sqrt(mu * delta ** (-2)) * ku * pit * noise
                else:
                    want = x0 + mu * kc * kw * (beta / 2) / pix * row_g[0] \
                        + math.sqrt(mu) * noise
                assert np.abs(got - want).max() < 1e-12


class TestDensityTools:
    def test_iid_gibbs_cloud_recovers_quadratic_reward(self):
        rng = np.random.default_rng(17)
        beta = 2.0
        # exp(beta R) with R = -||x||^2/2 is N(0, 0.5 I): sigma = 0.707
        samples = rng.normal(0.0, math.sqrt(1 / beta), size=(10_000_000, 2))
        cloud = SampleCloud(samples, 0, "iid")
        edges = [np.linspace(-1.6, 1.6, 17)] * 2
        r, edges = estimate_reward(cloud, edges, beta=beta)
        centers = 0.5 * (edges[0][1:] + edges[0][:-1])
        mesh = np.meshgrid(centers, centers, indexing="ij")
        want = -(mesh[0] ** 2 + mesh[1] ** 2) / 2
        want -= want.max()
        two_sigma = 2 * math.sqrt(0.5)
        box = (np.abs(mesh[0]) < two_sigma) & (np.abs(mesh[1]) < two_sigma)
        assert np.nanmax(np.abs((r - want)[box])) < 0.1

    def test_uniform_cloud_flat_reward(self):
        rng = np.random.default_rng(18)
        samples = rng.uniform(-1, 1, size=(200_000, 1))
        cloud = SampleCloud(samples, 0, "iid")
        r, _ = estimate_reward(cloud, [np.linspace(-1, 1, 21)])
        assert np.nanmax(np.abs(r)) < 0.05

    def test_density_integrates_to_one(self):
        rng = np.random.default_rng(19)
        cloud = SampleCloud(rng.normal(size=(50_000, 2)), 0, "x")
        dens, edges = histogram_density(cloud)
        widths = [np.diff(e) for e in edges]
        total = (dens * np.outer(widths[0], widths[1])).sum()
        assert abs(total - 1.0) < 1e-6


class TestCmdpMachinery:
    def test_spherical_round_trip(self):
        for p1 in np.linspace(0.0, 1.0, 21):
            for p2 in np.linspace(0.0, 1.0, 11):
                phi = np.array([[p1, 1 - p1], [p2, 1 - p2]])
                back = spherical_to_policy(policy_to_spherical(phi))
                assert np.abs(back - phi).max() < 1e-12

    def test_spherical_always_stochastic(self):
        rng = np.random.default_rng(20)
        for _ in range(50):
            angles = rng.uniform(-5, 5, size=(2, 1))
            phi = spherical_to_policy(angles)
            assert np.all(phi >= 0)
            assert np.allclose(phi.sum(axis=1), 1.0)

    def test_exact_objectives_match_long_simulation(self):
        model = paper_cmdp()
        phi = np.array([[0.7, 0.3], [0.4, 0.6]])
        j, b = cmdp_objectives(model, phi)
        rng = np.random.default_rng(21)
        x = 0
        jr = br = 0.0
        steps = 400_000
        for _ in range(steps):
            u = 0 if rng.uniform() < phi[x, 0] else 1
            jr += model.rewards[x, u]
            br += model.constraints[x, u]
            x = 0 if rng.uniform() < model.transitions[u, x, 0] else 1
        assert jr / steps == pytest.approx(j, abs=0.3)
        assert br / steps == pytest.approx(b, abs=0.02)

    def test_non_unichain_detected(self):
        model = CmdpModelStub()
        with pytest.raises(NonUnichainDetected):
            cmdp_objectives(model, np.array([[1.0, 0.0], [1.0, 0.0]]))


def CmdpModelStub():
    from irlforge.langevin import CmdpModel

    # action 0 makes both states absorbing: two closed classes
    return CmdpModel(
        transitions=np.array([
            [[1.0, 0.0], [0.0, 1.0]],
            [[0.5, 0.5], [0.5, 0.5]],
        ]),
        rewards=np.ones((2, 2)),
        constraints=np.ones((2, 2)),
        budget=1.0,
        penalty=1.0,
    )


class TestRegimePath:
    def test_single_regime_path_constant(self):
        rng = np.random.default_rng(22)
        path = simulate_regime_path(1, np.zeros((1, 1)), 0.1, 100, rng)
        assert np.all(path == 0)

    def test_two_regime_occupancy_matches_stationary(self):
        rng = np.random.default_rng(23)
        q = np.array([[-1.0, 1.0], [1.0, -1.0]])
        path = simulate_regime_path(2, q, 0.05, 200_000, rng)
        assert np.mean(path) == pytest.approx(0.5, abs=0.02)


class TestMetropolisOracle:
    def test_mh_samples_standard_normal(self):
        samples = metropolis_hastings(
            lambda x: -0.5 * float(x @ x), np.zeros(2), 60_000, 1.0, seed=24
        )
        assert samples.mean(axis=0) == pytest.approx([0.0, 0.0], abs=0.05)
        assert samples.var(axis=0) == pytest.approx([1.0, 1.0], abs=0.08)
