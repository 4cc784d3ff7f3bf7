"""Passive stochastic-approximation engine: forward agent swarms, the
passive Langevin sampler family, density/reward reconstruction, and the
flagship experiments.
"""

from .density import (
    estimate_reward,
    find_modes,
    histogram_density,
    kde_marginal,
    marginal_variational_distance,
)
from .experiments import (
    CmdpModel,
    CmdpReport,
    KlReport,
    SwitchReport,
    cmdp_experiment,
    cmdp_objectives,
    kl_experiment,
    metropolis_hastings,
    paper_cmdp,
    penalized_reward,
    policy_to_spherical,
    run_classical_langevin,
    spherical_to_policy,
    switching_scenario,
)
from .forward import (
    GaussianInit,
    GridDensity2D,
    ProductCauchyInit,
    fit_trace_density,
    GradientTrace,
    SwarmConfig,
    iter_forward_chunks,
    run_forward_agents,
    run_switching_agents,
    simulate_regime_path,
    standard_gaussian_init,
)
from .oracles import (
    MixturePosteriorModel,
    RewardOracle,
    SwitchingOracle,
    quadratic_oracle,
    validate_oracle_unbiased,
)
from .samplers import (
    VARIANTS,
    LangevinConfig,
    SampleCloud,
    gaussian_kernel,
    run_sampler,
    run_sampler_ensemble,
)

__all__ = [
    "CmdpModel",
    "CmdpReport",
    "GaussianInit",
    "GridDensity2D",
    "fit_trace_density",
    "GradientTrace",
    "KlReport",
    "LangevinConfig",
    "MixturePosteriorModel",
    "ProductCauchyInit",
    "RewardOracle",
    "SampleCloud",
    "SwarmConfig",
    "SwitchReport",
    "SwitchingOracle",
    "VARIANTS",
    "cmdp_experiment",
    "cmdp_objectives",
    "estimate_reward",
    "find_modes",
    "gaussian_kernel",
    "histogram_density",
    "iter_forward_chunks",
    "kde_marginal",
    "kl_experiment",
    "marginal_variational_distance",
    "metropolis_hastings",
    "paper_cmdp",
    "penalized_reward",
    "policy_to_spherical",
    "quadratic_oracle",
    "run_classical_langevin",
    "run_forward_agents",
    "run_sampler",
    "run_sampler_ensemble",
    "run_switching_agents",
    "simulate_regime_path",
    "spherical_to_policy",
    "standard_gaussian_init",
    "switching_scenario",
    "validate_oracle_unbiased",
]
