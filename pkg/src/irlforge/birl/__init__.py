"""Bayesian revealed preferences: the NIAS/NIAC feasibility test, UMRI agent
simulation, inverse stopping-time problems, and discrete-choice estimation.
"""

from .agents import (
    UMRIAgentSpec,
    expected_reward,
    induced_action_kernel,
    mutual_information_cost,
    random_umri_spec,
    simulate_umri,
)
from .brp import (
    BehaviorDataset,
    BRPCertificate,
    action_marginals,
    brp_feasible,
    brp_residuals,
    make_behavior_dataset,
    niac_combinatorial_holds,
    niac_pairwise_z_exists,
    reconstruct_info_cost,
    revealed_posteriors,
)
from .choice import (
    ChoiceData,
    choice_probabilities,
    logit_grad,
    logit_loglik,
    logit_mle,
    make_choice_data,
    sample_choices,
)
from .stopping import (
    QuickestDataset,
    SearchDataset,
    SHTDataset,
    inverse_quickest,
    inverse_search,
    inverse_sht,
    make_quickest_dataset,
    make_search_dataset,
    make_sht_dataset,
    quickest_delay_and_false_alarm,
    sht_cost_table,
    simulate_quickest,
    simulate_search,
    simulate_sht,
)

__all__ = [
    "BRPCertificate",
    "BehaviorDataset",
    "ChoiceData",
    "QuickestDataset",
    "SHTDataset",
    "SearchDataset",
    "UMRIAgentSpec",
    "action_marginals",
    "brp_feasible",
    "brp_residuals",
    "choice_probabilities",
    "expected_reward",
    "induced_action_kernel",
    "inverse_quickest",
    "inverse_search",
    "inverse_sht",
    "logit_grad",
    "logit_loglik",
    "logit_mle",
    "make_behavior_dataset",
    "make_choice_data",
    "make_quickest_dataset",
    "make_search_dataset",
    "make_sht_dataset",
    "mutual_information_cost",
    "niac_combinatorial_holds",
    "niac_pairwise_z_exists",
    "quickest_delay_and_false_alarm",
    "random_umri_spec",
    "reconstruct_info_cost",
    "revealed_posteriors",
    "sample_choices",
    "sht_cost_table",
    "simulate_quickest",
    "simulate_search",
    "simulate_sht",
    "simulate_umri",
]
