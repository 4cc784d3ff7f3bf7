"""Forward simulation of a utility-maximizing rationally inattentive agent:
pick the best attention kernel from a finite menu, act optimally on the
induced posterior, and report exact action kernels (no sampling).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import DegenerateMenu
from .brp import BehaviorDataset, make_behavior_dataset


def mutual_information_cost(weight: float) -> Callable[[np.ndarray, np.ndarray], float]:
    """K(B, prior) = weight * I(x; y): the entropic attention cost."""

    def cost(kernel: np.ndarray, prior: np.ndarray) -> float:
        total = 0.0
        for y in range(kernel.shape[1]):
            sigma = float(kernel[:, y] @ prior)
            if sigma <= 1e-300:
                continue
            post = kernel[:, y] * prior / sigma
            mask = post > 0
            total += sigma * float(np.sum(post[mask] * np.log(post[mask] / prior[mask])))
        return weight * total

    return cost


@dataclass(frozen=True)
class UMRIAgentSpec:
    prior: np.ndarray                     # (X,)
    rewards: np.ndarray                   # (M, X, A)
    menu: tuple[np.ndarray, ...]          # X x Y row-stochastic kernels
    cost: Callable[[np.ndarray, np.ndarray], float]


def expected_reward(reward: np.ndarray, kernel: np.ndarray, prior: np.ndarray) -> float:
    """E_y max_a E[reward(x, a) | y] for observation kernel `kernel`."""
    scores = np.einsum("x,xy,xa->ya", prior, kernel, reward)
    return float(scores.max(axis=1).sum())


def induced_action_kernel(reward: np.ndarray, kernel: np.ndarray, prior: np.ndarray) -> np.ndarray:
    """Exact p(a|x) when acting optimally on each observation; ties break to
    the lowest action index.
    """
    scores = np.einsum("x,xy,xa->ya", prior, kernel, reward)
    best = scores.argmax(axis=1)          # first max = lowest action index
    x_dim, a_dim = reward.shape
    out = np.zeros((x_dim, a_dim))
    for y, a in enumerate(best):
        out[:, a] += kernel[:, y]
    return out


def simulate_umri(spec: UMRIAgentSpec) -> BehaviorDataset:
    """Behavior dataset of the agent across its environments."""
    if not spec.menu:
        raise DegenerateMenu("attention menu is empty")
    for b in spec.menu:
        if b.ndim != 2 or b.shape[0] != spec.prior.shape[0]:
            raise DegenerateMenu("menu kernel shape mismatch")
        if np.abs(b.sum(axis=1) - 1.0).max() > 1e-9 or np.any(b < 0):
            raise DegenerateMenu("menu kernels must be row-stochastic")
    kernels = []
    for reward in spec.rewards:
        objective = [
            expected_reward(reward, b, spec.prior) - spec.cost(b, spec.prior)
            for b in spec.menu
        ]
        chosen = spec.menu[int(np.argmax(objective))]
        kernels.append(induced_action_kernel(reward, chosen, spec.prior))
    return make_behavior_dataset(spec.prior, np.asarray(kernels))


def true_certificate(spec: UMRIAgentSpec) -> tuple[np.ndarray, np.ndarray]:
    """The agent's actual rewards and attention costs z_m = K(B(m), prior)."""
    z = []
    for reward in spec.rewards:
        objective = [
            expected_reward(reward, b, spec.prior) - spec.cost(b, spec.prior)
            for b in spec.menu
        ]
        chosen = spec.menu[int(np.argmax(objective))]
        z.append(spec.cost(chosen, spec.prior))
    return spec.rewards.copy(), np.asarray(z)


def random_umri_spec(
    rng: np.random.Generator,
    n_states: int,
    n_actions: int,
    n_env: int,
    menu_size: int = 4,
    cost_weight: float = 0.1,
    n_obs: int | None = None,
    max_draws: int = 400,
    min_gap: float = 1e-4,
) -> UMRIAgentSpec:
    """Random spec for the necessity suites: Dirichlet menu kernels, uniform
    rewards, mutual-information cost.

    Specs are redrawn until the agent's own rewards and attention costs
    satisfy NIAS/NIAC with slack `min_gap`.  Exactly-indifferent agents
    (identical, uninformative, or label-permuted behavior across
    environments) carry no cross-environment information and are the
    degeneracy the strict-margin test is designed to reject.
    """
    from .brp import brp_residuals, make_behavior_dataset  # local to avoid cycle at import

    if n_obs is None:
        n_obs = n_actions
    cost = mutual_information_cost(cost_weight)
    for _ in range(max_draws):
        prior = rng.dirichlet(np.ones(n_states) * 2.0)
        menu = tuple(
            np.vstack([rng.dirichlet(np.ones(n_obs)) for _ in range(n_states)])
            for _ in range(menu_size)
        )
        rewards = rng.uniform(0.0, 1.0, size=(n_env, n_states, n_actions))
        spec = UMRIAgentSpec(prior, rewards, menu, cost)
        ds = simulate_umri(spec)
        values, z = true_certificate(spec)
        res = brp_residuals(ds, values, z, "max")
        if res["nias"].size and res["nias"].max() <= -min_gap and res["niac"].max() <= -min_gap:
            return spec
    raise DegenerateMenu("could not draw an epsilon-strict agent spec")
