"""Estimate an adversary's posterior about us from its noisy actions: the
finite inverse HMM filter with belief-atom growth control, and the inverse
Kalman filter on the conditional-mean state-space model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, SingularInnovation, ZeroLikelihood

W_PRUNE = 1e-10
DELTA_MERGE = 1e-8
_GROUP_TOL = 1e-12
_HORIZON_WARN = 12


@dataclass(frozen=True)
class AdversaryModel:
    """Finite model: our chain P, the adversary's likelihood B, and the
    action likelihood g(pi) -> distribution over actions given its belief.
    """

    transition: np.ndarray                     # (X, X) row-stochastic
    likelihood: np.ndarray                     # (X, Y) row-stochastic
    action_model: Callable[[np.ndarray], np.ndarray]

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_obs(self) -> int:
        return self.likelihood.shape[1]


def threshold_action_model(coord: int, threshold: float, slip: float = 0.0, n_actions: int = 2):
    """Deterministic threshold action (optionally with a slip probability):
    action 1 iff belief(coord) >= threshold.  Accepts a single belief or a
    batch of beliefs.
    """

    def g(pi: np.ndarray) -> np.ndarray:
        pi = np.atleast_2d(pi)
        out = np.full((pi.shape[0], n_actions), slip / max(n_actions - 1, 1))
        a = (pi[:, coord] >= threshold).astype(int)
        out[np.arange(pi.shape[0]), a] = 1.0 - slip
        return out if out.shape[0] > 1 else out[0]

    return g


def uninformative_action_model(n_actions: int = 2):
    def g(pi: np.ndarray) -> np.ndarray:
        pi = np.atleast_2d(pi)
        out = np.full((pi.shape[0], n_actions), 1.0 / n_actions)
        return out if out.shape[0] > 1 else out[0]

    return g


def _action_likelihoods(model: AdversaryModel, atoms: np.ndarray) -> np.ndarray:
    """(n_atoms, A) action likelihood table, batching when the model allows."""
    out = np.atleast_2d(model.action_model(atoms))
    if out.shape[0] == atoms.shape[0] and atoms.shape[0] > 1:
        return out
    if atoms.shape[0] == 1:
        return out.reshape(1, -1)
    return np.vstack([np.atleast_1d(model.action_model(pi)) for pi in atoms])


@dataclass(frozen=True)
class InverseHmmState:
    atoms: np.ndarray      # (n_atoms, X) beliefs on the simplex
    weights: np.ndarray    # (n_atoms,), sums to 1
    step: int = 0


def initial_hmm_state(pi0: np.ndarray) -> InverseHmmState:
    pi0 = np.asarray(pi0, dtype=float)
    return InverseHmmState(pi0[None, :].copy(), np.ones(1), 0)


def hmm_filter_step(model: AdversaryModel, pi: np.ndarray, y: int) -> np.ndarray:
    pred = model.transition.T @ pi
    upd = model.likelihood[:, y] * pred
    total = upd.sum()
    if total <= 0:
        return pred / pred.sum()
    return upd / total


def inverse_hmm_step(
    state: InverseHmmState,
    model: AdversaryModel,
    x_next: int,
    a_next: int,
    prune: bool = True,
    w_prune: float = W_PRUNE,
    delta_merge: float = DELTA_MERGE,
) -> tuple[InverseHmmState, np.ndarray]:
    """One inverse-filter update given our next state and the observed action.

    Expands every atom by every observation symbol, groups observations that
    land on the same posterior, reweights by the adversary's observation
    likelihood at our true state and by the action likelihood, renormalizes,
    then prunes and merges.  Returns the new state and the conditional mean
    belief estimate.
    """
    if not (0 <= x_next < model.n_states):
        raise DimensionMismatch("state index out of range")
    # expand every atom by every observation symbol (vectorized over atoms)
    pred = state.atoms @ model.transition                    # (n, X)
    blocks, wblocks = [], []
    for y in range(model.n_obs):
        upd = pred * model.likelihood[:, y][None, :]
        norm = upd.sum(axis=1, keepdims=True)
        safe = norm[:, 0] > 0
        posts = np.where(safe[:, None], upd / np.maximum(norm, 1e-300), pred)
        blocks.append(posts)
        wblocks.append(state.weights * model.likelihood[x_next, y])
    atoms = np.vstack(blocks)
    weights = np.concatenate(wblocks)

    # group observation paths that land on the same posterior
    keys = np.round(atoms / _GROUP_TOL).astype(np.int64)
    _, first_idx, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    atoms = atoms[first_idx]
    weights = np.bincount(inverse, weights=weights, minlength=first_idx.size)

    gvals = _action_likelihoods(model, atoms)[:, a_next]
    weights = weights * gvals
    total = weights.sum()
    if total <= 0:
        raise ZeroLikelihood("observed action impossible under every atom")
    weights = weights / total

    if prune:
        keep = weights >= w_prune
        if not keep.all():
            atoms, weights = atoms[keep], weights[keep]
            weights = weights / weights.sum()
        # greedy L1 merge, scanning in weight order so heavy atoms anchor
        order = np.argsort(-weights, kind="stable")
        merged_atoms = np.empty_like(atoms)
        merged_w = np.empty_like(weights)
        count = 0
        for i in order:
            if count:
                d = np.abs(merged_atoms[:count] - atoms[i]).sum(axis=1)
                j = int(np.argmin(d))
                if d[j] < delta_merge:
                    merged_w[j] += weights[i]
                    continue
            merged_atoms[count] = atoms[i]
            merged_w[count] = weights[i]
            count += 1
        atoms = merged_atoms[:count].copy()
        weights = merged_w[:count] / merged_w[:count].sum()
    elif state.step + 1 > _HORIZON_WARN:
        warnings.warn(
            f"inverse HMM filter at step {state.step + 1} without pruning: "
            f"atom count grows like Y^k",
            RuntimeWarning,
            stacklevel=2,
        )

    pi_hat = weights @ atoms
    return InverseHmmState(atoms, weights, state.step + 1), pi_hat


@dataclass(frozen=True)
class InverseKfModel:
    """Forward model: x' = A x + w (cov Q), adversary observes y = C x + v
    (cov R) and acts a = phi(Sigma_k) xhat_k + eps with eps ~ N(0, se^2 I).
    """

    a: np.ndarray
    c: np.ndarray
    q: np.ndarray
    r: np.ndarray
    phi: Callable[[np.ndarray], np.ndarray]
    sigma_eps: float


@dataclass(frozen=True)
class InverseKfState:
    mean: np.ndarray          # our estimate of the adversary's estimate
    cov: np.ndarray
    adv_cov: np.ndarray       # adversary's posterior covariance Sigma_k
    step: int = 0


def initial_kf_state(model: InverseKfModel, mean0: np.ndarray, cov0: np.ndarray, adv_cov0: np.ndarray) -> InverseKfState:
    return InverseKfState(
        np.asarray(mean0, float).copy(),
        np.asarray(cov0, float).copy(),
        np.asarray(adv_cov0, float).copy(),
        0,
    )


def adversary_gain_schedule(model: InverseKfModel, adv_cov: np.ndarray):
    """One step of the adversary's (known) Riccati recursion: returns the
    gain applied at k+1 and the updated posterior covariance Sigma_{k+1}.
    """
    pred = model.a @ adv_cov @ model.a.T + model.q
    s = model.c @ pred @ model.c.T + model.r
    gain = pred @ model.c.T @ np.linalg.inv(s)
    nxt = (np.eye(pred.shape[0]) - gain @ model.c) @ pred
    return gain, 0.5 * (nxt + nxt.T)


def inverse_kf_step(
    state: InverseKfState,
    model: InverseKfModel,
    x_next: np.ndarray,
    a_next: np.ndarray,
) -> InverseKfState:
    """Kalman update of our posterior over the adversary's estimate.

    The adversary's estimate follows xhat' = (I - Psi C) A xhat + Psi v +
    Psi C x', with our known state x' entering as a control input; we then
    observe the action a' = phi(Sigma') xhat' + eps.
    """
    gain, adv_cov_next = adversary_gain_schedule(model, state.adv_cov)
    n = state.mean.shape[0]
    f = (np.eye(n) - gain @ model.c) @ model.a
    u = gain @ model.c @ np.asarray(x_next, float)
    q_eff = gain @ model.r @ gain.T

    mean_p = f @ state.mean + u
    cov_p = f @ state.cov @ f.T + q_eff

    h = model.phi(adv_cov_next)
    s = h @ cov_p @ h.T + model.sigma_eps**2 * np.eye(h.shape[0])
    try:
        k_gain = cov_p @ h.T @ np.linalg.inv(s)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("inverse-KF innovation covariance singular") from exc
    if not np.all(np.isfinite(k_gain)):
        raise SingularInnovation("inverse-KF innovation covariance singular")
    innov = np.asarray(a_next, float) - h @ mean_p
    mean = mean_p + k_gain @ innov
    cov = (np.eye(n) - k_gain @ h) @ cov_p
    return InverseKfState(mean, 0.5 * (cov + cov.T), adv_cov_next, state.step + 1)


def simulate_adversary_tracking(
    model: InverseKfModel,
    x0_mean: np.ndarray,
    cov0: np.ndarray,
    steps: int,
    seed: int,
):
    """Joint rollout of our state, the adversary's Kalman estimate, and the
    noisy actions; used to exercise the inverse filter end to end.
    """
    rng = np.random.default_rng(seed)
    n = model.a.shape[0]
    x = x0_mean + np.linalg.cholesky(cov0 + 1e-12 * np.eye(n)) @ rng.normal(size=n)
    xhat = x0_mean.copy().astype(float)
    adv_cov = cov0.copy().astype(float)
    xs, acts, xhats, adv_covs = [], [], [], []
    for _ in range(steps):
        x = model.a @ x + rng.multivariate_normal(np.zeros(n), model.q)
        y = model.c @ x + rng.multivariate_normal(np.zeros(model.c.shape[0]), model.r)
        gain, adv_cov = adversary_gain_schedule(model, adv_cov)
        xhat = model.a @ xhat + gain @ (y - model.c @ model.a @ xhat)
        h = model.phi(adv_cov)
        act = h @ xhat + model.sigma_eps * rng.normal(size=h.shape[0])
        xs.append(x.copy())
        acts.append(act.copy())
        xhats.append(xhat.copy())
        adv_covs.append(adv_cov.copy())
    return np.asarray(xs), np.asarray(acts), np.asarray(xhats), np.asarray(adv_covs)
