"""Discrete-choice random utility estimation: multinomial logit MLE by
gradient ascent on pivoted attributes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, NonFinite


@dataclass(frozen=True)
class ChoiceData:
    attributes: np.ndarray   # (K, A, d)
    freqs: np.ndarray        # (K, A), rows sum to 1
    weights: np.ndarray      # (K,) relative sample sizes


def make_choice_data(attributes, freqs, weights=None) -> ChoiceData:
    attributes = np.asarray(attributes, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    if attributes.ndim != 3 or freqs.shape != attributes.shape[:2]:
        raise DimensionMismatch("attributes (K, A, d) must match freqs (K, A)")
    if np.abs(freqs.sum(axis=1) - 1.0).max() > 1e-9:
        raise ValueError("choice frequencies must sum to one per agent")
    if weights is None:
        weights = np.ones(attributes.shape[0])
    weights = np.asarray(weights, dtype=float)
    return ChoiceData(attributes, freqs, weights)


def _pivoted(data: ChoiceData) -> np.ndarray:
    return data.attributes - data.attributes[:, :1, :]


def choice_probabilities(data: ChoiceData, theta: np.ndarray) -> np.ndarray:
    """Softmax choice probabilities per agent, shape (K, A)."""
    util = _pivoted(data) @ theta
    util -= util.max(axis=1, keepdims=True)
    e = np.exp(util)
    return e / e.sum(axis=1, keepdims=True)


def logit_loglik(data: ChoiceData, theta: np.ndarray) -> float:
    p = choice_probabilities(data, theta)
    return float(np.sum(data.weights[:, None] * data.freqs * np.log(np.maximum(p, 1e-300))))


def logit_grad(data: ChoiceData, theta: np.ndarray) -> np.ndarray:
    p = choice_probabilities(data, theta)
    resid = data.weights[:, None] * (data.freqs - p)
    return np.einsum("ka,kad->d", resid, _pivoted(data))


def logit_mle(
    data: ChoiceData, iters: int = 3000, lr: float = 0.5, theta0: np.ndarray | None = None
) -> np.ndarray:
    """Gradient ascent on the multinomial-logit log-likelihood."""
    d = data.attributes.shape[2]
    theta = np.zeros(d) if theta0 is None else np.array(theta0, dtype=float)
    scale = float(data.weights.sum())
    for _ in range(iters):
        g = logit_grad(data, theta) / scale
        theta = theta + lr * g
        if not np.all(np.isfinite(theta)):
            raise NonFinite("gradient ascent diverged; lower the learning rate")
        if np.abs(g).max() < 1e-12:
            break
    return theta


def sample_choices(
    attributes: np.ndarray, theta: np.ndarray, counts: int, seed: int
) -> ChoiceData:
    """Draw empirical choice frequencies from the logit model."""
    attributes = np.asarray(attributes, dtype=float)
    k_dim, a_dim, _ = attributes.shape
    rng = np.random.default_rng(seed)
    util = attributes @ theta
    util -= util.max(axis=1, keepdims=True)
    p = np.exp(util)
    p /= p.sum(axis=1, keepdims=True)
    freqs = np.empty((k_dim, a_dim))
    for k in range(k_dim):
        draws = rng.multinomial(counts, p[k])
        freqs[k] = draws / counts
    return make_choice_data(attributes, freqs, np.full(k_dim, counts))
