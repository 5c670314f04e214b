"""Tabular softmax policies and KL divergences between them."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .mdp import ParameterError


@dataclass(frozen=True, eq=False)
class SoftmaxPolicy:
    """pi(a|s) = exp(logits[s, a]) / sum_b exp(logits[s, b]).

    Only logits are stored; probabilities are always derived.
    """

    logits: np.ndarray

    def __post_init__(self):
        theta = np.array(self.logits, dtype=np.float64)
        if theta.ndim != 2 or min(theta.shape) < 1:
            raise ParameterError(f"logits must have shape (S, A), got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ParameterError("logits must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "logits", theta)

    @property
    def shape(self) -> tuple[int, int]:
        return self.logits.shape

    def log_probs(self) -> np.ndarray:
        return self.logits - logsumexp(self.logits, axis=1, keepdims=True)

    def probs(self) -> np.ndarray:
        z = self.logits - self.logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def normalized(self) -> "SoftmaxPolicy":
        """Same policy with logits equal to log-probabilities."""
        return SoftmaxPolicy(self.log_probs())

    def to_dict(self) -> dict:
        return {"logits": self.logits.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "SoftmaxPolicy":
        if not isinstance(doc, dict) or "logits" not in doc:
            raise ParameterError("policy document missing required key 'logits'")
        extra = set(doc) - {"logits"}
        if extra:
            raise ParameterError(f"policy document has unknown keys {sorted(extra)}")
        return cls(np.asarray(doc["logits"], dtype=np.float64))


def save_policy(policy: SoftmaxPolicy, path) -> None:
    Path(path).write_text(json.dumps(policy.to_dict()) + "\n")


def load_policy(path) -> SoftmaxPolicy:
    return SoftmaxPolicy.from_dict(json.loads(Path(path).read_text()))


def action_probs(policy: SoftmaxPolicy) -> np.ndarray:
    return policy.probs()


def uniform_policy(num_states: int, num_actions: int) -> SoftmaxPolicy:
    if num_states < 1 or num_actions < 1:
        raise ParameterError("state and action counts must be positive")
    return SoftmaxPolicy(np.zeros((num_states, num_actions)))


def policy_from_probs(pi: np.ndarray, floor: float = 0.0) -> SoftmaxPolicy:
    """Softmax policy with the given probabilities.

    Zero probabilities are not representable; they are raised to ``floor``
    (or to 1e-300 when floor is 0) before taking logs.
    """
    pi = np.asarray(pi, dtype=np.float64)
    return SoftmaxPolicy(np.log(np.maximum(pi, floor if floor > 0 else 1e-300)))


def kl_rows(log_p: np.ndarray, log_q: np.ndarray) -> np.ndarray:
    """Per-state KL(p(.|s) || q(.|s)) from log-probability tables."""
    p = np.exp(log_p)
    return np.sum(p * (log_p - log_q), axis=1)


def weighted_kl(d_state: np.ndarray, p: SoftmaxPolicy, q: SoftmaxPolicy) -> float:
    """sum_s d(s) KL(p(.|s) || q(.|s))."""
    if p.shape != q.shape:
        raise ParameterError(f"policy shapes differ: {p.shape} vs {q.shape}")
    d_state = np.asarray(d_state, dtype=np.float64)
    per_state = np.maximum(kl_rows(p.log_probs(), q.log_probs()), 0.0)
    return float(d_state @ per_state)


def pseudo_kl(d: np.ndarray, d_prime: np.ndarray) -> float:
    """Bregman divergence between occupancies:
    sum_{s,a} d(s,a) log[(d(s,a)/d(s)) / (d'(s,a)/d'(s))].

    States with d(s) = 0 and pairs with d(s,a) = 0 contribute nothing.
    """
    d = np.asarray(d, dtype=np.float64)
    d_prime = np.asarray(d_prime, dtype=np.float64)
    ds = d.sum(axis=1, keepdims=True)
    dps = d_prime.sum(axis=1, keepdims=True)
    mask = d > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(mask, d / ds, 1.0)
        cond_prime = np.where(mask, d_prime / dps, 1.0)
        terms = np.where(mask, d * (np.log(cond) - np.log(cond_prime)), 0.0)
    return float(terms.sum())


def policy_of_occupancy(d: np.ndarray) -> np.ndarray:
    """pi(a|s) = d(s,a)/d(s); uniform rows where d(s) = 0."""
    d = np.asarray(d, dtype=np.float64)
    ds = d.sum(axis=1, keepdims=True)
    A = d.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        pi = np.where(ds > 0, d / ds, 1.0 / A)
    return pi
