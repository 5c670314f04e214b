"""Finite multi-objective MDPs: representation, exact evaluation, occupancy measures."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg


class ParameterError(ValueError):
    """Invalid argument (shape, range or value)."""


BELLMAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TabularMDP:
    """Finite MDP with ``m`` reward functions.

    transitions[s, a, s'] = P(s'|s,a); rewards[i, s, a] = r_i(s,a) in [0, 1].
    """

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float
    rho: np.ndarray

    def __post_init__(self):
        P = np.array(self.transitions, dtype=np.float64)
        R = np.array(self.rewards, dtype=np.float64)
        rho = np.array(self.rho, dtype=np.float64)
        if P.ndim != 3 or P.shape[0] != P.shape[2] or min(P.shape) < 1:
            raise ParameterError(f"transitions must have shape (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        if R.ndim != 3 or R.shape[1:] != (S, A) or R.shape[0] < 1:
            raise ParameterError(f"rewards must have shape (m, {S}, {A}), got {R.shape}")
        if rho.shape != (S,):
            raise ParameterError(f"rho must have shape ({S},), got {rho.shape}")
        gamma = float(self.gamma)
        if not 0.0 < gamma < 1.0:
            raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(R)) and np.all(np.isfinite(rho))):
            raise ParameterError("MDP tensors must be finite")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > 1e-12:
            raise ParameterError("each transition row must be a probability vector")
        if np.any(rho < 0) or abs(rho.sum() - 1.0) > 1e-12:
            raise ParameterError("rho must be a probability vector")
        if np.any(R < 0) or np.any(R > 1):
            raise ParameterError("rewards must lie in [0, 1]")
        for arr in (P, R, rho):
            arr.setflags(write=False)
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "rewards", R)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "gamma", gamma)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_objectives(self) -> int:
        return self.rewards.shape[0]

    @property
    def value_bound(self) -> float:
        return 1.0 / (1.0 - self.gamma)

    def to_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "num_objectives": self.num_objectives,
            "gamma": self.gamma,
            "rho": self.rho.tolist(),
            "transitions": self.transitions.tolist(),
            "rewards": self.rewards.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TabularMDP":
        required = ("num_states", "num_actions", "num_objectives", "gamma", "rho",
                    "transitions", "rewards")
        if not isinstance(doc, dict):
            raise ParameterError("MDP document must be a JSON object")
        for key in required:
            if key not in doc:
                raise ParameterError(f"MDP document missing required key '{key}'")
        extra = set(doc) - set(required)
        if extra:
            raise ParameterError(f"MDP document has unknown keys {sorted(extra)}")
        try:
            mdp = cls(np.asarray(doc["transitions"], dtype=np.float64),
                      np.asarray(doc["rewards"], dtype=np.float64),
                      doc["gamma"], np.asarray(doc["rho"], dtype=np.float64))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(f"malformed MDP tensor: {exc}") from exc
        declared = (doc["num_states"], doc["num_actions"], doc["num_objectives"])
        actual = (mdp.num_states, mdp.num_actions, mdp.num_objectives)
        if tuple(declared) != actual:
            raise ParameterError(f"declared sizes {declared} do not match tensors {actual}")
        return mdp


def save_mdp(mdp: TabularMDP, path) -> None:
    Path(path).write_text(json.dumps(mdp.to_dict()) + "\n")


def load_mdp(path) -> TabularMDP:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
                             f"{exc.msg}") from exc
    try:
        return TabularMDP.from_dict(doc)
    except ParameterError as exc:
        raise ParameterError(f"{path}: {exc}") from exc


def random_mdp(seed: int, num_states: int, num_actions: int, num_objectives: int,
               gamma: float) -> TabularMDP:
    """Random instance: transition rows are normalized Unif([0,1]^S) draws,
    rewards are i.i.d. Unif([0,1]) and rho is uniform.

    The generator is PCG64 seeded with ``seed``; all transitions are drawn
    first (C order over s, a, s'), then all rewards (order i, s, a).
    """
    if min(num_states, num_actions, num_objectives) < 1:
        raise ParameterError("state, action and objective counts must be positive")
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
    rng = np.random.Generator(np.random.PCG64(seed))
    P = rng.random((num_states, num_actions, num_states))
    P /= P.sum(axis=2, keepdims=True)
    R = rng.random((num_objectives, num_states, num_actions))
    rho = np.full(num_states, 1.0 / num_states)
    return TabularMDP(P, R, gamma, rho)


def as_probs(policy) -> np.ndarray:
    """Probability table of a SoftmaxPolicy, or the array itself."""
    if hasattr(policy, "probs"):
        return policy.probs()
    return np.asarray(policy, dtype=np.float64)


def state_transition_matrix(mdp: TabularMDP, pi: np.ndarray) -> np.ndarray:
    return np.einsum("sa,sat->st", pi, mdp.transitions)


def _check_reward(mdp: TabularMDP, reward: np.ndarray) -> np.ndarray:
    reward = np.asarray(reward, dtype=np.float64)
    if reward.shape[-2:] != (mdp.num_states, mdp.num_actions):
        raise ParameterError(f"reward shape {reward.shape} does not match MDP "
                             f"({mdp.num_states}, {mdp.num_actions})")
    if not np.all(np.isfinite(reward)):
        raise ParameterError("reward must be finite")
    return reward


def policy_eval(mdp: TabularMDP, policy, reward) -> tuple[np.ndarray, np.ndarray]:
    """Exact (V, Q) of ``policy`` for an arbitrary finite reward table r[s, a].

    A stacked reward of shape (n, S, A) yields V of shape (n, S) and Q of shape (n, S, A).
    """
    pi = as_probs(policy)
    reward = _check_reward(mdp, reward)
    if pi.shape != (mdp.num_states, mdp.num_actions):
        raise ParameterError(f"policy shape {pi.shape} does not match MDP")
    stacked = reward.ndim == 3
    r = reward if stacked else reward[None]
    P_pi = state_transition_matrix(mdp, pi)
    r_pi = np.einsum("sa,nsa->sn", pi, r)
    M = np.eye(mdp.num_states) - mdp.gamma * P_pi
    V = scipy.linalg.lu_solve(scipy.linalg.lu_factor(M), r_pi)
    residual = np.max(np.abs(M @ V - r_pi)) if V.size else 0.0
    scale = max(1.0, float(np.max(np.abs(r_pi))) / (1.0 - mdp.gamma))
    if residual > BELLMAN_TOL * scale:
        raise ArithmeticError(f"Bellman residual {residual:.3e} exceeds tolerance")
    V = V.T
    Q = r + mdp.gamma * np.einsum("sat,nt->nsa", mdp.transitions, V)
    if stacked:
        return V, Q
    return V[0], Q[0]


def occupancy(mdp: TabularMDP, policy) -> np.ndarray:
    """Discounted state-action visitation d(s, a) from rho; sums to one."""
    pi = as_probs(policy)
    P_pi = state_transition_matrix(mdp, pi)
    M = np.eye(mdp.num_states) - mdp.gamma * P_pi.T
    d_state = np.linalg.solve(M, (1.0 - mdp.gamma) * mdp.rho)
    d_state = np.maximum(d_state, 0.0)
    return d_state[:, None] * pi


def state_occupancy(mdp: TabularMDP, policy) -> np.ndarray:
    return occupancy(mdp, policy).sum(axis=1)


def flow_residual(mdp: TabularMDP, d: np.ndarray) -> float:
    """Max violation of the occupancy flow constraints."""
    inflow = mdp.gamma * np.einsum("sat,sa->t", mdp.transitions, d) + (1 - mdp.gamma) * mdp.rho
    return float(np.max(np.abs(inflow - d.sum(axis=1))))


def value_vector(mdp: TabularMDP, policy) -> np.ndarray:
    """V_{1:m}(rho) of a policy."""
    V, _ = policy_eval(mdp, policy, mdp.rewards)
    return V @ mdp.rho


def values_from_occupancy(mdp: TabularMDP, d: np.ndarray) -> np.ndarray:
    return np.einsum("isa,sa->i", mdp.rewards, d) / (1.0 - mdp.gamma)


def value_iteration(mdp: TabularMDP, reward, tol: float = 1e-12,
                    max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Optimal V* and a greedy deterministic policy (as probabilities) for one reward."""
    reward = _check_reward(mdp, reward)
    V = np.zeros(mdp.num_states)
    for _ in range(max_iter):
        Q = reward + mdp.gamma * mdp.transitions @ V
        V_new = Q.max(axis=1)
        delta = np.max(np.abs(V_new - V))
        V = V_new
        if delta <= tol * (1.0 - mdp.gamma):
            break
    Q = reward + mdp.gamma * mdp.transitions @ V
    greedy = np.zeros((mdp.num_states, mdp.num_actions))
    greedy[np.arange(mdp.num_states), Q.argmax(axis=1)] = 1.0
    return V, greedy


def optimal_policy(mdp: TabularMDP, reward) -> tuple[np.ndarray, np.ndarray]:
    """Exactly optimal deterministic policy via value iteration then policy iteration.

    Returns (V, pi) with V evaluated exactly for pi.
    """
    _, pi = value_iteration(mdp, reward, tol=1e-10)
    S = mdp.num_states
    for _ in range(1000):
        V, Q = policy_eval(mdp, pi, reward)
        current = Q[np.arange(S), pi.argmax(axis=1)]
        best = Q.argmax(axis=1)
        improve = Q[np.arange(S), best] > current + 1e-13 * max(1.0, np.max(np.abs(Q)))
        if not improve.any():
            return V, pi
        new_actions = np.where(improve, best, pi.argmax(axis=1))
        pi = np.zeros_like(pi)
        pi[np.arange(S), new_actions] = 1.0
    raise ArithmeticError("policy iteration did not terminate")
