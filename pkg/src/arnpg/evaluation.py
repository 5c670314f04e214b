"""Policy evaluators shared by the algorithm drivers.

A driver never touches the model directly: it asks an evaluator for the value
vector V_{1:m}(rho) and the per-objective Q tables of the current policy, and
for regularized Q tables inside the inner loop.  The exact evaluator solves the
Bellman equations; the sample-based one lives in :mod:`arnpg.sampling`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inner import regularized_reward
from .mdp import TabularMDP, policy_eval
from .policy import SoftmaxPolicy


@dataclass
class Evaluation:
    values: np.ndarray  # (m,)
    q: np.ndarray  # (m, S, A)


class ExactEvaluator:
    estimated = False

    def __init__(self, mdp: TabularMDP):
        self.mdp = mdp

    def evaluate(self, policy: SoftmaxPolicy) -> Evaluation:
        V, Q = policy_eval(self.mdp, policy, self.mdp.rewards)
        return Evaluation(V @ self.mdp.rho, Q)

    def regularized_q_fn(self, anchor: SoftmaxPolicy, alpha: float, reward: np.ndarray):
        mdp = self.mdp
        anchor_logp = anchor.log_probs()

        def q_fn(logp):
            pi = np.exp(logp)
            V, _ = policy_eval(mdp, pi, regularized_reward(reward, anchor_logp, logp, alpha))
            return reward + alpha * anchor_logp + mdp.gamma * mdp.transitions @ V

        return q_fn
