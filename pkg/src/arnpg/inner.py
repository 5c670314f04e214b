"""KL-regularized NPG subroutine (the ARNPG inner loop) in closed form.

With anchor pi_k, the regularized value of a policy pi is

    V~(s) = E[ sum_t gamma^t (r~ + alpha log pi_k - alpha log pi)(s_t, a_t) ]

so that V~(rho) = V_r~(rho) - alpha * D_{d^pi}(pi || pi_k) / (1 - gamma), and
Q~(s,a) = r~(s,a) + alpha log pi_k(a|s) + gamma E[V~(s')].  One NPG step on
softmax logits reads

    log pi' = (1 - eta alpha / (1-gamma)) log pi + eta / (1-gamma) Q~   (+ per-state const)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .mdp import ParameterError, TabularMDP, policy_eval, state_occupancy
from .policy import SoftmaxPolicy, weighted_kl


@dataclass(frozen=True)
class InnerLoopSpec:
    direction_reward: np.ndarray
    anchor: SoftmaxPolicy
    alpha: float
    eta: float
    steps: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not self.eta > 0:
            raise ParameterError(f"eta must be positive, got {self.eta}")
        if int(self.steps) < 1:
            raise ParameterError(f"steps must be a positive integer, got {self.steps}")

    def check_against(self, mdp: TabularMDP) -> None:
        limit = (1.0 - mdp.gamma) / self.alpha
        if self.eta > limit * (1 + 1e-12):
            raise ParameterError(f"eta={self.eta} exceeds (1-gamma)/alpha={limit}")
        if np.shape(self.direction_reward) != (mdp.num_states, mdp.num_actions):
            raise ParameterError("direction reward shape does not match MDP")


def default_eta(mdp: TabularMDP, alpha: float) -> float:
    return (1.0 - mdp.gamma) / alpha


def regularized_reward(reward: np.ndarray, anchor_logp: np.ndarray, logp: np.ndarray,
                       alpha: float) -> np.ndarray:
    return reward + alpha * (anchor_logp - logp)


def regularized_q(mdp: TabularMDP, spec: InnerLoopSpec, policy: SoftmaxPolicy):
    """(V~, Q~) of ``policy`` for the KL-regularized problem defined by ``spec``."""
    logp = policy.log_probs()
    anchor_logp = spec.anchor.log_probs()
    r = np.asarray(spec.direction_reward, dtype=np.float64)
    V, _ = policy_eval(mdp, policy, regularized_reward(r, anchor_logp, logp, spec.alpha))
    Q = r + spec.alpha * anchor_logp + mdp.gamma * mdp.transitions @ V
    return V, Q


def npg_logit_step(logp: np.ndarray, q: np.ndarray, eta: float, gamma: float,
                   alpha: float = 0.0) -> np.ndarray:
    """One softmax NPG step in log space; returns normalized log-probabilities.

    alpha = 0 is the unregularized update log pi + eta/(1-gamma) Q.
    """
    keep = 1.0 - eta * alpha / (1.0 - gamma)
    if abs(keep) < 1e-12:
        z = (eta / (1.0 - gamma)) * q
    else:
        z = keep * logp + (eta / (1.0 - gamma)) * q
    return z - logsumexp(z, axis=1, keepdims=True)


def inner_loop(mdp: TabularMDP, spec: InnerLoopSpec, q_fn=None, first_q=None,
               trace=None) -> SoftmaxPolicy:
    """Run ``spec.steps`` regularized NPG updates starting from the anchor.

    q_fn(logp) -> Q~ overrides the exact regularized Q (sample-based mode).
    first_q, if given, is the unregularized Q_r~ of the anchor itself; at the
    anchor the KL term vanishes so Q~ = alpha log pi_k + Q_r~ there.
    trace, if a list, receives the log-policy after every step.
    """
    spec.check_against(mdp)
    anchor_logp = spec.anchor.log_probs()
    logp = anchor_logp
    for t in range(int(spec.steps)):
        if t == 0 and first_q is not None:
            q = spec.alpha * anchor_logp + first_q
        elif q_fn is not None:
            q = q_fn(logp)
        else:
            _, q = regularized_q(mdp, spec, SoftmaxPolicy(logp))
        logp = npg_logit_step(logp, q, spec.eta, mdp.gamma, spec.alpha)
        if trace is not None:
            trace.append(logp)
    return SoftmaxPolicy(logp)


def improvement_steps(direction_reward: np.ndarray, gamma: float, epsilon: float) -> int:
    """Smallest integer t with t >= log(5 ||r~||_inf / ((1-gamma)^2 eps)) / (1-gamma) + 1."""
    rmax = float(np.max(np.abs(direction_reward)))
    if rmax == 0.0:
        return 1
    bound = math.log(5.0 * rmax / ((1.0 - gamma) ** 2 * epsilon)) / (1.0 - gamma) + 1.0
    return max(1, math.ceil(bound))


def improvement_check(mdp: TabularMDP, spec: InnerLoopSpec, comparison: SoftmaxPolicy,
                       epsilon: float, result: SoftmaxPolicy | None = None):
    """Evaluate the one-step improvement inequality for a comparison policy.

    Returns (holds, slack) with slack = LHS - RHS + epsilon, where
    LHS = V_r~^{pi+}(rho) - alpha D_{d^{pi+}}(pi+ || pi_k)/(1-gamma) and
    RHS = V_r~^{pi}(rho) - alpha [D_{d^pi}(pi || pi_k) - D_{d^pi}(pi || pi+)]/(1-gamma).
    """
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    needed = improvement_steps(spec.direction_reward, mdp.gamma, epsilon)
    if spec.steps < needed:
        raise ParameterError(f"steps={spec.steps} below the required {needed}")
    if abs(spec.eta - default_eta(mdp, spec.alpha)) > 1e-12 * spec.eta:
        raise ParameterError("eta must equal (1-gamma)/alpha")
    new = result if result is not None else inner_loop(mdp, spec)
    g = mdp.gamma
    r = np.asarray(spec.direction_reward, dtype=np.float64)

    def v_rho(pi):
        V, _ = policy_eval(mdp, pi, r)
        return float(V @ mdp.rho)

    d_new = state_occupancy(mdp, new)
    d_cmp = state_occupancy(mdp, comparison)
    lhs = v_rho(new) - spec.alpha * weighted_kl(d_new, new, spec.anchor) / (1 - g)
    rhs = v_rho(comparison) - spec.alpha * (weighted_kl(d_cmp, comparison, spec.anchor)
                                            - weighted_kl(d_cmp, comparison, new)) / (1 - g)
    slack = lhs - rhs + epsilon
    return slack >= 0.0, slack


def regularized_objective(mdp: TabularMDP, spec: InnerLoopSpec, policy: SoftmaxPolicy) -> float:
    """V_r~(rho) - alpha D_{d^pi}(pi || pi_k) / (1-gamma), evaluated directly."""
    V, _ = policy_eval(mdp, policy, spec.direction_reward)
    kl = weighted_kl(state_occupancy(mdp, policy), policy, spec.anchor)
    return float(V @ mdp.rho) - spec.alpha * kl / (1.0 - mdp.gamma)


__all__ = [
    "InnerLoopSpec", "default_eta", "inner_loop", "npg_logit_step", "improvement_check",
    "improvement_steps", "regularized_objective", "regularized_q",
]
