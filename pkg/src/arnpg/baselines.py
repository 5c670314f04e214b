"""Baselines: primal-dual NPG (NPG-PD), CRPO and multi-objective NPG (MO-NPG).

All three use the same closed-form softmax NPG step as the inner loop with
alpha = 0, so they differ from ARNPG only in how the step direction is picked.
"""
from __future__ import annotations

import numpy as np

from .algorithms import RunHistory, Tracker, _exact_values, _selected_index
from .criteria import MaxMinBifunction
from .evaluation import ExactEvaluator
from .inner import npg_logit_step
from .mdp import ParameterError, TabularMDP
from .policy import SoftmaxPolicy, uniform_policy


def _prep(mdp, K, evaluator, init_policy):
    if int(K) < 0:
        raise ParameterError("K must be nonnegative")
    evaluator = evaluator if evaluator is not None else ExactEvaluator(mdp)
    pi = init_policy if init_policy is not None else uniform_policy(mdp.num_states, mdp.num_actions)
    return evaluator, pi


def _thresholds(mdp, b):
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.size != mdp.num_objectives - 1:
        raise ParameterError(f"expected {mdp.num_objectives - 1} thresholds, got {b.size}")
    return b


def npg_step(mdp: TabularMDP, pi: SoftmaxPolicy, q: np.ndarray, eta: float) -> SoftmaxPolicy:
    return SoftmaxPolicy(npg_logit_step(pi.log_probs(), q, eta, mdp.gamma))


def npg_pd(mdp: TabularMDP, b, eta: float, eta_prime: float, K: int, lambda_max: float = 1e4,
           seed: int = 0, oracle_value=None, evaluator=None, init_policy=None,
           record_timing=False) -> RunHistory:
    """Primal NPG on r_1 + sum lam_i r_i, projected dual subgradient on lam."""
    evaluator, pi = _prep(mdp, K, evaluator, init_policy)
    b = _thresholds(mdp, b)
    if not lambda_max > 0:
        raise ParameterError("lambda_max must be positive")
    tr = Tracker(mdp, ("cmdp", b), oracle_value, evaluator.estimated, record_timing)
    hist = RunHistory("NPG-PD")
    lam = np.zeros(b.size)
    ev = evaluator.evaluate(pi)
    for k in range(int(K)):
        coef = np.concatenate(([1.0], lam))
        pi = npg_step(mdp, pi, np.einsum("i,isa->sa", coef, ev.q), eta)
        lam = np.clip(lam - eta_prime * (ev.values[1:] - b), 0.0, lambda_max)
        ev = evaluator.evaluate(pi)
        hist.records.append(tr.record(k + 1, 1, _exact_values(mdp, evaluator, pi, ev),
                                      lam=np.concatenate(([np.nan], lam))))
    hist.final_policy = pi
    hist.avg_values = tr.mean_values if K else None
    hist.metadata.update(eta=eta, eta_prime=eta_prime, lambda_max=lambda_max, K=int(K),
                         b=b.tolist())
    return hist


def crpo_choice(values, b, tolerance: float) -> int:
    """0 for an objective step, else the lowest-index violated objective."""
    v = np.asarray(values, dtype=float)
    bad = np.nonzero(v[1:] < np.asarray(b) - tolerance)[0]
    return 0 if bad.size == 0 else int(bad[0]) + 1


def crpo(mdp: TabularMDP, b, eta: float, tolerance: float = 0.01, K: int = 100, seed: int = 0,
         oracle_value=None, evaluator=None, init_policy=None, record_timing=False) -> RunHistory:
    """Constraint-rectified policy optimization with NPG steps.

    ``history.decisions[k]`` is the objective index stepped on at macro step k+1.
    """
    evaluator, pi = _prep(mdp, K, evaluator, init_policy)
    b = _thresholds(mdp, b)
    if not tolerance >= 0:
        raise ParameterError("tolerance must be nonnegative")
    tr = Tracker(mdp, ("cmdp", b), oracle_value, evaluator.estimated, record_timing)
    hist = RunHistory("CRPO")
    ev = evaluator.evaluate(pi)
    for k in range(int(K)):
        j = crpo_choice(ev.values, b, tolerance)
        hist.decisions.append(j)
        pi = npg_step(mdp, pi, ev.q[j], eta)
        ev = evaluator.evaluate(pi)
        hist.records.append(tr.record(k + 1, 1, _exact_values(mdp, evaluator, pi, ev)))
    hist.final_policy = pi
    hist.avg_values = tr.mean_values if K else None
    hist.metadata.update(eta=eta, tolerance=tolerance, K=int(K), b=b.tolist())
    return hist


def maxmin_subgradient(M: MaxMinBifunction, values) -> np.ndarray:
    """e_j / c_j at the lowest index j attaining min_i v_i / c_i."""
    c = np.asarray(M.c)
    j = int(np.argmin(np.asarray(values, dtype=float) / c))
    g = np.zeros(c.size)
    g[j] = 1.0 / c[j]
    return g


def mo_npg(mdp: TabularMDP, M: MaxMinBifunction, eta: float, K: int, seed: int = 0,
           oracle_value=None, evaluator=None, init_policy=None, record_timing=False) -> RunHistory:
    """Subgradient NPG on F(v) = min_i v_i / c_i."""
    evaluator, pi = _prep(mdp, K, evaluator, init_policy)
    if M.m != mdp.num_objectives:
        raise ParameterError("max-min scales and MDP disagree on the number of objectives")
    tr = Tracker(mdp, ("maxmin", M), oracle_value, evaluator.estimated, record_timing)
    hist = RunHistory("MO-NPG")
    pick = _selected_index(seed, int(K))
    ev = evaluator.evaluate(pi)
    for k in range(int(K)):
        g = maxmin_subgradient(M, ev.values)
        hist.decisions.append(int(np.argmax(g)))
        pi = npg_step(mdp, pi, np.einsum("i,isa->sa", g, ev.q), eta)
        ev = evaluator.evaluate(pi)
        hist.records.append(tr.record(k + 1, 1, _exact_values(mdp, evaluator, pi, ev)))
        if k + 1 == pick:
            hist.returned_policy = pi
    hist.final_policy = pi
    hist.returned_index = pick
    hist.avg_values = tr.mean_values if K else None
    hist.metadata.update(eta=eta, K=int(K), c=list(M.c))
    return hist
