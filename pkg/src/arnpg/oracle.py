"""Ground-truth solvers, independent of the policy-gradient drivers.

cmdp_lp / maxmin_lp solve the occupancy-measure LPs with the in-house simplex,
smooth_fw runs away-step Frank-Wolfe over the value polytope with exact
planning as the linear oracle, and soft_vi is soft value iteration for the
KL-regularized subproblem.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .criteria import SmoothScalarizer, scalarize
from .mdp import (ParameterError, TabularMDP, flow_residual, occupancy, optimal_policy,
                  value_vector)
from .policy import SoftmaxPolicy, policy_from_probs, policy_of_occupancy
from .simplex import OPTIMAL, kkt_residuals, simplex_max


@dataclass
class LpSolution:
    status: str
    value: float | None = None
    occupancy: np.ndarray | None = None
    duals: np.ndarray | None = None  # one per reward constraint
    flow_duals: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def flow_constraints(mdp: TabularMDP):
    """Rows sum_a d(s,a) - gamma sum_{s',a'} P(s|s',a') d(s',a') = (1-gamma) rho(s)."""
    S, A = mdp.num_states, mdp.num_actions
    E = np.zeros((S, S * A))
    for s in range(S):
        E[s, s * A:(s + 1) * A] = 1.0
    E -= mdp.gamma * mdp.transitions.reshape(S * A, S).T
    return E, (1.0 - mdp.gamma) * mdp.rho


def _finish(mdp, res, c, A_ub, b_ub, A_eq, b_eq, n_occ, duals_fn=None):
    if res.status != OPTIMAL:
        return LpSolution(res.status)
    resid = kkt_residuals(c, A_ub, b_ub, A_eq, b_eq, res)
    d = res.x[:n_occ].reshape(mdp.num_states, mdp.num_actions)
    resid["flow"] = flow_residual(mdp, d)
    return LpSolution(OPTIMAL, res.value, d, res.y_ub.copy(), res.y_eq.copy(), resid)


def cmdp_lp(mdp: TabularMDP, b) -> LpSolution:
    """max V_1 s.t. V_i >= b_i (i = 2..m) over achievable occupancies."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m = mdp.num_objectives
    if b.size != m - 1:
        raise ParameterError(f"expected {m - 1} thresholds, got {b.size}")
    E, f = flow_constraints(mdp)
    scale = 1.0 / (1.0 - mdp.gamma)
    R = mdp.rewards.reshape(m, -1) * scale
    A_ub = -R[1:]
    b_ub = -b
    res = simplex_max(R[0], A_ub, b_ub, E, f)
    return _finish(mdp, res, R[0], A_ub, b_ub, E, f, R.shape[1])


def maxmin_lp(mdp: TabularMDP, c) -> LpSolution:
    """max t s.t. V_i / c_i >= t; duals are the optimal simplex weights."""
    c = np.asarray(c, dtype=float)
    m = mdp.num_objectives
    if c.shape != (m,) or np.any(c <= 0):
        raise ParameterError("c must be a positive vector of length m")
    E, f = flow_constraints(mdp)
    n = E.shape[1]
    R = mdp.rewards.reshape(m, -1) / ((1.0 - mdp.gamma) * c[:, None])
    # variables (d, t); t >= 0 is harmless since rewards are nonnegative
    A_ub = np.hstack([-R, np.ones((m, 1))])
    b_ub = np.zeros(m)
    A_eq = np.hstack([E, np.zeros((E.shape[0], 1))])
    obj = np.zeros(n + 1)
    obj[-1] = 1.0
    res = simplex_max(obj, A_ub, b_ub, A_eq, f)
    return _finish(mdp, res, obj, A_ub, b_ub, A_eq, f, n)


def occupancy_to_policy(d) -> SoftmaxPolicy:
    """pi(a|s) = d(s,a)/d(s) (uniform where d(s) = 0); zero entries become 1e-300."""
    return policy_from_probs(policy_of_occupancy(d))


@dataclass
class FwResult:
    value: float
    values: np.ndarray
    occupancy: np.ndarray
    gap: float
    iterations: int
    converged: bool
    weights: dict = field(default_factory=dict)


def _lmo(mdp, g):
    reward = np.einsum("i,isa->sa", g, mdp.rewards)
    _, pi = optimal_policy(mdp, reward)
    return tuple(pi.argmax(axis=1)), pi


def smooth_fw(mdp: TabularMDP, F: SmoothScalarizer, iterations: int = 10_000,
              tol: float = 1e-6) -> FwResult:
    """Away-step Frank-Wolfe for max F(V(rho)) over the achievable value polytope.

    Vertices are value vectors of deterministic policies.  The returned gap
    g.(s - x) bounds F* - F(x) from above by concavity.
    """
    if F.m != mdp.num_objectives:
        raise ParameterError("scalarizer and MDP disagree on the number of objectives")
    verts = {}
    occs = {}

    def vertex(key, pi):
        if key not in verts:
            verts[key] = value_vector(mdp, pi)
            occs[key] = occupancy(mdp, pi)
        return verts[key]

    key0, pi0 = _lmo(mdp, np.ones(F.m))
    x = vertex(key0, pi0).copy()
    w = {key0: 1.0}
    gap = np.inf
    it = 0
    for it in range(1, iterations + 1):
        _, g = scalarize(F, x)
        key_s, pi_s = _lmo(mdp, g)
        s = vertex(key_s, pi_s)
        gap = float(g @ (s - x))
        if gap <= tol:
            break
        key_v = min(w, key=lambda k: float(g @ verts[k]))
        away_gap = float(g @ (x - verts[key_v]))
        if gap >= away_gap or len(w) == 1:
            direction, tmax, away = s - x, 1.0, False
        else:
            wv = w[key_v]
            direction, tmax, away = x - verts[key_v], wv / (1.0 - wv), True

        def slope(t):
            return float(scalarize(F, x + t * direction)[1] @ direction)

        if slope(tmax) >= 0:
            t = tmax
        else:
            t = brentq(slope, 0.0, tmax, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        if away:
            for k in w:
                w[k] *= 1.0 + t
            w[key_v] -= t
            if t == tmax or w[key_v] <= 1e-15:
                del w[key_v]
        else:
            for k in w:
                w[k] *= 1.0 - t
            w[key_s] = w.get(key_s, 0.0) + t
            if t == 1.0:
                w = {key_s: 1.0}
        x = sum(wk * verts[k] for k, wk in w.items())
    total = sum(w.values())
    d = sum(wk * occs[k] for k, wk in w.items()) / total
    return FwResult(float(scalarize(F, x)[0]), x, d, gap, it, gap <= tol, dict(w))


def soft_vi(mdp: TabularMDP, reward, anchor: SoftmaxPolicy, alpha: float, tol: float = 1e-12,
            max_iter: int = 1_000_000):
    """Optimum of the KL-regularized problem with anchor pi_k.

    V~*(s) = alpha log sum_a pi_k(a|s) exp((r~ + gamma P V~*)(s,a) / alpha).
    Returns (policy, Q~*, V~*) with Q~* = r~ + alpha log pi_k + gamma P V~*.
    """
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    r = np.asarray(reward, dtype=np.float64)
    logk = anchor.log_probs()
    V = np.zeros(mdp.num_states)
    for _ in range(max_iter):
        Q = r + alpha * logk + mdp.gamma * mdp.transitions @ V
        V_new = alpha * logsumexp(Q / alpha, axis=1)
        delta = float(np.max(np.abs(V_new - V)))
        V = V_new
        if delta <= tol:
            break
    Q = r + alpha * logk + mdp.gamma * mdp.transitions @ V
    logp = Q / alpha - logsumexp(Q / alpha, axis=1, keepdims=True)
    return SoftmaxPolicy(logp), Q, V


def oracle_value(mdp: TabularMDP, criterion) -> float:
    """F* for ('cmdp', b) | ('maxmin', M) | ('smooth', F)."""
    kind, obj = criterion
    if kind == "cmdp":
        sol = cmdp_lp(mdp, obj)
        if not sol.optimal:
            raise ParameterError(f"constrained problem is {sol.status}")
        return sol.value
    if kind == "maxmin":
        sol = maxmin_lp(mdp, obj.c)
        if not sol.optimal:
            raise ParameterError(f"max-min LP is {sol.status}")
        return sol.value
    if kind == "smooth":
        return smooth_fw(mdp, obj, tol=1e-9).value
    raise ParameterError(f"unknown criterion kind '{kind}'")
