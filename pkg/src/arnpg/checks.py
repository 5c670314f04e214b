"""Randomized lemma and property suites.

Each suite returns a :class:`CheckResult`; ``run_all`` runs the quick ones and
is what ``arnpg check`` calls.  The acceptance tests call the same functions
with their own sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algorithms import InvariantViolation, arnpg_epd, arnpg_imd, check_dual_properties
from .criteria import SmoothScalarizer
from .inner import InnerLoopSpec, inner_loop, improvement_check, improvement_steps
from .mdp import occupancy, policy_eval, random_mdp, state_occupancy, value_vector
from .oracle import soft_vi
from .policy import SoftmaxPolicy, pseudo_kl, weighted_kl
from .sampling import EstimatorConfig, SampledEvaluator


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _random_instance(rng, max_states=8, max_actions=5, m=2):
    S = int(rng.integers(1, max_states + 1))
    A = int(rng.integers(2, max_actions + 1))
    gamma = float(rng.uniform(0.5, 0.95))
    return random_mdp(int(rng.integers(2 ** 63)), S, A, m, gamma)


def _random_policy(rng, S, A, scale=None):
    scale = float(rng.uniform(0.1, 4.0)) if scale is None else scale
    return SoftmaxPolicy(rng.normal(scale=scale, size=(S, A)))


def pseudo_kl_suite(pairs=100, seed=0, tol=1e-10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        mdp = _random_instance(rng)
        S, A = mdp.num_states, mdp.num_actions
        p, q = _random_policy(rng, S, A), _random_policy(rng, S, A)
        d_p = occupancy(mdp, p)
        d_q = occupancy(mdp, q)
        worst = max(worst, abs(pseudo_kl(d_p, d_q) - weighted_kl(d_p.sum(axis=1), p, q)))
    return CheckResult("pseudo-KL equals visitation-weighted KL", worst <= tol,
                       f"{pairs} pairs, max |diff| = {worst:.3e} (tol {tol:g})")


def visitation_distance_suite(pairs=1000, seed=1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(pairs):
        mdp = _random_instance(rng)
        S, A, g = mdp.num_states, mdp.num_actions, mdp.gamma
        p, q = _random_policy(rng, S, A), _random_policy(rng, S, A)
        d_p, d_q = occupancy(mdp, p), occupancy(mdp, q)
        ds_p, ds_q = d_p.sum(axis=1), d_q.sum(axis=1)
        kl = min(weighted_kl(ds_q, q, p), weighted_kl(ds_q, p, q),
                 weighted_kl(ds_p, q, p), weighted_kl(ds_p, p, q))
        lhs = float(np.abs(d_q - d_p).sum())
        rhs = g * math.sqrt(2.0) / (1 - g) * math.sqrt(kl)
        worst = max(worst, lhs - rhs)
    return CheckResult("visitation-distance inequality", worst <= 1e-12,
                       f"{pairs} pairs, max (lhs - rhs) = {worst:.3e}")


def value_difference_suite(pairs=1000, seed=2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(pairs):
        mdp = _random_instance(rng, m=int(rng.integers(1, 4)))
        S, A, g = mdp.num_states, mdp.num_actions, mdp.gamma
        p, q = _random_policy(rng, S, A), _random_policy(rng, S, A)
        lhs = 0.5 * float(np.max(np.abs(value_vector(mdp, p) - value_vector(mdp, q)))) ** 2
        rhs = g ** 2 / (1 - g) ** 4 * weighted_kl(state_occupancy(mdp, q), q, p)
        worst = max(worst, lhs - rhs)
    return CheckResult("value-difference bound", worst <= 1e-12,
                       f"{pairs} pairs, max (lhs - rhs) = {worst:.3e}")


def inner_loop_contraction_suite(instances=20, seed=3, slack=0.05, steps=200) -> CheckResult:
    """Per-step ratio of ||log pi* - log pi^(t)||_inf once the error is below 1e-2."""
    rng = np.random.default_rng(seed)
    worst_excess = -math.inf
    ratios = 0
    unconverged = 0
    for _ in range(instances):
        mdp = _random_instance(rng, max_states=10)
        S, A, g = mdp.num_states, mdp.num_actions, mdp.gamma
        r = rng.uniform(-2, 2, size=(S, A))
        alpha = float(rng.uniform(0.02, 2.0))
        anchor = _random_policy(rng, S, A)
        target = soft_vi(mdp, r, anchor, alpha)[0].log_probs()
        trace = []
        inner_loop(mdp, InnerLoopSpec(r, anchor, alpha, (1 - g) / alpha, steps), trace=trace)
        err = [float(np.max(np.abs(lp - target))) for lp in trace]
        if err[-1] > 1e-10:
            unconverged += 1
        for a, b in zip(err, err[1:]):
            # ratios are only meaningful above the rounding floor
            if 1e-10 < a < 1e-2:
                ratios += 1
                worst_excess = max(worst_excess, b / a - (g + slack))
    ok = unconverged == 0 and (ratios == 0 or worst_excess <= 0)
    return CheckResult("inner-loop linear convergence vs soft VI", ok,
                       f"{instances} instances, {ratios} measured ratios, "
                       f"max(ratio - gamma - {slack}) = {worst_excess:.3e}, unconverged = {unconverged}")


def improvement_suite(instances=5, comparisons=50, seed=4, epsilon=1e-3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(instances):
        mdp = _random_instance(rng)
        S, A, g = mdp.num_states, mdp.num_actions, mdp.gamma
        grad = rng.uniform(0, 3, size=mdp.num_objectives)
        r = np.einsum("i,isa->sa", grad, mdp.rewards)
        alpha = float(rng.uniform(0.05, 2.0))
        anchor = _random_policy(rng, S, A)
        spec = InnerLoopSpec(r, anchor, alpha, (1 - g) / alpha, improvement_steps(r, g, epsilon))
        new = inner_loop(mdp, spec)
        cands = [_random_policy(rng, S, A) for _ in range(comparisons - 2)]
        cands += [anchor, soft_vi(mdp, r, anchor, alpha)[0]]
        for pi in cands:
            _, s = improvement_check(mdp, spec, pi, epsilon, result=new)
            worst = min(worst, s)
    return CheckResult("one-step improvement inequality", worst >= -1e-9,
                       f"{instances}x{comparisons} comparisons at eps={epsilon:g}, min slack = {worst:.3e}")


def dual_property_suite(K=300, seeds=(0, 1, 2), sampled=True) -> CheckResult:
    """Dual properties are asserted inside the EPD driver; this runs full trajectories."""
    runs = 0
    try:
        for seed in seeds:
            mdp = random_mdp(seed, 20, 10, 2, 0.8)
            h = arnpg_epd(mdp, [3.0], 1.0, 0.2, eta=1.0, K=K)
            _recheck(h, mdp, 1.0, [3.0])
            runs += 1
            if sampled:
                ev = SampledEvaluator(mdp, EstimatorConfig(28, 10, 0), seed)
                arnpg_epd(mdp, [3.0], 1.0, 0.2, eta=1.0, K=K // 3, evaluator=ev)
                runs += 1
    except InvariantViolation as err:
        return CheckResult("dual-variable properties", False, str(err))
    return CheckResult("dual-variable properties", True, f"{runs} EPD runs, every step checked")


def _recheck(hist, mdp, eta_prime, b):
    # exact mode: recorded values are the ones the update used
    for rec in hist.records:
        check_dual_properties(rec.lam[1:], eta_prime, rec.values, b, rec.k)


def npg_reduction_suite(steps=50, seed=5) -> CheckResult:
    """IMD with m = 1, F = identity and t_k = 1 against a plain softmax NPG loop."""
    rng = np.random.default_rng(seed)
    mdp = _random_instance(rng, m=1)
    eta = 0.7
    alpha = (1 - mdp.gamma) / eta
    F = SmoothScalarizer("weighted-linear", (1.0,))
    hist = arnpg_imd(mdp, F, alpha, eta, K=steps, keep_policies=True)
    theta = np.zeros((mdp.num_states, mdp.num_actions))
    worst = 0.0
    for pi_k in hist.policies:
        p = np.exp(theta - theta.max(axis=1, keepdims=True))
        p /= p.sum(axis=1, keepdims=True)
        _, Q = policy_eval(mdp, p, mdp.rewards[0])
        theta = theta + eta / (1 - mdp.gamma) * Q
        p = np.exp(theta - theta.max(axis=1, keepdims=True))
        p /= p.sum(axis=1, keepdims=True)
        worst = max(worst, float(np.max(np.abs(p - pi_k.probs()))))
    return CheckResult("t=1 single-objective reduction to NPG", worst <= 1e-10,
                       f"{steps} steps, max prob diff = {worst:.3e}")


def fixed_point_suite(trials=20, seed=6) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        mdp = _random_instance(rng)
        S, A, g = mdp.num_states, mdp.num_actions, mdp.gamma
        anchor = _random_policy(rng, S, A)
        alpha = float(rng.uniform(0.05, 2.0))
        out = inner_loop(mdp, InnerLoopSpec(np.zeros((S, A)), anchor, alpha, (1 - g) / alpha,
                                            int(rng.integers(1, 6))))
        worst = max(worst, float(np.max(np.abs(out.probs() - anchor.probs()))))
    return CheckResult("zero direction keeps the anchor", worst <= 1e-12,
                       f"{trials} trials, max prob diff = {worst:.3e}")


def run_all(quick=True) -> list:
    n = 100 if quick else 1000
    return [
        pseudo_kl_suite(100),
        visitation_distance_suite(n),
        value_difference_suite(n),
        inner_loop_contraction_suite(20),
        improvement_suite(5, 50),
        dual_property_suite(K=150 if quick else 300, seeds=(0,) if quick else (0, 1, 2)),
        npg_reduction_suite(),
        fixed_point_suite(),
    ]

