"""Generative-model (sample-based) estimation of values and Q tables.

Every estimator call gets a fresh call index ``c``.  The rollouts that start
at pair (s, a) draw their uniforms from

    PCG64(SeedSequence(entropy=(sample_seed, run_seed), spawn_key=(c, s, a)))

and rollouts that start from rho use spawn_key (c, S, 0).  Streams are per
pair, so results do not depend on the order in which pairs are simulated.
Returns are truncated after ``horizon`` steps, which biases estimates by at
most gamma^H / (1 - gamma) for rewards in [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .evaluation import Evaluation
from .inner import regularized_reward
from .mdp import ParameterError, TabularMDP, as_probs


@dataclass(frozen=True)
class EstimatorConfig:
    horizon: int = 28
    batch: int = 10
    sample_seed: int = 0
    # None: derive V(rho) from the Q estimates; otherwise number of rho-start rollouts
    value_batch: int | None = None

    def __post_init__(self):
        if int(self.horizon) < 1 or int(self.batch) < 1:
            raise ParameterError("horizon and batch must be positive")
        if self.value_batch is not None and int(self.value_batch) < 1:
            raise ParameterError("value_batch must be positive")

    def bias_bound(self, gamma: float, reward_scale: float = 1.0) -> float:
        return reward_scale * gamma ** self.horizon / (1.0 - gamma)


def horizon_for_bias(tol: float, gamma: float) -> int:
    """Smallest H with gamma^H / (1 - gamma) <= tol."""
    return max(1, math.ceil(math.log(tol * (1.0 - gamma)) / math.log(gamma)))


def _cdf(p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p, axis=-1)
    c[..., -1] = np.maximum(c[..., -1], 1.0)
    return c


class GenerativeSampler:
    """Draws independent next states from any (s, a) of a known MDP."""

    def __init__(self, mdp: TabularMDP, seed=0):
        self.mdp = mdp
        self.entropy = tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
        self.p_cdf = _cdf(mdp.transitions)
        self.rho_cdf = _cdf(mdp.rho)
        self.calls = 0

    def _next_call(self) -> int:
        c = self.calls
        self.calls += 1
        return c

    def _stream(self, call: int, key: tuple[int, int], shape) -> np.ndarray:
        ss = np.random.SeedSequence(entropy=list(self.entropy), spawn_key=(call,) + key)
        return np.random.Generator(np.random.PCG64(ss)).random(shape)

    def sample_next(self, s: int, a: int, n: int) -> np.ndarray:
        """n independent draws of s' ~ P(.|s, a)."""
        u = self._stream(self._next_call(), (s, a), n)
        return kernels.sample_categorical(self.p_cdf[s, a], u)

    def pair_uniforms(self, batch: int, horizon: int) -> np.ndarray:
        S, A = self.mdp.num_states, self.mdp.num_actions
        c = self._next_call()
        u = np.empty((S * A, batch, horizon, 2))
        for s in range(S):
            for a in range(A):
                u[s * A + a] = self._stream(c, (s, a), (batch, horizon, 2))
        return u

    def rho_uniforms(self, batch: int, horizon: int) -> np.ndarray:
        c = self._next_call()
        return self._stream(c, (self.mdp.num_states, 0), (batch, horizon, 2))[None]

    def q_rollouts(self, policy, tables0, tables, cfg: EstimatorConfig) -> np.ndarray:
        """Estimates of E[tables0(s,a) + sum_{t>=1} gamma^t tables(s_t,a_t)] for every (s, a).

        tables0/tables have shape (n, S, A); the result has shape (n, S, A).
        """
        S, A = self.mdp.num_states, self.mdp.num_actions
        pi_cdf = _cdf(as_probs(policy))
        u = self.pair_uniforms(cfg.batch, cfg.horizon)
        starts = np.arange(S * A)
        out = kernels.rollout_returns(self.p_cdf, pi_cdf, self.rho_cdf,
                                      np.asarray(tables0, dtype=np.float64),
                                      np.asarray(tables, dtype=np.float64), self.mdp.gamma,
                                      starts // A, starts % A, u, False)
        return out.T.reshape(-1, S, A)

    def value_rollouts(self, policy, tables, cfg: EstimatorConfig, batch: int) -> np.ndarray:
        pi_cdf = _cdf(as_probs(policy))
        u = self.rho_uniforms(batch, cfg.horizon)
        zero = np.zeros(1, dtype=np.int64)
        tables = np.asarray(tables, dtype=np.float64)
        out = kernels.rollout_returns(self.p_cdf, pi_cdf, self.rho_cdf, tables, tables,
                                      self.mdp.gamma, zero, zero, u, True)
        return out[0]


def _stack(reward, mdp: TabularMDP):
    r = np.asarray(reward, dtype=np.float64)
    if r.shape[-2:] != (mdp.num_states, mdp.num_actions):
        raise ParameterError("reward shape does not match MDP")
    return r if r.ndim == 3 else r[None], r.ndim == 3


def mc_q_estimate(sampler: GenerativeSampler, policy, reward, cfg: EstimatorConfig) -> np.ndarray:
    """Monte-Carlo Q^pi_r(s, a) for every pair, ``cfg.batch`` rollouts each."""
    r, stacked = _stack(reward, sampler.mdp)
    q = sampler.q_rollouts(policy, r, r, cfg)
    return q if stacked else q[0]


def mc_value_estimate(sampler: GenerativeSampler, policy, reward, cfg: EstimatorConfig,
                      batch: int | None = None):
    """Monte-Carlo V^pi_r(rho) from ``batch`` (default cfg.batch) rollouts started at rho."""
    r, stacked = _stack(reward, sampler.mdp)
    v = sampler.value_rollouts(policy, r, cfg, batch or cfg.batch)
    return v if stacked else float(v[0])


class SampledEvaluator:
    """Evaluator backed by a generative model instead of Bellman solves."""

    estimated = True

    def __init__(self, mdp: TabularMDP, cfg: EstimatorConfig, run_seed: int = 0):
        self.mdp = mdp
        self.cfg = cfg
        self.sampler = GenerativeSampler(mdp, (int(cfg.sample_seed), int(run_seed)))

    def evaluate(self, policy) -> Evaluation:
        mdp = self.mdp
        q = mc_q_estimate(self.sampler, policy, mdp.rewards, self.cfg)
        if self.cfg.value_batch is None:
            pi = as_probs(policy)
            values = np.einsum("s,sa,isa->i", mdp.rho, pi, q)
        else:
            values = mc_value_estimate(self.sampler, policy, mdp.rewards, self.cfg,
                                       self.cfg.value_batch)
        return Evaluation(values, q)

    def regularized_q_fn(self, anchor, alpha: float, reward: np.ndarray):
        anchor_logp = anchor.log_probs()
        first = reward + alpha * anchor_logp

        def q_fn(logp):
            later = regularized_reward(reward, anchor_logp, logp, alpha)
            return self.sampler.q_rollouts(np.exp(logp), first[None], later[None], self.cfg)[0]

        return q_fn


def sampled_run(algorithm: str, mdp: TabularMDP, cfg: EstimatorConfig, hyper: dict, K: int,
                seed: int = 0, criterion=None, **kw):
    """Run a driver with the sample-based evaluator; see :func:`arnpg.runner.run_algorithm`."""
    from .runner import run_algorithm

    return run_algorithm(algorithm, mdp, hyper, K, seed=seed, criterion=criterion,
                         evaluator=SampledEvaluator(mdp, cfg, seed), **kw)
