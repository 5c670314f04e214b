"""ARNPG macro-step drivers: IMD (smooth scalarization), EPD (constrained MDP)
and OMDA (max-min).

Each driver talks to an evaluator (exact or sample-based) for the values and
Q tables it needs, and records the *exact* value vector of every iterate so
that gaps and violations are always measured on the true model.
"""
from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .criteria import MaxMinBifunction, SmoothScalarizer, scalarize
from .evaluation import ExactEvaluator
from .inner import InnerLoopSpec, default_eta, inner_loop
from .mdp import ParameterError, TabularMDP, value_vector
from .policy import SoftmaxPolicy, uniform_policy


class InvariantViolation(AssertionError):
    """A runtime invariant (dual property, theorem bound) failed."""


# --------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class ScheduleSpec:
    """t_k schedule.  mode 'fixed' returns ``t``; mode 'theorem' evaluates the
    theorem formula of ``kind`` (imd | epd | omda) from the remaining fields."""

    mode: str = "fixed"
    t: int = 1
    kind: str | None = None
    K: int | None = None
    L: float | None = None
    beta: float | None = None
    m: int | None = None
    eta_prime: float | None = None
    num_actions: int | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "theorem"):
            raise ParameterError(f"unknown schedule mode '{self.mode}'")
        if self.mode == "fixed" and int(self.t) < 1:
            raise ParameterError("fixed schedule needs t >= 1")

    @property
    def theorem(self) -> bool:
        return self.mode == "theorem"

    def filled(self, **kw) -> "ScheduleSpec":
        """Copy with the given fields set where they are still None."""
        upd = {k: v for k, v in kw.items() if getattr(self, k) is None}
        return dataclasses.replace(self, **upd)


def _ceil_schedule(numer: float, denom: float, gamma: float) -> int:
    if denom <= 0 or numer <= 0:
        return 1
    x = math.log(numer / denom) / (1.0 - gamma) + 1.0
    return max(1, math.ceil(x))


def tk_schedule(spec: ScheduleSpec, k: int = 0, dual=None) -> int:
    if not spec.theorem:
        return int(spec.t)
    missing = [n for n in ("kind", "K", "num_actions", "gamma") if getattr(spec, n) is None]
    if missing:
        raise ParameterError(f"theorem schedule is missing {missing}")
    logA = math.log(spec.num_actions)
    if logA == 0.0:
        return 1
    g = spec.gamma
    if spec.kind == "imd":
        return _ceil_schedule(5 * spec.L * spec.K, spec.beta * logA, g)
    if spec.kind == "omda":
        return _ceil_schedule(5 * spec.L * spec.K, 6 * spec.beta * logA, g)
    if spec.kind == "epd":
        lam = np.zeros(0) if dual is None else np.asarray(getattr(dual, "lam", dual))
        Lk = 1.0 + spec.eta_prime * (spec.m - 1) / (1 - g) + float(np.sum(lam))
        return _ceil_schedule(5 * Lk * spec.K, 2 * spec.eta_prime * spec.m * logA, g)
    raise ParameterError(f"unknown schedule kind '{spec.kind}'")


# --------------------------------------------------------------------------
# run records


@dataclass
class RunRecord:
    k: int
    T: int
    t_k: int
    values: np.ndarray
    F: float | None = None
    lam: np.ndarray | None = None  # length m; entries not used by the method are nan
    avg_gap: float | None = None
    avg_violation: np.ndarray | None = None  # length m-1 (constraints 2..m)
    last_violation: float | None = None
    estimated: bool = False
    wall_ms: float | None = None


@dataclass
class RunHistory:
    algorithm: str
    records: list = field(default_factory=list)
    final_policy: SoftmaxPolicy | None = None
    returned_policy: SoftmaxPolicy | None = None
    returned_index: int | None = None
    avg_values: np.ndarray | None = None
    decisions: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    policies: list | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.values for r in self.records])


class Tracker:
    """Running averages, gaps and violations for one of three criteria.

    criterion: ('smooth', F) | ('cmdp', b) | ('maxmin', M); b has length m-1.
    """

    def __init__(self, mdp, criterion, oracle_value=None, estimated=False, timing=False):
        self.mdp = mdp
        self.kind, self.obj = criterion
        self.oracle_value = oracle_value
        self.estimated = estimated
        self.timing = timing
        self.sum_v = np.zeros(mdp.num_objectives)
        self.sum_f = 0.0
        self.n = 0
        self.T = 0
        self._t0 = time.perf_counter()

    def f_of(self, v) -> float:
        if self.kind == "smooth":
            return scalarize(self.obj, v)[0]
        if self.kind == "maxmin":
            return self.obj.value(v)
        return float(v[0])

    def record(self, k, t_k, values, lam=None, micro=1) -> RunRecord:
        values = np.asarray(values, dtype=float)
        self.n += 1
        self.T += micro * t_k
        self.sum_v = self.sum_v + values
        F = self.f_of(values)
        self.sum_f += F
        mean_v = self.sum_v / self.n
        gap = None
        viol = None
        last = None
        if self.kind == "smooth":
            if self.oracle_value is not None:
                gap = self.oracle_value - self.sum_f / self.n
        elif self.kind == "maxmin":
            if self.oracle_value is not None:
                gap = self.oracle_value - self.obj.value(mean_v)
        else:
            b = np.asarray(self.obj, dtype=float)
            if self.oracle_value is not None:
                gap = self.oracle_value - mean_v[0]
            viol = np.maximum(0.0, b - mean_v[1:])
            last = float(np.max(np.maximum(0.0, b - values[1:]))) if b.size else 0.0
        wall = (time.perf_counter() - self._t0) * 1e3 if self.timing else None
        return RunRecord(k=k, T=self.T, t_k=t_k, values=values, F=F,
                         lam=None if lam is None else np.asarray(lam, dtype=float),
                         avg_gap=gap, avg_violation=viol, last_violation=last,
                         estimated=self.estimated, wall_ms=wall)

    @property
    def mean_values(self):
        return self.sum_v / max(self.n, 1)


def _exact_values(mdp, evaluator, policy, ev):
    if ev is not None and not evaluator.estimated:
        return ev.values
    return value_vector(mdp, policy)


def _check_bound(name, k, measured, bound):
    if measured is not None and not measured <= bound:
        raise InvariantViolation(f"{name} bound violated at k={k}: {measured!r} > {bound!r}")


def _inner(mdp, evaluator, reward, anchor, alpha, eta, steps, first_q):
    spec = InnerLoopSpec(reward, anchor, alpha, eta, steps)
    q_fn = evaluator.regularized_q_fn(anchor, alpha, reward) if steps > 1 else None
    return inner_loop(mdp, spec, q_fn=q_fn, first_q=first_q)


def _setup(mdp, alpha, eta, K, evaluator, init_policy):
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    if int(K) < 0:
        raise ParameterError("K must be nonnegative")
    eta = default_eta(mdp, alpha) if eta is None else float(eta)
    evaluator = evaluator if evaluator is not None else ExactEvaluator(mdp)
    pi0 = init_policy if init_policy is not None else uniform_policy(mdp.num_states, mdp.num_actions)
    return eta, evaluator, pi0


def _geq(a, b) -> bool:
    # preconditions only; computed thresholds like beta/(1-gamma)^3 carry rounding
    return a >= b * (1 - 1e-12)


def _require_theorem(cond: bool, msg: str):
    if not cond:
        raise ParameterError("theorem-mode condition failed: " + msg)


def _is_uniform(pi: SoftmaxPolicy) -> bool:
    p = pi.probs()
    return bool(np.allclose(p, 1.0 / p.shape[1], rtol=0, atol=1e-15))


def _selected_index(seed, K):
    if K < 1:
        return None
    return int(np.random.default_rng(seed).integers(1, K + 1))


# --------------------------------------------------------------------------
# ARNPG-IMD


def arnpg_imd(mdp: TabularMDP, F: SmoothScalarizer, alpha: float, eta=None,
              schedule: ScheduleSpec = ScheduleSpec(), K: int = 100, seed: int = 0,
              oracle_value=None, evaluator=None, init_policy=None, record_timing=False,
              keep_policies=False) -> RunHistory:
    """Implicit mirror descent on F(V(rho)); returns the best-F iterate."""
    eta, evaluator, pi = _setup(mdp, alpha, eta, K, evaluator, init_policy)
    if F.m != mdp.num_objectives:
        raise ParameterError("scalarizer and MDP disagree on the number of objectives")
    g = mdp.gamma
    if schedule.theorem:
        schedule = schedule.filled(kind="imd", K=K, L=F.lipschitz, beta=F.beta,
                                   num_actions=mdp.num_actions, gamma=g)
        _require_theorem(_geq(alpha, F.beta / (1 - g) ** 3), "alpha >= beta/(1-gamma)^3")
        _require_theorem(abs(eta - default_eta(mdp, alpha)) <= 1e-12 * eta, "eta = (1-gamma)/alpha")
        _require_theorem(_is_uniform(pi), "uniform initial policy")
    tr = Tracker(mdp, ("smooth", F), oracle_value, evaluator.estimated, record_timing)
    hist = RunHistory("IMD", policies=[] if keep_policies else None)
    ev = evaluator.evaluate(pi)
    best = (-math.inf, None, None)
    logA = math.log(mdp.num_actions)
    for k in range(int(K)):
        _, grad = scalarize(F, ev.values)
        reward = np.einsum("i,isa->sa", grad, mdp.rewards)
        first_q = np.einsum("i,isa->sa", grad, ev.q)
        t_k = tk_schedule(schedule, k)
        pi = _inner(mdp, evaluator, reward, pi, alpha, eta, t_k, first_q)
        ev = evaluator.evaluate(pi)
        rec = tr.record(k + 1, t_k, _exact_values(mdp, evaluator, pi, ev))
        hist.records.append(rec)
        if keep_policies:
            hist.policies.append(pi)
        if rec.F > best[0]:
            best = (rec.F, k + 1, pi)
        if schedule.theorem:
            _check_bound("IMD gap", k + 1, rec.avg_gap, 2 * alpha * logA / ((1 - g) * (k + 1)))
    hist.final_policy = pi
    hist.returned_index, hist.returned_policy = best[1], best[2]
    hist.avg_values = tr.mean_values if K else None
    hist.metadata.update(alpha=alpha, eta=eta, K=int(K), schedule=schedule.mode)
    return hist


# --------------------------------------------------------------------------
# ARNPG-EPD


@dataclass
class DualState:
    lam: np.ndarray  # one entry per constraint (objectives 2..m)

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=np.float64)
        if np.any(~np.isfinite(self.lam)) or np.any(self.lam < 0):
            raise ParameterError("dual variables must be finite and nonnegative")


def epd_coefficients(dual: DualState, eta_prime: float, values, b) -> np.ndarray:
    """(1, lam_i + eta' (b_i - V_i)) for the objective and each constraint."""
    diff = np.asarray(values, dtype=float)[1:] - np.asarray(b, dtype=float)
    return np.concatenate(([1.0], dual.lam - eta_prime * diff))


def epd_direction_reward(mdp: TabularMDP, dual: DualState, eta_prime: float, current_values,
                         b=None) -> np.ndarray:
    """r~ = r_1 + sum_i (lam_i + eta'(b_i - V_i)) r_i."""
    coef = epd_coefficients(dual, eta_prime, current_values, b)
    return np.einsum("i,isa->sa", coef, mdp.rewards)


def epd_dual_update(dual: DualState, eta_prime: float, new_values, b) -> DualState:
    """lam_i <- max(eta'(V_i - b_i), lam_i + eta'(b_i - V_i))."""
    step = eta_prime * (np.asarray(new_values, dtype=float)[1:] - np.asarray(b, dtype=float))
    return DualState(np.maximum(step, dual.lam - step))


def check_dual_properties(lam, eta_prime, values, b, k) -> None:
    """Nonnegativity, floor protection and magnitude properties of the dual iterate."""
    step = eta_prime * (np.asarray(values, dtype=float)[1:] - np.asarray(b, dtype=float))
    lam = np.asarray(lam)
    if np.any(lam < 0):
        raise InvariantViolation(f"negative dual at k={k}: {lam}")
    if np.any(lam - step < 0):
        raise InvariantViolation(f"lam + eta'(b - V) < 0 at k={k}: {lam - step}")
    if k > 0 and np.any(np.abs(lam) < np.abs(step)):
        raise InvariantViolation(f"|lam| < eta'|V - b| at k={k}")


def arnpg_epd(mdp: TabularMDP, b, eta_prime: float, alpha: float, eta=None,
              schedule: ScheduleSpec = ScheduleSpec(), K: int = 100, seed: int = 0,
              oracle_value=None, lambda_star=None, evaluator=None, init_policy=None,
              record_timing=False, keep_policies=False) -> RunHistory:
    """Extra primal-dual ARNPG for max V_1 s.t. V_i >= b_i (i = 2..m)."""
    eta, evaluator, pi = _setup(mdp, alpha, eta, K, evaluator, init_policy)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m = mdp.num_objectives
    if b.size != m - 1:
        raise ParameterError(f"expected {m - 1} thresholds, got {b.size}")
    if not eta_prime > 0:
        raise ParameterError("eta_prime must be positive")
    g = mdp.gamma
    if schedule.theorem:
        schedule = schedule.filled(kind="epd", K=K, m=m, eta_prime=eta_prime,
                                   num_actions=mdp.num_actions, gamma=g)
        _require_theorem(_geq(1.0, eta_prime), "eta' in (0, 1]")
        _require_theorem(_geq(alpha, 2 * eta_prime * m / (1 - g) ** 3), "alpha >= 2 eta' m/(1-gamma)^3")
        _require_theorem(abs(eta - default_eta(mdp, alpha)) <= 1e-12 * eta, "eta = (1-gamma)/alpha")
        _require_theorem(_is_uniform(pi), "uniform initial policy")
    tr = Tracker(mdp, ("cmdp", b), oracle_value, evaluator.estimated, record_timing)
    hist = RunHistory("EPD", policies=[] if keep_policies else None)
    pick = _selected_index(seed, int(K))
    ev = evaluator.evaluate(pi)
    dual = DualState(np.maximum(eta_prime * (ev.values[1:] - b), 0.0))
    check_dual_properties(dual.lam, eta_prime, ev.values, b, 0)
    logA = math.log(mdp.num_actions)
    lam_norm = None if lambda_star is None else float(np.linalg.norm(lambda_star))
    for k in range(int(K)):
        coef = epd_coefficients(dual, eta_prime, ev.values, b)
        if np.any(coef < 0):
            raise InvariantViolation(f"negative direction coefficient at k={k}: {coef}")
        reward = np.einsum("i,isa->sa", coef, mdp.rewards)
        first_q = np.einsum("i,isa->sa", coef, ev.q)
        t_k = tk_schedule(schedule, k, dual)
        pi = _inner(mdp, evaluator, reward, pi, alpha, eta, t_k, first_q)
        ev = evaluator.evaluate(pi)
        dual = epd_dual_update(dual, eta_prime, ev.values, b)
        check_dual_properties(dual.lam, eta_prime, ev.values, b, k + 1)
        rec = tr.record(k + 1, t_k, _exact_values(mdp, evaluator, pi, ev),
                        lam=np.concatenate(([np.nan], dual.lam)))
        hist.records.append(rec)
        if keep_policies:
            hist.policies.append(pi)
        if k + 1 == pick:
            hist.returned_policy = pi
        if schedule.theorem:
            n = k + 1
            _check_bound("EPD gap", n, rec.avg_gap, 3 * alpha * logA / ((1 - g) * n))
            if lam_norm is not None and rec.avg_violation.size:
                vb = (2 * lam_norm / eta_prime
                      + 3 * math.sqrt(alpha * logA / ((1 - g) * eta_prime))) / n
                _check_bound("EPD violation", n, float(np.max(rec.avg_violation)), vb)
    hist.final_policy = pi
    hist.returned_index = pick
    hist.avg_values = tr.mean_values if K else None
    hist.metadata.update(alpha=alpha, eta=eta, eta_prime=eta_prime, K=int(K), b=b.tolist(),
                         schedule=schedule.mode, final_lambda=dual.lam.tolist())
    return hist


# --------------------------------------------------------------------------
# ARNPG-OMDA


@dataclass
class OmdaState:
    anchor: SoftmaxPolicy
    half: SoftmaxPolicy
    log_lam: np.ndarray
    log_lam_half: np.ndarray

    @property
    def lam(self):
        return np.exp(self.log_lam)

    @property
    def lam_half(self):
        return np.exp(self.log_lam_half)


def simplex_mirror_step(log_lam: np.ndarray, grad: np.ndarray, eta_prime: float) -> np.ndarray:
    """argmin <grad, lam> + KL(lam || lam_k)/eta' over the simplex, in log space."""
    z = np.asarray(log_lam) - eta_prime * np.asarray(grad)
    return z - logsumexp(z)


def arnpg_omda(mdp: TabularMDP, M: MaxMinBifunction, eta_prime: float, alpha: float, eta=None,
               schedule: ScheduleSpec = ScheduleSpec(), K: int = 100, seed: int = 0,
               oracle_value=None, evaluator=None, init_policy=None, record_timing=False,
               keep_policies=False) -> RunHistory:
    """Optimistic mirror descent-ascent on Phi(v, lam) = sum_i v_i lam_i / c_i."""
    eta, evaluator, pi = _setup(mdp, alpha, eta, K, evaluator, init_policy)
    m = mdp.num_objectives
    if M.m != m:
        raise ParameterError("max-min scales and MDP disagree on the number of objectives")
    if not eta_prime > 0:
        raise ParameterError("eta_prime must be positive")
    g = mdp.gamma
    c = np.asarray(M.c)
    if schedule.theorem:
        schedule = schedule.filled(kind="omda", K=K, L=M.lipschitz, beta=M.beta,
                                   num_actions=mdp.num_actions, gamma=g)
        _require_theorem(_geq(1.0 / (6 * M.beta), eta_prime), "eta' <= 1/(6 beta)")
        _require_theorem(_geq(alpha, 6 * M.beta / (1 - g) ** 3), "alpha >= 6 beta/(1-gamma)^3")
        _require_theorem(abs(eta - default_eta(mdp, alpha)) <= 1e-12 * eta, "eta = (1-gamma)/alpha")
        _require_theorem(_is_uniform(pi), "uniform initial policy")
    tr = Tracker(mdp, ("maxmin", M), oracle_value, evaluator.estimated, record_timing)
    hist = RunHistory("OMDA", policies=[] if keep_policies else None)
    pick = _selected_index(seed, int(K))
    u = np.full(m, -math.log(m))
    st = OmdaState(pi, pi, u.copy(), u.copy())
    ev_half = evaluator.evaluate(st.half)
    logA = math.log(mdp.num_actions)
    for k in range(int(K)):
        t_k = tk_schedule(schedule, k)
        ev_anchor = ev_half if k == 0 else evaluator.evaluate(st.anchor)
        # half step from the anchor with the gradients at (pi~_k, lam~_k)
        gv = st.lam_half / c
        reward = np.einsum("i,isa->sa", gv, mdp.rewards)
        half = _inner(mdp, evaluator, reward, st.anchor, alpha, eta, t_k,
                      np.einsum("i,isa->sa", gv, ev_anchor.q))
        log_half = simplex_mirror_step(st.log_lam, ev_half.values / c, eta_prime)
        ev_half = evaluator.evaluate(half)
        # full step from the same anchor with the gradients at (pi~_{k+1}, lam~_{k+1})
        gv = np.exp(log_half) / c
        reward = np.einsum("i,isa->sa", gv, mdp.rewards)
        anchor = _inner(mdp, evaluator, reward, st.anchor, alpha, eta, t_k,
                        np.einsum("i,isa->sa", gv, ev_anchor.q))
        log_lam = simplex_mirror_step(st.log_lam, ev_half.values / c, eta_prime)
        st = OmdaState(anchor, half, log_lam, log_half)
        lam_half = st.lam_half
        if abs(lam_half.sum() - 1.0) > 1e-12 or np.any(lam_half <= 0):
            raise InvariantViolation(f"OMDA weights left the open simplex at k={k + 1}")
        rec = tr.record(k + 1, t_k, _exact_values(mdp, evaluator, half, ev_half),
                        lam=lam_half, micro=2)
        hist.records.append(rec)
        if keep_policies:
            hist.policies.append(half)
        if k + 1 == pick:
            hist.returned_policy = half
        if schedule.theorem:
            n = k + 1
            bound = 3 * alpha * logA / ((1 - g) * n) + math.log(m) / (eta_prime * n)
            _check_bound("OMDA gap", n, rec.avg_gap, bound)
    hist.final_policy = st.anchor
    hist.returned_index = pick
    hist.avg_values = tr.mean_values if K else None
    hist.metadata.update(alpha=alpha, eta=eta, eta_prime=eta_prime, K=int(K), c=list(M.c),
                         schedule=schedule.mode, final_lambda=st.lam.tolist())
    return hist
