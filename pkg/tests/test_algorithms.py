import math

import numpy as np
import pytest

from arnpg.algorithms import (DualState, InvariantViolation, ScheduleSpec, arnpg_epd, arnpg_imd,
                              arnpg_omda, check_dual_properties, epd_direction_reward,
                              epd_dual_update, simplex_mirror_step, tk_schedule)
from arnpg.criteria import MaxMinBifunction, SmoothScalarizer
from arnpg.mdp import ParameterError, TabularMDP, optimal_policy, policy_eval, random_mdp
from arnpg.oracle import cmdp_lp, maxmin_lp, smooth_fw

SUM_LOG = SmoothScalarizer("sum-log", (1.0, 1.0), 0.1)


def conflicting_mdp(seed, S=5, A=4, gamma=0.8):
    """Two objectives r and 1 - r, so the sum-log optimum is typically interior."""
    base = random_mdp(seed, S, A, 1, gamma)
    return TabularMDP(base.transitions, np.stack([base.rewards[0], 1 - base.rewards[0]]),
                      gamma, base.rho)


# schedules ----------------------------------------------------------------

def test_schedule_imd_example():
    spec = ScheduleSpec("theorem", kind="imd", K=100, L=20.0, beta=200.0, num_actions=10, gamma=0.8)
    assert tk_schedule(spec) == 17
    assert math.ceil(math.log(5 * 20 * 100 / (200 * math.log(10))) / 0.2 + 1) == 17


def test_schedule_fixed():
    assert tk_schedule(ScheduleSpec()) == 1
    assert tk_schedule(ScheduleSpec(t=4)) == 4
    with pytest.raises(ParameterError):
        ScheduleSpec(t=0)
    with pytest.raises(ParameterError):
        ScheduleSpec("other")


def test_schedule_epd_example():
    spec = ScheduleSpec("theorem", kind="epd", K=100, m=2, eta_prime=1.0, num_actions=10, gamma=0.8)
    expected = math.ceil(math.log(5 * 6 * 100 / (4 * math.log(10))) / 0.2 + 1)
    assert expected == 30
    assert tk_schedule(spec, dual=DualState(np.zeros(1))) == expected
    # L_k grows with the multipliers
    assert tk_schedule(spec, dual=DualState(np.array([50.0]))) > expected


def test_schedule_single_action():
    spec = ScheduleSpec("theorem", kind="imd", K=100, L=20.0, beta=200.0, num_actions=1, gamma=0.8)
    assert tk_schedule(spec) == 1


def test_schedule_missing_fields():
    with pytest.raises(ParameterError):
        tk_schedule(ScheduleSpec("theorem", kind="imd"))


# IMD ----------------------------------------------------------------------

def test_imd_reduces_to_npg():
    mdp = random_mdp(3, 6, 4, 1, 0.9)
    eta = 0.5
    F = SmoothScalarizer("weighted-linear", (1.0,))
    hist = arnpg_imd(mdp, F, (1 - mdp.gamma) / eta, eta, K=30, keep_policies=True)
    theta = np.zeros((6, 4))
    for pi_k in hist.policies:
        p = np.exp(theta - theta.max(1, keepdims=True))
        p /= p.sum(1, keepdims=True)
        _, Q = policy_eval(mdp, p, mdp.rewards[0])
        theta = theta + eta / (1 - mdp.gamma) * Q
        p = np.exp(theta - theta.max(1, keepdims=True))
        p /= p.sum(1, keepdims=True)
        assert np.max(np.abs(p - pi_k.probs())) <= 1e-10


def test_imd_reaches_fw_value():
    mdp = conflicting_mdp(0)
    fw = smooth_fw(mdp, SUM_LOG, tol=1e-9)
    hist = arnpg_imd(mdp, SUM_LOG, alpha=0.01, eta=4.5, K=500, oracle_value=fw.value)
    best = max(r.F for r in hist.records)
    assert best <= fw.value + 1e-9
    assert fw.value - best <= 1e-3


def test_imd_theorem_mode_bound():
    mdp = random_mdp(100, 5, 3, 2, 0.8)
    fw = smooth_fw(mdp, SUM_LOG, tol=1e-9)
    alpha = SUM_LOG.beta / 0.2 ** 3
    hist = arnpg_imd(mdp, SUM_LOG, alpha, schedule=ScheduleSpec("theorem"), K=40,
                     oracle_value=fw.value)
    logA = math.log(3)
    for r in hist.records:
        assert r.avg_gap <= 2 * alpha * logA / (0.2 * r.k)
    assert [r.T for r in hist.records] == list(np.cumsum([r.t_k for r in hist.records]))


def test_imd_theorem_preconditions():
    mdp = random_mdp(0, 3, 2, 2, 0.8)
    with pytest.raises(ParameterError, match="alpha"):
        arnpg_imd(mdp, SUM_LOG, 1.0, schedule=ScheduleSpec("theorem"), K=3)


def test_imd_zero_K():
    hist = arnpg_imd(random_mdp(0, 3, 2, 2, 0.8), SUM_LOG, 1.0, K=0)
    assert hist.records == [] and hist.returned_policy is None


# EPD ----------------------------------------------------------------------

def test_epd_direction_examples():
    mdp = random_mdp(0, 3, 2, 2, 0.8)
    r = epd_direction_reward(mdp, DualState([1.5]), 1.0, [9.0, 2.0], [3.0])
    np.testing.assert_allclose(r, mdp.rewards[0] + 2.5 * mdp.rewards[1])
    r0 = epd_direction_reward(mdp, DualState([0.0]), 1.0, [9.0, 3.0], [3.0])
    np.testing.assert_allclose(r0, mdp.rewards[0])


def test_epd_dual_update_examples():
    assert epd_dual_update(DualState([0.5]), 1.0, [0.0, 2.0], [3.0]).lam[0] == 1.5
    assert epd_dual_update(DualState([0.0]), 1.0, [0.0, 3.0], [3.0]).lam[0] == 0.0


def test_check_dual_properties_rejects():
    with pytest.raises(InvariantViolation):
        check_dual_properties([-0.1], 1.0, [0.0, 3.0], [3.0], 1)
    with pytest.raises(InvariantViolation):
        check_dual_properties([0.1], 1.0, [0.0, 2.0], [3.0], 1)
    with pytest.raises(ParameterError):
        DualState([-1.0])


def test_epd_dual_properties_full_run(paper_cmdp):
    hist = arnpg_epd(paper_cmdp, [3.0], 1.0, 0.2, eta=1.0, K=200)
    for r in hist.records:
        lam = r.lam[1:]
        step = r.values[1:] - 3.0
        assert np.all(lam >= 0)
        assert np.all(lam - step >= 0)
        assert np.all(np.abs(lam) >= np.abs(step))


def test_epd_unconstrained_matches_value_iteration():
    mdp = random_mdp(4, 6, 3, 1, 0.8)
    hist = arnpg_epd(mdp, [], 1.0, 0.2, eta=1.0, K=200)
    V, _ = optimal_policy(mdp, mdp.rewards[0])
    assert abs(hist.records[-1].values[0] - float(V @ mdp.rho)) <= 1e-4


def test_epd_theorem_mode_bounds():
    mdp = random_mdp(101, 6, 3, 2, 0.8)
    b = [2.5]
    sol = cmdp_lp(mdp, b)
    alpha = 2 * 1.0 * 2 / 0.2 ** 3
    hist = arnpg_epd(mdp, b, 1.0, alpha, schedule=ScheduleSpec("theorem"), K=30,
                     oracle_value=sol.value, lambda_star=sol.duals)
    assert len(hist.records) == 30
    assert hist.returned_index == int(np.random.default_rng(0).integers(1, 31))


def test_epd_threshold_count():
    with pytest.raises(ParameterError):
        arnpg_epd(random_mdp(0, 3, 2, 3, 0.8), [1.0], 1.0, 0.2, K=2)


# OMDA ---------------------------------------------------------------------

def test_mirror_step_example():
    out = simplex_mirror_step(np.log([0.5, 0.5]), np.array([1.0, 0.0]), math.log(2))
    np.testing.assert_allclose(np.exp(out), [1 / 3, 2 / 3], atol=1e-15)


def test_omda_symmetric_weights_stay_uniform():
    base = random_mdp(2, 5, 3, 1, 0.8)
    mdp = TabularMDP(base.transitions, np.concatenate([base.rewards, base.rewards]), 0.8, base.rho)
    hist = arnpg_omda(mdp, MaxMinBifunction((1.0, 1.0)), 0.5, 0.1, K=20)
    for r in hist.records:
        np.testing.assert_allclose(r.lam, [0.5, 0.5], atol=1e-15)


def test_omda_iteration_accounting():
    mdp = random_mdp(3, 5, 3, 2, 0.8)
    hist = arnpg_omda(mdp, MaxMinBifunction((1.0, 1.0)), 1.0, 0.5, schedule=ScheduleSpec(t=3), K=5)
    assert [r.T for r in hist.records] == [6, 12, 18, 24, 30]


def test_omda_close_to_lp():
    mdp = random_mdp(0, 20, 10, 2, 0.8)
    sol = maxmin_lp(mdp, (1.0, 1.0))
    hist = arnpg_omda(mdp, MaxMinBifunction((1.0, 1.0)), 2.0, 0.05, K=500, oracle_value=sol.value)
    assert 0 <= hist.records[-1].avg_gap <= 1e-2


def test_omda_theorem_mode_bound():
    mdp = random_mdp(102, 6, 3, 2, 0.8)
    M = MaxMinBifunction((1.0, 1.0))
    sol = maxmin_lp(mdp, M.c)
    hist = arnpg_omda(mdp, M, 1 / (6 * M.beta), 6 * M.beta / 0.2 ** 3,
                      schedule=ScheduleSpec("theorem"), K=20, oracle_value=sol.value)
    assert all(r.t_k == hist.records[0].t_k for r in hist.records)


def test_seed_changes_only_returned_index(paper_cmdp):
    a = arnpg_epd(paper_cmdp, [3.0], 1.0, 0.2, eta=1.0, K=20, seed=0)
    b = arnpg_epd(paper_cmdp, [3.0], 1.0, 0.2, eta=1.0, K=20, seed=5)
    assert np.array_equal(a.values, b.values)
    assert a.returned_index == int(np.random.default_rng(0).integers(1, 21))
    assert b.returned_index == int(np.random.default_rng(5).integers(1, 21))
