import numpy as np
import pytest
from scipy.optimize import linprog

from arnpg.criteria import MaxMinBifunction, SmoothScalarizer
from arnpg.mdp import TabularMDP, optimal_policy, random_mdp, value_vector
from arnpg.algorithms import arnpg_epd
from arnpg.oracle import (cmdp_lp, flow_constraints, maxmin_lp, occupancy_to_policy, oracle_value,
                          smooth_fw)
from arnpg.simplex import INFEASIBLE


def vi_value(mdp, r):
    V, _ = optimal_policy(mdp, r)
    return float(V @ mdp.rho)


@pytest.mark.parametrize("seed", range(5))
def test_cmdp_zero_threshold_is_unconstrained(seed):
    mdp = random_mdp(seed, 6, 3, 2, 0.85)
    sol = cmdp_lp(mdp, [0.0])
    assert sol.optimal
    assert abs(sol.value - vi_value(mdp, mdp.rewards[0])) <= 1e-8


def test_cmdp_infeasible_threshold():
    mdp = random_mdp(0, 4, 2, 2, 0.8)
    assert cmdp_lp(mdp, [5.01]).status == INFEASIBLE


def test_cmdp_certificates(paper_cmdp):
    sol = cmdp_lp(paper_cmdp, [3.0])
    assert max(sol.residuals.values()) <= 1e-9
    assert sol.duals[0] >= 0
    # the LP occupancy's policy attains the LP value and is feasible
    v = value_vector(paper_cmdp, occupancy_to_policy(sol.occupancy))
    assert v[0] == pytest.approx(sol.value, abs=1e-8)
    assert v[1] >= 3.0 - 1e-8


def test_cmdp_matches_highs(paper_cmdp):
    E, f = flow_constraints(paper_cmdp)
    R = paper_cmdp.rewards.reshape(2, -1) / 0.2
    ref = linprog(-R[0], A_ub=-R[1:], b_ub=[-3.0], A_eq=E, b_eq=f, method="highs")
    assert cmdp_lp(paper_cmdp, [3.0]).value == pytest.approx(-ref.fun, abs=1e-9)


def test_cmdp_matches_long_epd_average(paper_cmdp):
    sol = cmdp_lp(paper_cmdp, [3.0])
    hist = arnpg_epd(paper_cmdp, [3.0], 1.0, 0.2, eta=1.0, K=5000)
    assert abs(hist.avg_values[0] - sol.value) <= 1e-3


def test_maxmin_identical_objectives():
    base = random_mdp(3, 6, 3, 1, 0.8)
    mdp = TabularMDP(base.transitions, np.concatenate([base.rewards] * 2), 0.8, base.rho)
    sol = maxmin_lp(mdp, (1.0, 1.0))
    assert sol.value == pytest.approx(vi_value(base, base.rewards[0]), abs=1e-8)


def test_maxmin_single_objective():
    mdp = random_mdp(4, 6, 3, 1, 0.8)
    sol = maxmin_lp(mdp, (2.0,))
    assert sol.value == pytest.approx(vi_value(mdp, mdp.rewards[0] / 2.0), abs=1e-8)


def test_maxmin_weights_on_simplex(paper_cmdp):
    sol = maxmin_lp(paper_cmdp, (1.0, 1.0))
    assert np.all(sol.duals >= -1e-12)
    assert sol.duals.sum() == pytest.approx(1.0, abs=1e-9)
    v = value_vector(paper_cmdp, occupancy_to_policy(sol.occupancy))
    assert min(v) == pytest.approx(sol.value, abs=1e-8)


def test_fw_linear_is_one_subproblem():
    mdp = random_mdp(2, 5, 3, 2, 0.8)
    F = SmoothScalarizer("weighted-linear", (1.0, 2.0))
    res = smooth_fw(mdp, F)
    # start vertex, one linear step to the optimum, then the zero-gap certificate
    assert res.gap <= 1e-12 and res.iterations <= 2 and len(res.weights) == 1
    assert res.value == pytest.approx(vi_value(mdp, mdp.rewards[0] + 2 * mdp.rewards[1]), abs=1e-9)


def test_fw_identity_single_objective():
    mdp = random_mdp(3, 5, 3, 1, 0.8)
    res = smooth_fw(mdp, SmoothScalarizer("weighted-linear", (1.0,)))
    assert res.value == pytest.approx(vi_value(mdp, mdp.rewards[0]), abs=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_fw_sum_log_certificate(seed):
    base = random_mdp(seed, 5, 4, 1, 0.8)
    mdp = TabularMDP(base.transitions, np.stack([base.rewards[0], 1 - base.rewards[0]]), 0.8,
                     base.rho)
    F = SmoothScalarizer("sum-log", (1.0, 1.0), 0.1)
    res = smooth_fw(mdp, F, tol=1e-9)
    assert res.converged and res.gap <= 1e-4
    # the mixed occupancy reproduces the value vector
    np.testing.assert_allclose(np.einsum("isa,sa->i", mdp.rewards, res.occupancy) / 0.2,
                               res.values, atol=1e-9)


def test_oracle_value_dispatch(paper_cmdp):
    assert oracle_value(paper_cmdp, ("cmdp", [3.0])) == pytest.approx(cmdp_lp(paper_cmdp, [3.0]).value)
    M = MaxMinBifunction((1.0, 1.0))
    assert oracle_value(paper_cmdp, ("maxmin", M)) == pytest.approx(maxmin_lp(paper_cmdp, M.c).value)
