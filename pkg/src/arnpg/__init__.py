"""Tabular multi-objective MDP lab for anchor-changing regularized NPG."""
from .algorithms import (DualState, RunHistory, RunRecord, ScheduleSpec, arnpg_epd, arnpg_imd,
                         arnpg_omda, epd_direction_reward, epd_dual_update, tk_schedule)
from .baselines import crpo, mo_npg, npg_pd
from .criteria import MaxMinBifunction, SmoothScalarizer, direction_reward, maxmin_phi, scalarize
from .inner import InnerLoopSpec, inner_loop, improvement_check, regularized_q
from .mdp import (ParameterError, TabularMDP, load_mdp, occupancy, policy_eval, random_mdp,
                  save_mdp, value_vector)
from .oracle import LpSolution, cmdp_lp, maxmin_lp, occupancy_to_policy, smooth_fw, soft_vi
from .policy import SoftmaxPolicy, action_probs, pseudo_kl, uniform_policy, weighted_kl
from .sampling import EstimatorConfig, GenerativeSampler, mc_q_estimate, mc_value_estimate, sampled_run

__version__ = "0.1.0"
