"""Dispatch from an algorithm id to its driver."""
from __future__ import annotations

from .algorithms import ScheduleSpec, arnpg_epd, arnpg_imd, arnpg_omda
from .baselines import crpo, mo_npg, npg_pd
from .mdp import ParameterError

ALGORITHMS = ("IMD", "EPD", "OMDA", "NPG-PD", "CRPO", "MO-NPG")
CRITERION_OF = {"IMD": "smooth", "EPD": "cmdp", "NPG-PD": "cmdp", "CRPO": "cmdp",
                "OMDA": "maxmin", "MO-NPG": "maxmin"}


def _need(hyper, key, algorithm):
    if hyper.get(key) is None:
        raise ParameterError(f"{algorithm} needs hyperparameter '{key}'")
    return hyper[key]


def run_algorithm(algorithm: str, mdp, hyper: dict, K: int, seed: int = 0, criterion=None,
                  evaluator=None, oracle_value=None, lambda_star=None, record_timing=False):
    """Run one driver.  ``criterion`` is ('smooth', F) | ('cmdp', b) | ('maxmin', M)."""
    if algorithm not in ALGORITHMS:
        raise ParameterError(f"unknown algorithm '{algorithm}'; expected one of {ALGORITHMS}")
    if criterion is None or criterion[0] != CRITERION_OF[algorithm]:
        raise ParameterError(f"{algorithm} needs a '{CRITERION_OF[algorithm]}' criterion")
    obj = criterion[1]
    schedule = hyper.get("schedule") or ScheduleSpec()
    common = dict(K=K, seed=seed, oracle_value=oracle_value, evaluator=evaluator,
                  record_timing=record_timing)
    if algorithm == "IMD":
        return arnpg_imd(mdp, obj, _need(hyper, "alpha", algorithm), hyper.get("eta"),
                         schedule, **common)
    if algorithm == "EPD":
        return arnpg_epd(mdp, obj, _need(hyper, "eta_prime", algorithm),
                         _need(hyper, "alpha", algorithm), hyper.get("eta"), schedule,
                         lambda_star=lambda_star, **common)
    if algorithm == "OMDA":
        return arnpg_omda(mdp, obj, _need(hyper, "eta_prime", algorithm),
                          _need(hyper, "alpha", algorithm), hyper.get("eta"), schedule, **common)
    if algorithm == "NPG-PD":
        return npg_pd(mdp, obj, _need(hyper, "eta", algorithm), _need(hyper, "eta_prime", algorithm),
                      lambda_max=hyper.get("lambda_max", 1e4), **common)
    if algorithm == "CRPO":
        return crpo(mdp, obj, _need(hyper, "eta", algorithm),
                    tolerance=hyper.get("tolerance", 0.01), **common)
    return mo_npg(mdp, obj, _need(hyper, "eta", algorithm), **common)
