"""Config-driven experiment runner, CSV output and log-log slope fitting.

CSV columns, in order (missing quantities are empty fields)::

    seed, k, T, t_k, V_1..V_m, F, lambda_1..lambda_m, avg_gap,
    avg_violation_2..avg_violation_m, last_violation, estimated, wall_ms

``wall_ms`` stays empty unless the config sets ``record_timing: true`` so that
the CSV is a deterministic function of the config.  With a ``seeds`` list the
per-seed rows are followed by rows with seed = ``mean`` averaging every column.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, kernels
from .algorithms import ScheduleSpec
from .criteria import MaxMinBifunction, SmoothScalarizer
from .mdp import ParameterError, TabularMDP, load_mdp, random_mdp
from .oracle import cmdp_lp, oracle_value
from .runner import ALGORITHMS, CRITERION_OF, run_algorithm
from .sampling import EstimatorConfig, SampledEvaluator

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_num_list = {"type": "array", "items": _num, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["mdp", "criterion", "algorithm", "hyperparameters"],
    "properties": {
        "mdp": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "generator": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["seed", "states", "actions", "objectives", "gamma"],
                    "properties": {"seed": {"type": "integer", "minimum": 0},
                                   "states": _pos_int, "actions": _pos_int,
                                   "objectives": _pos_int, "gamma": _num},
                },
                "file": {"type": "string"},
                "inline": {"type": "object"},
            },
        },
        "criterion": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["cmdp", "smooth", "maxmin"]},
                "b": _num_list,
                "scalarizer": {"enum": ["sum-log", "weighted-linear"]},
                "weights": _num_list,
                "delta": _num,
                "c": _num_list,
            },
        },
        "algorithm": {"enum": list(ALGORITHMS)},
        "hyperparameters": {
            "type": "object",
            "additionalProperties": False,
            "required": ["K"],
            "properties": {
                "alpha": _num, "eta": _num, "eta_prime": _num,
                "K": {"type": "integer", "minimum": 0},
                "tolerance": _num, "lambda_max": _num,
                "schedule": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"mode": {"enum": ["fixed", "theorem"]}, "t": _pos_int},
                },
            },
        },
        "mode": {"enum": ["exact", "sampled"]},
        "estimator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"horizon": _pos_int, "batch": _pos_int,
                           "sample_seed": {"type": "integer", "minimum": 0},
                           "value_batch": {"oneOf": [_pos_int, {"type": "null"}]}},
        },
        "oracle_value": {"oneOf": [_num, {"type": "null"}]},
        "seed": {"type": "integer", "minimum": 0},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "output": {"type": "string"},
        "record_timing": {"type": "boolean"},
    },
}


class ConfigError(ParameterError):
    pass


def validate_config(config: dict) -> None:
    """Schema check; the message names the offending key."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {err.message}") from None


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        config = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: malformed JSON at line {err.lineno} column {err.colno}: "
                          f"{err.msg}") from None
    validate_config(config)
    return config


@dataclass
class ExperimentResult:
    histories: dict  # seed -> RunHistory
    mdp: TabularMDP
    metadata: dict = field(default_factory=dict)


def build_mdp(spec: dict, base_dir=None) -> TabularMDP:
    if "generator" in spec:
        g = spec["generator"]
        return random_mdp(g["seed"], g["states"], g["actions"], g["objectives"], g["gamma"])
    if "file" in spec:
        p = Path(spec["file"])
        if not p.is_absolute() and base_dir is not None:
            p = Path(base_dir) / p
        return load_mdp(p)
    return TabularMDP.from_dict(spec["inline"])


def build_criterion(spec: dict, m: int, defaults: dict):
    kind = spec["kind"]
    if kind == "cmdp":
        if "b" not in spec:
            raise ConfigError("criterion 'cmdp' needs key 'b'")
        return ("cmdp", list(spec["b"]))
    if kind == "maxmin":
        c = spec.get("c")
        if c is None:
            c = [1.0] * m
            defaults["c"] = c
        return ("maxmin", MaxMinBifunction(tuple(c)))
    scal = spec.get("scalarizer", "sum-log")
    weights = spec.get("weights")
    if weights is None:
        weights = [1.0] * m
        defaults["weights"] = weights
    delta = spec.get("delta")
    if delta is None:
        delta = 0.1
        if scal == "sum-log":
            defaults["delta"] = delta
    return ("smooth", SmoothScalarizer(scal, tuple(weights), delta))


def run_experiment(config: dict, base_dir=None) -> ExperimentResult:
    validate_config(config)
    defaults = {}
    mdp = build_mdp(config["mdp"], base_dir)
    criterion = build_criterion(config["criterion"], mdp.num_objectives, defaults)
    algorithm = config["algorithm"]
    if CRITERION_OF[algorithm] != criterion[0]:
        raise ConfigError(f"algorithm {algorithm} needs criterion kind '{CRITERION_OF[algorithm]}'")
    hp = dict(config["hyperparameters"])
    K = hp.pop("K")
    sched = hp.pop("schedule", None) or {}
    hp["schedule"] = ScheduleSpec(mode=sched.get("mode", "fixed"), t=sched.get("t", 1))
    if algorithm == "NPG-PD" and "lambda_max" not in hp:
        hp["lambda_max"] = 1e4
        defaults["lambda_max"] = 1e4
    if algorithm == "CRPO" and "tolerance" not in hp:
        hp["tolerance"] = 0.01
        defaults["tolerance"] = 0.01
    if algorithm in ("IMD", "EPD", "OMDA") and hp.get("eta") is None and "alpha" in hp:
        defaults["eta"] = "(1-gamma)/alpha"
    mode = config.get("mode", "exact")
    est = None
    if mode == "sampled":
        e = config.get("estimator", {})
        est = EstimatorConfig(e.get("horizon", 28), e.get("batch", 10), e.get("sample_seed", 0),
                              e.get("value_batch"))
    seeds = config.get("seeds") or [config.get("seed", 0)]
    ov = config.get("oracle_value")
    ov_source = "config"
    if ov is None:
        ov = oracle_value(mdp, criterion)
        ov_source = "computed"
    lambda_star = None
    if algorithm == "EPD" and hp["schedule"].theorem:
        sol = cmdp_lp(mdp, criterion[1])
        lambda_star = sol.duals if sol.optimal else None
    histories = {}
    for seed in seeds:
        evaluator = SampledEvaluator(mdp, est, seed) if est is not None else None
        histories[seed] = run_algorithm(algorithm, mdp, hp, K, seed=seed, criterion=criterion,
                                        evaluator=evaluator, oracle_value=ov,
                                        lambda_star=lambda_star,
                                        record_timing=bool(config.get("record_timing", False)))
    meta = {
        "package_version": __version__,
        "algorithm": algorithm,
        "criterion": config["criterion"],
        "hyperparameters": {k: v for k, v in config["hyperparameters"].items()},
        "mode": mode,
        "estimator": None if est is None else {"horizon": est.horizon, "batch": est.batch,
                                               "sample_seed": est.sample_seed,
                                               "value_batch": est.value_batch},
        "seeds": list(seeds),
        "oracle_value": ov,
        "oracle_value_source": ov_source,
        "defaults": defaults,
        "kernel_backend": kernels.BACKEND,
        "num_states": mdp.num_states, "num_actions": mdp.num_actions,
        "num_objectives": mdp.num_objectives, "gamma": mdp.gamma,
    }
    return ExperimentResult(histories, mdp, meta)


# --------------------------------------------------------------------------
# CSV


def csv_columns(m: int) -> list:
    return (["seed", "k", "T", "t_k"] + [f"V_{i}" for i in range(1, m + 1)] + ["F"]
            + [f"lambda_{i}" for i in range(1, m + 1)] + ["avg_gap"]
            + [f"avg_violation_{i}" for i in range(2, m + 1)]
            + ["last_violation", "estimated", "wall_ms"])


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return ""
    return repr(x)


def _record_fields(rec, m: int) -> list:
    lam = [None] * m if rec.lam is None else [None if np.isnan(v) else v for v in rec.lam]
    viol = [None] * (m - 1) if rec.avg_violation is None else list(rec.avg_violation)
    return ([rec.k, rec.T, rec.t_k] + list(rec.values) + [rec.F] + lam + [rec.avg_gap] + viol
            + [rec.last_violation, bool(rec.estimated), rec.wall_ms])


def csv_rows(result: ExperimentResult) -> list:
    m = result.mdp.num_objectives
    rows = []
    per_seed = {}
    for seed, hist in result.histories.items():
        fields = [_record_fields(r, m) for r in hist.records]
        per_seed[seed] = fields
        rows.extend([[seed] + f for f in fields])
    if len(result.histories) > 1:
        lists = list(per_seed.values())
        n = min(len(x) for x in lists)
        for i in range(n):
            row = ["mean"]
            for j in range(len(lists[0][i])):
                vals = [x[i][j] for x in lists]
                if any(v is None for v in vals):
                    row.append(None)
                else:
                    row.append(float(np.mean([float(v) for v in vals])))
            rows.append(row)
    return rows


def csv_text(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(csv_columns(result.mdp.num_objectives))
    for row in csv_rows(result):
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def write_outputs(result: ExperimentResult, path) -> None:
    path = Path(path)
    path.write_bytes(csv_text(result).encode("utf-8"))
    meta = path.with_name(path.name + ".meta.json")
    meta.write_text(json.dumps(result.metadata, indent=2, sort_keys=True) + "\n")


def read_csv_column(path, column: str, x: str = "T", seed=None):
    """(x, y) arrays from a metrics CSV; empty fields become nan.

    With several seeds the 'mean' rows are used unless ``seed`` is given.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return np.zeros(0), np.zeros(0)
    for name in (column, x):
        if name not in rows[0]:
            raise ParameterError(f"column '{name}' not in {path}")
    seeds = {r["seed"] for r in rows}
    want = str(seed) if seed is not None else ("mean" if "mean" in seeds else None)
    if want is not None:
        rows = [r for r in rows if r["seed"] == want]

    def num(s):
        return float(s) if s != "" else math.nan

    return np.array([num(r[x]) for r in rows]), np.array([num(r[column]) for r in rows])


# --------------------------------------------------------------------------
# slopes


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    points: int
    excluded: int

    def line(self) -> str:
        return (f"slope={self.slope:.6f} intercept={self.intercept:.6f} r2={self.r2:.6f} "
                f"points={self.points} excluded={self.excluded}")


def fit_loglog_slope(x, y, window=None) -> SlopeFit:
    """Least squares of ln y on ln x over x in [lo, hi]; nonpositive or missing y are
    excluded and counted."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = np.ones(x.shape, dtype=bool) if window is None else (x >= window[0]) & (x <= window[1])
    good = sel & np.isfinite(y) & (y > 0) & (x > 0)
    excluded = int(sel.sum() - good.sum())
    if good.sum() < 2:
        raise ParameterError(f"need at least 2 positive points in the window, got {int(good.sum())}")
    lx, ly = np.log(x[good]), np.log(y[good])
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), r2, int(good.sum()), excluded)
