import csv
import json
import math
import shutil

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arnpg.harness import (ConfigError, csv_columns, csv_text, fit_loglog_slope, load_config,
                           read_csv_column, run_experiment, validate_config, write_outputs)
from arnpg.mdp import ParameterError

DATA = __import__("pathlib").Path(__file__).parent / "data"


def base_config(**over):
    cfg = {
        "mdp": {"generator": {"seed": 1, "states": 6, "actions": 3, "objectives": 2, "gamma": 0.8}},
        "criterion": {"kind": "cmdp", "b": [3.0]},
        "algorithm": "EPD",
        "hyperparameters": {"alpha": 0.2, "eta": 1.0, "eta_prime": 1.0, "K": 20},
    }
    cfg.update(over)
    return cfg


def test_slope_exact_power_laws():
    T = np.arange(1, 1001, dtype=float)
    assert fit_loglog_slope(T, 3.0 / T).slope == pytest.approx(-1.0, abs=1e-9)
    assert fit_loglog_slope(T, np.full_like(T, 2.0)).slope == pytest.approx(0.0, abs=1e-12)
    assert fit_loglog_slope(T, 3.0 / np.sqrt(T)).slope == pytest.approx(-0.5, abs=1e-9)


def test_slope_window_and_exclusions():
    T = np.arange(1, 11, dtype=float)
    y = 1.0 / T
    y[3] = 0.0
    y[5] = -1.0
    y[6] = np.nan
    fit = fit_loglog_slope(T, y, (2, 9))
    assert fit.points == 5 and fit.excluded == 3
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)


def test_slope_needs_two_points():
    with pytest.raises(ParameterError):
        fit_loglog_slope([1.0, 2.0], [1.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 100))
def test_slope_recovers_exponent(p, C):
    T = np.arange(10, 200, dtype=float)
    assert fit_loglog_slope(T, C * T ** p).slope == pytest.approx(p, abs=1e-8)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="extra"):
        validate_config(base_config(extra=1))
    cfg = base_config()
    cfg["hyperparameters"]["gamma"] = 0.5
    with pytest.raises(ConfigError, match="gamma"):
        validate_config(cfg)


def test_missing_key_named():
    cfg = base_config()
    del cfg["algorithm"]
    with pytest.raises(ConfigError, match="algorithm"):
        validate_config(cfg)
    cfg = base_config()
    del cfg["hyperparameters"]["K"]
    with pytest.raises(ConfigError, match="'K'"):
        validate_config(cfg)


def test_malformed_json_location(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"mdp": {\n  "file": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(p)


def test_criterion_algorithm_mismatch():
    with pytest.raises(ConfigError):
        run_experiment(base_config(algorithm="OMDA"))


def test_k_zero_header_only():
    cfg = base_config()
    cfg["hyperparameters"]["K"] = 0
    text = csv_text(run_experiment(cfg))
    assert text == ",".join(csv_columns(2)) + "\r\n"


def test_same_config_identical_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_outputs(run_experiment(base_config()), a)
    write_outputs(run_experiment(base_config()), b)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.meta.json").read_bytes() == (tmp_path / "b.csv.meta.json").read_bytes()


def test_golden_csv(tmp_path):
    for name in ("golden_config.json", "golden_mdp.json"):
        shutil.copy(DATA / name, tmp_path / name)
    cfg = load_config(tmp_path / "golden_config.json")
    write_outputs(run_experiment(cfg, base_dir=tmp_path), tmp_path / "out.csv")
    assert (tmp_path / "out.csv").read_bytes() == (DATA / "golden.csv").read_bytes()


def test_csv_format(tmp_path):
    res = run_experiment(base_config())
    text = csv_text(res)
    assert "nan" not in text.lower()
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == csv_columns(2)
    assert rows[0][:4] == ["seed", "k", "T", "t_k"]
    assert all(len(r) == len(rows[0]) for r in rows)
    lam1 = rows[0].index("lambda_1")
    assert all(r[lam1] == "" for r in rows[1:])
    assert all(r[-1] == "" for r in rows[1:])  # wall_ms off by default
    T = [int(r[2]) for r in rows[1:]]
    assert all(b > a for a, b in zip(T, T[1:]))
    # repr floats round-trip exactly
    v1 = rows[0].index("V_1")
    assert float(rows[1][v1]) == res.histories[0].records[0].values[0]


def test_metadata_records_defaults():
    cfg = base_config(criterion={"kind": "smooth"}, algorithm="IMD")
    cfg["hyperparameters"] = {"alpha": 0.5, "K": 3}
    meta = run_experiment(cfg).metadata
    assert meta["defaults"]["delta"] == 0.1
    assert meta["defaults"]["weights"] == [1.0, 1.0]
    assert meta["oracle_value_source"] == "computed"
    cfg = base_config(algorithm="NPG-PD", oracle_value=4.0)
    meta = run_experiment(cfg).metadata
    assert meta["defaults"]["lambda_max"] == 1e4
    assert meta["oracle_value"] == 4.0 and meta["oracle_value_source"] == "config"


def test_seed_list_mean_rows(tmp_path):
    cfg = base_config(algorithm="OMDA", criterion={"kind": "maxmin", "c": [1.0, 1.0]}, seeds=[0, 1])
    cfg["hyperparameters"] = {"alpha": 0.5, "eta_prime": 1.0, "K": 5}
    write_outputs(run_experiment(cfg), tmp_path / "o.csv")
    rows = list(csv.DictReader(open(tmp_path / "o.csv", newline="")))
    assert [r["seed"] for r in rows] == ["0"] * 5 + ["1"] * 5 + ["mean"] * 5
    x, y = read_csv_column(tmp_path / "o.csv", "avg_gap")
    assert list(x) == [2, 4, 6, 8, 10]
    x0, y0 = read_csv_column(tmp_path / "o.csv", "avg_gap", seed=0)
    np.testing.assert_allclose(y, y0)  # OMDA seed only picks the returned iterate


def test_sampled_mode_and_inline(tmp_path):
    from arnpg.mdp import random_mdp
    cfg = base_config(mode="sampled", estimator={"horizon": 20, "batch": 2, "sample_seed": 3},
                      mdp={"inline": random_mdp(0, 4, 2, 2, 0.8).to_dict()})
    cfg["hyperparameters"]["K"] = 3
    res = run_experiment(cfg)
    assert all(r.estimated for r in res.histories[0].records)
    assert res.metadata["estimator"]["sample_seed"] == 3


def test_theorem_mode_config():
    cfg = base_config()
    cfg["hyperparameters"] = {"alpha": 500.0, "eta_prime": 1.0, "K": 5,
                              "schedule": {"mode": "theorem"}}
    cfg["criterion"] = {"kind": "cmdp", "b": [2.5]}
    hist = run_experiment(cfg).histories[0]
    assert hist.records[0].t_k > 1


@pytest.mark.parametrize("alg,crit,hp", [
    ("IMD", {"kind": "smooth", "scalarizer": "weighted-linear", "weights": [1.0, 1.0]},
     {"alpha": 1.0, "K": 3}),
    ("CRPO", {"kind": "cmdp", "b": [3.0]}, {"eta": 0.4, "K": 3}),
    ("MO-NPG", {"kind": "maxmin"}, {"eta": 1.0, "K": 3}),
])
def test_all_algorithms_run(alg, crit, hp):
    res = run_experiment(base_config(algorithm=alg, criterion=crit, hyperparameters=hp))
    assert len(res.histories[0].records) == 3
