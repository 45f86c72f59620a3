import math

import numpy as np
import pytest

import longgreeks


def test_version():
    assert longgreeks.__version__ == "0.1.0"


def test_scalar_care():
    s = longgreeks.solve_care(np.eye(1), np.zeros((1, 1)), np.eye(1))
    assert s["V"][0, 0] == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert s["stable"]
    assert s["residual"] < 1e-12


def test_care_shape_mismatch_raises():
    with pytest.raises(longgreeks.LongGreeksError) as info:
        longgreeks.solve_care(np.eye(2), np.zeros((1, 1)), np.eye(2))
    assert info.value.validation


def test_cir_bond_matches_reference():
    assert longgreeks.cir_bond_price(0.1, 0.5, 0.2, 0.04, 5.0) == pytest.approx(0.50397440561404421, rel=1e-12)


GBM = {
    "model": {"kind": "GBM", "params": {"mu": 0.08, "sigma": 0.2, "r": 0.05}, "initial_state": [100.0]},
    "payoff": {"kind": "Power", "alpha": 1.0},
    "mc": {"n_paths": 4000, "seed": 7},
    "grid": {"T": 5.0},
}


def test_price_under_both_measures():
    cfg = dict(GBM, task={"measure": "both"})
    report = longgreeks.run("price", cfg)
    rows = {r[1]: float(r[2]) for r in report["rows"]}
    assert rows["P"] == pytest.approx(100.0 * math.exp(0.15), rel=1e-12)
    se = float(report["rows"][0][3])
    assert abs(rows["Q"] - rows["P"]) < 4.0 * se


def test_greeks_report_limit():
    cfg = dict(GBM, task={"param": "mu"})
    report = longgreeks.run("greeks", cfg)
    header = report["header"]
    row = dict(zip(header, report["rows"][0]))
    assert row["method"] == "LR"
    assert float(row["limit"]) == pytest.approx(1.0)


def test_feller_violation_is_validation_error():
    cfg = {
        "model": {"kind": "CIR", "params": {"theta": 0.01, "a": 0.5, "sigma": 0.2}, "initial_state": [0.04]},
        "payoff": {"kind": "Bond"},
    }
    with pytest.raises(longgreeks.LongGreeksError) as info:
        longgreeks.run("price", cfg)
    assert info.value.kind == "FellerViolation"
    assert info.value.validation


def test_unknown_key_rejected():
    with pytest.raises(longgreeks.LongGreeksError) as info:
        longgreeks.run("price", dict(GBM, bogus=1))
    assert info.value.kind == "ConfigError"
