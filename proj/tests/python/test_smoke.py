import json
import math

import pytest

import parasim


def test_version_and_presets():
    assert parasim.__version__ == "1.0.0"
    names = parasim.preset_names()
    assert "pure-fragmentation" in names
    model = parasim.preset("subcritical")
    assert model["b"] == 1.0
    assert parasim.validate_model(model) == []


def test_unknown_key_rejected():
    with pytest.raises(ValueError, match="unknown key"):
        parasim.normalize_model({"g": {"family": "linear", "params": [1.0]}, "colour": 3})


def test_invalid_model_reports_clause():
    model = {"p": {"family": "constant", "params": [0.5]}}
    problems = parasim.validate_model(model)
    assert any("p(0)=0" in p for p in problems)


def test_birth_death_law_closed_form():
    alpha, beta = parasim.birth_death_law(1.0, 0.5, 1.0)
    e = math.expm1(0.5)
    assert alpha == pytest.approx(0.5 * e / (e + 0.5), rel=1e-12)
    assert beta == pytest.approx(e / (e + 0.5), rel=1e-12)
    total = sum(parasim.birth_death_pmf(1.0, 0.5, 1.0, n) for n in range(400))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_sample_N_reproducible():
    a = parasim.sample_N(1.0, 0.5, 1.0, 7, 200)
    b = parasim.sample_N(1.0, 0.5, 1.0, 7, 200)
    assert a == b
    assert min(a) >= 0


def test_rho_of_negative_growth():
    model = parasim.preset("rho-negative")
    assert parasim.rho(3.0, model) == pytest.approx(-6.0)


def test_I_a_point_mass_matches_closed_form():
    pi = {"family": "point-mass", "params": [1.0], "mass": 1.0}
    u = 0.1
    expected = (1 + (1 - 2) * u - (1 + u) ** (1 - 2)) / (1 - 2)
    assert parasim.I_a(2.0, 10.0, pi) == pytest.approx(expected, rel=1e-8)


def test_in_A_uniform():
    kappa = {"family": "uniform01"}
    assert parasim.in_A(1.5, kappa)
    assert not parasim.in_A(2.0, kappa)


def test_criteria_report_has_marker():
    rep = parasim.criteria_report(parasim.preset("subcritical"), 0.5)
    assert rep["marker"] == "heuristic over finite grid"
    assert rep["verdict"] == "SN-consistent"


def test_l_schedule_bracket():
    s = parasim.l_schedule(1e6, 0.5, 1.0, 1e-8)
    assert s["lower"] <= s["value"] <= s["upper"]
    assert s["upper"] - s["lower"] < 1e-8
    with pytest.raises(ValueError):
        parasim.l_schedule(1e6, 0.5, 0.0, 1e-8)


def test_flow_is_deterministic_for_linear_growth():
    model = {"g": {"family": "linear", "params": [0.5]}}
    t, x, exploded = parasim.simulate_flow(model, 1.0, 1.0, {"dt": 1e-3})
    assert not exploded
    assert x[-1] == pytest.approx(math.exp(0.5), rel=1e-3)


def test_many_to_one_pure_fragmentation():
    r = parasim.many_to_one_check("indicator-ge", 1.0, parasim.preset("pure-fragmentation"),
                                  {"replicates": 2000, "master_seed": 5}, K=0.3)
    assert abs(r["z"]) < 4


def test_population_labels_are_binary_words():
    cells, capped = parasim.simulate_population(parasim.preset("pure-fragmentation"), 1.0, {"master_seed": 3})
    assert not capped
    for label, load, exploded in cells:
        assert set(label) <= {"0", "1"}
        assert load >= 0 and not exploded


def test_run_and_replay(tmp_path):
    config = {
        "experiment": "criteria-scan",
        "model": {"preset": "subcritical"},
        "numerics": {"replicates": 1000, "master_seed": 4, "dt": 0.01},
    }
    manifest = parasim.run_experiment(config, tmp_path / "run")
    assert manifest["tool_version"] == "1.0.0"
    files = {o["file"] for o in manifest["outputs"]}
    assert {"stats.json", "criteria.json", "mean_field.csv"} <= files
    identical, mismatched = parasim.replay(tmp_path / "run" / "manifest.json", tmp_path / "again", workers=2)
    assert identical and mismatched == []
    stats = json.loads((tmp_path / "run" / "stats.json").read_text())
    assert stats["verdict"] == "SN-consistent"


def test_run_experiment_from_path(tmp_path):
    import pathlib
    cfg = pathlib.Path(__file__).resolve().parents[2] / "configs" / "criteria-scan.json"
    out = parasim.run_experiment(cfg, tmp_path / "scan", 1)
    assert (tmp_path / "scan" / "manifest.json").exists()
    assert out
