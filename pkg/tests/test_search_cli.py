import json
import math

import numpy as np
import pytest

from hlmax import cli, suite
from hlmax.config import DEFAULTS, load_config
from hlmax.reports import ExperimentReport
from hlmax.search import (estimate_lp_lower_bound, estimate_weak11_lower_bound,
                          lp_ratio, recompute_lower_bound, resolve_operator,
                          weak11_ratio)

INTERVAL3 = {"space": "lattice", "body": "qball:inf", "dim": 1,
             "t_set": {"kind": "integer", "t_max": 1}}


def test_resolve_operator_t_sets():
    op = resolve_operator({"space": "lattice", "body": "qball:inf", "dim": 2,
                           "t_set": {"kind": "integer", "t_max": 3}})
    assert op.t_values == [1e-6, 1.0, 2.0, 3.0]
    assert [s.shape[0] for s in op.stencils] == [1, 9, 25, 49]
    op = resolve_operator({"space": "lattice", "body": "qball:2", "dim": 2,
                           "t_set": {"kind": "euclidean", "t_max": 2.0}})
    assert op.t_values[1:] == pytest.approx(
        [1.0, math.sqrt(2.0), math.sqrt(3.0), 2.0])
    op = resolve_operator({"space": "lattice", "body": "qball:inf", "dim": 2,
                           "t_set": {"kind": "gauge", "t_max": 2.0}})
    assert op.t_values[1:] == [1.0, 2.0]
    with pytest.raises(ValueError):
        resolve_operator({"space": "lattice", "body": "qball:2", "dim": 2,
                          "t_set": {"kind": "harmonic", "t_max": 2.0}})


def test_lp_ratio_single_atom_hand_value():
    op = resolve_operator(INTERVAL3)
    # identity keeps the unit spike; t=1 spreads 1/3 over three cells
    val = lp_ratio(op, [[0]], [1.0], 2.0)
    assert val == pytest.approx(math.sqrt(1.0 + 2.0 / 9.0), rel=1e-14)
    assert lp_ratio(op, [[0]], [1.0], math.inf) == pytest.approx(1.0)


def test_weak11_ratio_hand_values():
    op = resolve_operator(INTERVAL3)
    assert weak11_ratio(op, [[0]], [1.0]) == pytest.approx(1.0)
    # two far-apart unit atoms: level just below 1/3 captures 6 cells
    assert weak11_ratio(op, [[0], [100]], [1.0, 1.0]) == pytest.approx(1.0)


def test_duplicate_atoms_are_aggregated():
    op = resolve_operator(INTERVAL3)
    a = lp_ratio(op, [[0], [0]], [0.5, 0.5], 2.0)
    b = lp_ratio(op, [[0]], [1.0], 2.0)
    assert a == pytest.approx(b, rel=1e-14)


def test_search_beats_trivial_baseline():
    spec = {"space": "lattice", "body": "qball:inf", "dim": 1,
            "t_set": {"kind": "integer", "t_max": 2}}
    est = estimate_lp_lower_bound(spec, 2.0, budget=40, seed=5)
    assert est.lower_bound >= 1.0 - 1e-12
    est = estimate_weak11_lower_bound(spec, budget=40, seed=5)
    assert est.lower_bound >= 1.0 - 1e-12


def test_recompute_matches_search_value():
    spec = {"space": "lattice", "body": "qball:2", "dim": 2,
            "t_set": {"kind": "euclidean", "t_max": 2.0}}
    est = estimate_lp_lower_bound(spec, 2.0, budget=60, seed=11)
    gap = abs(recompute_lower_bound(est) - est.lower_bound)
    assert gap < 1e-12


def test_config_defaults_and_merge(tmp_path):
    cfg = load_config(None)
    assert cfg["seed"] == 20260823
    assert cfg is not DEFAULTS   # callers get their own copy
    p = tmp_path / "override.toml"
    p.write_text("seed = 7\n[multiplier_oracle]\nsigmas = 4.0\n")
    cfg = load_config(str(p))
    assert cfg["seed"] == 7
    assert cfg["multiplier_oracle"]["sigmas"] == 4.0
    assert cfg["multiplier_oracle"]["dims"] == DEFAULTS["multiplier_oracle"]["dims"]


def test_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("not_a_real_table = 3\n")
    with pytest.raises(ValueError):
        load_config(str(p))
    p.write_text("[sampling]\nbogus = 1\n")
    with pytest.raises(ValueError):
        load_config(str(p))


def test_default_toml_in_repo_matches_defaults():
    import pathlib

    root = pathlib.Path(__file__).resolve().parents[1] / "default.toml"
    assert load_config(str(root)) == load_config(None)


def test_report_json_round_trip(tmp_path):
    rep = ExperimentReport(op_name="demo", inputs={"d": 2}, seed=3)
    rep.add_measurement("value", 1.5, 0.1)
    rep.add_margin("bound", 1.5, 2.0, 0.05, note="demo margin")
    p = tmp_path / "rep.json"
    rep.write_json(str(p))
    data = json.loads(p.read_text())
    assert data["op_name"] == "demo"
    assert data["margins"][0]["passed"] is True
    assert data["measurements"][0]["std_error"] == 0.1
    assert rep.passed and "demo" in rep.summary_line()


def test_cli_lattice_count(capsys):
    code = cli.main(["lattice-count", "qball:2", "--dim", "2", "--t", "2",
                     "--compare-volume"])
    out = capsys.readouterr().out
    assert code == 0
    assert "13 lattice points" in out
    assert "ratio" in out


def test_cli_discrete_multiplier(capsys):
    code = cli.main(["discrete-multiplier", "qball:inf", "--dim", "2",
                     "--t", "1.5", "--xi", "0.3,0.2", "--dirichlet"])
    out = capsys.readouterr().out
    assert code == 0
    assert "9 lattice points" in out
    assert "Dirichlet" in out
    # malformed frequency vector
    assert cli.main(["discrete-multiplier", "qball:inf", "--dim", "2",
                     "--t", "1.5", "--xi", "0.3"]) == 2


def test_cli_body_exact_route(capsys, tmp_path):
    out_file = tmp_path / "body.json"
    code = cli.main(["body", "qball:2", "--dim", "3", "--out", str(out_file)])
    out = capsys.readouterr().out
    assert code == 0
    assert "isotropic position (exact)" in out
    data = json.loads(out_file.read_text())
    assert data["exact_route"] is True
    assert np.allclose(np.array(data["transform"]),
                       np.array(data["transform"]).T)


def test_cli_lemma_check(capsys):
    assert cli.main(["lemma-check", "count-upper", "--dim", "2", "--t", "5"]) == 0
    assert cli.main(["lemma-check", "cell-decay", "--dim", "2", "--t", "8",
                     "--decay-t", "2.5"]) == 0
    capsys.readouterr()
    # below the validity threshold the reverse-count lemma refuses to run
    assert cli.main(["lemma-check", "reverse-count", "--dim", "2",
                     "--t", "100"]) == 2


def test_cli_lemma_check_all(capsys):
    code = cli.main(["lemma-check", "all", "--dim", "1", "--t", "74"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("pass") + out.count("PASS") >= 5


def test_cli_grid_maximal(tmp_path, capsys):
    from hlmax.gridops import grid_function

    src = tmp_path / "field.json"
    grid_function(1, 4.0, 0.125,
                  lambda x: np.exp(-np.sum(x * x, axis=-1))).write_json(str(src))
    code = cli.main(["grid-maximal", "qball:2", "--dim", "1",
                     "--input", str(src), "--t-min", "0.5", "--t-max", "1"])
    out = capsys.readouterr().out
    assert code == 0
    assert "2 dyadic scales" in out
    # no admissible scale between t_min and t_max
    assert cli.main(["grid-maximal", "qball:2", "--dim", "1",
                     "--t-min", "4", "--t-max", "8"]) == 2


def test_cli_norm_search(tmp_path, capsys):
    out_file = tmp_path / "est.json"
    code = cli.main(["--seed", "3", "norm-search", "qball:inf", "--dim", "1",
                     "--p", "2", "--t-set", "integer", "--t-max", "2",
                     "--budget", "40", "--out", str(out_file)])
    assert code == 0
    data = json.loads(out_file.read_text())
    assert data["lower_bound"] >= 1.0 - 1e-12
    assert data["recompute_gap"] < 1e-8
    assert len(data["witness"]["positions"]) == len(data["witness"]["weights"])


def test_cli_config_errors(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = [unclosed\n")
    assert cli.main(["--config", str(bad), "lattice-count", "qball:2",
                     "--dim", "1", "--t", "1"]) == 2
    bad.write_text("[sampling]\nbogus = 1\n")
    assert cli.main(["--config", str(bad), "lattice-count", "qball:2",
                     "--dim", "1", "--t", "1"]) == 2


def test_cli_suite_bodies(tmp_path, capsys):
    prefix = str(tmp_path / "bundle")
    code = cli.main(["suite", "bodies", "--out-prefix", prefix])
    out = capsys.readouterr().out
    assert code == 0
    assert "[criterion 11] PASS" in out
    bundle = json.loads((tmp_path / "bundle.json").read_text())
    assert bundle["passed"] is True
    assert bundle["results"][0]["number"] == 11
    assert (tmp_path / "bundle.margins.csv").exists()


def test_emit_plot_data_and_cli(tmp_path, capsys):
    bundle = {"schema": 1, "results": [{"reports": [{"measurements": [
        {"name": "ratio_N=5", "value": 1.25, "std_error": 0.0},
        {"name": "ratio_N=10", "value": 1.13, "std_error": 0.0},
        {"name": "unrelated", "value": 9.9, "std_error": 0.0},
    ]}]}]}
    src = tmp_path / "bundle.json"
    src.write_text(json.dumps(bundle))
    dst = tmp_path / "series.csv"
    assert cli.main(["plot-data", str(src), "ratio", "--out", str(dst)]) == 0
    lines = dst.read_text().strip().splitlines()
    assert lines[0] == "x,value"
    assert len(lines) == 3
    assert lines[1].startswith("5.0,")
    with pytest.raises(ValueError):
        suite.emit_plot_data(bundle, "missing_kind", str(dst))


def test_unknown_suite_name_rejected():
    with pytest.raises(ValueError):
        suite.run_suite("everything", load_config(None), echo=None)
