import csv
import json
from pathlib import Path

import numpy as np
import pytest

from chargeflow.cli import main
from chargeflow.config import load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL_FIVE = {
    "stations": [
        {"x": 0.62, "y": 0.52, "capacity": 50},
        {"x": 0.24, "y": 0.54, "capacity": 50},
        {"x": 0.46, "y": 0.29, "capacity": 50},
        {"x": 0.42, "y": 0.46, "capacity": 50},
        {"x": 0.13, "y": 0.13, "capacity": 50},
    ],
    "region": {"side": 1.0, "grid": 12, "crossing_time_min": 50},
    "params": {"T_min": 90, "epsilon_min": 0.5},
    "demand": {"type": "inelastic", "rate_total": 3.0},
    "ode": {"step_min": 0.6, "horizon_min": 900, "stride": 50},
    "sim": {"seed": 7, "horizon_min": 1800, "warmup_min": 180, "stride_min": 30},
}


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "five.json"
    p.write_text(json.dumps(SMALL_FIVE))
    return p


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def run(argv):
    return main([str(a) for a in argv])


def test_solve_eq_example1(tmp_path):
    assert run(["solve-eq", CONFIGS / "example1.json", "--out-dir", tmp_path]) == 0
    header, rows = read(tmp_path / "equilibrium.csv")
    assert header == ["station", "mu_star_min", "q_star_ev", "inflow_rate_ev_per_min"]
    mu = np.array([float(r[1]) for r in rows])
    np.testing.assert_allclose(mu, [9.0, 0.0], atol=5e-3)
    header, rows = read(tmp_path / "certificate.csv")
    assert header == ["dual_value_ev", "duality_gap_ev", "kkt_residual", "iterations_count"]
    assert abs(float(rows[0][1])) < 1e-6


def test_solve_elastic(tmp_path):
    assert run(["solve-elastic", CONFIGS / "elastic_toy.json", "--out-dir", tmp_path]) == 0
    header, rows = read(tmp_path / "elastic_sites.csv")
    assert header == ["site", "rbar_ev_per_min", "r_star_ev_per_min", "tau_star_min"]
    assert float(rows[0][2]) == pytest.approx(2 * np.sqrt(1500) / 60, abs=1e-6)
    _, rows = read(tmp_path / "equilibrium.csv")
    assert float(rows[0][1]) == pytest.approx(60 - np.sqrt(1500), abs=1e-6)


def test_simulate_fluid(tmp_path, small_cfg):
    assert run(["simulate-fluid", small_cfg, "--out-dir", tmp_path, "--q0", "zeros"]) == 0
    header, rows = read(tmp_path / "trajectory.csv")
    assert header[0] == "t_min" and header[1] == "q_1_ev" and header[-1] == "dual_value_ev"
    assert len(header) == 1 + 5 + 5 + 1
    assert float(rows[-1][0]) == 900.0
    header, rows = read(tmp_path / "monotonicity.csv")
    assert rows[0][header.index("passed")] == "true"


def test_simulate_fluid_from_file(tmp_path, small_cfg):
    q0 = tmp_path / "q0.csv"
    q0.write_text("10,20,30,40,50\n")
    assert run(["simulate-fluid", small_cfg, "--out-dir", tmp_path, "--q0", q0,
                "--horizon", 30, "--step", 1.5]) == 0
    _, rows = read(tmp_path / "trajectory.csv")
    assert [float(v) for v in rows[0][1:6]] == [10, 20, 30, 40, 50]


def test_social_opt(tmp_path):
    assert run(["social-opt", CONFIGS / "example1.json", "--out-dir", tmp_path]) == 0
    header, rows = read(tmp_path / "social.csv")
    assert header == ["kind", "site", "station", "value"]
    x = {(r[1], r[2]): float(r[3]) for r in rows if r[0] == "x_ev_per_min"}
    assert x[("1", "1")] == pytest.approx(1 / 3) and x[("1", "2")] == pytest.approx(1 / 6)
    assert [float(r[3]) for r in rows if r[0] == "Cs_opt_ev"] == [2.0]


def test_poa_sweep(tmp_path):
    argv = ["poa-sweep", CONFIGS / "example1.json", "--r-from", 0.05, "--r-to", 1.5,
            "--r-steps", 30, "--out-dir", tmp_path]
    assert run(argv) == 0
    header, rows = read(tmp_path / "poa.csv")
    assert header == ["r_ev_per_min", "C0_selfish_ev", "Cs_selfish_ev", "Cs_opt_ev", "gap_ev"]
    table = np.array(rows, dtype=float)
    assert table.shape == (30, 5)
    assert np.all(np.abs(table[table[:, 0] < 1 / 3, 4]) <= 2e-3)


def test_simulate_stochastic(tmp_path, small_cfg):
    argv = ["simulate-stochastic", small_cfg, "--out-dir", tmp_path, "--compare-fluid"]
    assert run(argv) == 0
    header, rows = read(tmp_path / "events.csv")
    assert header == ["t_min", "kind", "site", "station", "ev_id"]
    assert {r[1] for r in rows} == {"arrival", "departure"}
    header, rows = read(tmp_path / "occupancy.csv")
    assert header == ["t_min"] + [f"q_{j}_ev" for j in range(1, 6)]
    header, rows = read(tmp_path / "summary.csv")
    assert header == ["station", "mean_q_ev", "mu_bar_min", "little_residual",
                      "fluid_relative_error"]
    assert len(rows) == 5 and all(r[4] != "" for r in rows)


def test_regions(tmp_path, small_cfg):
    assert run(["regions", small_cfg, "--out-dir", tmp_path, "--mu", "zero"]) == 0
    header, vor = read(tmp_path / "voronoi.csv")
    assert header == ["x_index", "y_index", "x_coord", "y_coord", "station_index"]
    _, att = read(tmp_path / "attraction.csv")
    assert vor == att and len(vor) == 144
    assert run(["regions", small_cfg, "--out-dir", tmp_path]) == 0
    _, att = read(tmp_path / "attraction.csv")
    assert att != vor


@pytest.mark.parametrize(
    "argv",
    [
        ["solve-eq", "{small}"],
        ["simulate-stochastic", "{small}", "--seed", "3"],
        ["poa-sweep", "{ex1}", "--r-from", "0.1", "--r-to", "1.0", "--r-steps", "4"],
    ],
)
def test_byte_identical_reruns(tmp_path, small_cfg, argv):
    argv = [a.format(small=small_cfg, ex1=CONFIGS / "example1.json") for a in argv]
    assert run(argv + ["--out-dir", tmp_path / "a"]) == 0
    assert run(argv + ["--out-dir", tmp_path / "b"]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_nine_significant_digits(tmp_path):
    run(["solve-eq", CONFIGS / "example1.json", "--out-dir", tmp_path])
    _, rows = read(tmp_path / "equilibrium.csv")
    digits = rows[0][1].replace(".", "").lstrip("0")
    assert len(digits) == 9


def _error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return json.loads(err[0])


@pytest.mark.parametrize(
    "mutate, kind",
    [
        (lambda d: d.update(bogus=1), "config"),
        (lambda d: d["params"].pop("T_min"), "config"),
        (lambda d: d["stations"][0].update(capacity=-5), "config"),
        (lambda d: d["stations"][0].update(x=3.0), "config"),
        (lambda d: d["demand"].pop("rate_total"), "config"),
    ],
)
def test_config_errors(tmp_path, capsys, mutate, kind):
    cfg = json.loads(json.dumps(SMALL_FIVE))
    mutate(cfg)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(cfg))
    assert run(["solve-eq", p, "--out-dir", tmp_path]) == 2
    msg = _error(capsys)
    assert msg["error"] == kind and msg["message"]


def test_missing_and_malformed_config(tmp_path, capsys):
    assert run(["solve-eq", tmp_path / "nope.json"]) == 2
    assert _error(capsys)["error"] == "config"
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert run(["solve-eq", p]) == 2
    assert _error(capsys)["error"] == "config"


def test_solver_failure_exit_code(tmp_path, capsys, small_cfg):
    cfg = json.loads(small_cfg.read_text())
    cfg["solver"] = {"max_iters": 1, "method": "gradient"}
    p = tmp_path / "tight.json"
    p.write_text(json.dumps(cfg))
    assert run(["solve-eq", p, "--out-dir", tmp_path]) == 3
    assert _error(capsys)["error"] == "solver"


def test_wrong_variant_is_config_error(tmp_path, capsys):
    assert run(["solve-eq", CONFIGS / "elastic_toy.json", "--out-dir", tmp_path]) == 2
    assert _error(capsys)["error"] == "config"
    assert run(["regions", CONFIGS / "example1.json", "--out-dir", tmp_path]) == 2
    assert _error(capsys)["error"] == "config"


def test_shipped_configs_parse():
    for p in sorted(CONFIGS.glob("*.json")):
        load_config(p)
