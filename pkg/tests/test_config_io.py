import json
from pathlib import Path

import numpy as np
import pytest

from stratahjb import ConfigParse, build_grid, closed_form, dump_config, load_config, parse_config
from stratahjb.io import read_grid_csv, saved_levels, write_grid_csv, write_report, write_trajectory_csv
from stratahjb.solver import LSC, solve
from stratahjb.trajectories import PiecewiseControl, integrate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.cfg")), ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    P, solver = load_config(str(path))
    text = dump_config(P, solver)
    Q, solver2 = parse_config(text)
    assert dump_config(Q, solver2) == text
    assert Q.strat.n_strata == P.strat.n_strata


def test_builtin_reference_keeps_closed_form():
    P, solver = load_config(str(CONFIGS / "exampleE.cfg"))
    assert closed_form(P) is not None
    assert solver["grid"] == "161"
    P, _ = load_config("exampleF")
    assert P.name == "exampleF"


def test_override_drops_closed_form():
    P, _ = parse_config("[problem]\nbuiltin = exampleE\nc_f = 3\n")
    assert P.c_f == 3.0
    assert closed_form(P) is None


def test_custom_problem():
    P, _ = load_config(str(CONFIGS / "custom-two-planes.cfg"))
    assert P.strat.n_strata == 9
    S = P.strat
    v = P.velocities(S.id_of((-1, -1)), [-1.0, -1.0])[0]
    assert np.allclose(v.mean(axis=0), [0.25, 0.0], atol=1e-12)
    assert P.costs(S.id_of((1, 1)), [3.0, 4.0])[0, 0] == pytest.approx(2.5)


def test_table_terminal():
    text = ("[problem]\ndimension = 1\nhyperplanes = 0:0\ncontrols = interval(-1, 1, 5)\n"
            "terminal = table\nterminal_table = -1:0, 0:1, 1:0\n[stratum *]\nvelocity = scaled-ball\n")
    P, _ = parse_config(text)
    assert P.terminal.value(np.array([0.5])) == pytest.approx(0.5)
    Q, _ = parse_config(dump_config(P))
    assert Q.terminal.value(np.array([-0.25])) == pytest.approx(0.75)


@pytest.mark.parametrize("text", [
    "no sections here",
    "[solver]\ngrid = 3\n",
    "[problem]\nbuiltin = nope\n",
    "[problem]\ndimension = 2\nhyperplanes = 0:0, 0:0\ncontrols = ball(1, 8)\nterminal = zero\n[stratum *]\n",
    "[problem]\ndimension = 2\nhyperplanes = 0:0\ncontrols = ball(1, 8)\nterminal = zero\n[stratum +]\n",
    "[problem]\ndimension = 2\nhyperplanes = 0:0\ncontrols = ball(1, 8)\nterminal = zero\n[stratum ++]\n",
    "[problem]\ndimension = 2\nhyperplanes = 0:0\ncontrols = cube(1)\nterminal = zero\n[stratum *]\n",
    "[problem]\ndimension = 2\nhyperplanes = 0:0\ncontrols = ball(1, 8)\nterminal = zero\n[stratum *]\nvelocity = warp\n",
])
def test_bad_configs(text):
    with pytest.raises(ConfigParse):
        parse_config(text)


def test_missing_config():
    with pytest.raises(ConfigParse):
        load_config("/nonexistent/problem.cfg")


def test_saved_levels():
    assert saved_levels(201, 50) == [0, 50, 100, 150, 200]
    assert saved_levels(5, 3) == [0, 3, 4]
    assert saved_levels(101, None)[-1] == 100


def test_grid_csv(tmp_path, e_coarse):
    path = write_grid_csv(e_coarse, tmp_path / "g.csv", save_every=50)
    header, rows = read_grid_csv(path)
    assert header == ["t", "x1", "x2", "stratumId", "layerId", "value"]
    assert rows.shape == (3 * e_coarse.grid.n_nodes, 6)
    last = rows[rows[:, 0] == 1.0]
    assert np.array_equal(last[:, 5], e_coarse.values[-1])
    assert np.array_equal(last[:, 3], last[:, 4])


def test_layered_csv(tmp_path, example_f):
    g = build_grid(example_f.strat, (-2.0, 2.0), 41, 20)
    V = solve(example_f, g, LSC)
    header, rows = read_grid_csv(write_grid_csv(V, tmp_path / "f.csv"))
    n_pairs = V.pair_node.size
    assert rows.shape[0] % n_pairs == 0
    interface_rows = rows[(rows[:, 0] == 0.0) & (rows[:, 1] == 0.0)]
    assert sorted(interface_rows[:, 3].astype(int).tolist()) == [0, 1, 2]


def test_trajectory_csv(tmp_path, example_e):
    a = int(np.argmin(np.linalg.norm(example_e.controls.samples - [-1.0, 0.0], axis=1)))
    tr = integrate(example_e, 0.0, [1.0, 0.0], PiecewiseControl.constant(0.0, 1.0, a), 0.1)
    text = write_trajectory_csv(tr, tmp_path / "t.csv").read_text().splitlines()
    assert text[0] == "time,x1,x2,stratumId,controlIndex,eta"
    assert any(line.startswith("# event") for line in text)


def test_report_handles_non_finite(tmp_path):
    path = write_report({"a": float("inf"), "b": np.float64(1.5), "c": np.arange(2), "d": float("nan")}, tmp_path / "r.json")
    assert json.loads(path.read_text()) == {"a": "inf", "b": 1.5, "c": [0, 1], "d": None}
