import json
import subprocess
import sys
from pathlib import Path

import pytest

from ipdlab.cli import main, parse_seed_range, ScenarioError

SCEN = Path(__file__).resolve().parent.parent / "scenarios"
GAME = {"T": 5, "R": 3, "P": 1, "S": 0}


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(job, scenario, out, *extra):
    return main([job, "--scenario", scenario, "--out", str(out), *extra])


def report(out):
    return json.loads((Path(out) / "report.json").read_text())


def test_tft_match_scenario(tmp_path):
    assert run("simulate", str(SCEN / "tft_match.json"), tmp_path) == 0
    rep = report(tmp_path)
    assert rep["results"]["final_average"] == ["5/2", "5/2"]
    assert [c["name"] for c in rep["checks"]] == ["exact_limit"]
    assert (tmp_path / "trajectory.csv").exists() and (tmp_path / "plot.json").exists()


def test_report_digest_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("simulate", str(SCEN / "good_vs_equalizer.json"), a)
    run("simulate", str(SCEN / "good_vs_equalizer.json"), b)
    ra, rb = report(a), report(b)
    assert ra["inputs_digest"] == rb["inputs_digest"]
    assert ra["results_digest"] == rb["results_digest"]


def test_plot_overlay_has_prediction(tmp_path):
    run("simulate", str(SCEN / "good_vs_equalizer.json"), tmp_path)
    plot = json.loads((tmp_path / "plot.json").read_text())
    assert plot["overlay"]["predicted_limit"] == [2.0, 2.5]
    assert len(plot["region"]) == 4


def test_folk_rr(tmp_path):
    assert run("folk", str(SCEN / "folk_rr.json"), tmp_path) == 0
    assert report(tmp_path)["results"]["case"] == 2


def test_classify(tmp_path):
    assert run("classify", str(SCEN / "classify.json"), tmp_path) == 0
    flags = report(tmp_path)["results"]["flags"]
    assert flags["good"]["convex_good"] and flags["markov_generous"]["generous"]


def test_evo(tmp_path):
    assert run("evo", str(SCEN / "evo_roster.json"), tmp_path) == 0
    rep = report(tmp_path)
    assert rep["results"]["hypotheses"]["global_theorem"]
    header = (tmp_path / "orbit.csv").read_text().splitlines()[0]
    assert header == "t,xi_1,xi_2,xi_3,xi_4"


def test_validate_path(tmp_path):
    assert run("validate-path", str(SCEN / "ode_path.json"), tmp_path) == 0


def test_sweep_seed_range_override(tmp_path):
    assert run("sweep", str(SCEN / "sweep_generous.json"), tmp_path, "--seed-range", "0..19") == 0
    rep = report(tmp_path)
    assert rep["results"]["seeds"] == [0, 19]
    assert rep["results"]["absorption_fraction"] == 1.0
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 21


def test_failing_check_exit_one(tmp_path):
    doc = {"version": 1, "job": "match", "game": GAME, "x": {"family": "tft"},
           "y": {"family": "tft", "initial": "d"}, "rounds": 100,
           "checks": [{"kind": "limit", "target": [3, 3], "tol": 0.01}]}
    assert run("simulate", write(tmp_path, doc), tmp_path / "o") == 1
    rep = report(tmp_path / "o")
    assert rep["passed"] is False and rep["checks"][0]["margin"] < 0


def test_malformed_json_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"version": 1,\n "game": }')
    assert run("simulate", str(p), tmp_path / "o") == 2
    assert "line 2" in capsys.readouterr().err
    assert "error" in report(tmp_path / "o")["results"]


def test_constructor_rejection_verbatim(tmp_path, capsys):
    doc = {"version": 1, "game": GAME, "x": {"family": "good", "slope": 2}, "y": {"family": "tft"},
           "rounds": 10}
    assert run("simulate", write(tmp_path, doc), tmp_path / "o") == 2
    assert "strictly between 0 and 1" in capsys.readouterr().err


def test_bad_game_exit_two(tmp_path):
    doc = {"version": 1, "game": {"T": 5, "R": 2, "P": 1, "S": 0}, "x": {"family": "tft"},
           "y": {"family": "tft"}, "rounds": 10}
    assert run("simulate", write(tmp_path, doc), tmp_path / "o") == 2
    assert "2R > T + S" in report(tmp_path / "o")["results"]["error"]


@pytest.mark.parametrize("doc,msg", [
    ({"version": 2}, "version"),
    ({"version": 1, "game": GAME, "y": {"family": "tft"}, "rounds": 5}, "'x'"),
    ({"version": 1, "game": GAME, "x": "nope", "y": {"family": "tft"}, "rounds": 5}, "reference"),
    ({"version": 1, "game": GAME, "x": {"family": "zzz"}, "y": {"family": "tft"}, "rounds": 5}, "x.family"),
    ({"version": 1, "job": "evo", "game": GAME}, "job"),
])
def test_field_errors(tmp_path, capsys, doc, msg):
    assert run("simulate", write(tmp_path, doc), tmp_path / "o") == 2
    assert msg in capsys.readouterr().err


def test_weighted_refusal_is_input_error(tmp_path):
    doc = {"version": 1, "game": GAME, "x": {"family": "good"}, "y": {"family": "equalizer", "E": 2},
           "rounds": 100, "weights": {"kind": "geometric"}}
    assert run("simulate", write(tmp_path, doc), tmp_path / "o") == 2


def test_weighted_run_float_mode(tmp_path):
    doc = {"version": 1, "game": GAME, "x": {"family": "good"}, "y": {"family": "equalizer", "E": 2},
           "rounds": 20000, "weights": {"kind": "linear"},
           "checks": [{"kind": "limit", "target": [2, 2.5], "tol": 0.01}]}
    assert run("simulate", write(tmp_path, doc), tmp_path / "o") == 0
    assert report(tmp_path / "o")["results"]["mode"] == "float"


def test_float_mode_flag(tmp_path):
    assert run("simulate", str(SCEN / "tft_match.json"), tmp_path, "--mode", "float") == 0
    assert report(tmp_path)["results"]["mode"] == "float"


def test_seed_range_parse():
    assert parse_seed_range("3..5") == [3, 4, 5]
    with pytest.raises(ScenarioError):
        parse_seed_range("5..3")
    with pytest.raises(ScenarioError):
        parse_seed_range("x")


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "ipdlab", "validate-path", "--scenario",
                        str(SCEN / "ode_path.json"), "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "PASS valid_path" in r.stdout
