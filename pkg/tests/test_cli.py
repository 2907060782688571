import json

from conftest import build_graph
from delayleader.cli import main
from delayleader.overlay import graph_to_dict, save_graph


def write_scenario(tmp_path, graph, actions, **extra):
    doc = {"graph": graph_to_dict(graph), "actions": actions, "seed": 1, **extra}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_run_writes_outputs(tmp_path, path3, capsys):
    scenario = write_scenario(tmp_path, path3, [{"at": 0, "op": "start_election"}])
    out = tmp_path / "out"
    rc = main(["run", scenario, "--out", str(out)])
    assert rc == 0
    assert (out / "metrics.csv").exists()
    assert (out / "summary.json").exists()
    assert (out / "trace.jsonl").exists()
    assert "leader=1" in capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert summary["leader"] == 1


def test_run_seed_override_changes_join_layout(tmp_path, path3):
    scenario = write_scenario(
        tmp_path, path3,
        [{"at": 0, "op": "start_election"}, {"at": 10**6, "op": "join", "attach": 2}])
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", scenario, "--out", str(out_a)]) == 0
    assert main(["run", scenario, "--out", str(out_b), "--seed", "9"]) == 0
    a = json.loads((out_a / "summary.json").read_text())["graph"]
    b = json.loads((out_b / "summary.json").read_text())["graph"]
    assert a != b


def test_oracle_command(tmp_path, star5, capsys):
    gpath = tmp_path / "graph.json"
    save_graph(star5, gpath)
    out = tmp_path / "out"
    rc = main(["oracle", str(gpath), "--out", str(out)])
    assert rc == 0
    assert "ideal_leader=0" in capsys.readouterr().out
    assert (out / "metrics.csv").exists()


def test_compare_command(tmp_path, capsys):
    g = build_graph([(0, 1, 7)])
    actions = [{"at": 0, "op": "start_election"}]
    for i in range(6):
        actions.append({"at": (i + 1) * 10**6, "op": "join", "attach": 1})
    scenario = write_scenario(tmp_path, g, actions)
    out = tmp_path / "out"
    rc = main(["compare", scenario, "--static", "0", "--out", str(out)])
    assert rc == 0
    assert (out / "compare.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["comparison"]) == 7


def test_fuzz_codec_command(capsys):
    rc = main(["fuzz-codec", "--iters", "50", "--seed", "3"])
    assert rc == 0
    assert "round-tripped" in capsys.readouterr().out


def test_missing_scenario_is_an_error(tmp_path, capsys):
    rc = main(["run", str(tmp_path / "nope.json")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_bad_output_path_is_an_error(tmp_path, path3, capsys):
    scenario = write_scenario(tmp_path, path3, [{"at": 0, "op": "start_election"}])
    rc = main(["run", scenario, "--out", "/proc/definitely/not/writable"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_mode_and_k_flags(tmp_path, path3):
    scenario = write_scenario(tmp_path, path3, [{"at": 0, "op": "start_election"}])
    out = tmp_path / "timed"
    rc = main(["run", scenario, "--out", str(out), "--mode", "timed", "--k", "4"])
    assert rc == 0
    assert (out / "summary.json").exists()
