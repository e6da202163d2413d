import json

import pytest

from selfstab import topology
from selfstab.cli import ExperimentConfig, load_graph, main, substream
from selfstab.kcluster import config_to_json

from conftest import path5_terminal_config


def run_cli(*argv):
    return main(list(argv))


class TestGenerate:
    def test_edge_list_to_stdout(self, capsys):
        assert run_cli("generate", "--kind", "path", "--n", "5") == 0
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if l and not l.startswith("#")]
        assert len(lines) == 4
        assert "# nodes: 5" in out

    def test_round_trip_through_file(self, tmp_path):
        graph_file = tmp_path / "g.edges"
        assert run_cli("generate", "--kind", "random-connected", "--n", "8",
                       "--seed", "3", "--out", str(graph_file)) == 0
        net = load_graph(str(graph_file))
        assert net == topology.generate("random-connected", 8, seed=3)

    def test_dot_output(self, tmp_path):
        dot = tmp_path / "g.dot"
        run_cli("generate", "--kind", "star", "--n", "4", "--dot", str(dot))
        assert "style=bold" in dot.read_text()


class TestRun:
    def test_fixture_scale_run_all_ok(self, tmp_path):
        out = tmp_path / "summary.json"
        code = run_cli("run", "--graph", "gen:path:5", "--root", "4",
                       "--k", "1", "--daemon", "sync", "--trials", "5",
                       "--seed", "42", "--out", str(out))
        assert code == 0
        summary = json.loads(out.read_text())
        assert summary["all_ok"]
        assert summary["terminal"] == 5
        assert summary["max_clusterheads"] <= summary["head_bound"] == 3
        assert summary["schema"] == "selfstab/1"

    def test_same_seed_byte_identical_summary(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ("run", "--graph", "gen:random-connected:9:2", "--k", "2",
                "--daemon", "random:0.5", "--trials", "4", "--seed", "7")
        assert run_cli(*args, "--out", str(a)) == 0
        assert run_cli(*args, "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_budget_exhaustion_fails(self, tmp_path):
        out = tmp_path / "s.json"
        code = run_cli("run", "--graph", "gen:path:5", "--root", "4",
                       "--k", "1", "--trials", "2", "--max-steps", "1",
                       "--out", str(out))
        assert code == 1
        summary = json.loads(out.read_text())
        assert any("budget" in t.get("error", "") for t in summary["trials"])

    def test_config_file_round_trip(self, tmp_path):
        cfg = ExperimentConfig(graph="gen:star:6", k=2, daemon="rr",
                               seed=5, trials=3)
        text = cfg.to_text()
        assert ExperimentConfig.from_text(text) == cfg
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(text)
        out = tmp_path / "out.json"
        assert run_cli("run", "--config", str(cfg_file), "--out", str(out)) == 0
        assert json.loads(out.read_text())["config"]["daemon"] == "rr"

    def test_save_config(self, tmp_path):
        saved = tmp_path / "saved.cfg"
        run_cli("run", "--graph", "gen:path:3", "--trials", "1",
                "--save-config", str(saved))
        assert ExperimentConfig.from_text(saved.read_text()).graph == "gen:path:3"

    def test_trace_dir_writes_jsonl(self, tmp_path):
        traces = tmp_path / "traces"
        code = run_cli("run", "--graph", "gen:path:5", "--root", "4",
                       "--k", "1", "--trials", "2", "--seed", "1",
                       "--trace-dir", str(traces),
                       "--out", str(tmp_path / "s.json"))
        assert code == 0
        files = sorted(traces.glob("*.jsonl"))
        assert len(files) == 2
        entry = json.loads(files[0].read_text().splitlines()[0])
        assert {"step", "activated", "deltas", "class",
                "potentials"} == set(entry)

    def test_parallel_jobs_match_serial(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        base = ("run", "--graph", "gen:random-tree:7:1", "--k", "1",
                "--daemon", "central", "--trials", "4", "--seed", "3")
        assert run_cli(*base, "--jobs", "1", "--out", str(a)) == 0
        assert run_cli(*base, "--jobs", "2", "--out", str(b)) == 0
        ja, jb = json.loads(a.read_text()), json.loads(b.read_text())
        ja["config"]["jobs"] = jb["config"]["jobs"] = None
        assert ja == jb


@pytest.fixture
def fixture_files(tmp_path, path5):
    net, tree, ids = path5
    graph_file = tmp_path / "path5.edges"
    graph_file.write_text(topology.dump_edge_list(net))
    g = path5_terminal_config(net, tree, ids)
    config_file = tmp_path / "terminal.json"
    config_file.write_text(json.dumps({"k": 1, "states": config_to_json(g)}))
    return graph_file, config_file, net, tree, ids


class TestCheck:
    def test_fixture_all_pass(self, fixture_files, tmp_path):
        graph_file, config_file, *_ = fixture_files
        out = tmp_path / "report.json"
        dot = tmp_path / "clusters.dot"
        code = run_cli("check", "--graph", str(graph_file),
                       "--config", str(config_file), "--out", str(out),
                       "--dot", str(dot))
        assert code == 0
        report = json.loads(out.read_text())
        assert report["ok"] and report["terminal"]
        assert report["legitimate"]["ok"]
        assert report["counting"]["ok"]
        assert "doublecircle" in dot.read_text()

    def test_mutated_fixture_names_clause(self, fixture_files, tmp_path):
        graph_file, config_file, net, tree, ids = fixture_files
        data = json.loads(config_file.read_text())
        data["states"][2]["headC"] = 4
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        out = tmp_path / "report.json"
        code = run_cli("check", "--graph", str(graph_file),
                       "--config", str(bad), "--out", str(out))
        assert code == 1
        report = json.loads(out.read_text())
        assert report["legitimate"]["clauses"]["kcluster_strong"] is False

    def test_non_terminal_flagged_with_enabled_nodes(self, fixture_files, tmp_path):
        graph_file, config_file, net, tree, ids = fixture_files
        data = json.loads(config_file.read_text())
        data["states"][0]["alpha"] = 7
        bad = tmp_path / "nonterminal.json"
        bad.write_text(json.dumps(data))
        out = tmp_path / "report.json"
        code = run_cli("check", "--graph", str(graph_file),
                       "--config", str(bad), "--out", str(out))
        assert code == 1
        report = json.loads(out.read_text())
        assert report["terminal"] is False
        assert 0 in report["enabled"]


class TestExplore:
    def test_small_instance_verdict(self, tmp_path):
        out = tmp_path / "verdict.json"
        code = run_cli("explore", "--kind", "path", "--n", "2", "--k", "1",
                       "--out", str(out))
        assert code == 0
        verdict = json.loads(out.read_text())
        assert verdict["certified"] and verdict["acyclic"]
        assert verdict["sinks"] == 1

    def test_oversized_instance_rejected(self, capsys):
        assert run_cli("explore", "--n", "64") == 2
        assert "rejected" in capsys.readouterr().err


class TestPlumbing:
    def test_substream_stable_and_split(self):
        assert substream(1, "a", 2).random() == substream(1, "a", 2).random()
        assert substream(1, "a", 2).random() != substream(1, "a", 3).random()

    def test_load_graph_gen_spec_errors(self):
        with pytest.raises(topology.TopologyError):
            load_graph("gen:path")

    def test_bad_input_exit_code(self, tmp_path):
        missing = tmp_path / "nope.edges"
        assert run_cli("check", "--graph", str(missing),
                       "--config", str(missing)) == 2
