"""End-to-end runs of the command line through main(argv)."""
import json

from kcmlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_example(capsys):
    code, out, _ = run(capsys, "classify", "--d", "5", "--f", "4")
    assert code == 0
    assert "j = 3" in out and "omega_item = b" in out


def test_graph_example(capsys):
    code, out, _ = run(capsys, "graph", "--family", "tree", "--d", "3",
                       "--depth", "2", "--audit")
    assert code == 0
    assert "10 vertices" in out
    assert "audits pass" in out


def test_experiment_example(capsys):
    code, out, _ = run(capsys, "experiment", "nonergodicity",
                       "--graph", "tree:5", "--process", "nmvp",
                       "--eps", "0", "--T", "10")
    assert code == 0
    lines = [l for l in out.splitlines() if l and l[0].isdigit()]
    assert len(lines) == 11
    for line in lines:
        assert line.split(",")[3] == "0.0000000000"
    assert "multiplicity supported" in out


def test_usage_error_names_the_flag(capsys):
    code, _, err = run(capsys, "classify", "--bogus", "1")
    assert code == 2
    assert "--bogus" in err


def test_usage_error_exit_code_is_two(capsys):
    code, _, err = run(capsys, "simulate", "--graph", "nope:1",
                       "--process", "cp", "--j", "2", "--T", "5")
    assert code == 2
    assert "error" in err


def test_bad_threads_rejected(capsys):
    code, _, err = run(capsys, "classify", "--d", "5", "--f", "4",
                       "--threads", "0")
    assert code == 2
    assert "--threads" in err


def test_simulate_audit_passes(capsys):
    code, out, _ = run(capsys, "simulate", "--graph", "tree:3:3",
                       "--process", "cp", "--j", "2", "--eps", "0.1",
                       "--T", "6", "--audit")
    assert code == 0
    assert "matches reference" in out


def test_simulate_fa(capsys):
    code, out, _ = run(capsys, "simulate", "--graph", "tree:3:3",
                       "--process", "fa", "--j", "1", "--q", "0.6",
                       "--T", "4")
    assert code == 0
    assert "events:" in out


def test_history_scan_clean(capsys):
    code, out, _ = run(capsys, "history", "--graph", "h:5,4:4",
                       "--process", "cp", "--j", "3", "--eps", "0.08",
                       "--T", "5", "--audit")
    assert code == 0
    assert "failed: 0" in out


def test_toom_scan_reports_misses(capsys):
    code, out, _ = run(capsys, "toom", "--graph", "h:5,4:4", "--j", "3",
                       "--eps", "0.25", "--T", "6", "--cap", "12")
    assert code == 0
    assert "hit rate" in out


def test_cluster_command_writes_artifacts(capsys, tmp_path):
    code, out, _ = run(capsys, "cluster", "--graph", "tree:5:4",
                       "--process", "cp", "--j", "4",
                       "--eps-list", "0.05", "--T", "6",
                       "--trials", "40", "--lmax", "3",
                       "--out", str(tmp_path))
    assert code == 0
    csvs = list(tmp_path.glob("cluster_tails-*.csv"))
    assert len(csvs) == 1
    manifest = json.loads(
        next(tmp_path.glob("cluster_tails-*.json")).read_text())
    assert manifest["seed"] == 0


def test_cluster_needs_eps_list(capsys):
    code, _, err = run(capsys, "cluster", "--graph", "tree:5:4",
                       "--process", "cp", "--j", "4", "--T", "6")
    assert code == 2
    assert "--eps-list" in err


def test_config_defaults_and_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "graph": "tree:4:3", "process": "cp", "j": 2, "eps": 0.2,
        "T": 4, "trials": 30}))
    code, out, _ = run(capsys, "--config", str(cfg),
                       "experiment", "nonergodicity")
    assert code == 0
    assert ",30," in out
    code, out, _ = run(capsys, "--config", str(cfg),
                       "experiment", "nonergodicity", "--trials", "12")
    assert code == 0
    assert ",12," in out and ",30," not in out


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grpah": "tree:4:3"}))
    code, _, err = run(capsys, "--config", str(cfg),
                       "experiment", "nonergodicity", "--graph", "tree:4:3",
                       "--process", "cp", "--j", "2", "--eps", "0.1",
                       "--T", "3")
    assert code == 2
    assert "grpah" in err


def test_graph_audit_failure_would_exit_one():
    # no generator defect to trigger here; the failure path is covered by
    # the history/toom tamper tests at module level. Keep the exit-code
    # contract pinned for usage errors instead.
    assert main(["graph", "--family", "hyperbolic", "--d", "5"]) == 2


def test_graph_manifest_written(tmp_path, capsys):
    code, out, _ = run(capsys, "graph", "--family", "tree", "--d", "3",
                       "--depth", "3", "--out", str(tmp_path))
    assert code == 0
    m = json.loads((tmp_path / "graph.manifest.json").read_text())
    assert m["d"] == 3 and m["n"] == 22
