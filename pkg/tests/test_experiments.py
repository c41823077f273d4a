"""Experiment plumbing: determinism of the artifacts, the degenerate
closed forms, and the spec hashing."""
import json
import math

import numpy as np
import pytest

from kcmlab.experiments import (EXPERIMENTS, ExperimentSpec, _fmt,
                                graph_from_text, run_experiment)


def tiny(name, **kw):
    base = dict(name=name, graph="tree:4:3", observable="x", seed=11)
    base.update(kw)
    return ExperimentSpec(**base)


def test_graph_from_text():
    g = graph_from_text("tree:4:3")
    assert g.family == "tree" and g.d == 4 and g.radius == 3
    g = graph_from_text("tree:5")
    assert g.radius == 6
    h = graph_from_text("h:5,4:4")
    assert h.family == "hyperbolic" and (h.d, h.f, h.radius) == (5, 4, 4)
    assert graph_from_text("h:7,3").radius == 6
    for bad in ("grid:3", "tree", "h:5", "tree:x"):
        with pytest.raises(ValueError):
            graph_from_text(bad)


def test_fmt_fixed_decimal():
    assert _fmt(0.1) == "0.1000000000"
    assert _fmt(3) == "3"
    assert _fmt(True) == "1"
    assert _fmt(False) == "0"
    assert _fmt(float("nan")) == "nan"
    assert _fmt(float("inf")) == "inf"
    assert _fmt(-2.5) == "-2.5000000000"


def test_spec_hash_is_canonical():
    a = tiny("nonergodicity", kind="cp", j=3, eps=0.1, T=5, trials=20)
    b = tiny("nonergodicity", kind="cp", j=3, eps=0.1, T=5, trials=20)
    c = tiny("nonergodicity", kind="cp", j=3, eps=0.1, T=5, trials=21)
    assert a.spec_hash() == b.spec_hash()
    assert a.spec_hash() != c.spec_hash()
    assert len(a.spec_hash()) == 12
    json.loads(a.canonical())


def test_rerun_reproduces_artifacts_byte_for_byte(tmp_path):
    spec = tiny("nonergodicity", kind="nmvp", eps=0.15, T=6, trials=30)
    out1 = run_experiment(spec).write(tmp_path / "a")
    out2 = run_experiment(spec).write(tmp_path / "b")
    csv1 = (tmp_path / "a" / out1["results"].name).read_bytes()
    csv2 = (tmp_path / "b" / out2["results"].name).read_bytes()
    assert out1["results"].name == out2["results"].name
    assert csv1 == csv2
    m1 = json.loads(out1["manifest"].read_text())
    m2 = json.loads(out2["manifest"].read_text())
    m1.pop("wall_time_seconds"), m2.pop("wall_time_seconds")
    assert m1 == m2


def test_manifest_contents(tmp_path):
    spec = tiny("nonergodicity", kind="cp", j=2, eps=0.1, T=4, trials=10)
    table = run_experiment(spec)
    paths = table.write(tmp_path)
    m = json.loads(paths["manifest"].read_text())
    assert m["spec_hash"] == spec.spec_hash()
    assert m["seed"] == 11
    assert m["spec"]["graph"] == "tree:4:3"
    assert "python" in m["versions"] and "numpy" in m["versions"]
    assert m["wall_time_seconds"] >= 0
    import hashlib
    digest = hashlib.sha256(paths["results"].read_bytes()).hexdigest()
    assert m["results_sha256"] == digest
    assert paths["results"].name.endswith(f"-{spec.spec_hash()}.csv")


def test_different_seed_different_rows():
    a = run_experiment(tiny("nonergodicity", kind="cp", j=2, eps=0.3, T=6,
                            trials=40, seed=1))
    b = run_experiment(tiny("nonergodicity", kind="cp", j=2, eps=0.3, T=6,
                            trials=40, seed=2))
    assert a.rows != b.rows


def test_nonergodicity_closed_forms():
    quiet = run_experiment(tiny("nonergodicity", kind="nmvp", eps=0.0,
                                T=5, trials=25))
    zcol = [r[quiet.columns.index("p_hat")] for r in quiet.rows]
    assert zcol == [0.0] * 6
    assert quiet.verdict == "multiplicity supported"
    loud = run_experiment(tiny("nonergodicity", kind="cp", j=2, eps=1.0,
                               T=5, trials=25))
    pcol = [r[loud.columns.index("p_hat")] for r in loud.rows]
    assert pcol[0] == 0.0 and pcol[1:] == [1.0] * 5
    assert loud.verdict != "multiplicity supported"


def test_nonergodicity_rejects_bp():
    with pytest.raises(ValueError):
        run_experiment(tiny("nonergodicity", kind="bp", j=2, eps=0.1,
                            T=3, trials=5))


def test_qc_bp_endpoints():
    table = run_experiment(tiny("qc_bp", kind="bp", j=2,
                                q_grid=(0.0, 1.0), T=8, trials=30))
    probs = {r[0]: r[table.columns.index("p_hat")] for r in table.rows}
    assert probs[0.0] == 0.0
    assert probs[1.0] == 1.0


def test_convergence_equal_rates_is_identically_zero():
    table = run_experiment(tiny("convergence_fa", graph="tree:3:3", j=1,
                                q=0.8, p=0.8, T=6.0, trials=15,
                                sample_times=(2.0, 6.0)))
    i = table.columns.index("p_diff")
    assert all(r[i] == 0.0 for r in table.rows)


def test_cluster_tails_runs_and_warns_off_gate():
    # j = 5 on tree(5) is outside every goodness item: warn, not refuse
    table = run_experiment(ExperimentSpec(
        name="cluster_tails", graph="tree:5:4", observable="tails",
        kind="cp", j=5, eps_list=(0.05,), T=6, trials=60, seed=3, l_max=4))
    assert "warning" in table.extras
    assert "classification gate" in table.extras["warning"]
    assert len(table.rows) == 5


def test_cluster_tails_good_gate_no_warning():
    table = run_experiment(ExperimentSpec(
        name="cluster_tails", graph="tree:5:4", observable="tails",
        kind="cp", j=4, eps_list=(0.03,), T=6, trials=80, seed=3, l_max=4))
    assert "warning" not in table.extras
    i_surv = table.columns.index("n_survive")
    assert table.rows[0][i_surv] >= table.rows[-1][i_surv]


def test_trials_list_overrides_trials():
    table = run_experiment(ExperimentSpec(
        name="cluster_tails", graph="tree:4:3", observable="tails",
        kind="cp", j=3, eps_list=(0.1, 0.2), trials_list=(30, 50),
        T=5, trials=999, seed=5, l_max=3))
    i_n = table.columns.index("n_trials")
    by_eps = {}
    for r in table.rows:
        by_eps.setdefault(r[0], set()).add(r[i_n])
    assert by_eps[0.1] == {30} and by_eps[0.2] == {50}


def test_stability_threshold_reports_interval_or_absence():
    table = run_experiment(tiny(
        "stability_threshold", kind="cp", j=3,
        eps_list=(0.01, 0.8), T=8, trials=40, refine=2))
    assert ("proxy interval" in table.verdict
            or "no crossing" in table.verdict)
    assert "finite-size proxy" in table.extras["proxy_note"]


def test_reversibility_pools_mean():
    table = run_experiment(tiny(
        "reversibility_fa", graph="tree:4:4", j=2, q=0.7, T=6.0,
        trials=60, sample_times=(3.0, 6.0)))
    assert "pooled mean" in table.verdict
    pooled = table.extras["pooled_mean"]
    assert abs(pooled - 0.7) < 0.05


def test_experiment_registry_complete():
    assert set(EXPERIMENTS) == {
        "nonergodicity", "convergence_fa", "cluster_tails",
        "stability_threshold", "qc_bp", "reversibility_fa"}
    with pytest.raises(ValueError):
        run_experiment(tiny("unknown_thing"))


def test_trials_validation():
    with pytest.raises(ValueError):
        tiny("nonergodicity", trials=0)
