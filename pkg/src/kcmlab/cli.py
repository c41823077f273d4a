"""Command-line front end.

One subcommand per module pipeline.  Exit status is the contract: 0 clean,
1 when a certificate or validator fails (with a JSON report on stdout so CI
can parse the reason), 2 for usage errors.  A config file supplies
defaults; explicit flags win.  All numeric output goes through fixed
decimal formatting, never the locale.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from kcmlab.classify import (classify, hyperbolic_case_table, range_32_max,
                             tree_inputs)
from kcmlab.dynamics import (ALL_ONE, Process, bernoulli, run_discrete,
                             run_fa)
from kcmlab.experiments import (EXPERIMENTS, ExperimentSpec, _fmt,
                                graph_from_text, run_experiment)
from kcmlab.graphs import Graph, build_hyperbolic, build_tree
from kcmlab.history import (Point, extract_history, peierls_bound,
                            presence_probability_audit, validate_history)
from kcmlab.randomness import RandomField
from kcmlab.toom import (NotFound, build_dependence_bp, certify_cycle,
                         find_present_cycle, polar_bp, validate_cycle)


def _fail(report: dict) -> int:
    print(json.dumps({"status": "certificate_failure", **report},
                     sort_keys=True))
    return 1


def _emit_manifest(args, outdir: str | None, extra: dict | None = None):
    if not outdir:
        return
    cfg = {k: v for k, v in vars(args).items()
           if k not in ("func", "config") and v is not None}
    cfg.update(extra or {})
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.cmd}.manifest.json").write_text(
        json.dumps(cfg, sort_keys=True, indent=1, default=str) + "\n")


def _inputs_for(g: Graph):
    from kcmlab.classify import hyperbolic_inputs
    if g.family == "tree":
        return tree_inputs(g.d)
    if g.family == "hyperbolic":
        return hyperbolic_inputs(g.d, g.f)
    raise ValueError("no classification constants for explicit graphs")


# -- subcommand bodies ---------------------------------------------------


def cmd_graph(args) -> int:
    if args.family == "tree":
        g = build_tree(args.d, args.depth)
    else:
        if args.f is None:
            print("error: --f is required for --family hyperbolic",
                  file=sys.stderr)
            return 2
        g = build_hyperbolic(args.d, args.f, args.radius)
    counts = np.bincount(g.layer, minlength=g.radius + 1)
    print(f"{g.family} d={g.d}" + (f" f={g.f}" if g.f else "")
          + f" radius={g.radius}: {g.n} vertices,"
          f" {len(g.indices) // 2} edges")
    print("layer counts: " + " ".join(str(int(c)) for c in counts))
    if args.text:
        print(g.to_text())
    _emit_manifest(args, args.out, {"n": g.n})
    if args.audit:
        bad = []
        if not g.audit_layers():
            bad.append("layer labels disagree with BFS")
        wrong = g.audit_interior_degrees()
        if wrong:
            bad.append(f"interior degree violations at {wrong[:5]}")
        if g.family == "hyperbolic":
            n_faces, offenders = g.audit_interior_faces()
            if offenders:
                bad.append(f"face length violations: {offenders[:3]}")
            else:
                print(f"faces audited: {n_faces}")
        if bad:
            return _fail({"command": "graph", "violations": bad})
        print("audits pass")
    return 0


def cmd_classify(args) -> int:
    if args.tree is not None:
        inp = tree_inputs(args.tree)
        print(f"tree({args.tree}) thresholds:")
        for j in range(1, args.tree + 1):
            rep = classify(j, inp)
            print(f"  j = {j}: omega {rep.omega_verdict}"
                  f" (item {rep.omega_item}), chi {rep.chi_verdict}"
                  f" (item {rep.chi_item})")
        _emit_manifest(args, args.out)
        return 0
    if args.d is None or args.f is None:
        print("error: --d and --f (or --tree) are required", file=sys.stderr)
        return 2
    table = hyperbolic_case_table(args.d, args.f)
    print(f"H({args.d},{args.f}) classification,"
          f" nontrivial j up to {range_32_max(args.d, args.f)},"
          f" majority threshold {table.majority_threshold}:")
    for row in table.rows:
        rep = row.report
        tag = "" if row.in_range_32 else f"  [{row.note}]"
        print(f"  j = {row.j}: omega {rep.omega_verdict}"
              f" (omega_item = {rep.omega_item}), chi {rep.chi_verdict}"
              f" (chi_item = {rep.chi_item}){tag}")
    _emit_manifest(args, args.out)
    return 0


def cmd_simulate(args) -> int:
    g = graph_from_text(args.graph)
    fld = RandomField(args.seed, args.trial)
    if args.process == "fa":
        traj = run_fa(g, args.j, args.q, bernoulli(args.q), args.T, fld,
                      policy=args.policy)
        times = [round(args.T * k / 4, 3) for k in range(5)]
        for t in times:
            st = traj.state_at(t)
            frac = float(st[~g.boundary].mean())
            print(f"t={_fmt(float(t))} one_fraction={_fmt(frac)}")
        print(f"events: {traj.n_events}")
        _emit_manifest(args, args.out, {"events": traj.n_events})
        return 0
    proc = Process(args.process, args.j, args.eps)
    traj = run_discrete(g, proc, ALL_ONE, int(args.T), fld,
                        policy=args.policy)
    for t in range(0, int(args.T) + 1, max(1, int(args.T) // 10)):
        frac = float(traj.states[t][~g.boundary].mean())
        print(f"t={t} one_fraction={_fmt(frac)}")
    if args.audit:
        ref = run_discrete(g, proc, ALL_ONE, int(args.T), fld,
                           policy=args.policy, reference=True)
        if not np.array_equal(ref.states, traj.states):
            return _fail({"command": "simulate",
                          "detail": "compiled and reference sweeps differ"})
        print("audit: compiled sweep matches reference")
    _emit_manifest(args, args.out)
    return 0


def cmd_history(args) -> int:
    g = graph_from_text(args.graph)
    fld = RandomField(args.seed, args.trial)
    proc = Process(args.process, args.j, args.eps)
    traj = run_discrete(g, proc, ALL_ONE, int(args.T), fld)
    t = args.time if args.time is not None else int(args.T)
    if args.vertex is not None:
        verts = [args.vertex]
    else:
        verts = [int(v) for v in np.nonzero(traj.states[t] == 0)[0]]
    inputs = _inputs_for(g)
    failures = []
    n_ok = 0
    notes: set[str] = set()
    for x in verts:
        if traj.states[t, x] != 0:
            failures.append({"point": [x, t], "reason": "state is one"})
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            H = extract_history(traj, fld, Point(x, t))
        notes.update(str(w.message) for w in caught)
        rep = validate_history(H, g)
        pres = presence_probability_audit(H, fld, args.eps)
        entry = {"point": [x, t], "n_points": H.n_points,
                 "n_sinks": H.n_sinks}
        if not rep.ok:
            entry["violations"] = rep.violations
            failures.append(entry)
            continue
        if not pres.ok:
            entry["presence_mismatches"] = list(pres.mismatches)
            failures.append(entry)
            continue
        n_ok += 1
        if args.audit:
            for variant in ("edge_general", "edge_improved", "vertex"):
                pb = peierls_bound(H, inputs, variant)
                if not pb.holds:
                    entry[f"peierls_{variant}"] = "violated"
                    failures.append(entry)
                    break
    for note in sorted(notes):
        print(f"note: {note}")
    print(f"zero events at t={t}: {len(verts)}, valid: {n_ok},"
          f" failed: {len(failures)}")
    _emit_manifest(args, args.out, {"valid": n_ok, "failed": len(failures)})
    if failures:
        return _fail({"command": "history", "failures": failures[:20]})
    return 0


def cmd_toom(args) -> int:
    g = graph_from_text(args.graph)
    fld = RandomField(args.seed, args.trial)
    horizon = int(args.T)
    proc = Process("bp", args.j, args.eps)
    traj = run_discrete(g, proc, ALL_ONE, horizon, fld)
    dep = build_dependence_bp(g, g.root, args.j, fld, args.eps, horizon)
    polar = polar_bp(g, g.root)
    if args.vertex is not None:
        t = args.time if args.time is not None else horizon
        roots = [(args.vertex, t)]
    elif args.time is not None:
        roots = [(int(x), args.time) for x in
                 np.nonzero(traj.states[args.time] == 0)[0]]
    else:
        roots = [(int(x), int(s) + 1) for s, x in
                 np.argwhere(traj.states[1:horizon + 1] == 0)]
    hits, singles, misses, failures = 0, 0, [], []
    for x, t in roots:
        res = find_present_cycle(dep, Point(x, t), args.cap)
        if isinstance(res, NotFound):
            misses.append((x, t))
            continue
        cert = certify_cycle(res, polar)
        val_ok, val_bad = validate_cycle(res, dep)
        if not (cert.ok and val_ok):
            failures.append({"root": [x, t],
                             "certify": list(cert.failed),
                             "validate": val_bad})
            continue
        hits += 1
        if res.n == 1:
            singles += 1
    total = len(roots)
    rate = hits / total if total else float("nan")
    print(f"zeros scanned: {total}, cycles found: {hits}"
          f" ({singles} singleton), misses: {len(misses)},"
          f" hit rate: {_fmt(rate)}")
    for x, t in misses[:20]:
        print(f"miss: no present cycle within {args.cap} edges"
              f" at ({x}, {t})")
    _emit_manifest(args, args.out, {"hits": hits, "misses": len(misses)})
    if failures:
        return _fail({"command": "toom", "failures": failures[:20]})
    return 0


def cmd_cluster(args) -> int:
    if not args.eps_list:
        print("error: --eps-list must name at least one noise level",
              file=sys.stderr)
        return 2
    spec = ExperimentSpec(
        name="cluster_tails", graph=args.graph, observable="cluster tails",
        kind=args.process, j=args.j, eps_list=tuple(args.eps_list),
        T=args.T, trials=args.trials, seed=args.seed, l_max=args.lmax,
        t_margin=args.margin)
    table = run_experiment(spec)
    print(",".join(table.columns))
    for row in table.rows:
        print(",".join(_fmt(v) for v in row))
    print(f"verdict: {table.verdict}")
    if "warning" in table.extras:
        print(f"warning: {table.extras['warning']}")
    if args.out:
        paths = table.write(args.out)
        print(f"wrote {paths['results']} and {paths['manifest']}")
    return 0


def cmd_experiment(args) -> int:
    observable = {
        "nonergodicity": "root-state probability",
        "convergence_fa": "discrepancy probability",
        "cluster_tails": "cluster tails",
        "stability_threshold": "root-state probability",
        "qc_bp": "fill fraction",
        "reversibility_fa": "marginal means",
    }[args.name]
    spec = ExperimentSpec(
        name=args.name, graph=args.graph, observable=observable,
        kind=args.process, j=args.j, eps=args.eps, q=args.q, p=args.p,
        eps_list=tuple(args.eps_list), q_grid=tuple(args.q_grid),
        T=args.T, trials=args.trials, trials_list=tuple(args.trials_list),
        seed=args.seed, sample_times=tuple(args.sample_times),
        l_max=args.lmax, t_margin=args.margin)
    table = run_experiment(spec)
    if len(table.rows) <= 200:
        print(",".join(table.columns))
        for row in table.rows:
            print(",".join(_fmt(v) for v in row))
    print(f"verdict: {table.verdict}")
    if args.out:
        paths = table.write(args.out)
        print(f"wrote {paths['results']} and {paths['manifest']}")
    return 0


# -- parser --------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x != "")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x != "")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kcmlab",
        description="Constrained dynamics and consensus processes on "
                    "hyperbolic lattices and trees.")
    ap.add_argument("--config", help="JSON file of flag defaults "
                                     "(flags given explicitly win)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, seed=True):
        p.add_argument("--out", help="directory for artifacts + manifest")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap; trials are scheduled per trial "
                            "index so any cap gives identical output")
        if seed:
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--trial", type=int, default=0)

    p = sub.add_parser("graph", help="build a truncation and audit it")
    p.add_argument("--family", choices=("hyperbolic", "tree"),
                   required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--f", type=int)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--radius", type=int, default=6)
    p.add_argument("--audit", action="store_true")
    p.add_argument("--text", action="store_true",
                   help="print the adjacency listing")
    common(p, seed=False)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("classify", help="goodness table for a family")
    p.add_argument("--d", type=int)
    p.add_argument("--f", type=int)
    p.add_argument("--tree", type=int, help="classify tree(d) instead")
    common(p, seed=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="run one trajectory")
    p.add_argument("--graph", required=True, help="tree:D[:DEPTH] or "
                                                  "h:D,F[:RADIUS]")
    p.add_argument("--process", choices=("bp", "cp", "nmvp", "fa"),
                   required=True)
    p.add_argument("--j", type=int)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--q", type=float)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--policy", default="one",
                   choices=("one", "zero", "absent"))
    p.add_argument("--audit", action="store_true",
                   help="cross-check against the reference sweep")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("history", help="extract and certify zero witnesses")
    p.add_argument("--graph", default="h:5,4:6")
    p.add_argument("--process", choices=("bp", "cp"), default="cp")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--time", type=int, help="level to scan (default T)")
    p.add_argument("--vertex", type=int, help="single event instead of scan")
    p.add_argument("--audit", action="store_true",
                   help="also check the contour inequalities")
    common(p)
    p.set_defaults(func=cmd_history)

    p = sub.add_parser("toom", help="search and certify present cycles")
    p.add_argument("--graph", default="h:5,4:6")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--time", type=int, help="root time (default T)")
    p.add_argument("--vertex", type=int)
    p.add_argument("--cap", type=int, default=24)
    common(p)
    p.set_defaults(func=cmd_toom)

    p = sub.add_parser("cluster", help="zero-cluster diameter tails")
    p.add_argument("--graph", required=True)
    p.add_argument("--process", choices=("bp", "cp"), default="cp")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--eps-list", type=_floats, default=(),
                   dest="eps_list", metavar="E1,E2,...")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--lmax", type=int, default=8)
    p.add_argument("--margin", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("experiment", help="prepackaged Monte Carlo runs")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--graph", required=True)
    p.add_argument("--process", default="", help="cp | bp | nmvp | fa")
    p.add_argument("--j", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--eps-list", type=_floats, default=(), dest="eps_list")
    p.add_argument("--q-grid", type=_floats, default=(), dest="q_grid")
    p.add_argument("--trials-list", type=_ints, default=(),
                   dest="trials_list")
    p.add_argument("--sample-times", type=_floats, default=(),
                   dest="sample_times")
    p.add_argument("--T", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--lmax", type=int, default=8)
    p.add_argument("--margin", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_experiment)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> str | None:
    """Load --config JSON and install it as subparser defaults, so that
    flags given on the command line still win.  Returns an error message
    instead of raising so main can exit 2 uniformly."""
    if "--config" not in argv:
        return None
    at = argv.index("--config")
    if at + 1 >= len(argv):
        return "--config requires a path"
    try:
        cfg = json.loads(Path(argv[at + 1]).read_text())
    except (OSError, json.JSONDecodeError) as e:
        return f"--config: {e}"
    if not isinstance(cfg, dict):
        return "--config: top level must be an object"
    del argv[at:at + 2]
    cmd = next((a for a in argv if not a.startswith("-")), None)
    sub = ap._subparsers._group_actions[0]
    if cmd not in sub.choices:
        return "--config needs a subcommand to apply to"
    sp = sub.choices[cmd]
    actions = {a.dest: a for a in sp._actions}
    clean = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            return f"--config: unknown key {key!r} for {cmd!r}"
        if not actions[dest].option_strings:
            return f"--config: {key!r} is positional, give it on the line"
        if isinstance(val, list):
            val = tuple(val)
        clean[dest] = val
        actions[dest].required = False
    sp.set_defaults(**clean)
    return None


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    err = _apply_config(ap, argv)
    if err is not None:
        print(f"error: {err}", file=sys.stderr)
        return 2
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
