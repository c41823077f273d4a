"""Prepackaged Monte Carlo experiments with reproducible artifacts.

Each experiment maps an ExperimentSpec to a ResultTable whose CSV bytes
are a pure function of spec and seed.  Wall time is the one measurement
that cannot be reproducible; it lives in the manifest under its own key
and nowhere else, so artifact comparison is exact after dropping it.
Trials are independent under for_trial(i) derived seeds and reduced in
trial order, which makes any execution schedule give the same table;
this process runs them sequentially.
"""
from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

import numba

from kcmlab import _kernels
from kcmlab.classify import classify, hyperbolic_inputs, tree_inputs
from kcmlab.clusters import (Cluster, fit_decay, tail_table, wilson,
                             zero_cluster)
from kcmlab.dynamics import (DiscreteTrajectory, Process, bernoulli,
                             effective_adjacency, run_fa, run_fa_coupled)
from kcmlab.graphs import Graph, build_hyperbolic, build_tree
from kcmlab.history import Point
from kcmlab.randomness import RandomField


@dataclass(frozen=True)
class ExperimentSpec:
    """Complete parameterization of one experiment run.

    graph is a compact text form: "tree:D[:DEPTH]" or "h:D,F[:RADIUS]"
    (depth and radius default to 6).  Unused fields stay at their
    defaults and are still echoed in the manifest.
    """
    name: str
    graph: str
    observable: str
    kind: str = ""              # "cp" | "bp" | "nmvp" | "fa"
    j: int | None = None
    eps: float | None = None
    q: float | None = None
    p: float | None = None
    eps_list: tuple[float, ...] = ()
    q_grid: tuple[float, ...] = ()
    T: float = 0.0
    trials: int = 1
    trials_list: tuple[int, ...] = ()   # per-eps override for eps_list
    seed: int = 0
    sample_times: tuple[float, ...] = ()
    l_max: int = 8
    seed_time: int | None = None        # cluster seed time, default T//2
    t_margin: int = 1
    refine: int = 4                     # bisection steps for the proxy

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    def canonical(self) -> str:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def spec_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]


def graph_from_text(text: str) -> Graph:
    parts = text.split(":")
    fam = parts[0]
    try:
        if fam == "tree":
            d = int(parts[1])
            depth = int(parts[2]) if len(parts) > 2 else 6
            return build_tree(d, depth)
        if fam in ("h", "hyperbolic"):
            d, f = (int(x) for x in parts[1].split(","))
            radius = int(parts[2]) if len(parts) > 2 else 6
            return build_hyperbolic(d, f, radius)
    except (IndexError, ValueError) as e:
        raise ValueError(f"bad graph spec {text!r}: "
                         "want tree:D[:DEPTH] or h:D,F[:RADIUS]") from e
    raise ValueError(f"unknown graph spec {text!r}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "-inf" if x < 0 else "inf"
        return f"{x:.10f}"
    return str(x)


@dataclass(frozen=True)
class ResultTable:
    spec: ExperimentSpec
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    verdict: str
    extras: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(x) for x in row))
        return "\n".join(lines) + "\n"

    def manifest(self) -> dict:
        csv = self.to_csv().encode()
        return {
            "experiment": self.spec.name,
            "observable": self.spec.observable,
            "spec": json.loads(self.spec.canonical()),
            "seed": self.spec.seed,
            "spec_hash": self.spec.spec_hash(),
            "verdict": self.verdict,
            "extras": self.extras,
            "results_sha256": hashlib.sha256(csv).hexdigest(),
            "versions": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "numba": numba.__version__,
            },
            "wall_time_seconds": round(self.wall_time, 3),
        }

    def write(self, outdir: str | Path) -> dict[str, Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        base = f"{self.spec.name}-{self.spec.spec_hash()}"
        csv_path = out / f"{base}.csv"
        man_path = out / f"{base}.json"
        csv_path.write_text(self.to_csv())
        man_path.write_text(json.dumps(self.manifest(), indent=1,
                                       sort_keys=True) + "\n")
        return {"results": csv_path, "manifest": man_path}


def _root_series(g: Graph, proc: Process, T: int, seed: int, trials: int,
                 init_q: float | None = None, chunk: int = 500) -> np.ndarray:
    """Root state per (trial, t), chunked; init all-one unless init_q set."""
    indptr, indices = effective_adjacency(g, "one")
    indices = indices.astype(np.int32)
    free = (~g.boundary).astype(np.uint8)
    fld0 = RandomField(seed)
    out = np.empty((trials, T + 1), np.uint8)
    for lo in range(0, trials, chunk):
        m = min(chunk, trials - lo)
        flds = [fld0.for_trial(lo + i) for i in range(m)]
        bases = np.array([f.base("L") for f in flds], dtype=np.uint64)
        if init_q is None:
            x0 = np.ones((m, g.n), dtype=np.uint8)
        else:
            x0 = np.stack([
                bernoulli(init_q).realize(g, f, "one").states for f in flds])
        out[lo:lo + m] = _kernels.run_root_series(
            indptr, indices, free, x0, bases, T, proc.code, proc.j_eff,
            proc.eps, g.root)
    return out


def exp_nonergodicity(spec: ExperimentSpec) -> ResultTable:
    """Root zero-probability curve from all-one; supports the multiplicity
    claim when even the Wilson upper bound never reaches 1/2."""
    t0 = time.time()
    if spec.kind not in ("cp", "nmvp"):
        raise ValueError("nonergodicity wants kind cp or nmvp")
    g = graph_from_text(spec.graph)
    proc = Process(spec.kind, spec.j, float(spec.eps))
    T = int(spec.T)
    series = _root_series(g, proc, T, spec.seed, spec.trials)
    rows = []
    worst = 0.0
    for t in range(T + 1):
        k = int(np.sum(series[:, t] == 0))
        p, lo, hi = wilson(k, spec.trials)
        worst = max(worst, hi)
        rows.append((t, spec.trials, k, p, lo, hi))
    verdict = ("multiplicity supported" if worst < 0.5
               else "not supported at this eps")
    return ResultTable(spec, ("t", "n_trials", "n_zero", "p_hat", "ci_lo",
                              "ci_hi"),
                       tuple(rows), verdict,
                       {"max_upper_ci": worst}, time.time() - t0)


def exp_convergence_fa(spec: ExperimentSpec) -> ResultTable:
    """Coupled q-resampling runs from Bernoulli(p) and Bernoulli(q); root
    discrepancy probability per sample time plus the p-copy root mean."""
    t0 = time.time()
    g = graph_from_text(spec.graph)
    q, p = float(spec.q), float(spec.p)
    sample = tuple(float(s) for s in spec.sample_times) or (spec.T,)
    fld0 = RandomField(spec.seed)
    root = g.root
    kdiff = {s: 0 for s in sample}
    kone = {s: 0 for s in sample}
    for i in range(spec.trials):
        fld = fld0.for_trial(i)
        traj_p, _, disc = run_fa_coupled(g, spec.j, q, p, spec.T, fld,
                                         sample_times=np.array(sample))
        for s in sample:
            if root in disc[s]:
                kdiff[s] += 1
            if traj_p.state_at(s)[root] == 1:
                kone[s] += 1
    rows = []
    xs, ys = [], []
    for s in sample:
        pd, lo, hi = wilson(kdiff[s], spec.trials)
        mean_p = kone[s] / spec.trials
        rows.append((s, spec.trials, kdiff[s], pd, lo, hi, mean_p,
                     abs(mean_p - q)))
        if kdiff[s] > 0 and s > 0:
            xs.append(s)
            ys.append(math.log(pd))
    rate = float("nan")
    if len(xs) >= 2:
        A = np.stack([np.asarray(xs), np.ones(len(xs))], axis=1)
        sol, *_ = np.linalg.lstsq(A, np.asarray(ys), rcond=None)
        rate = -float(sol[0])
    final = rows[-1][3]
    verdict = f"final discrepancy {final:.4f}"
    return ResultTable(spec, ("t", "n_trials", "n_diff", "p_diff", "ci_lo",
                              "ci_hi", "mean_root_p", "dev_from_q"),
                       tuple(rows), verdict,
                       {"decay_rate_fit": rate}, time.time() - t0)


def _classification_gate(g: Graph, kind: str, j: int) -> tuple[bool, str]:
    if g.family == "tree":
        rep = classify(j, tree_inputs(g.d))
    elif g.family == "hyperbolic":
        rep = classify(j, hyperbolic_inputs(g.d, g.f))
    else:
        return False, "no classification for explicit graphs"
    if kind == "bp":
        return rep.omega_good, f"omega item {rep.omega_item}"
    return rep.chi_good, f"chi item {rep.chi_item}"


def exp_cluster_tails(spec: ExperimentSpec) -> ResultTable:
    """Diameter tail of the seed zero cluster per noise level, with the
    decay fit.  The goodness gate warns instead of refusing: the table is
    the evidence either way."""
    t0 = time.time()
    if spec.kind not in ("cp", "bp"):
        raise ValueError("cluster tails wants kind cp or bp")
    g = graph_from_text(spec.graph)
    ok, item = _classification_gate(g, spec.kind, spec.j)
    warning = "" if ok else f"classification gate: not good ({item})"
    T = int(spec.T)
    st = spec.seed_time if spec.seed_time is not None else T // 2
    seed_pt = Point(g.root, st)
    indptr, indices = effective_adjacency(g, "one")
    indices = indices.astype(np.int32)
    free = (~g.boundary).astype(np.uint8)
    fld0 = RandomField(spec.seed)
    empty = Cluster(frozenset(), False, -math.inf, 0)
    rows = []
    tables = []
    for ei, eps in enumerate(spec.eps_list):
        trials = (spec.trials_list[ei] if ei < len(spec.trials_list)
                  else spec.trials)
        proc = Process(spec.kind, spec.j, float(eps))
        clusters = []
        for lo in range(0, trials, 500):
            m = min(500, trials - lo)
            bases = np.array([fld0.for_trial(lo + i).base("L")
                              for i in range(m)], dtype=np.uint64)
            x0 = np.ones((m, g.n), dtype=np.uint8)
            out = _kernels.run_traj_chunk(indptr, indices, free, x0, bases,
                                          T, proc.code, proc.j_eff,
                                          float(eps))
            for i in range(m):
                if out[i, seed_pt.t, seed_pt.x] != 0:
                    clusters.append(empty)
                    continue
                traj = DiscreteTrajectory(g, out[i], proc,
                                          fld0.for_trial(lo + i))
                clusters.append(zero_cluster(traj, seed_pt,
                                             t_margin=spec.t_margin,
                                             keep_points=False))
        tab = tail_table(clusters, spec.l_max)
        tables.append((float(eps), tab))
        for r in tab.rows:
            rows.append((float(eps), r.ell, r.n_trials, r.n_survive,
                         r.n_censored, r.p_hat, r.ci_lo, r.ci_hi))
    rep = fit_decay(tables)
    fits = {f"c_at_{f.eps:g}": f.c for f in rep.fits}
    verdict = " ".join(f"{k}={_fmt(v)}" for k, v in fits.items())
    extras = {"fits": [asdict(f) for f in rep.fits],
              "slope_ratios": list(rep.slope_ratios),
              "log_eps_ratios": list(rep.log_eps_ratios)}
    if warning:
        extras["warning"] = warning
    return ResultTable(spec, ("eps", "ell", "n_trials", "n_survive",
                              "n_censored", "p_hat", "ci_lo", "ci_hi"),
                       tuple(rows), verdict, extras, time.time() - t0)


def _one_prob_at_T(g, kind, j, eps, T, seed, trials, salt) -> float:
    proc = Process(kind, j, float(eps))
    series = _root_series(g, proc, T, seed + salt, trials)
    return float(np.mean(series[:, T] == 1))


def exp_stability_threshold(spec: ExperimentSpec) -> ResultTable:
    """Long-run root one-probability over a noise grid, plus a bisection
    refinement of the half-crossing.  Finite truncation, finite horizon:
    the interval is a proxy for the threshold, never an estimate of it."""
    t0 = time.time()
    g = graph_from_text(spec.graph)
    T = int(spec.T)
    rows = []
    probs = []
    for eps in spec.eps_list:
        proc = Process(spec.kind, spec.j, float(eps))
        series = _root_series(g, proc, T, spec.seed, spec.trials)
        k = int(np.sum(series[:, T] == 1))
        p, lo, hi = wilson(k, spec.trials)
        probs.append(p)
        rows.append((float(eps), spec.trials, k, p, lo, hi))
    lo_e = hi_e = float("nan")
    for a in range(len(probs) - 1):
        if probs[a] >= 0.5 > probs[a + 1]:
            lo_e, hi_e = float(spec.eps_list[a]), float(spec.eps_list[a + 1])
            for step in range(spec.refine):
                mid = 0.5 * (lo_e + hi_e)
                pm = _one_prob_at_T(g, spec.kind, spec.j, mid, T, spec.seed,
                                    spec.trials, 1000 + step)
                if pm >= 0.5:
                    lo_e = mid
                else:
                    hi_e = mid
            break
    verdict = (f"proxy interval [{lo_e:.6f}, {hi_e:.6f}]"
               if not math.isnan(lo_e) else "no crossing on grid")
    return ResultTable(spec, ("eps", "n_trials", "n_one", "p_hat", "ci_lo",
                              "ci_hi"),
                       tuple(rows), verdict,
                       {"proxy_interval": [lo_e, hi_e],
                        "proxy_note": "finite-size proxy, not epsilon_c"},
                       time.time() - t0)


def exp_qc_bp(spec: ExperimentSpec) -> ResultTable:
    """Fraction of noiseless BP trials from Bernoulli(q) that fill every
    free vertex; a finite-size proxy for the filling transition.  The
    boundary is frozen at zero so that the all-zero state stays absorbing
    as on the infinite graph; the bias runs against filling."""
    t0 = time.time()
    g = graph_from_text(spec.graph)
    T = int(spec.T)
    indptr, indices = effective_adjacency(g, "zero")
    indices = indices.astype(np.int32)
    free = (~g.boundary).astype(np.uint8)
    freemask = free.astype(bool)
    fld0 = RandomField(spec.seed)
    proc = Process("bp", spec.j, 0.0)
    rows = []
    for q in spec.q_grid:
        filled = 0
        for lo in range(0, spec.trials, 200):
            m = min(200, spec.trials - lo)
            flds = [fld0.for_trial(lo + i) for i in range(m)]
            bases = np.array([f.base("L") for f in flds], dtype=np.uint64)
            x0 = np.stack([
                bernoulli(float(q)).realize(g, f, "zero").states
                for f in flds])
            out = _kernels.run_traj_chunk(indptr, indices, free, x0, bases,
                                          T, proc.code, proc.j_eff, 0.0)
            filled += int(np.sum(out[:, T, freemask].min(axis=1) == 1))
        p, lo_ci, hi_ci = wilson(filled, spec.trials)
        rows.append((float(q), spec.trials, filled, p, lo_ci, hi_ci))
    return ResultTable(spec, ("q", "n_trials", "n_filled", "p_hat", "ci_lo",
                              "ci_hi"),
                       tuple(rows), "finite-size proxy for q_c",
                       {"proxy_note": "finite-size proxy, not q_c"},
                       time.time() - t0)


def exp_reversibility_fa(spec: ExperimentSpec) -> ResultTable:
    """Interior marginal means of the q-resampling dynamics from its own
    product law; stationarity keeps them at q up to Monte Carlo noise."""
    t0 = time.time()
    g = graph_from_text(spec.graph)
    q = float(spec.q)
    sample = tuple(float(s) for s in spec.sample_times) or (spec.T,)
    interior = g.interior
    n_int = int(interior.sum())
    fld0 = RandomField(spec.seed)
    sums = {s: 0 for s in sample}
    for i in range(spec.trials):
        traj = run_fa(g, spec.j, q, bernoulli(q), spec.T, fld0.for_trial(i))
        for s in sample:
            sums[s] += int(traj.state_at(s)[interior].sum())
    rows = []
    pooled_k = 0
    pooled_n = 0
    for s in sample:
        n_obs = spec.trials * n_int
        mean = sums[s] / n_obs
        se = math.sqrt(max(mean * (1 - mean), 1e-12) / n_obs)
        rows.append((s, n_obs, mean, se,
                     (mean - q) / se if se > 0 else float("nan")))
        pooled_k += sums[s]
        pooled_n += n_obs
    pooled = pooled_k / pooled_n
    pooled_se = math.sqrt(max(pooled * (1 - pooled), 1e-12) / pooled_n)
    z = (pooled - q) / pooled_se
    verdict = f"pooled mean {pooled:.6f} z {z:+.3f}"
    return ResultTable(spec, ("t", "n_obs", "mean", "stderr", "z_vs_q"),
                       tuple(rows), verdict,
                       {"pooled_mean": pooled, "pooled_se": pooled_se,
                        "pooled_z": z}, time.time() - t0)


EXPERIMENTS = {
    "nonergodicity": exp_nonergodicity,
    "convergence_fa": exp_convergence_fa,
    "cluster_tails": exp_cluster_tails,
    "stability_threshold": exp_stability_threshold,
    "qc_bp": exp_qc_bp,
    "reversibility_fa": exp_reversibility_fa,
}


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    if spec.name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {spec.name!r}")
    return EXPERIMENTS[spec.name](spec)
