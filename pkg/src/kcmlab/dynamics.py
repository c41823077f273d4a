"""The four processes on finite truncations.

Synchronous discrete dynamics (noisy bootstrap "bp", threshold consensus
"cp", majority vote "nmvp") all read the time-(t-1) configuration and write
time t, with the same per-point uniform deciding update versus noise.  The
resampling dynamics ("fa") is event-driven off merged Poisson clocks.

Boundary vertices (layer = radius) are frozen under policy "one"/"zero", or
removed from all neighborhoods under "absent".  Free vertices are the rest.

Two implementations of the discrete step exist on purpose: a vectorized
numpy reference (step_discrete) and the compiled sweep in _kernels; they
are bit-identical and tested against each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from kcmlab import _kernels
from kcmlab.graphs import Graph
from kcmlab.randomness import RandomField

BOUNDARY_POLICIES = ("one", "zero", "absent")
_KIND_CODE = {"bp": 0, "cp": 1, "nmvp": 2}


@dataclass(frozen=True)
class Process:
    kind: str                 # "bp" | "cp" | "nmvp"
    j: int | None = None      # unused for nmvp
    eps: float = 0.0

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown process kind {self.kind!r}")
        if self.kind != "nmvp":
            if self.j is None or self.j < 1:
                raise ValueError("threshold j must be a positive integer")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("noise level must lie in [0, 1]")

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    @property
    def j_eff(self) -> int:
        return 0 if self.j is None else self.j


@dataclass(frozen=True)
class InitialLaw:
    kind: str                          # "all_one" | "all_zero" | "bernoulli" | "explicit"
    p: float | None = None
    config: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("all_one", "all_zero", "bernoulli", "explicit"):
            raise ValueError(f"unknown initial law {self.kind!r}")
        if self.kind == "bernoulli" and not (self.p is not None and 0 <= self.p <= 1):
            raise ValueError("bernoulli law needs p in [0, 1]")
        if self.kind == "explicit" and self.config is None:
            raise ValueError("explicit law needs a configuration")

    def realize(self, graph: Graph, fld: RandomField, policy: str = "one"
                ) -> "Configuration":
        n = graph.n
        if self.kind == "all_one":
            states = np.ones(n, dtype=np.uint8)
        elif self.kind == "all_zero":
            states = np.zeros(n, dtype=np.uint8)
        elif self.kind == "bernoulli":
            states = (fld.init_uniforms(n) <= self.p).astype(np.uint8)
        else:
            states = np.asarray(self.config, dtype=np.uint8).copy()
            if states.shape != (n,):
                raise ValueError("explicit configuration has wrong length")
        return Configuration.wrap(graph, states, policy)


ALL_ONE = InitialLaw("all_one")
ALL_ZERO = InitialLaw("all_zero")


def bernoulli(p: float) -> InitialLaw:
    return InitialLaw("bernoulli", p=p)


@dataclass
class Configuration:
    """Full-length 0/1 state vector plus the frozen-boundary convention."""
    graph: Graph
    states: np.ndarray
    policy: str = "one"

    @staticmethod
    def wrap(graph: Graph, states: np.ndarray, policy: str) -> "Configuration":
        if policy not in BOUNDARY_POLICIES:
            raise ValueError(f"unknown boundary policy {policy!r}")
        states = np.asarray(states, dtype=np.uint8)
        if not np.isin(states, (0, 1)).all():
            raise ValueError("states must be 0/1")
        bd = graph.boundary
        if policy == "one":
            states[bd] = 1
        else:
            states[bd] = 0
        return Configuration(graph, states, policy)

    @property
    def free(self) -> np.ndarray:
        return ~self.graph.boundary

    def copy(self) -> "Configuration":
        return Configuration(self.graph, self.states.copy(), self.policy)


def effective_adjacency(graph: Graph, policy: str
                        ) -> tuple[np.ndarray, np.ndarray]:
    """(indptr, indices) with boundary rows/columns removed under "absent";
    the graph's own arrays otherwise."""
    if policy != "absent":
        return graph.indptr, graph.indices
    cache = getattr(graph, "_absent_csr", None)
    if cache is not None:
        return cache
    bd = graph.boundary
    adj = []
    for v in range(graph.n):
        if bd[v]:
            adj.append([])
        else:
            adj.append([int(w) for w in graph.neighbors(v) if not bd[w]])
    indptr = np.zeros(graph.n + 1, dtype=np.int64)
    for v, nbrs in enumerate(adj):
        indptr[v + 1] = indptr[v] + len(nbrs)
    indices = np.concatenate([np.array(a, dtype=np.int32) for a in adj]) \
        if indptr[-1] else np.empty(0, dtype=np.int32)
    object.__setattr__(graph, "_absent_csr", (indptr, indices))
    return indptr, indices


def count_one_neighbors(config: Configuration, graph: Graph, x: int) -> int:
    indptr, indices = effective_adjacency(graph, config.policy)
    nbrs = indices[indptr[x]:indptr[x + 1]]
    return int(config.states[nbrs].sum())


@dataclass
class DiscreteTrajectory:
    """States at t = 0..T, first axis time."""
    graph: Graph
    states: np.ndarray          # (T+1, n) uint8
    process: Process
    fld: RandomField
    policy: str = "one"

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    def config(self, t: int) -> Configuration:
        return Configuration(self.graph, self.states[t].copy(), self.policy)

    def root_series(self) -> np.ndarray:
        return self.states[:, self.graph.root].copy()


def step_discrete(config: Configuration, graph: Graph, fld: RandomField,
                  t: int, process: Process) -> Configuration:
    """Vectorized reference step: all free vertices move from time t-1 to t."""
    if t < 1:
        raise ValueError("steps are indexed from t = 1")
    indptr, indices = effective_adjacency(graph, config.policy)
    x = config.states
    # neighbor one-counts as prefix-sum differences over the CSR layout
    prefix = np.concatenate([[0], np.cumsum(x[indices], dtype=np.int64)])
    c = prefix[indptr[1:]] - prefix[indptr[:-1]]
    u = fld.uniform_row(graph.n, t)
    eps = process.eps
    deg = (indptr[1:] - indptr[:-1]).astype(np.int64)
    if process.kind == "bp":
        ruled = np.maximum(x, (c >= process.j).astype(np.uint8))
        nxt = np.where(u < eps, 0, ruled)
    elif process.kind == "cp":
        nxt = np.where(u < eps, 0, (c >= process.j).astype(np.uint8))
    else:
        maj = np.where(2 * c > deg, 1, np.where(2 * c < deg, 0, x))
        nxt = np.where(u < 0.5 * eps, 0, np.where(u < eps, 1, maj))
    nxt = nxt.astype(np.uint8)
    frozen = graph.boundary
    nxt[frozen] = x[frozen]
    return Configuration(graph, nxt, config.policy)


def run_discrete(graph: Graph, process: Process, init: InitialLaw, T: int,
                 fld: RandomField, policy: str = "one",
                 reference: bool = False) -> DiscreteTrajectory:
    """Full trajectory over t = 0..T.  reference=True takes the numpy path
    step by step instead of the compiled sweep (identical output)."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    config = init.realize(graph, fld, policy)
    if reference:
        out = np.empty((T + 1, graph.n), dtype=np.uint8)
        out[0] = config.states
        cur = config
        for t in range(1, T + 1):
            cur = step_discrete(cur, graph, fld, t, process)
            out[t] = cur.states
        return DiscreteTrajectory(graph, out, process, fld, policy)
    indptr, indices = effective_adjacency(graph, policy)
    free = (~graph.boundary).astype(np.uint8)
    out = _kernels.run_traj(indptr, indices.astype(np.int32), free,
                            config.states, fld.base("L"), T,
                            process.code, process.j_eff, process.eps)
    return DiscreteTrajectory(graph, out, process, fld, policy)


def run_coupled_cp_nmvp(graph: Graph, eps: float, T: int, fld: RandomField,
                        policy: str = "one"
                        ) -> tuple[DiscreteTrajectory, DiscreteTrajectory]:
    """Threshold process at j = floor(d/2 + 1) and the majority process over
    the same field, both from all-one.  The coupling keeps chi <= sigma
    pointwise; callers assert it, tests quantify it."""
    j = graph.d // 2 + 1
    chi = run_discrete(graph, Process("cp", j, eps), ALL_ONE, T, fld, policy)
    sigma = run_discrete(graph, Process("nmvp", None, eps), ALL_ONE, T, fld,
                         policy)
    return chi, sigma


def coupling_violations(chi: DiscreteTrajectory, sigma: DiscreteTrajectory
                        ) -> int:
    return int(np.sum(chi.states > sigma.states))


# -- event-driven resampling dynamics -----------------------------------


@dataclass
class ContinuousTrajectory:
    """Initial configuration plus the time-ordered event record.

    Events carry (time, vertex, value-after, fired flag); an event may
    change the state only when its constraint held (fired).  States between
    events are constant, so state_at(t) applies all events with time <= t.
    """
    graph: Graph
    initial: Configuration
    times: np.ndarray
    verts: np.ndarray
    newvals: np.ndarray
    fired: np.ndarray
    ring_us: np.ndarray
    j: int
    q: float
    fld: RandomField
    horizon: float
    _final: np.ndarray | None = dc_field(default=None, repr=False)

    def state_at(self, t: float) -> np.ndarray:
        if t < 0 or t > self.horizon:
            raise ValueError("time outside [0, horizon]")
        state = self.initial.states.copy()
        upto = int(np.searchsorted(self.times, t, side="right"))
        idx = np.nonzero(self.fired[:upto])[0]
        if len(idx):
            rv = self.verts[idx][::-1]
            vals = self.newvals[idx][::-1]
            u, first = np.unique(rv, return_index=True)
            state[u] = vals[first]
        return state

    @property
    def final_state(self) -> np.ndarray:
        if self._final is None:
            object.__setattr__(self, "_final", self.state_at(self.horizon))
        return self._final

    @property
    def n_events(self) -> int:
        return len(self.times)


def _build_events(graph: Graph, fld: RandomField, T: float
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Merged event stream for all free vertices: times sorted ascending,
    float ties broken by vertex id.  Returns (times, verts, ring uniforms)."""
    n = graph.n
    counts = _kernels.poisson_counts(fld.base("poisc"), n, float(T))
    counts[graph.boundary] = 0
    verts = np.repeat(np.arange(n, dtype=np.int64), counts)
    if len(verts) == 0:
        return np.empty(0), np.empty(0, dtype=np.int64), np.empty(0)
    cum = np.concatenate([[0], np.cumsum(counts)])
    ks = np.arange(len(verts), dtype=np.int64) - cum[verts] + 1
    times = float(T) * _kernels.event_uniforms(fld.base("poist"), verts, ks)
    us = _kernels.event_uniforms(fld.base("fau"), verts, ks)
    order = np.lexsort((verts, times))
    return times[order], verts[order], us[order]


def run_fa(graph: Graph, j: int, q: float, init: InitialLaw, T: float,
           fld: RandomField, policy: str = "one") -> ContinuousTrajectory:
    """Resampling dynamics with constraint "at least j one-neighbors"."""
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    if T <= 0:
        raise ValueError("horizon must be positive")
    if j < 1:
        raise ValueError("threshold j must be positive")
    config = init.realize(graph, fld, policy)
    times, verts, us = _build_events(graph, fld, T)
    indptr, indices = effective_adjacency(graph, policy)
    state = config.states.copy()
    fired = np.zeros(len(times), dtype=np.uint8)
    newvals = np.empty(len(times), dtype=np.uint8)
    _kernels.run_fa_segment(indptr, indices.astype(np.int32), state, verts,
                            us, j, q, fired, newvals, 0, len(times))
    return ContinuousTrajectory(graph, config, times, verts, newvals, fired,
                                us, j, q, fld, float(T))


def run_fa_coupled(graph: Graph, j: int, q: float, p: float, T: float,
                   fld: RandomField, policy: str = "one",
                   sample_times: np.ndarray | None = None
                   ) -> tuple[ContinuousTrajectory, ContinuousTrajectory,
                              dict[float, np.ndarray]]:
    """Two copies of the q-resampling dynamics over identical clocks and
    uniforms, one from Bernoulli(p) and one from Bernoulli(q), initial
    configurations threshold-coupled through a single per-vertex uniform.
    Returns both trajectories and, per sample time, the differing vertices.
    """
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise ValueError("p, q must lie in [0, 1]")
    u0 = fld.init_uniforms(graph.n)
    conf_p = Configuration.wrap(graph, (u0 <= p).astype(np.uint8), policy)
    conf_q = Configuration.wrap(graph, (u0 <= q).astype(np.uint8), policy)
    times, verts, us = _build_events(graph, fld, T)
    indptr, indices = effective_adjacency(graph, policy)
    indices32 = indices.astype(np.int32)
    if sample_times is None:
        sample_times = np.arange(0.0, float(T) + 0.5)
    sample_times = np.asarray(sample_times, dtype=np.float64)
    sa = conf_p.states.copy()
    sb = conf_q.states.copy()
    discrepancy: dict[float, np.ndarray] = {}
    lo = 0
    for st in sample_times:
        hi = int(np.searchsorted(times, st, side="right"))
        _kernels.run_fa_pair_segment(indptr, indices32, sa, sb, verts, us,
                                     j, q, lo, hi)
        discrepancy[float(st)] = np.nonzero(sa != sb)[0]
        lo = hi
    _kernels.run_fa_pair_segment(indptr, indices32, sa, sb, verts, us, j, q,
                                 lo, len(times))
    # the pair kernel advances both states jointly; per-copy event records
    # come from replaying each side alone over the same stream
    traj_p = _replay_single(graph, conf_p, times, verts, us, j, q, fld, T)
    traj_q = _replay_single(graph, conf_q, times, verts, us, j, q, fld, T)
    return traj_p, traj_q, discrepancy


def _replay_single(graph, config, times, verts, us, j, q, fld, T):
    indptr, indices = effective_adjacency(graph, config.policy)
    state = config.states.copy()
    fired = np.zeros(len(times), dtype=np.uint8)
    newvals = np.empty(len(times), dtype=np.uint8)
    _kernels.run_fa_segment(indptr, indices.astype(np.int32), state, verts,
                            us, j, q, fired, newvals, 0, len(times))
    return ContinuousTrajectory(graph, config.copy(), times, verts, newvals,
                                fired, us, j, q, fld, float(T))


def audit_discrepancy_flow(traj_a: ContinuousTrajectory,
                           traj_b: ContinuousTrajectory) -> tuple[bool, str]:
    """Replays both event records jointly and checks that every disagreement
    is accounted for: it either persists from time 0 at an untouched vertex,
    or is (re)created at a ring whose two constraint evaluations differ,
    which requires a currently differing neighbor.  Returns (ok, detail)."""
    g = traj_a.graph
    indptr, indices = effective_adjacency(g, traj_a.initial.policy)
    sa = traj_a.initial.states.copy()
    sb = traj_b.initial.states.copy()
    for i in range(traj_a.n_events):
        v = int(traj_a.verts[i])
        nbrs = indices[indptr[v]:indptr[v + 1]]
        fa = bool(traj_a.fired[i])
        fb = bool(traj_b.fired[i])
        if fa != fb:
            if not np.any(sa[nbrs] != sb[nbrs]):
                return False, (f"event {i} at vertex {v}: constraints differ "
                               "with identical neighborhoods")
        if fa:
            sa[v] = traj_a.newvals[i]
        if fb:
            sb[v] = traj_b.newvals[i]
        if fa and fb and sa[v] != sb[v]:
            return False, (f"event {i} at vertex {v}: both rings fired but "
                           "wrote different values")
    return True, "ok"
