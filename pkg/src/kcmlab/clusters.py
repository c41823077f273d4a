"""Zero clusters of a trajectory in the strong product of the base graph
with the time axis, and their diameter statistics.

The product metric is the max of graph distance and time separation, so a
cluster's diameter splits into the spatial diameter of its vertex shadow
and its time span, and only the spatial part needs BFS.  Truncation and
window effects are handled by censoring, never by correction: the frozen
one boundary can only erase zeros in these monotone rules, so an
uncensored diameter is the infinite-volume one and a censored cluster is
reported but kept out of fits.  Above the product percolation threshold
the seed component can be giant; such clusters always touch the window
and land in the censored bucket, which keeps the tail table meaningful
on both sides of the transition.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from kcmlab import _kernels
from kcmlab.dynamics import DiscreteTrajectory
from kcmlab.graphs import Graph
from kcmlab.history import Point

Z95 = 1.959963984540054


@dataclass(frozen=True)
class Cluster:
    points: frozenset[Point]
    censored: bool
    diameter: float      # int for nonempty clusters, -inf for the empty one
    n_points: int

    @property
    def empty(self) -> bool:
        return self.n_points == 0


def strong_neighbors(point: Point, graph: Graph, T: int) -> list[Point]:
    """Neighbors of (x,t) in the product: same or adjacent base vertex,
    time within one, inside the window, the point itself excluded."""
    x, t = point
    near = [x] + [int(y) for y in graph.neighbors(x)]
    out = []
    for s in (t - 1, t, t + 1):
        if 0 <= s <= T:
            for y in near:
                if (y, s) != (x, t):
                    out.append(Point(y, s))
    return out


def zero_cluster(trajectory: DiscreteTrajectory, seed: Point,
                 t_margin: int = 1, keep_points: bool = True,
                 reference: bool = False) -> Cluster:
    """Connected zero component of the seed, flooded breadth-first.

    Censored when the cluster touches the time-window edges or comes
    within t_margin layers of the truncation shell; the default margin 1
    flags exactly the clusters adjacent to the frozen boundary.
    keep_points=False drops the point set (giant components are summarized
    by size and diameter alone).  reference=True floods in Python over
    strong_neighbors instead of the compiled kernel, identical output.
    """
    g = trajectory.graph
    T = trajectory.T
    states = trajectory.states
    x0, t0 = seed
    if not 0 <= t0 <= T:
        raise ValueError("seed time outside the trajectory window")
    if states[t0, x0] != 0:
        return Cluster(frozenset(), False, -math.inf, 0)
    if reference:
        seen = {seed}
        q = deque([seed])
        while q:
            for nb in strong_neighbors(q.popleft(), g, T):
                if nb not in seen and states[nb.t, nb.x] == 0:
                    seen.add(nb)
                    q.append(nb)
        xs = np.fromiter((p.x for p in seen), np.int32, len(seen))
        ts = np.fromiter((p.t for p in seen), np.int32, len(seen))
    else:
        bx, bt, cnt = _kernels.flood_zeros(g.indptr, g.indices, states,
                                           int(x0), int(t0))
        xs, ts = bx[:cnt], bt[:cnt]
    censored = bool(ts.min() == 0 or ts.max() == T
                    or int(g.layer[xs].max()) >= g.radius - t_margin)
    pts = (frozenset(Point(int(x), int(t)) for x, t in zip(xs, ts))
           if keep_points else frozenset())
    return Cluster(pts, censored, _diameter(xs, ts, g), len(xs))


def _diameter(xs: np.ndarray, ts: np.ndarray, g: Graph) -> int:
    span = int(ts.max() - ts.min())
    verts = np.unique(xs)
    if len(verts) == 1:
        return span
    if g.family == "tree":
        # double sweep is exact on tree metrics, giants included
        d0 = _kernels.bfs_dist(g.indptr, g.indices, int(verts[0]))
        a = int(verts[np.argmax(d0[verts])])
        da = _kernels.bfs_dist(g.indptr, g.indices, a)
        return max(int(da[verts].max()), span)
    vset = set(int(v) for v in verts)
    spatial = 0
    for src in vset:
        # BFS in the ambient graph, stopped once every member is reached
        dist = {src: 0}
        left = len(vset) - 1
        q = deque([src])
        while q and left:
            u = q.popleft()
            for v in g.neighbors(u):
                v = int(v)
                if v not in dist:
                    dist[v] = dist[u] + 1
                    if v in vset:
                        left -= 1
                        spatial = max(spatial, dist[v])
                    q.append(v)
    return max(spatial, span)


@dataclass(frozen=True)
class TailRow:
    ell: int
    n_trials: int
    n_survive: int
    n_censored: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    p_upper: float       # survival plus the whole censored mass


@dataclass(frozen=True)
class TailTable:
    rows: tuple[TailRow, ...]
    n_trials: int
    n_censored: int

    def survival(self, ell: int) -> float:
        return self.rows[ell].p_hat


def wilson(k: int, n: int, z: float = Z95) -> tuple[float, float, float]:
    if n == 0:
        return (math.nan, 0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # at the ends center and half agree analytically; kill the fp residue
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return (p, lo, hi)


def tail_table(clusters: list[Cluster], l_max: int) -> TailTable:
    """Empirical survival of the diameter over independent trials.
    Censored clusters never count as survivors; they are carried into the
    one-sided upper bound instead."""
    n = len(clusters)
    n_cens = sum(1 for c in clusters if c.censored)
    diams = [c.diameter for c in clusters if not c.censored]
    rows = []
    for ell in range(l_max + 1):
        k = sum(1 for d in diams if d >= ell)
        p, lo, hi = wilson(k, n)
        rows.append(TailRow(ell, n, k, n_cens, p, lo, hi,
                            (k + n_cens) / n if n else math.nan))
    return TailTable(tuple(rows), n, n_cens)


@dataclass(frozen=True)
class FitResult:
    eps: float
    slope: float
    c: float
    n_rows: int
    insufficient: bool
    flat: bool
    residual: float


@dataclass(frozen=True)
class DecayReport:
    fits: tuple[FitResult, ...]
    slope_ratios: tuple[float, ...]      # consecutive slope ratios
    log_eps_ratios: tuple[float, ...]    # what they should match


def fit_decay(tables: list[tuple[float, TailTable]]) -> DecayReport:
    """Least squares of log survival against l+1, one fit per noise level.

    The decay exponent is read off as c = slope / log(eps): survival of
    the form eps^(c(l+1)) has log-slope c log(eps), and both factors are
    negative for a decaying table, so c comes out positive.  A flat table
    gives c = 0 and is flagged.
    """
    fits = []
    for eps, tab in tables:
        xs, ys = [], []
        for row in tab.rows:
            if row.n_survive > 0:
                xs.append(row.ell + 1)
                ys.append(math.log(row.p_hat))
        if len(xs) < 3:
            fits.append(FitResult(eps, math.nan, math.nan, len(xs),
                                  True, False, math.nan))
            continue
        A = np.stack([np.asarray(xs, dtype=float),
                      np.ones(len(xs))], axis=1)
        sol, res, _, _ = np.linalg.lstsq(A, np.asarray(ys), rcond=None)
        slope = float(sol[0])
        resid = float(res[0]) if res.size else 0.0
        flat = abs(slope) < 1e-12
        c = 0.0 if flat else slope / math.log(eps)
        fits.append(FitResult(eps, slope, c, len(xs), False, flat, resid))
    good = [f for f in fits if not f.insufficient and not f.flat]
    ratios, expect = [], []
    for a, b in zip(good, good[1:]):
        ratios.append(a.slope / b.slope)
        expect.append(math.log(a.eps) / math.log(b.eps))
    return DecayReport(tuple(fits), tuple(ratios), tuple(expect))
