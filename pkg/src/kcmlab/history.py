"""Space-time witnesses for zeros of the monotone and threshold processes.

A history graph explains a zero at its root (o, T): every interior point
passes the blame to enough zero neighbors one step earlier, and the blame
chains bottom out exactly at noise points (the sinks).  The edge set alone
determines everything else, so histories are stored edge-first with the
root kept for the degenerate singleton.

Extraction is deterministic: where the construction may pick any large
enough set of zero down-neighbors, we take the lexicographically smallest
vertices.  The certificates (validator, sink/noise audit, the expansion
inequalities) are exact; the inequalities are evaluated in surd arithmetic
and never rounded.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import NamedTuple

import numpy as np

from kcmlab.classify import ClassifyInputs
from kcmlab.dynamics import DiscreteTrajectory, effective_adjacency
from kcmlab.graphs import Graph
from kcmlab.randomness import RandomField
from kcmlab.surd import Surd

STRAIGHT = "straight"
OBLIQUE = "oblique"


class Point(NamedTuple):
    x: int
    t: int


class Edge(NamedTuple):
    src: Point
    dst: Point
    tag: str


@dataclass(frozen=True)
class HistoryGraph:
    root: Point
    kind: str                  # "cp" | "bp"
    j: int
    edges: tuple[Edge, ...]    # canonical: sorted

    def __post_init__(self):
        if self.kind not in ("cp", "bp"):
            raise ValueError("history graphs exist for kinds cp and bp only")
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))

    @cached_property
    def U(self) -> frozenset[Point]:
        pts = {self.root}
        for e in self.edges:
            pts.add(e.src)
            pts.add(e.dst)
        return frozenset(pts)

    @cached_property
    def U_star(self) -> frozenset[Point]:
        # recoverable from the edge set: sinks are the points without
        # outgoing edges
        out = {e.src for e in self.edges}
        return frozenset(p for p in self.U if p not in out)

    @property
    def n_points(self) -> int:
        return len(self.U)

    @property
    def n_sinks(self) -> int:
        return len(self.U_star)

    def out_edges(self, p: Point) -> list[Edge]:
        return [e for e in self.edges if e.src == p]

    def to_text(self) -> str:
        lines = [f"root {self.root.x} {self.root.t} kind {self.kind} j {self.j}"]
        for e in self.edges:
            lines.append(f"({e.src.x},{e.src.t})->({e.dst.x},{e.dst.t}) {e.tag}")
        lines.append("sinks " + " ".join(
            f"({p.x},{p.t})" for p in sorted(self.U_star)))
        return "\n".join(lines) + "\n"


def _is_noise(fld: RandomField, x: int, t: int, eps: float) -> bool:
    return fld.uniform_at(x, t) < eps


def extract_history(trajectory: DiscreteTrajectory, fld: RandomField,
                    root: Point) -> HistoryGraph:
    """Witness for a zero of a trajectory started from all-one.

    Walks levels downward from the root.  A level point that is a noise
    point becomes a sink; otherwise its constraint failed, which guarantees
    at least deg - j + 1 zero down-neighbors to charge (we take the
    smallest ids), plus the vertex's own past for the monotone process.
    Raises if the guarantee ever fails; that means the trajectory and field
    do not belong together.
    """
    g = trajectory.graph
    kind = trajectory.process.kind
    if kind not in ("cp", "bp"):
        raise ValueError("histories are defined for cp and bp trajectories")
    j = trajectory.process.j
    eps = trajectory.process.eps
    x0, T = root
    if T < 1 or T > trajectory.T:
        raise ValueError("root time outside the trajectory window")
    if trajectory.states[T, x0] != 0:
        raise ValueError("root state is not zero; nothing to explain")
    if g.boundary[x0]:
        raise ValueError("root must be a free vertex")
    if int(g.layer[x0]) + T > g.radius:
        warnings.warn(
            "root closer to the truncation boundary than its time depth; "
            "the witness is exact for the truncated process but does not "
            "transfer to the untruncated one", stacklevel=2)
    indptr, indices = effective_adjacency(g, trajectory.policy)
    edges: list[Edge] = []
    level = {x0}
    t = T
    while level:
        nxt: set[int] = set()
        for x in sorted(level):
            if _is_noise(fld, x, t, eps):
                continue  # sink: no outgoing edges
            if t == 1:
                raise RuntimeError(
                    f"update point ({x},1) is zero from an all-one start")
            nbrs = indices[indptr[x]:indptr[x + 1]]
            zeros = [int(y) for y in nbrs if trajectory.states[t - 1, y] == 0]
            need = len(nbrs) - j + 1
            if len(zeros) < need:
                raise RuntimeError(
                    f"point ({x},{t}) has {len(zeros)} zero down-neighbors, "
                    f"needs {need}; trajectory/field mismatch")
            src = Point(x, t)
            for y in sorted(zeros)[:need]:
                edges.append(Edge(src, Point(y, t - 1), OBLIQUE))
                nxt.add(y)
            if kind == "bp":
                if trajectory.states[t - 1, x] != 0:
                    raise RuntimeError(
                        f"monotone zero at ({x},{t}) with one at ({x},{t - 1})")
                edges.append(Edge(src, Point(x, t - 1), STRAIGHT))
                nxt.add(x)
        level = nxt
        t -= 1
    return HistoryGraph(Point(x0, T), kind, j, tuple(edges))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_history(H: HistoryGraph, graph: Graph,
                     policy: str = "one") -> ValidationReport:
    """Structural check: the five defining items, edge geometry against the
    base graph, and weak connectivity."""
    v: list[str] = []
    T = H.root.t
    indptr, indices = effective_adjacency(graph, policy)

    # item 1: root at time T, everything in [1, T]
    for p in H.U:
        if p != H.root and not 1 <= p.t <= T:
            v.append(f"item1: point {p} outside [1, {T}]")
    if T < 1:
        v.append("item1: root time below 1")
    # item 2: time-1 points are sinks
    for p in H.U:
        if p.t == 1 and p not in H.U_star:
            v.append(f"item2: time-1 point {p} is not a sink")
    # item 3: sinks have no outgoing edges (true by construction of U_star;
    # re-checked against the raw edge list for hand-built instances)
    for e in H.edges:
        if e.src in H.U_star:
            v.append(f"item3: sink {e.src} has outgoing edge")
    # items 4/5: out-degree discipline per non-sink point
    for p in sorted(H.U - H.U_star):
        out = H.out_edges(p)
        obl = [e for e in out if e.tag == OBLIQUE]
        par = [e for e in out if e.tag == STRAIGHT]
        deg = int(indptr[p.x + 1] - indptr[p.x])
        need = deg - H.j + 1
        if len(obl) != need:
            v.append(f"item4: {p} has {len(obl)} oblique edges, needs {need}")
        if H.kind == "cp" and par:
            v.append(f"item4: {p} has a straight edge in a cp history")
        if H.kind == "bp" and len(par) != 1:
            v.append(f"item5: {p} has {len(par)} straight edges, needs 1")
    # geometry
    for e in H.edges:
        if e.dst.t != e.src.t - 1:
            v.append(f"geometry: {e} does not step one level down")
        if e.tag == STRAIGHT and e.dst.x != e.src.x:
            v.append(f"geometry: straight edge {e} changes vertex")
        if e.tag == OBLIQUE:
            nbrs = indices[indptr[e.src.x]:indptr[e.src.x + 1]]
            if e.dst.x not in nbrs:
                v.append(f"geometry: oblique edge {e} not along a graph edge")
    # connectivity of the undirected support
    if len(H.U) > 1:
        adj: dict[Point, set[Point]] = {p: set() for p in H.U}
        for e in H.edges:
            adj[e.src].add(e.dst)
            adj[e.dst].add(e.src)
        seen = {H.root}
        stack = [H.root]
        while stack:
            p = stack.pop()
            for q in adj[p]:
                if q not in seen:
                    seen.add(q)
                    stack.append(q)
        if seen != H.U:
            v.append(f"connectivity: {len(H.U) - len(seen)} points unreachable")
    return ValidationReport(not v, tuple(v))


@dataclass(frozen=True)
class PresenceReport:
    ok: bool
    n_sinks: int
    probability: float
    mismatches: tuple[str, ...]


def presence_probability_audit(H: HistoryGraph, fld: RandomField,
                               eps: float) -> PresenceReport:
    """The event carrying a history costs one noise factor per sink and
    nothing else: inside U, noise points and sinks must coincide."""
    bad = []
    for p in sorted(H.U):
        noisy = _is_noise(fld, p.x, p.t, eps)
        if noisy and p not in H.U_star:
            bad.append(f"non-sink {p} is a noise point")
        if not noisy and p in H.U_star:
            bad.append(f"sink {p} is not a noise point")
    return PresenceReport(not bad, H.n_sinks, float(eps) ** H.n_sinks,
                          tuple(bad))


# -- expansion inequalities ---------------------------------------------

VARIANTS = ("edge_general", "edge_improved", "vertex")


@dataclass(frozen=True)
class PeierlsReport:
    variant: str
    holds: bool          # exact inequality over the surd field
    equality: bool
    applicable: bool     # leading coefficient positive, so |U*| >= |U|/K
    K: float | None
    lhs: float
    rhs: float
    n_points: int
    n_sinks: int


def peierls_bound(H: HistoryGraph, constants: ClassifyInputs,
                  variant: str) -> PeierlsReport:
    """Evaluates the selected expansion inequality exactly.

    edge_general:   (3 phi_e - Delta - 2j + 2)|U| + Delta - phi_e
                        <= 2 (phi_e - j + 1)|U*|
    edge_improved:  2 (phi_e - j + 1)|U| + delta - phi_e
                        <= (phi_e + Delta - 2j + 2)|U*|
                    (monotone kind always; threshold kind needs bipartite)
    vertex:         (phi_v - j)|U| + 1 <= (phi_v - j + 1)|U*|   threshold
                    (phi_v - j + 1)|U| + 1 <= (phi_v - j + 2)|U*| monotone
                    (using a certified lower bound for phi_v is sound here:
                    sinks never outnumber points, so the inequality is
                    monotone the right way in phi_v)

    The implied proportionality constant K with |U*| >= |U|/K is reported
    when the variant's leading coefficient is positive; the inequality is
    still evaluated, and typically holds vacuously, when it is not.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n, s = H.n_points, H.n_sinks
    j = H.j
    if variant in ("edge_general", "edge_improved"):
        phi = constants.phi_e
        if phi is None:
            raise ValueError("edge variants need phi_e")
        D, dmin = constants.Delta, constants.delta
        if variant == "edge_general":
            lhs = phi.scale(3 * n - 1).shift((2 - D - 2 * j) * n + D)
            rhs = phi.scale(2 * s).shift(2 * (1 - j) * s)
            lead = phi.scale(3).shift(2 - D - 2 * j)
            kden = lead
            knum = phi.scale(2).shift(2 * (1 - j))
        else:
            if H.kind == "cp" and not constants.bipartite:
                raise ValueError(
                    "improved edge bound needs a bipartite graph for cp")
            lhs = phi.scale(2 * n - 1).shift(2 * (1 - j) * n + dmin)
            rhs = phi.scale(s).shift((D - 2 * j + 2) * s)
            lead = phi.scale(2).shift(2 * (1 - j))
            kden = lead
            knum = phi.shift(D - 2 * j + 2)
    else:
        phi = constants.phi_v_lower
        if phi is None:
            raise ValueError("vertex variant needs a phi_v lower bound")
        off = 0 if H.kind == "cp" else 1
        lhs = phi.scale(n).shift((off - j) * n + 1)
        rhs = phi.scale(s).shift((off - j + 1) * s)
        lead = phi.shift(off - j)
        kden = lead
        knum = phi.shift(off - j + 1)
    diff = rhs.sub(lhs)
    applicable = kden.sign() > 0
    K = float(knum) / float(kden) if applicable else None
    return PeierlsReport(variant, diff.sign() >= 0, diff.sign() == 0,
                         applicable, K, float(lhs), float(rhs), n, s)


def count_bound(n: int, Delta: int) -> int:
    """Counting ceiling: 2^(2n) * (1 + 2^Delta)^n."""
    return (2 ** (2 * n)) * (1 + 2 ** Delta) ** n


def count_histories(root: Point, n: int, graph: Graph, j: int, kind: str,
                    policy: str = "one", cap: int = 6) -> int:
    """Exact number of valid histories with |U| = n rooted at root,
    enumerated level by level: split each level into sinks and charging
    points, the latter ranging over their admissible target subsets.
    Distinct choice sequences give distinct edge sets, so this is a count
    of histories, not of derivations."""
    if kind not in ("cp", "bp"):
        raise ValueError("kind must be cp or bp")
    if n < 1:
        raise ValueError("size must be positive")
    if n > cap:
        raise ValueError(f"size {n} above enumeration cap {cap}")
    indptr, indices = effective_adjacency(graph, policy)

    def targets_of(x: int) -> list[tuple[int, ...]]:
        nbrs = sorted(int(y) for y in indices[indptr[x]:indptr[x + 1]])
        need = len(nbrs) - j + 1
        if need < 1 or need > len(nbrs):
            return []
        return list(combinations(nbrs, need))

    total = 0

    def descend(level: tuple[int, ...], t: int, budget: int) -> None:
        nonlocal total
        # pick the sink subset of this level
        for r in range(len(level) + 1):
            for sinks in combinations(level, r):
                charging = [x for x in level if x not in sinks]
                if not charging:
                    if budget == 0:
                        total += 1
                    continue
                if t == 1:
                    continue  # time-1 points must all sink
                choices = [targets_of(x) for x in charging]
                if any(not c for c in choices):
                    continue
                _product(charging, choices, 0, set(), t, budget)

    def _product(charging, choices, i, acc: set, t, budget) -> None:
        if i == len(charging):
            nxt = tuple(sorted(acc))
            if len(nxt) <= budget:
                descend(nxt, t - 1, budget - len(nxt))
            return
        x = charging[i]
        for tgt in choices[i]:
            added = set(tgt)
            if kind == "bp":
                added.add(x)
            new = added - acc
            acc |= new
            _product(charging, choices, i + 1, acc, t, budget)
            acc -= new

    descend((root.x,), root.t, n - 1)
    return total
