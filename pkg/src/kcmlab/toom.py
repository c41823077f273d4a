"""Typed dependence graphs, Toom cycles, and polar functions.

Two constructions live here.  For the monotone process we build the
two-type dependence graph (straight edges of type 1, j oblique edges of
type 2 into the next shell) and search for present cycles rooted at zero
events; the search is bounded and a miss is an explicit outcome, never a
claim of nonexistence.  For the threshold process on regular trees we
build the d-type charges from the standard orientation and verify the
polar recurrences, the edge speeds, and the resulting contour edge bound.

Orientation convention on cycles: arc v of an oriented cycle joins v and
v+1 (mod n); +1 means the forward edge (v, v+1), -1 the backward edge
(v+1, v).  Forward edges descend one time step, backward edges ascend.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from kcmlab.graphs import Graph
from kcmlab.history import Point
from kcmlab.randomness import RandomField


# -- typed dependence graphs --------------------------------------------

@dataclass(frozen=True)
class TypedDependenceGraph:
    graph: Graph
    kind: str                  # "bp" | "tree"
    sigma: int
    fld: RandomField
    eps: float
    horizon: int
    r: int                               # bp: charge root; tree: ray start
    A2: tuple | None = None              # bp: per-vertex oblique charge
    rev2: tuple | None = None            # bp: reverse charge lists
    succ: np.ndarray | None = None       # tree: out-neighbor per vertex
    order: tuple | None = None           # tree: (y_1 .. y_deg), last = succ

    def is_bullet(self, x: int, t: int) -> bool:
        if not 1 <= t <= self.horizon:
            raise ValueError(f"time {t} outside the marked window")
        return self.fld.uniform_at(x, t) >= self.eps

    def charges_at(self, x: int) -> list[tuple[int, ...]]:
        """All charge sets of x, indexed by type (0-based)."""
        if self.kind == "bp":
            if self.A2[x] is None:
                raise ValueError(f"vertex {x} has no oblique charge")
            return [(x,), self.A2[x]]
        ys = self.order[x]
        if len(ys) != self.sigma or self.succ[x] < 0:
            raise ValueError(f"vertex {x} has incomplete tree charges")
        return [tuple(y for k, y in enumerate(ys) if k != s)
                for s in range(self.sigma)]

    def describe(self) -> dict:
        out = {"kind": self.kind, "sigma": self.sigma, "eps": self.eps,
               "horizon": self.horizon, "root": self.r}
        if self.kind == "tree":
            ray = [self.r]
            while self.succ[ray[-1]] >= 0:
                ray.append(int(self.succ[ray[-1]]))
            out["ray"] = ray
        return out

    def audit(self) -> tuple[bool, list[str]]:
        bad = []
        g = self.graph
        if self.kind == "bp":
            for x in range(g.n):
                if self.A2[x] is None:
                    if g.interior[x]:
                        bad.append(f"interior vertex {x} lacks a charge")
                    continue
                if len(self.A2[x]) != len(set(self.A2[x])):
                    bad.append(f"charge of {x} repeats a vertex")
                for y in self.A2[x]:
                    if g.layer[y] != g.layer[x] + 1 or y not in g.neighbors(x):
                        bad.append(f"charge of {x} leaves the next shell")
        else:
            for x in range(g.n):
                ys = self.order[x]
                if sorted(ys) != sorted(g.neighbors(x).tolist()):
                    bad.append(f"neighbor order of {x} is not a permutation")
                if self.succ[x] >= 0 and ys[-1] != self.succ[x]:
                    bad.append(f"successor of {x} not last in its order")
                if len(ys) == self.sigma:
                    union = set()
                    for s in range(self.sigma):
                        A = self.charges_at(x)[s]
                        if len(A) != self.sigma - 1:
                            bad.append(f"charge {s + 1} of {x} has wrong size")
                        union |= set(A)
                    if union != set(ys):
                        bad.append(f"charges of {x} do not cover N(x)")
        return (not bad, bad)


def build_dependence_bp(graph: Graph, r: int, j: int, fld: RandomField,
                        eps: float, horizon: int) -> TypedDependenceGraph:
    """Two-type dependence graph: A_1 = {x}, A_2 = the j smallest-id
    neighbors of x in the next shell around r.  Needs j within the
    forward-degree witness, checked on the interior of the truncation."""
    if r == graph.root:
        dist = graph.layer.astype(np.int64)
    else:
        dist = _bfs_dist(graph, r)
    A2: list[tuple[int, ...] | None] = []
    worst = None
    for x in range(graph.n):
        fwd = sorted(int(y) for y in graph.neighbors(x)
                     if dist[y] == dist[x] + 1)
        if len(fwd) >= j:
            A2.append(tuple(fwd[:j]))
        else:
            A2.append(None)
            if graph.interior[x]:
                worst = (x, len(fwd))
    if worst is not None:
        raise ValueError(
            f"j={j} exceeds the forward-degree witness at vertex "
            f"{worst[0]} ({worst[1]} forward neighbors)")
    rev: list[list[int]] = [[] for _ in range(graph.n)]
    for u, A in enumerate(A2):
        if A is not None:
            for y in A:
                rev[y].append(u)
    return TypedDependenceGraph(graph, "bp", 2, fld, eps, horizon, r,
                                A2=tuple(A2),
                                rev2=tuple(tuple(sorted(v)) for v in rev))


def _bfs_dist(graph: Graph, r: int) -> np.ndarray:
    dist = np.full(graph.n, -1, dtype=np.int64)
    dist[r] = 0
    q = deque([r])
    while q:
        u = q.popleft()
        for v in graph.neighbors(u):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(int(v))
    return dist


def _tree_orientation(tree: Graph) -> np.ndarray:
    """Out-neighbor of every vertex: first-descendant ray from the root,
    all other edges pointing toward it; -1 where the successor leaves the
    truncation (the ray's boundary end)."""
    if tree.family != "tree":
        raise ValueError("orientation is defined for tree truncations")
    n = tree.n
    succ = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[tree.root] = True
    q = deque([tree.root])
    while q:
        u = q.popleft()
        for v in tree.neighbors(u):
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                q.append(int(v))
    ray = tree.root
    while True:
        kids = [int(v) for v in tree.neighbors(ray) if parent[v] == ray]
        if not kids:
            break
        nxt = min(kids)
        succ[ray] = nxt
        ray = nxt
    on_ray = set()
    v = tree.root
    while v >= 0:
        on_ray.add(v)
        v = int(succ[v]) if succ[v] >= 0 else -1
    for x in range(n):
        if x not in on_ray:
            succ[x] = parent[x]
    return succ


def build_dependence_tree(tree: Graph, fld: RandomField, eps: float,
                          horizon: int) -> TypedDependenceGraph:
    """d-type charges A_s = N(x) minus the s-th neighbor, with the
    out-neighbor listed last; the threshold has dropped out."""
    succ = _tree_orientation(tree)
    order = []
    for x in range(tree.n):
        rest = sorted(int(y) for y in tree.neighbors(x) if y != succ[x])
        order.append(tuple(rest + ([int(succ[x])] if succ[x] >= 0 else [])))
    return TypedDependenceGraph(tree, "tree", tree.d, fld, eps, horizon,
                                tree.root, succ=succ, order=tuple(order))


# -- polar maps ----------------------------------------------------------

@dataclass(frozen=True)
class PolarMap:
    L: np.ndarray        # (n, sigma) integer
    sigma: int
    tag: str             # "bp-distance" | "tree-recursive"

    def __post_init__(self):
        if (self.L.sum(axis=1) != 0).any():
            raise ValueError("polar coordinates must sum to zero")


def polar_bp(graph: Graph, r: int) -> PolarMap:
    dist = (graph.layer.astype(np.int64) if r == graph.root
            else _bfs_dist(graph, r))
    L = np.stack([-dist, dist], axis=1)
    return PolarMap(L, 2, "bp-distance")


def polar_tree(tree: Graph, basepoint: int) -> PolarMap:
    """Solves L(y_i) - L(x) = -e_i + e_d outward from the basepoint, then
    re-verifies every relation; a failure means the orientation is broken,
    not the input."""
    succ = _tree_orientation(tree)
    d = tree.d
    n = tree.n
    ins = [tuple(sorted(int(y) for y in tree.neighbors(x) if y != succ[x]))
           for x in range(n)]
    L = np.zeros((n, d), dtype=np.int64)
    known = np.zeros(n, dtype=bool)
    known[basepoint] = True
    q = deque([basepoint])
    while q:
        u = q.popleft()
        for v in tree.neighbors(u):
            v = int(v)
            if known[v]:
                continue
            if succ[v] == u:
                i = ins[u].index(v)      # v = y_{i+1} of u
                L[v] = L[u]
                L[v, i] -= 1
                L[v, d - 1] += 1
            elif succ[u] == v:
                i = ins[v].index(u)      # u = y_{i+1} of v
                L[v] = L[u]
                L[v, i] += 1
                L[v, d - 1] -= 1
            else:
                raise ValueError(f"edge {u}-{v} carries no orientation")
            known[v] = True
            q.append(v)
    for x in range(n):
        for i, y in enumerate(ins[x]):
            want = L[x].copy()
            want[i] -= 1
            want[d - 1] += 1
            if (L[y] != want).any():
                raise ValueError(f"recurrence fails on edge {x}-{y}")
        if succ[x] >= 0 and L[succ[x], d - 1] - L[x, d - 1] != -1:
            raise ValueError(f"last coordinate does not drop at {x}")
    return PolarMap(L, d, "tree-recursive")


@dataclass(frozen=True)
class SpeedReport:
    eps: tuple[int, ...]
    R: tuple[int, ...]
    constant: bool
    deviations: tuple[str, ...]


def edge_speeds(polar: PolarMap, dep: TypedDependenceGraph) -> SpeedReport:
    """Per-direction speeds and reach of the local maps, evaluated at every
    interior point; any dependence on the point is reported rather than
    averaged away."""
    g = dep.graph
    eps_seen: list[set[int]] = [set() for _ in range(dep.sigma)]
    R_seen: list[set[int]] = [set() for _ in range(dep.sigma)]
    dev: list[str] = []
    first: dict[tuple[str, int], int] = {}
    for x in np.flatnonzero(g.interior):
        x = int(x)
        try:
            charges = dep.charges_at(x)
        except ValueError:
            continue
        union = sorted({y for A in charges for y in A})
        for s in range(dep.sigma):
            e = max(min(int(polar.L[y, s] - polar.L[x, s]) for y in A)
                    for A in charges)
            r = -min(int(polar.L[y, s] - polar.L[x, s]) for y in union)
            eps_seen[s].add(e)
            R_seen[s].add(r)
            for tag, val, seen in (("eps", e, eps_seen[s]),
                                   ("R", r, R_seen[s])):
                if (tag, s) not in first:
                    first[(tag, s)] = val
                elif val != first[(tag, s)] and len(dev) < 20:
                    dev.append(f"{tag}_{s + 1} at {x}: {val} != "
                               f"{first[(tag, s)]}")
    constant = all(len(v) == 1 for v in eps_seen + R_seen)
    return SpeedReport(tuple(sorted(v)[0] for v in eps_seen),
                       tuple(sorted(v)[0] for v in R_seen),
                       constant, tuple(dev))


def contour_edge_bound(d: int, n_sinks: int) -> int:
    """Edge count ceiling 3(d+1)(n_sinks - 1) from speeds summing to one
    and unit reach in every direction."""
    if n_sinks < 1:
        raise ValueError("a contour has at least one sink")
    return 3 * (d + 1) * (n_sinks - 1)


# -- Toom cycles ---------------------------------------------------------

@dataclass(frozen=True)
class ToomCycle:
    """psi has n+1 entries with psi[0] == psi[n]; orient[v] gives the arc
    between v and v+1.  n = 1 is the degenerate rooted singleton: no arcs,
    and by convention its root is both circle vertex and sink."""
    psi: tuple[Point, ...]
    orient: tuple[int, ...]

    def __post_init__(self):
        if len(self.psi) < 2 or self.psi[0] != self.psi[-1]:
            raise ValueError("psi must close up")
        if self.n >= 2 and len(self.orient) != self.n:
            raise ValueError("orientation length must match the cycle")
        if self.n == 1 and self.orient:
            raise ValueError("the singleton cycle carries no arcs")
        if any(o not in (-1, 1) for o in self.orient):
            raise ValueError("orientations are +1/-1")

    @property
    def n(self) -> int:
        return len(self.psi) - 1

    @property
    def root(self) -> Point:
        return self.psi[0]

    @cached_property
    def classes(self) -> dict[str, tuple[int, ...]]:
        if self.n == 1:
            return {"circ": (0,), "star": (0,), "one": (), "two": ()}
        out: dict[str, list[int]] = {"circ": [], "star": [], "one": [],
                                     "two": []}
        for v in range(self.n):
            fwd = self.orient[v] == 1
            prev_fwd = self.orient[v - 1] == 1
            if fwd and not prev_fwd:
                out["circ"].append(v)
            elif not fwd and prev_fwd:
                out["star"].append(v)
            elif fwd:
                out["one"].append(v)
            else:
                out["two"].append(v)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def sinks(self) -> tuple[Point, ...]:
        if self.n == 1:
            return (self.psi[0],)
        return tuple(self.psi[v] for v in self.classes["star"])

    @property
    def n_sinks(self) -> int:
        return len(self.classes["star"])

    def edge_lists(self) -> tuple[list, list]:
        """(E1, E2) as (tail_index, head_index) pairs over 0..n."""
        E1, E2 = [], []
        for v, o in enumerate(self.orient):
            if o == 1:
                E1.append((v, v + 1))
            else:
                E2.append((v + 1, v))
        return E1, E2

    def zero_sum(self, polar: PolarMap) -> int:
        E1, E2 = self.edge_lists()
        tot = 0
        for v, w in E1:
            tot += int(polar.L[self.psi[w].x, 0] - polar.L[self.psi[v].x, 0])
        for v, w in E2:
            tot += int(polar.L[self.psi[w].x, 1] - polar.L[self.psi[v].x, 1])
        return tot

    def to_text(self) -> str:
        lines = [f"root ({self.root.x},{self.root.t}) n {self.n}"]
        E1, E2 = self.edge_lists()
        for tag, E in (("E1", E1), ("E2", E2)):
            for v, w in E:
                a, b = self.psi[v], self.psi[w]
                lines.append(
                    f"{v}->{w} {tag} ({a.x},{a.t})->({b.x},{b.t})")
        lines.append("sinks " + " ".join(f"({p.x},{p.t})"
                                         for p in sorted(self.sinks)))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class NotFound:
    root: Point
    edge_cap: int


@dataclass(frozen=True)
class CycleReport:
    ok: bool
    zero_sum: int
    circ_eq_star: bool
    e1_eq_e2: bool
    edge_count_exact: bool
    failed: tuple[str, ...]


def certify_cycle(cycle: ToomCycle, polar: PolarMap) -> CycleReport:
    """Zero-sum plus the three counting identities, all exact.  The
    singleton passes everything vacuously under its root convention."""
    if polar.sigma < 2:
        raise ValueError("need a two-type polar map")
    z = cycle.zero_sum(polar)
    cls = cycle.classes
    a = len(cls["circ"]) == len(cls["star"])
    E1, E2 = cycle.edge_lists()
    b = len(E1) == len(E2)
    c = len(cycle.orient) == 4 * (len(cls["star"]) - 1)
    failed = []
    if z != 0:
        failed.append(f"zero-sum = {z}")
    if not a:
        failed.append("circle and sink counts differ")
    if not b:
        failed.append("forward and backward edge counts differ")
    if not c:
        failed.append("edge count is not 4(sinks - 1)")
    return CycleReport(not failed, z, a, b, c, tuple(failed))


def validate_cycle(cycle: ToomCycle, dep: TypedDependenceGraph
                   ) -> tuple[bool, list[str]]:
    """Well-formedness, the two injectivity/order conditions, and the
    presence typing, checked from scratch against the dependence graph."""
    if dep.kind != "bp":
        raise ValueError("cycle validation is defined for the two-type graph")
    bad: list[str] = []
    n = cycle.n
    if n == 1:
        if dep.is_bullet(cycle.root.x, cycle.root.t):
            bad.append("singleton root is not a noise point")
        return (not bad, bad)
    cls = cycle.classes
    if 0 not in cls["circ"]:
        bad.append("index 0 is not a circle vertex")
    star = set(cls["star"])
    # condition 1: sink images unique in the whole cycle
    for v in star:
        for w in range(n):
            if w != v and cycle.psi[w] == cycle.psi[v]:
                bad.append(f"sink image {cycle.psi[v]} repeated at {w}")
    # condition 2: per image, pass-through-forward < circle < pass-through-
    # backward in index order; index 0 carries all three classes at once
    rank = {}
    for name, val in (("one", 1), ("circ", 2), ("two", 3)):
        for v in cls[name]:
            rank[v] = val
    by_img: dict[Point, list[int]] = {}
    for v in range(n):
        if v in rank:
            by_img.setdefault(cycle.psi[v], []).append(v)
    for p, idxs in by_img.items():
        idxs.sort()
        seq = [3 if i == 0 else rank[i] for i in idxs]
        low = [1 if i == 0 else rank[i] for i in idxs]
        for k in range(len(idxs) - 1):
            if low[k + 1] <= seq[k]:
                bad.append(f"class order violated at image {p}")
                break
    # presence typing edge by edge
    for v in star:
        if dep.is_bullet(cycle.psi[v].x, cycle.psi[v].t):
            bad.append(f"sink {cycle.psi[v]} is not a noise point")
    E1, E2 = cycle.edge_lists()
    circ = set(cls["circ"])
    for (v, w), s in [(e, 1) for e in E1] + [(e, 2) for e in E2]:
        tail_cls = s if (v % n) in cls["one" if s == 1 else "two"] \
            or (v % n) == 0 else 3 - s
        a, b = cycle.psi[v], cycle.psi[w]
        if (v % n) not in circ and (v % n) not in cls["one"] \
                and (v % n) not in cls["two"]:
            bad.append(f"edge tail {v} is a sink")
            continue
        if not dep.is_bullet(a.x, a.t):
            bad.append(f"edge tail image {a} is a noise point")
            continue
        if b.t != a.t - 1:
            bad.append(f"edge {a}->{b} does not descend one step")
        elif tail_cls == 1:
            if b.x != a.x:
                bad.append(f"type-1 edge {a}->{b} is not straight")
        else:
            if dep.A2[a.x] is None or b.x not in dep.A2[a.x]:
                bad.append(f"type-2 edge {a}->{b} leaves the charge")
    return (not bad, bad)


def _singleton(root: Point) -> ToomCycle:
    return ToomCycle((root, root), ())


def find_present_cycle(dep: TypedDependenceGraph, root: Point,
                       edge_cap: int) -> ToomCycle | NotFound:
    """Shortest present cycle rooted at root, ties broken by charge order;
    NotFound only ever means "none within the cap"."""
    if dep.kind != "bp" or dep.sigma != 2:
        raise ValueError("cycle search is defined for the two-type graph")
    o, T = root
    if not 1 <= T <= dep.horizon:
        raise ValueError("root time outside the marked window")
    if not dep.is_bullet(o, T):
        return _singleton(root)
    if dep.A2[o] is None:
        return NotFound(root, edge_cap)
    for cap in range(4, edge_cap + 1, 4):
        got = _search(dep, o, T, cap)
        if got is not None:
            return got
    return NotFound(root, edge_cap)


def count_present_cycles(dep: TypedDependenceGraph, root: Point,
                         max_edges: int) -> dict[int, int]:
    """Exhaustive census of present cycles by edge count; the root must be
    an update point.  Intended for small caps only."""
    if max_edges > 16:
        raise ValueError("census capped at 16 edges")
    o, T = root
    if not dep.is_bullet(o, T):
        return {0: 1}
    counts: dict[int, int] = {}

    def record(cyc: ToomCycle) -> None:
        m = len(cyc.orient)
        counts[m] = counts.get(m, 0) + 1

    _search(dep, o, T, max_edges, collect=record)
    return counts


def _search(dep: TypedDependenceGraph, o: int, T: int, cap: int,
            collect=None) -> ToomCycle | None:
    """Depth-first walk in index order.  Descents are forced: one charge
    choice, then straight down to the first noise point.  Ascents choose
    among closing into the root, climbing along a reverse charge, or one
    straight step up that opens the next descent."""
    root_pt = Point(o, T)
    A2o = set(dep.A2[o])
    psi: list[Point] = [root_pt]
    orient: list[int] = []
    rec: dict[Point, int] = {root_pt: 3}    # max class used per image
    undo: list[tuple[Point, int]] = []

    def put(p: Point, c: int) -> bool:
        # classes must strictly increase per image; sinks (c = 4) and
        # pass-through-forward points (c = 1) therefore need a fresh image
        held = rec.get(p, 0)
        if held >= c or (c == 4 and held):
            return False
        undo.append((p, held))
        rec[p] = c
        return True

    def unput(k: int) -> None:
        while len(undo) > k:
            p, v = undo.pop()
            if v == 0:
                del rec[p]
            else:
                rec[p] = v

    def descend(x: int, t: int) -> list[Point] | None:
        # column from (x, t) down to its first noise point, or None
        col = []
        while t >= 1:
            p = Point(x, t)
            col.append(p)
            if not dep.is_bullet(x, t):
                return col
            t -= 1
        return None

    def place_column(col: list[Point]) -> int | None:
        mark = len(undo)
        for p in col[:-1]:
            if not put(p, 1):
                unput(mark)
                return None
        if not put(col[-1], 4):
            unput(mark)
            return None
        return mark

    def ascend(z: int, t: int, edges: int):
        # prune: closing needs at least max(1, T - t) further edges
        if edges + max(1, T - t) > cap:
            return None
        if t + 1 > dep.horizon:
            return None
        # option 1: close into the root
        if t == T - 1 and z in A2o and edges + 1 <= cap:
            orient.append(-1)
            psi.append(root_pt)
            cyc = ToomCycle(tuple(psi), tuple(orient))
            psi.pop()
            orient.pop()
            if collect is None:
                return cyc
            collect(cyc)
        # option 2: climb along a reverse charge (class 2 vertex)
        for w in dep.rev2[z]:
            q = Point(w, t + 1)
            if edges + 1 > cap or not dep.is_bullet(w, t + 1):
                continue
            mark = len(undo)
            if not put(q, 3):
                continue
            psi.append(q)
            orient.append(-1)
            got = ascend(w, t + 1, edges + 1)
            orient.pop()
            psi.pop()
            unput(mark)
            if got is not None:
                return got
        # option 3: straight up, then the next descent
        q = Point(z, t + 1)
        if dep.is_bullet(z, t + 1) and dep.A2[z] is not None:
            for y in dep.A2[z]:
                col = descend(y, t)
                if col is None or edges + 1 + len(col) > cap:
                    continue
                mark = len(undo)
                if not put(q, 2):
                    break
                m2 = place_column(col)
                if m2 is None:
                    unput(mark)
                    continue
                psi.append(q)
                orient.append(-1)
                psi.extend(col)
                orient.append(1)
                orient.extend([1] * (len(col) - 1))
                got = ascend(col[-1].x, col[-1].t, edges + 1 + len(col))
                for _ in col:
                    psi.pop()
                    orient.pop()
                psi.pop()
                orient.pop()
                unput(mark)
                if got is not None:
                    return got
        return None

    col0 = descend(o, T - 1)
    if col0 is None or len(col0) > cap:
        return None
    mark = place_column(col0)
    if mark is None:
        return None
    psi.extend(col0)
    orient.extend([1] * len(col0))
    got = ascend(col0[-1].x, col0[-1].t, len(col0))
    return got if collect is None else None
