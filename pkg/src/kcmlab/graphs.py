"""Finite patches of regular planar tessellations and regular trees.

The hyperbolic generator is purely combinatorial.  It grows a disc patch by
completing one vertex at a time in breadth-first order: a vertex of target
degree d must end with d incident f-gon faces, and each new face is glued
along a maximal path of the current outer boundary through vertices that the
face itself completes.  That gluing rule is forced (stopping at a saturated
vertex would overshoot its degree, passing through an unsaturated one would
bury it incomplete), so the construction is deterministic and the resulting
rotation system is recovered from the oriented face list.

Layers are BFS distances from the patch root.  A truncation of radius R keeps
layers <= R; vertices at layers <= R-1 are interior and carry their full
infinite-graph neighborhood, which is what every downstream certificate
relies on.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from kcmlab.surd import Surd, edge_expansion_surd, vertex_expansion_lower_surd

FAMILIES = ("hyperbolic", "tree", "explicit")


@dataclass
class Graph:
    """Undirected finite graph with a root, BFS layers, and optional rotation system.

    Adjacency is CSR: neighbors of v are indices[indptr[v]:indptr[v+1]],
    sorted ascending.  rotation[v], when present, lists the same neighbors in
    cyclic planar order (an open fan for vertices on the patch boundary).
    """

    family: str
    d: int
    f: int
    radius: int
    indptr: np.ndarray
    indices: np.ndarray
    layer: np.ndarray
    root: int = 0
    rotation: list | None = None
    _adj_cache: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.layer[self.root] != 0:
            raise ValueError("root must sit at layer 0")

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def interior(self) -> np.ndarray:
        """Vertices whose full neighborhood is present (layer <= radius - 1)."""
        return np.asarray(self.layer <= self.radius - 1)

    @property
    def boundary(self) -> np.ndarray:
        return np.asarray(self.layer == self.radius)

    def adjacency(self):
        """scipy CSR adjacency (0/1), cached; used for batched neighbor counts."""
        if self._adj_cache is None:
            from scipy.sparse import csr_matrix
            data = np.ones(len(self.indices), dtype=np.int32)
            self._adj_cache = csr_matrix(
                (data, self.indices.astype(np.int64), self.indptr),
                shape=(self.n, self.n))
        return self._adj_cache

    # -- audits ---------------------------------------------------------

    def audit_layers(self) -> bool:
        """Recompute BFS distances from the root and compare."""
        dist = _bfs_layers(self.indptr, self.indices, self.root)
        return bool(np.array_equal(dist, self.layer))

    def audit_interior_degrees(self) -> list[int]:
        """Interior vertices must have full degree d; returns offenders."""
        if self.family == "explicit":
            return []
        deg = self.degrees
        bad = np.nonzero(self.interior & (deg != self.d))[0]
        return [int(v) for v in bad]

    def audit_interior_faces(self) -> tuple[int, list[tuple]]:
        """Walk every face of the rotation system; faces whose vertices are
        all interior must be f-gons.  Returns (number of interior faces,
        offending walks)."""
        if self.rotation is None:
            raise ValueError("no rotation system on this graph")
        pos = [{int(w): i for i, w in enumerate(rot)} for rot in self.rotation]
        seen = set()
        count, bad = 0, []
        for v in range(self.n):
            for w in self.rotation[v]:
                if (v, w) in seen:
                    continue
                walk = []
                a, b = v, int(w)
                guard = 0
                while (a, b) not in seen:
                    seen.add((a, b))
                    walk.append(a)
                    rot = self.rotation[b]
                    i = pos[b][a]
                    nxt = int(rot[(i + 1) % len(rot)])
                    a, b = b, nxt
                    guard += 1
                    if guard > 16 * self.n:
                        raise RuntimeError("face walk does not close")
                if all(self.layer[u] <= self.radius - 1 for u in walk):
                    count += 1
                    if self.f and len(walk) != self.f:
                        bad.append(tuple(walk))
        return count, bad

    # -- text format ----------------------------------------------------

    def to_text(self) -> str:
        lines = [f"{self.family} {self.d} {self.f} {self.radius}"]
        for v in range(self.n):
            nbrs = ",".join(str(int(w)) for w in self.neighbors(v))
            row = f"{v} {int(self.layer[v])} {nbrs or '-'}"
            if self.rotation is not None:
                rot = ",".join(str(int(w)) for w in self.rotation[v])
                row += f" {rot or '-'}"
            lines.append(row)
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "Graph":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split()
        if len(head) != 4:
            raise ValueError("header must be: family d f radius")
        family, d, f, radius = head[0], int(head[1]), int(head[2]), int(head[3])
        layers, adj, rots = [], [], []
        has_rot = None
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) not in (3, 4):
                raise ValueError(f"bad vertex line: {ln!r}")
            vid = int(parts[0])
            if vid != len(adj):
                raise ValueError("vertex ids must be consecutive from 0")
            layers.append(int(parts[1]))
            adj.append([] if parts[2] == "-" else [int(x) for x in parts[2].split(",")])
            if has_rot is None:
                has_rot = len(parts) == 4
            elif has_rot != (len(parts) == 4):
                raise ValueError("mixed rotation columns")
            if len(parts) == 4:
                rots.append([] if parts[3] == "-" else [int(x) for x in parts[3].split(",")])
        indptr, indices = _to_csr(adj)
        g = Graph(family, d, f, radius, indptr, indices,
                  np.array(layers, dtype=np.int32),
                  rotation=rots if has_rot else None)
        _check_symmetric(g)
        if not g.audit_layers():
            raise ValueError("stored layers disagree with BFS from the root")
        return g


def _to_csr(adj: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(len(adj) + 1, dtype=np.int64)
    for v, nbrs in enumerate(adj):
        indptr[v + 1] = indptr[v] + len(nbrs)
    indices = np.empty(int(indptr[-1]), dtype=np.int32)
    for v, nbrs in enumerate(adj):
        indices[indptr[v]:indptr[v + 1]] = sorted(nbrs)
    return indptr, indices


def _check_symmetric(g: Graph) -> None:
    pairs = set()
    for v in range(g.n):
        for w in g.neighbors(v):
            if int(w) == v:
                raise ValueError("self loop")
            pairs.add((v, int(w)))
    for v, w in pairs:
        if (w, v) not in pairs:
            raise ValueError(f"edge {v}->{w} has no reverse")


def _bfs_layers(indptr, indices, root) -> np.ndarray:
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int32)
    dist[root] = 0
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            for w in indices[indptr[v]:indptr[v + 1]]:
                w = int(w)
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


# -- trees --------------------------------------------------------------


def build_tree(d: int, depth: int) -> Graph:
    """Truncated d-regular tree: root has d children, every other internal
    vertex d-1, leaves at the given depth.  Vertex ids are BFS order."""
    if d < 2:
        raise ValueError("degree must be at least 2")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    adj: list[list[int]] = [[]]
    layer = [0]
    frontier = [0]
    for k in range(1, depth + 1):
        nxt = []
        for v in frontier:
            n_children = d if v == 0 else d - 1
            for _ in range(n_children):
                w = len(adj)
                adj.append([v])
                adj[v].append(w)
                layer.append(k)
                nxt.append(w)
        frontier = nxt
    indptr, indices = _to_csr(adj)
    return Graph("tree", d, 0, depth, indptr, indices,
                 np.array(layer, dtype=np.int32))


# -- hyperbolic patches -------------------------------------------------


class _PatchBuilder:
    """Grows the disc patch; see the module docstring for the gluing rule."""

    def __init__(self, d: int, f: int):
        self.d, self.f = d, f
        self.adj: list[list[int]] = []
        self.nfaces: list[int] = []
        self.faces: list[tuple[int, ...]] = []
        self.prov: list[int] = []        # provisional layer, fixed at creation
        self.next_bd: dict[int, int] = {}
        self.prev_bd: dict[int, int] = {}
        self.heap: list[tuple[int, int]] = []

    def _new_vertex(self, prov: int) -> int:
        v = len(self.adj)
        self.adj.append([])
        self.nfaces.append(0)
        self.prov.append(prov)
        heapq.heappush(self.heap, (prov, v))
        return v

    def _add_edge(self, u: int, v: int) -> None:
        self.adj[u].append(v)
        self.adj[v].append(u)

    def seed(self) -> None:
        root = self._new_vertex(0)
        chain = [self._new_vertex(1) for _ in range(self.f - 1)]
        cyc = [root] + chain
        for i, v in enumerate(cyc):
            self._add_edge(v, cyc[(i + 1) % len(cyc)])
            self.nfaces[v] += 1
            self.next_bd[v] = cyc[(i + 1) % len(cyc)]
            self.prev_bd[cyc[(i + 1) % len(cyc)]] = v
        self.faces.append(tuple([root] + list(reversed(chain))))

    def _glue_face(self, path: list[int]) -> None:
        d, f = self.d, self.f
        g = len(path) - 1
        if g >= f:
            raise RuntimeError("patch closed up; parameters are not hyperbolic")
        m = f - g - 1
        start, end = path[0], path[-1]
        base = min(self.prov[start], self.prov[end])
        chain = []
        for i in range(m):
            prov = 1 + min(self.prov[start] + i, self.prov[end] + (m - 1 - i))
            chain.append(self._new_vertex(prov))
        seq = [start] + chain + [end]
        for a, b in zip(seq, seq[1:]):
            self._add_edge(a, b)
        for v in path:
            self.nfaces[v] += 1
        for v in chain:
            self.nfaces[v] += 1
        self.faces.append(tuple(path) + tuple(reversed(chain)))
        # boundary splice: interior path vertices leave, the chain enters
        for v in path[1:-1]:
            del self.next_bd[v]
            del self.prev_bd[v]
        for a, b in zip(seq, seq[1:]):
            self.next_bd[a] = b
            self.prev_bd[b] = a

    def complete(self, v: int) -> None:
        d = self.d
        while self.nfaces[v] < d:
            if v not in self.next_bd:
                raise RuntimeError("incomplete vertex fell off the boundary")
            remaining = d - self.nfaces[v]
            if remaining == 1:
                path = [self.prev_bd[v], v, self.next_bd[v]]
                while len(self.adj[path[-1]]) == d:
                    path.append(self.next_bd[path[-1]])
            else:
                path = [self.prev_bd[v], v]
            while len(self.adj[path[0]]) == d:
                path.insert(0, self.prev_bd[path[0]])
            self._glue_face(path)

    def run(self, radius: int):
        self.seed()
        stop = radius
        for _ in range(8):
            while self.heap and self.heap[0][0] < stop:
                _, v = heapq.heappop(self.heap)
                if self.nfaces[v] >= self.d:
                    continue
                self.complete(v)
            true_layer = _bfs_layers(*_to_csr(self.adj), 0)
            pending = [v for v in range(len(self.adj))
                       if true_layer[v] <= radius - 1 and self.nfaces[v] < self.d]
            if not pending:
                return true_layer
            # provisional layers overshot true distance somewhere; widen the stop
            for v in pending:
                heapq.heappush(self.heap, (stop, v))
            stop += 1
        raise RuntimeError("patch growth failed to stabilize")

    def rotations(self) -> list[list[int]]:
        succ: list[dict[int, int]] = [dict() for _ in self.adj]
        for face in self.faces:
            L = len(face)
            for i in range(L):
                a, v, b = face[i - 1], face[i], face[(i + 1) % L]
                if a in succ[v]:
                    raise RuntimeError("inconsistent face orientations")
                succ[v][a] = b
        rots = []
        for v, nbrs in enumerate(self.adj):
            values = set(succ[v].values())
            starts = [w for w in nbrs if w not in values]
            if len(starts) > 1:
                raise RuntimeError("rotation fan is not contiguous")
            cur = starts[0] if starts else min(nbrs)
            rot = [cur]
            while cur in succ[v] and len(rot) < len(nbrs):
                cur = succ[v][cur]
                rot.append(cur)
            if sorted(rot) != sorted(nbrs):
                raise RuntimeError("rotation walk missed neighbors")
            rots.append(rot)
        return rots


def build_hyperbolic(d: int, f: int, radius: int) -> Graph:
    """Radius-R truncation of the tessellation with degree d and f-gon faces;
    requires (d-2)(f-2) > 4."""
    if d < 3 or f < 3:
        raise ValueError("need d >= 3 and f >= 3")
    if (d - 2) * (f - 2) <= 4:
        raise ValueError("(d-2)(f-2) must exceed 4")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius == 0:
        return Graph("hyperbolic", d, f, 0,
                     np.array([0, 0], dtype=np.int64),
                     np.array([], dtype=np.int32),
                     np.array([0], dtype=np.int32), rotation=[[]])
    b = _PatchBuilder(d, f)
    true_layer = b.run(radius)
    rots = b.rotations()

    keep = [v for v in range(len(b.adj)) if 0 <= true_layer[v] <= radius]
    remap = {v: i for i, v in enumerate(keep)}
    adj = [[remap[w] for w in b.adj[v] if w in remap] for v in keep]
    rotation = [[remap[w] for w in rots[v] if w in remap] for v in keep]
    layer = np.array([true_layer[v] for v in keep], dtype=np.int32)
    indptr, indices = _to_csr(adj)
    g = Graph("hyperbolic", d, f, radius, indptr, indices, layer,
              rotation=rotation)
    offenders = g.audit_interior_degrees()
    if offenders:
        raise RuntimeError(f"interior degree audit failed at {offenders[:5]}")
    return g


# -- expansion constants and witnesses ----------------------------------


def phi_e_formula(d: int, f: int) -> float:
    """Edge expansion constant (d-2)*sqrt(1 - 4/((d-2)(f-2))) of the patch family."""
    return float(edge_expansion_surd(d, f))


def phi_e_surd(d: int, f: int) -> Surd:
    return edge_expansion_surd(d, f)


def alpha_lower(d: int, triangle_free: bool) -> float:
    """Certified lower bound on the vertex expansion of a plane graph with
    minimum degree d: (d-6+sqrt((d-2)(d-6)))/2, shifted by two degrees in the
    triangle-free case.  Returns 0.0 below the applicability threshold."""
    eff = d + 2 if triangle_free else d
    if eff < 7:
        return 0.0
    return float(vertex_expansion_lower_surd(eff))


def alpha_lower_surd(d: int, triangle_free: bool) -> Surd:
    eff = d + 2 if triangle_free else d
    if eff < 7:
        return Surd.rational(0)
    return vertex_expansion_lower_surd(eff)


def is_bipartite(g: Graph) -> bool:
    color = np.full(g.n, -1, dtype=np.int8)
    for s in range(g.n):
        if color[s] >= 0:
            continue
        color[s] = 0
        stack = [s]
        while stack:
            v = stack.pop()
            for w in g.neighbors(v):
                w = int(w)
                if color[w] < 0:
                    color[w] = 1 - color[v]
                    stack.append(w)
                elif color[w] == color[v]:
                    return False
    return True


def compute_jbar(g: Graph) -> int:
    """Largest j such that every vertex at layer k <= radius-1 has at least j
    neighbors at layer k+1, witnessed from the patch root."""
    if g.radius < 1:
        raise ValueError("need radius >= 1 for a forward-degree witness")
    best = None
    for v in range(g.n):
        k = int(g.layer[v])
        if k > g.radius - 1:
            continue
        fwd = int(np.sum(g.layer[g.neighbors(v)] == k + 1))
        best = fwd if best is None else min(best, fwd)
    return int(best)


@dataclass(frozen=True)
class ExpansionReport:
    phi_e: float
    alpha_vertex_lower: float
    brute_min_ratio: Fraction
    jbar_witness: int
    searched_max_size: int


def brute_force_boundary_ratio(g: Graph, max_size: int,
                               roots: np.ndarray | None = None) -> Fraction:
    """Exact minimum of |boundary edges of K| / |K| over connected vertex
    sets K of size <= max_size inside the interior (layer <= radius-1), so
    every boundary edge of K is visible in the truncation.

    Enumeration is exhaustive over sets whose minimum member lies in `roots`
    (default: every interior vertex), each set visited exactly once.
    Returns the ratio as an exact rational, or math.inf if no set is
    admissible (empty interior).
    """
    import math
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    allowed = g.interior
    if roots is None:
        roots_arr = np.nonzero(allowed)[0].astype(np.int64)
    else:
        roots_arr = np.asarray(roots, dtype=np.int64)
        if not np.all(allowed[roots_arr]):
            raise ValueError("roots must be interior vertices")
    if len(roots_arr) == 0:
        return math.inf
    from kcmlab import _kernels
    num, den = _kernels.min_boundary_ratio(
        g.indptr.astype(np.int64), g.indices.astype(np.int64),
        allowed.astype(np.uint8), g.degrees.astype(np.int64),
        roots_arr, max_size, False)
    return Fraction(int(num), int(den))


def containing_min_ratio(g: Graph, v0: int, max_size: int,
                         full_degree: bool = True) -> Fraction:
    """Exact minimum of the boundary ratio over connected sets containing the
    fixed vertex v0, with no interior restriction on membership.

    With full_degree, every vertex contributes d to the degree sum: the
    ratio is then the one the set would have in the untruncated graph,
    since a truncation keeps all induced edges.  On a vertex-transitive
    graph, every connected set of size <= max_size anywhere has an
    isomorphic copy through v0 inside the ball of radius max_size - 1, so
    this single-root enumeration on a large enough patch dominates the
    interior minimum from below.
    """
    from kcmlab import _kernels
    deg = (np.full(g.n, g.d, dtype=np.int64) if full_degree
           else g.degrees.astype(np.int64))
    num, den = _kernels.min_boundary_ratio(
        g.indptr.astype(np.int64), g.indices.astype(np.int64),
        np.ones(g.n, dtype=np.uint8), deg,
        np.array([v0], dtype=np.int64), max_size, True)
    return Fraction(int(num), int(den))


def expansion_report(g: Graph, max_size: int,
                     roots: np.ndarray | None = None) -> ExpansionReport:
    tri_free = g.f >= 4 if g.family == "hyperbolic" else True
    return ExpansionReport(
        phi_e=phi_e_formula(g.d, g.f) if g.family == "hyperbolic" else 0.0,
        alpha_vertex_lower=alpha_lower(g.d, tri_free),
        brute_min_ratio=brute_force_boundary_ratio(g, max_size, roots=roots),
        jbar_witness=compute_jbar(g),
        searched_max_size=max_size,
    )


def ratio_at_least_surd(ratio: Fraction, bound: Surd) -> bool:
    """Exact comparison ratio >= a + b*sqrt(s), via the surd's sign logic."""
    return Surd.rational(ratio).sub(bound).sign() >= 0
