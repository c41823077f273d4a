"""Numba kernels for the hot loops.

Hashing, synchronous-update sweeps, the event-driven resampling loop, and
connected-set enumeration live here, free of Python objects.  Wrappers in
the sibling modules own validation and array preparation.

The hash chain must agree bit for bit with randomness.py; a test pins that.
"""
import numpy as np
from numba import njit

U64 = np.uint64
_GOLD = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_CV = U64(0xD1342543DE82EF95)
_CT = U64(0x2545F4914F6CDD1D)
_S30 = U64(30)
_S27 = U64(27)
_S31 = U64(31)
_S11 = U64(11)
_ONE = U64(1)
_INV53 = 2.0 ** -53


@njit(cache=True, inline="always")
def mix64(z):
    z = z + _GOLD
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _unif(h):
    return np.float64(h >> _S11) * _INV53


@njit(cache=True, inline="always")
def _vkey(base, v):
    return mix64(base ^ (U64(v) + _ONE) * _CV)


@njit(cache=True, inline="always")
def _u_at(vk, t):
    return _unif(mix64(vk ^ U64(t) * _CT))


@njit(cache=True)
def uniform_block(base, n, t0, t1):
    """Uniforms for all (vertex, t) with t in [t0, t1); shape (t1-t0, n)."""
    out = np.empty((t1 - t0, n), np.float64)
    for v in range(n):
        vk = _vkey(base, v)
        for t in range(t0, t1):
            out[t - t0, v] = _u_at(vk, t)
    return out


# -- synchronous discrete dynamics --------------------------------------
# kind: 0 = BP, 1 = CP, 2 = NMVP.  Frozen vertices copy their state.

@njit(cache=True, inline="always")
def _step(indptr, indices, free, cur, nxt, vk, t, kind, j, eps):
    n = cur.shape[0]
    for v in range(n):
        if free[v] == 0:
            nxt[v] = cur[v]
            continue
        u = _u_at(vk[v], t)
        if u < eps:
            if kind == 2:
                nxt[v] = 0 if u < 0.5 * eps else 1
            else:
                nxt[v] = 0
            continue
        c = 0
        for k in range(indptr[v], indptr[v + 1]):
            c += cur[indices[k]]
        if kind == 0:
            nxt[v] = 1 if (cur[v] == 1 or c >= j) else 0
        elif kind == 1:
            nxt[v] = 1 if c >= j else 0
        else:
            deg = indptr[v + 1] - indptr[v]
            if 2 * c > deg:
                nxt[v] = 1
            elif 2 * c < deg:
                nxt[v] = 0
            else:
                nxt[v] = cur[v]


@njit(cache=True)
def run_traj(indptr, indices, free, x0, base, T, kind, j, eps):
    """One trial, full trajectory (T+1, n)."""
    n = x0.shape[0]
    out = np.empty((T + 1, n), np.uint8)
    cur = x0.copy()
    nxt = np.empty(n, np.uint8)
    vk = np.empty(n, U64)
    for v in range(n):
        vk[v] = _vkey(base, v)
    out[0] = cur
    for t in range(1, T + 1):
        _step(indptr, indices, free, cur, nxt, vk, t, kind, j, eps)
        cur, nxt = nxt, cur
        out[t] = cur
    return out


@njit(cache=True)
def run_traj_chunk(indptr, indices, free, x0, bases, T, kind, j, eps):
    """Batch of trials, full trajectories (m, T+1, n); x0 is (m, n)."""
    m, n = x0.shape
    out = np.empty((m, T + 1, n), np.uint8)
    for trial in range(m):
        cur = x0[trial].copy()
        nxt = np.empty(n, np.uint8)
        vk = np.empty(n, U64)
        for v in range(n):
            vk[v] = _vkey(bases[trial], v)
        out[trial, 0] = cur
        for t in range(1, T + 1):
            _step(indptr, indices, free, cur, nxt, vk, t, kind, j, eps)
            cur, nxt = nxt, cur
            out[trial, t] = cur
    return out


@njit(cache=True)
def run_root_series(indptr, indices, free, x0, bases, T, kind, j, eps, root):
    """Batch of trials, root state only: (m, T+1); x0 is (m, n)."""
    m, n = x0.shape
    out = np.empty((m, T + 1), np.uint8)
    for trial in range(m):
        cur = x0[trial].copy()
        nxt = np.empty(n, np.uint8)
        vk = np.empty(n, U64)
        for v in range(n):
            vk[v] = _vkey(bases[trial], v)
        out[trial, 0] = cur[root]
        for t in range(1, T + 1):
            _step(indptr, indices, free, cur, nxt, vk, t, kind, j, eps)
            cur, nxt = nxt, cur
            out[trial, t] = cur[root]
    return out


@njit(cache=True)
def run_coupled_chi_sigma(indptr, indices, free, bases, T, j, eps, root):
    """Threshold process vs majority process over the same uniforms, both
    from all-one.  Returns root series (m, T+1, 2) with [:,:,0] = chi,
    [:,:,1] = sigma, and the number of pointwise chi > sigma violations."""
    m = bases.shape[0]
    n = indptr.shape[0] - 1
    out = np.empty((m, T + 1, 2), np.uint8)
    viol = 0
    for trial in range(m):
        chi = np.ones(n, np.uint8)
        sig = np.ones(n, np.uint8)
        chi2 = np.empty(n, np.uint8)
        sig2 = np.empty(n, np.uint8)
        vk = np.empty(n, U64)
        for v in range(n):
            vk[v] = _vkey(bases[trial], v)
        out[trial, 0, 0] = chi[root]
        out[trial, 0, 1] = sig[root]
        for t in range(1, T + 1):
            _step(indptr, indices, free, chi, chi2, vk, t, 1, j, eps)
            _step(indptr, indices, free, sig, sig2, vk, t, 2, j, eps)
            chi, chi2 = chi2, chi
            sig, sig2 = sig2, sig
            for v in range(n):
                if chi[v] > sig[v]:
                    viol += 1
            out[trial, t, 0] = chi[root]
            out[trial, t, 1] = sig[root]
    return out, viol


# -- event-driven resampling dynamics -----------------------------------


@njit(cache=True, inline="always")
def _pois_icdf(u, mu):
    """Inverse CDF of Poisson(mu) by direct summation; mu modest (< 400)."""
    p = np.exp(-mu)
    cdf = p
    k = 0
    while u >= cdf and k < 100000:
        k += 1
        p = p * mu / k
        cdf += p
    return k


@njit(cache=True)
def poisson_counts(base, n, mu):
    out = np.empty(n, np.int64)
    for v in range(n):
        out[v] = _pois_icdf(_u_at(_vkey(base, v), 0), mu)
    return out


@njit(cache=True)
def event_uniforms(base, verts, ks):
    """Per-event uniforms for events identified by (vertex, ordinal k)."""
    m = verts.shape[0]
    out = np.empty(m, np.float64)
    for i in range(m):
        out[i] = _u_at(_vkey(base, verts[i]), ks[i])
    return out


@njit(cache=True)
def run_fa_segment(indptr, indices, state, ev_vert, ev_u, j, q, fired,
                  newval, lo, hi):
    """Execute events [lo, hi) in order on state (in place).  fired marks
    events whose constraint held; newval records the state at the event's
    vertex right after the event either way."""
    for i in range(lo, hi):
        v = ev_vert[i]
        c = 0
        for k in range(indptr[v], indptr[v + 1]):
            c += state[indices[k]]
        if c >= j:
            fired[i] = 1
            state[v] = 1 if ev_u[i] <= q else 0
        newval[i] = state[v]


@njit(cache=True)
def run_fa_pair_segment(indptr, indices, sa, sb, ev_vert, ev_u, j, q, lo, hi):
    """Two copies driven by identical events and uniforms, both resampling
    at level q; differ only through their current configurations."""
    for i in range(lo, hi):
        v = ev_vert[i]
        ca = 0
        cb = 0
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            ca += sa[w]
            cb += sb[w]
        val = 1 if ev_u[i] <= q else 0
        if ca >= j:
            sa[v] = val
        if cb >= j:
            sb[v] = val


# -- connected-set enumeration ------------------------------------------


@njit(cache=True)
def min_boundary_ratio(indptr, indices, allowed, deg, roots, max_size,
                       contain_mode):
    """Exact min of (sum deg - 2 * internal edges) / |K| over connected K of
    size <= max_size within `allowed`.

    Without contain_mode, K ranges over sets whose minimum member is in
    `roots` (pass all allowed vertices for the full minimum); each set is
    visited exactly once via extension lists with the exclusive-neighbor
    rule.  With contain_mode, K ranges over sets containing the single root.
    Returns (numerator, denominator) of the minimizing ratio.
    """
    nr = roots.shape[0]
    n = indptr.shape[0] - 1
    best_n = np.empty(nr, np.int64)
    best_d = np.empty(nr, np.int64)
    for ri in range(nr):
        r = roots[ri]
        adjS = np.zeros(n, np.int32)
        sub = np.empty(max_size + 1, np.int64)
        ext = np.empty((max_size + 1) * n + 64, np.int64)
        seg_lo = np.empty(max_size + 1, np.int64)
        seg_hi = np.empty(max_size + 1, np.int64)
        seg_ptr = np.empty(max_size + 1, np.int64)
        esum = np.empty(max_size + 1, np.int64)
        dsum = np.empty(max_size + 1, np.int64)
        bn = deg[r]
        bd = np.int64(1)
        sub[0] = r
        hi = 0
        for k in range(indptr[r], indptr[r + 1]):
            u = indices[k]
            ok = (u != r) if contain_mode else (u > r)
            if ok and allowed[u] == 1:
                ext[hi] = u
                hi += 1
        for k in range(indptr[r], indptr[r + 1]):
            adjS[indices[k]] += 1
        depth = 0
        seg_lo[0] = 0
        seg_hi[0] = hi
        seg_ptr[0] = 0
        esum[0] = 0
        dsum[0] = deg[r]
        while True:
            if depth + 1 < max_size and seg_ptr[depth] < seg_hi[depth]:
                w = ext[seg_ptr[depth]]
                seg_ptr[depth] += 1
                clo = seg_hi[depth]
                chi = clo
                for k in range(seg_ptr[depth], seg_hi[depth]):
                    ext[chi] = ext[k]
                    chi += 1
                # exclusive neighbors, judged before w joins the set
                for k in range(indptr[w], indptr[w + 1]):
                    u = indices[k]
                    ok = (u != r) if contain_mode else (u > r)
                    if ok and allowed[u] == 1 and adjS[u] == 0:
                        ext[chi] = u
                        chi += 1
                e_new = esum[depth] + adjS[w]
                d_new = dsum[depth] + deg[w]
                for k in range(indptr[w], indptr[w + 1]):
                    adjS[indices[k]] += 1
                depth += 1
                sub[depth] = w
                seg_lo[depth] = clo
                seg_hi[depth] = chi
                seg_ptr[depth] = clo
                esum[depth] = e_new
                dsum[depth] = d_new
                num = d_new - 2 * e_new
                den = np.int64(depth + 1)
                if num * bd < bn * den:
                    bn = num
                    bd = den
            else:
                if depth == 0:
                    break
                w = sub[depth]
                for k in range(indptr[w], indptr[w + 1]):
                    adjS[indices[k]] -= 1
                depth -= 1
        best_n[ri] = bn
        best_d[ri] = bd
    bn = best_n[0]
    bd = best_d[0]
    for ri in range(1, nr):
        if best_n[ri] * bd < bn * best_d[ri]:
            bn = best_n[ri]
            bd = best_d[ri]
    return bn, bd


@njit(cache=True)
def count_connected_sets(indptr, indices, allowed, roots, max_size,
                         contain_mode):
    """Number of sets the enumeration above visits; for scale measurements."""
    nr = roots.shape[0]
    n = indptr.shape[0] - 1
    total = 0
    for ri in range(nr):
        r = roots[ri]
        adjS = np.zeros(n, np.int32)
        sub = np.empty(max_size + 1, np.int64)
        ext = np.empty((max_size + 1) * n + 64, np.int64)
        seg_lo = np.empty(max_size + 1, np.int64)
        seg_hi = np.empty(max_size + 1, np.int64)
        seg_ptr = np.empty(max_size + 1, np.int64)
        sets = 1
        sub[0] = r
        hi = 0
        for k in range(indptr[r], indptr[r + 1]):
            u = indices[k]
            ok = (u != r) if contain_mode else (u > r)
            if ok and allowed[u] == 1:
                ext[hi] = u
                hi += 1
        for k in range(indptr[r], indptr[r + 1]):
            adjS[indices[k]] += 1
        depth = 0
        seg_lo[0] = 0
        seg_hi[0] = hi
        seg_ptr[0] = 0
        while True:
            if depth + 1 < max_size and seg_ptr[depth] < seg_hi[depth]:
                w = ext[seg_ptr[depth]]
                seg_ptr[depth] += 1
                clo = seg_hi[depth]
                chi = clo
                for k in range(seg_ptr[depth], seg_hi[depth]):
                    ext[chi] = ext[k]
                    chi += 1
                for k in range(indptr[w], indptr[w + 1]):
                    u = indices[k]
                    ok = (u != r) if contain_mode else (u > r)
                    if ok and allowed[u] == 1 and adjS[u] == 0:
                        ext[chi] = u
                        chi += 1
                for k in range(indptr[w], indptr[w + 1]):
                    adjS[indices[k]] += 1
                depth += 1
                sub[depth] = w
                seg_lo[depth] = clo
                seg_hi[depth] = chi
                seg_ptr[depth] = clo
                sets += 1
            else:
                if depth == 0:
                    break
                w = sub[depth]
                for k in range(indptr[w], indptr[w + 1]):
                    adjS[indices[k]] -= 1
                depth -= 1
        total += sets
    return total


# -- space-time zero flood ----------------------------------------------


@njit(cache=True)
def flood_zeros(indptr, indices, states, x0, t0):
    """Connected zero component of (x0, t0) in the strong product of the
    graph with 0..T.  Returns (xs, ts, count); the arrays are full-slab
    sized, only the first `count` entries are members."""
    Tp1, n = states.shape
    cap = Tp1 * n
    xs = np.empty(cap, np.int32)
    ts = np.empty(cap, np.int32)
    seen = np.zeros((Tp1, n), np.uint8)
    xs[0] = x0
    ts[0] = t0
    seen[t0, x0] = 1
    head = 0
    count = 1
    while head < count:
        x = xs[head]
        t = ts[head]
        head += 1
        for s in range(t - 1, t + 2):
            if s < 0 or s >= Tp1:
                continue
            if s != t and states[s, x] == 0 and seen[s, x] == 0:
                seen[s, x] = 1
                xs[count] = x
                ts[count] = s
                count += 1
            for k in range(indptr[x], indptr[x + 1]):
                y = indices[k]
                if states[s, y] == 0 and seen[s, y] == 0:
                    seen[s, y] = 1
                    xs[count] = y
                    ts[count] = s
                    count += 1
    return xs, ts, count


@njit(cache=True)
def bfs_dist(indptr, indices, src):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, np.int32)
    queue = np.empty(n, np.int32)
    dist[src] = 0
    queue[0] = src
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    return dist
