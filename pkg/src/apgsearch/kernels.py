"""Compiled kernels for the query algorithms and the exact scan.

One kernel per algorithm, shared across the three item domains: datasets
and queries travel as tuples of flat arrays plus a metric code, and all
priority-queue state lives in plain arrays.  Orderings are lexicographic
on (distance, id) everywhere, and randomness comes from the seeded
xorshift stream in `rng`, so results are fully reproducible.

Result queues hold k slots; candidate queues grow geometrically.  Each
kernel returns (count, distance_evaluations, restarts, hops,
outer_iterations) after filling the caller's output arrays with the
ascending (distance, id) result pairs.
"""

import numpy as np
from numba import njit

from .metrics import angle_kernel, l2_kernel, levenshtein_kernel
from .rng import rand_below

# metric codes inside kernels
METRIC_L2 = 0
METRIC_LEVENSHTEIN = 1
METRIC_ANGLE = 2

# uniform draws attempted before falling back to a wrap-around scan
PICK_ATTEMPTS = 64


@njit(cache=True, nogil=True)
def dist_to(mc, data, i, q):
    """Distance from the query payload to item i of the dataset payload."""
    vecs, codes, offs, sp_ids, sp_wts, sp_ptr, sp_norms = data
    qvec, qcodes, qsi, qsw, qnorm = q
    if mc == METRIC_L2:
        return l2_kernel(vecs[i], qvec)
    elif mc == METRIC_LEVENSHTEIN:
        return levenshtein_kernel(codes[offs[i]:offs[i + 1]], qcodes)
    else:
        lo = sp_ptr[i]
        hi = sp_ptr[i + 1]
        return angle_kernel(sp_ids[lo:hi], sp_wts[lo:hi], sp_norms[i], qsi, qsw, qnorm)


@njit(cache=True, nogil=True)
def _eval(mc, data, q, v, evl, dch, gen, nevals):
    """Cached distance evaluation; each id is computed at most once."""
    if evl[v] == gen:
        return dch[v], nevals
    d = dist_to(mc, data, v, q)
    evl[v] = gen
    dch[v] = d
    return d, nevals + 1


@njit(cache=True, nogil=True)
def _gt(d1, i1, d2, i2):
    return d1 > d2 or (d1 == d2 and i1 > i2)


@njit(cache=True, nogil=True)
def _lt(d1, i1, d2, i2):
    return d1 < d2 or (d1 == d2 and i1 < i2)


# --- bounded result queue: max-heap on (dist, id) over parallel arrays ---


@njit(cache=True, nogil=True)
def _kq_siftdown(kd, ki, size, pos):
    while True:
        left = 2 * pos + 1
        right = left + 1
        top = pos
        if left < size and _gt(kd[left], ki[left], kd[top], ki[top]):
            top = left
        if right < size and _gt(kd[right], ki[right], kd[top], ki[top]):
            top = right
        if top == pos:
            return
        kd[pos], kd[top] = kd[top], kd[pos]
        ki[pos], ki[top] = ki[top], ki[pos]
        pos = top


@njit(cache=True, nogil=True)
def _kq_push(kd, ki, size, d, i):
    """Push assuming id i is not already present; returns the new size."""
    cap = kd.shape[0]
    if size < cap:
        pos = size
        kd[pos] = d
        ki[pos] = i
        while pos > 0:
            par = (pos - 1) >> 1
            if _gt(kd[pos], ki[pos], kd[par], ki[par]):
                kd[pos], kd[par] = kd[par], kd[pos]
                ki[pos], ki[par] = ki[par], ki[pos]
                pos = par
            else:
                break
        return size + 1
    if _gt(kd[0], ki[0], d, i):
        kd[0] = d
        ki[0] = i
        _kq_siftdown(kd, ki, size, 0)
    return size


@njit(cache=True, nogil=True)
def _kq_push_dedup(kd, ki, size, d, i):
    for t in range(size):
        if ki[t] == i:
            return size
    return _kq_push(kd, ki, size, d, i)


@njit(cache=True, nogil=True)
def _kq_cov(kd, ki, size):
    """Covering radius: root of the full queue, infinity while under-full."""
    if size < kd.shape[0]:
        return np.inf
    return kd[0]


@njit(cache=True, nogil=True)
def _kq_sorted_fill(kd, ki, size, out_d, out_i):
    """Heapsort the queue in place and copy ascending pairs out."""
    end = size - 1
    while end > 0:
        kd[0], kd[end] = kd[end], kd[0]
        ki[0], ki[end] = ki[end], ki[0]
        _kq_siftdown(kd, ki, end, 0)
        end -= 1
    for t in range(size):
        out_d[t] = kd[t]
        out_i[t] = ki[t]
    return size


# --- unbounded candidate queue: min-heap with geometric growth ---


@njit(cache=True, nogil=True)
def _cq_push(cd, ci, size, d, i):
    if size == cd.shape[0]:
        nd = np.empty(size * 2, np.float64)
        ni = np.empty(size * 2, np.int64)
        nd[:size] = cd
        ni[:size] = ci
        cd = nd
        ci = ni
    pos = size
    cd[pos] = d
    ci[pos] = i
    while pos > 0:
        par = (pos - 1) >> 1
        if _lt(cd[pos], ci[pos], cd[par], ci[par]):
            cd[pos], cd[par] = cd[par], cd[pos]
            ci[pos], ci[par] = ci[par], ci[pos]
            pos = par
        else:
            break
    return cd, ci, size + 1


@njit(cache=True, nogil=True)
def _cq_pop(cd, ci, size):
    d = cd[0]
    i = ci[0]
    size -= 1
    cd[0] = cd[size]
    ci[0] = ci[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        right = left + 1
        top = pos
        if left < size and _lt(cd[left], ci[left], cd[top], ci[top]):
            top = left
        if right < size and _lt(cd[right], ci[right], cd[top], ci[top]):
            top = right
        if top == pos:
            break
        cd[pos], cd[top] = cd[top], cd[pos]
        ci[pos], ci[top] = ci[top], ci[pos]
        pos = top
    return d, i, size


@njit(cache=True, nogil=True)
def pick_unvisited(st, memb, gen, n):
    """Uniform unvisited id, or -1 when every id is marked.

    Rejection sampling is bounded, then a wrap-around scan from a random
    offset guarantees an answer whenever one exists.
    """
    for _ in range(PICK_ATTEMPTS):
        u = rand_below(st, n)
        if memb[u] != gen:
            return u
    off = rand_below(st, n)
    for t in range(n):
        u = off + t
        if u >= n:
            u -= n
        if memb[u] != gen:
            return u
    return -1


@njit(cache=True, nogil=True)
def apg_kernel(mc, data, q, pool, rstart, deg, n, k, m, st, vis, evl, dch, gen,
               out_d, out_i):
    """Restart-amplified baseline: exactly m tries, each seeding a random
    unvisited vertex into the persistent candidate queue and draining it
    best-first with covering-radius pruning."""
    kd = np.empty(k, np.float64)
    ki = np.empty(k, np.int64)
    ksize = 0
    cd = np.empty(64, np.float64)
    ci = np.empty(64, np.int64)
    csize = 0
    nevals = 0
    restarts = 0
    hops = 0
    for _ in range(m):
        restarts += 1
        c = pick_unvisited(st, vis, gen, n)
        if c < 0:
            continue
        vis[c] = gen
        d = dist_to(mc, data, c, q)
        nevals += 1
        cd, ci, csize = _cq_push(cd, ci, csize, d, c)
        ksize = _kq_push(kd, ki, ksize, d, c)
        while csize > 0:
            rb, best, csize = _cq_pop(cd, ci, csize)
            if rb > _kq_cov(kd, ki, ksize):
                break
            hops += 1
            for t in range(deg[best]):
                u = pool[rstart[best] + t]
                if vis[u] == gen:
                    continue
                vis[u] = gen
                du = dist_to(mc, data, u, q)
                nevals += 1
                cd, ci, csize = _cq_push(cd, ci, csize, du, u)
                ksize = _kq_push(kd, ki, ksize, du, u)
    cnt = _kq_sorted_fill(kd, ki, ksize, out_d, out_i)
    return cnt, nevals, restarts, hops, 1


@njit(cache=True, nogil=True)
def apg_star_kernel(mc, data, q, pool, rstart, deg, n, k, sigma, st, vis, evl,
                    dch, gen, out_d, out_i):
    """Best-first drain of a persistent candidate queue with random seeds;
    stops once a batch of sigma tries leaves the covering radius unchanged."""
    kd = np.empty(k, np.float64)
    ki = np.empty(k, np.int64)
    ksize = 0
    cd = np.empty(64, np.float64)
    ci = np.empty(64, np.int64)
    csize = 0
    nevals = 0
    restarts = 0
    hops = 0
    outers = 0
    nvis = 0
    while True:
        outers += 1
        cov_star = _kq_cov(kd, ki, ksize)
        for _ in range(sigma):
            restarts += 1
            c = pick_unvisited(st, vis, gen, n)
            if c < 0:
                continue
            vis[c] = gen
            nvis += 1
            d = dist_to(mc, data, c, q)
            nevals += 1
            cd, ci, csize = _cq_push(cd, ci, csize, d, c)
            ksize = _kq_push(kd, ki, ksize, d, c)
            while csize > 0:
                rb, best, csize = _cq_pop(cd, ci, csize)
                if rb > _kq_cov(kd, ki, ksize):
                    break
                hops += 1
                for t in range(deg[best]):
                    u = pool[rstart[best] + t]
                    if vis[u] == gen:
                        continue
                    vis[u] = gen
                    nvis += 1
                    du = dist_to(mc, data, u, q)
                    nevals += 1
                    cd, ci, csize = _cq_push(cd, ci, csize, du, u)
                    ksize = _kq_push(kd, ki, ksize, du, u)
        if _kq_cov(kd, ki, ksize) == cov_star and (ksize >= k or nvis >= n):
            break
    cnt = _kq_sorted_fill(kd, ki, ksize, out_d, out_i)
    return cnt, nevals, restarts, hops, outers


@njit(cache=True, nogil=True)
def apg_star_r_kernel(mc, data, q, pool, rstart, deg, n, k, sigma, st, vis,
                      evl, dch, gen, out_d, out_i):
    """Random-restart local walks merged into a global queue.

    `vis` marks expansion centers only; the evaluation cache is shared
    across restarts so no distance is ever recomputed.
    """
    rd = np.empty(k, np.float64)
    ri = np.empty(k, np.int64)
    rsize = 0
    sd = np.empty(k, np.float64)
    si = np.empty(k, np.int64)
    nevals = 0
    restarts = 0
    hops = 0
    outers = 0
    nvis = 0
    while True:
        outers += 1
        cov_star = _kq_cov(rd, ri, rsize)
        for _ in range(sigma):
            restarts += 1
            s = pick_unvisited(st, vis, gen, n)
            if s < 0:
                continue
            vis[s] = gen
            nvis += 1
            ssize = 0
            d, nevals = _eval(mc, data, q, s, evl, dch, gen, nevals)
            ssize = _kq_push(sd, si, ssize, d, s)
            while s >= 0:
                hops += 1
                for t in range(deg[s]):
                    u = pool[rstart[s] + t]
                    if evl[u] == gen:
                        continue
                    du, nevals = _eval(mc, data, q, u, evl, dch, gen, nevals)
                    ssize = _kq_push(sd, si, ssize, du, u)
                nxt = -1
                bd = np.inf
                for t in range(ssize):
                    v = si[t]
                    if vis[v] == gen:
                        continue
                    if nxt < 0 or _lt(sd[t], v, bd, nxt):
                        bd = sd[t]
                        nxt = v
                s = nxt
                if s >= 0:
                    vis[s] = gen
                    nvis += 1
            for t in range(ssize):
                rsize = _kq_push_dedup(rd, ri, rsize, sd[t], si[t])
        if _kq_cov(rd, ri, rsize) == cov_star and (rsize >= k or nvis >= n):
            break
    cnt = _kq_sorted_fill(rd, ri, rsize, out_d, out_i)
    return cnt, nevals, restarts, hops, outers


@njit(cache=True, nogil=True)
def beam_kernel(mc, data, q, pool, rstart, deg, n, k, sigma, b, st, vis, evl,
                dch, gen, out_d, out_i):
    """Fixed-width frontier expansion; an emptied beam is reseeded with a
    random unvisited vertex at the top of each step."""
    rd = np.empty(k, np.float64)
    ri = np.empty(k, np.int64)
    rsize = 0
    bd_ = np.empty(b, np.float64)
    bi_ = np.empty(b, np.int64)
    bsize = 0
    nd_ = np.empty(b, np.float64)
    ni_ = np.empty(b, np.int64)
    nevals = 0
    restarts = 0
    hops = 0
    outers = 0
    nvis = 0
    for _ in range(b):
        u = pick_unvisited(st, vis, gen, n)
        if u < 0:
            break
        vis[u] = gen
        nvis += 1
        d = dist_to(mc, data, u, q)
        nevals += 1
        rsize = _kq_push(rd, ri, rsize, d, u)
        bsize = _kq_push(bd_, bi_, bsize, d, u)
    while True:
        outers += 1
        cov_star = _kq_cov(rd, ri, rsize)
        for _ in range(sigma):
            restarts += 1
            if bsize == 0:
                w = pick_unvisited(st, vis, gen, n)
                if w >= 0:
                    vis[w] = gen
                    nvis += 1
                    d = dist_to(mc, data, w, q)
                    nevals += 1
                    rsize = _kq_push(rd, ri, rsize, d, w)
                    bsize = _kq_push(bd_, bi_, bsize, d, w)
            nsize = 0
            for t in range(bsize):
                c = bi_[t]
                hops += 1
                for s in range(deg[c]):
                    u = pool[rstart[c] + s]
                    if vis[u] == gen:
                        continue
                    vis[u] = gen
                    nvis += 1
                    du = dist_to(mc, data, u, q)
                    nevals += 1
                    rsize = _kq_push(rd, ri, rsize, du, u)
                    nsize = _kq_push(nd_, ni_, nsize, du, u)
            bd_, nd_ = nd_, bd_
            bi_, ni_ = ni_, bi_
            bsize = nsize
        if _kq_cov(rd, ri, rsize) == cov_star and (rsize >= k or nvis >= n):
            break
    cnt = _kq_sorted_fill(rd, ri, rsize, out_d, out_i)
    return cnt, nevals, restarts, hops, outers


@njit(cache=True, nogil=True)
def exact_scan_kernel(mc, data, q, n, k, out_d, out_i):
    """Full-scan k nearest via a bounded heap; the ground-truth oracle."""
    cap = k if k < n else n
    kd = np.empty(cap, np.float64)
    ki = np.empty(cap, np.int64)
    size = 0
    for v in range(n):
        d = dist_to(mc, data, v, q)
        size = _kq_push(kd, ki, size, d, v)
    return _kq_sorted_fill(kd, ki, size, out_d, out_i)


@njit(cache=True, nogil=True)
def connected_kernel(pool, rstart, deg, n):
    """Breadth-first reachability check from vertex 0."""
    if n <= 1:
        return True
    seen = np.zeros(n, np.uint8)
    stack = np.empty(n, np.int64)
    stack[0] = 0
    seen[0] = 1
    top = 1
    cnt = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for t in range(deg[v]):
            u = pool[rstart[v] + t]
            if seen[u] == 0:
                seen[u] = 1
                cnt += 1
                stack[top] = u
                top += 1
    return cnt == n


@njit(cache=True, nogil=True)
def symmetric_kernel(pool, rstart, deg, n):
    """True iff every stored edge direction has its reverse."""
    for v in range(n):
        for t in range(deg[v]):
            u = pool[rstart[v] + t]
            found = False
            for s in range(deg[u]):
                if pool[rstart[u] + s] == v:
                    found = True
                    break
            if not found:
                return False
    return True
