"""Query algorithms over a search graph.

Four algorithms share one contract: explore the graph from random entry
points, evaluate each item's distance to the query at most once, and
return the k best (distance, id) pairs together with search statistics.

* apg: the restart-amplified baseline; exactly m tries, each seeding a
  random vertex into a persistent best-first candidate queue.
* apg-star: the same exploration with the try budget chosen on-line;
  stops when a batch of sigma tries leaves the covering radius unchanged.
* apg-star-r: random-restart local walks merged into a global result.
* beam: fixed-width frontier expansion with on-line restarts.

Every public function runs the compiled kernels by default.  The
`fast=False` path is an independent pure-Python rendition kept
step-for-step aligned with the kernels (same RNG stream, same
tie-breaking); the two produce identical results and statistics.
"""

import math
from dataclasses import dataclass, field

from . import kernels, rng
from .graph import (VARIANT_APG, VARIANT_APG_STAR, VARIANT_APG_STAR_R,
                    VARIANT_BEAM, SearchParams)
from .queues import CandidateQueue, KnnQueue, VisitedSet


@dataclass
class SearchStats:
    """Counters accumulated while answering one query."""

    distance_evaluations: int = 0
    restarts: int = 0
    hops: int = 0
    outer_iterations: int = 0


@dataclass
class SearchResult:
    pairs: list
    stats: SearchStats


class QueryContext:
    """Per-query working state for the pure-Python algorithms.

    Wraps the visited set, the distance cache (each database item is
    evaluated at most once), the statistics, and the seeded random
    stream.  `cov_trace` records the covering radius after every outer
    iteration.
    """

    def __init__(self, graph, q, seed=0, stream=0):
        self.graph = graph
        self.visited = VisitedSet()
        self.dist_cache = {}
        self.stats = SearchStats()
        self.state = rng.new_state(seed, stream)
        self.cov_trace = []
        self._mc = graph.store.metric_code
        self._data = graph.store.payload()
        self._qp = graph.store.query_payload(q)

    def eval(self, item_id):
        """Cached distance from the query to one item; marks it visited."""
        d = self.dist_cache.get(item_id)
        if d is None:
            d = float(kernels.dist_to(self._mc, self._data, item_id, self._qp))
            self.dist_cache[item_id] = d
            self.stats.distance_evaluations += 1
        self.visited.add(item_id)
        return d


def _pick_unvisited(state, visited, n):
    """Mirror of the kernel sampler: bounded rejection, then a wrap-around
    scan from a random offset; -1 when nothing is left."""
    for _ in range(kernels.PICK_ATTEMPTS):
        u = int(rng.rand_below(state, n))
        if u not in visited:
            return u
    off = int(rng.rand_below(state, n))
    for t in range(n):
        u = off + t
        if u >= n:
            u -= n
        if u not in visited:
            return u
    return -1


def _check(graph, k):
    if graph.store.n < 1:
        raise ValueError("search over an empty graph")
    if k < 1:
        raise ValueError("k must be >= 1")


def _kernel_search(graph, q, k, params, seed, stream, ws=None):
    qp = graph.store.query_payload(q)
    out_d, out_i, cnt, (nevals, restarts, hops, outers) = graph._kernel_query(
        qp, k, params, seed=seed, stream=stream, ws=ws
    )
    pairs = [(float(out_d[t]), int(out_i[t])) for t in range(cnt)]
    stats = SearchStats(
        distance_evaluations=int(nevals),
        restarts=int(restarts),
        hops=int(hops),
        outer_iterations=int(outers),
    )
    return SearchResult(pairs=pairs, stats=stats)


# --- pure-Python reference algorithms ---


def _apg_py(graph, q, k, m, seed, stream):
    n = graph.store.n
    ctx = QueryContext(graph, q, seed, stream)
    res = KnnQueue(k)
    candidates = CandidateQueue()
    for _ in range(m):
        ctx.stats.restarts += 1
        c = _pick_unvisited(ctx.state, ctx.visited, n)
        if c < 0:
            continue
        d = ctx.eval(c)
        candidates.push(d, c)
        res.push(d, c)
        while len(candidates) > 0:
            rb, best = candidates.pop_nearest()
            if rb > res.covering_radius():
                break
            ctx.stats.hops += 1
            for u in graph.neighbors(best):
                if u in ctx.visited:
                    continue
                du = ctx.eval(u)
                candidates.push(du, u)
                res.push(du, u)
    ctx.stats.outer_iterations = 1
    return SearchResult(pairs=res.items(), stats=ctx.stats), ctx


def _apg_star_py(graph, q, k, sigma, seed, stream):
    n = graph.store.n
    ctx = QueryContext(graph, q, seed, stream)
    res = KnnQueue(k)
    candidates = CandidateQueue()
    while True:
        ctx.stats.outer_iterations += 1
        cov_star = res.covering_radius()
        for _ in range(sigma):
            ctx.stats.restarts += 1
            c = _pick_unvisited(ctx.state, ctx.visited, n)
            if c < 0:
                continue
            d = ctx.eval(c)
            candidates.push(d, c)
            res.push(d, c)
            while len(candidates) > 0:
                rb, best = candidates.pop_nearest()
                if rb > res.covering_radius():
                    break
                ctx.stats.hops += 1
                for u in graph.neighbors(best):
                    if u in ctx.visited:
                        continue
                    du = ctx.eval(u)
                    candidates.push(du, u)
                    res.push(du, u)
        cov = res.covering_radius()
        ctx.cov_trace.append(cov)
        if cov == cov_star and (res.full or len(ctx.visited) >= n):
            break
    return SearchResult(pairs=res.items(), stats=ctx.stats), ctx


def _apg_star_r_py(graph, q, k, sigma, seed, stream):
    n = graph.store.n
    ctx = QueryContext(graph, q, seed, stream)
    res = KnnQueue(k)
    centers = VisitedSet()  # restart starts and walk steps, not mere evaluations
    while True:
        ctx.stats.outer_iterations += 1
        cov_star = res.covering_radius()
        for _ in range(sigma):
            ctx.stats.restarts += 1
            s = _pick_unvisited(ctx.state, centers, n)
            if s < 0:
                continue
            centers.add(s)
            res_star = KnnQueue(k)
            res_star.push(ctx.eval(s), s)
            while s >= 0:
                ctx.stats.hops += 1
                for u in graph.neighbors(s):
                    if u in ctx.dist_cache:
                        continue
                    res_star.push(ctx.eval(u), u)
                nxt = -1
                bd = math.inf
                for dt, vt in res_star.items():
                    if vt in centers:
                        continue
                    if nxt < 0 or (dt, vt) < (bd, nxt):
                        bd = dt
                        nxt = vt
                s = nxt
                if s >= 0:
                    centers.add(s)
            res.merge_from(res_star)
        cov = res.covering_radius()
        ctx.cov_trace.append(cov)
        if cov == cov_star and (res.full or len(centers) >= n):
            break
    return SearchResult(pairs=res.items(), stats=ctx.stats), ctx


def _beam_py(graph, q, k, sigma, b, seed, stream):
    n = graph.store.n
    ctx = QueryContext(graph, q, seed, stream)
    res = KnnQueue(k)
    beam = KnnQueue(b)
    for _ in range(b):
        u = _pick_unvisited(ctx.state, ctx.visited, n)
        if u < 0:
            break
        d = ctx.eval(u)
        res.push(d, u)
        beam.push(d, u)
    while True:
        ctx.stats.outer_iterations += 1
        cov_star = res.covering_radius()
        for _ in range(sigma):
            ctx.stats.restarts += 1
            if len(beam) == 0:
                w = _pick_unvisited(ctx.state, ctx.visited, n)
                if w >= 0:
                    d = ctx.eval(w)
                    res.push(d, w)
                    beam.push(d, w)
            beam_star = KnnQueue(b)
            for _, c in beam.items():
                ctx.stats.hops += 1
                for u in graph.neighbors(c):
                    if u in ctx.visited:
                        continue
                    du = ctx.eval(u)
                    res.push(du, u)
                    beam_star.push(du, u)
            beam = beam_star
        cov = res.covering_radius()
        ctx.cov_trace.append(cov)
        if cov == cov_star and (res.full or len(ctx.visited) >= n):
            break
    return SearchResult(pairs=res.items(), stats=ctx.stats), ctx


# --- public operations ---


def search_apg(graph, q, k, m=16, seed=0, stream=0, fast=True):
    """Baseline search amplified with a fixed budget of m restarts."""
    _check(graph, k)
    if m < 1:
        raise ValueError("m must be >= 1")
    if fast:
        params = SearchParams(variant=VARIANT_APG, m=m)
        return _kernel_search(graph, q, k, params, seed, stream)
    return _apg_py(graph, q, k, m, seed, stream)[0]


def search_apg_star(graph, q, k, sigma=4, seed=0, stream=0, fast=True):
    """Best-first search that stops once the covering radius settles."""
    _check(graph, k)
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    if fast:
        params = SearchParams(variant=VARIANT_APG_STAR, sigma=sigma)
        return _kernel_search(graph, q, k, params, seed, stream)
    return _apg_star_py(graph, q, k, sigma, seed, stream)[0]


def search_apg_star_r(graph, q, k, sigma=4, seed=0, stream=0, fast=True):
    """Random-restart local walks merged into one result queue."""
    _check(graph, k)
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    if fast:
        params = SearchParams(variant=VARIANT_APG_STAR_R, sigma=sigma)
        return _kernel_search(graph, q, k, params, seed, stream)
    return _apg_star_r_py(graph, q, k, sigma, seed, stream)[0]


def search_beam(graph, q, k, sigma=4, beam=16, seed=0, stream=0, fast=True):
    """Beam search over the graph with beam width b."""
    _check(graph, k)
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if fast:
        params = SearchParams(variant=VARIANT_BEAM, sigma=sigma, beam=beam)
        return _kernel_search(graph, q, k, params, seed, stream)
    return _beam_py(graph, q, k, sigma, beam, seed, stream)[0]


def run_query(graph, q, k, params, seed=0, stream=0, fast=True, ws=None):
    """Dispatch one query according to params.variant."""
    _check(graph, k)
    if fast:
        return _kernel_search(graph, q, k, params, seed, stream, ws=ws)
    if params.variant == VARIANT_APG:
        return _apg_py(graph, q, k, params.m, seed, stream)[0]
    if params.variant == VARIANT_APG_STAR:
        return _apg_star_py(graph, q, k, params.sigma, seed, stream)[0]
    if params.variant == VARIANT_APG_STAR_R:
        return _apg_star_r_py(graph, q, k, params.sigma, seed, stream)[0]
    return _beam_py(graph, q, k, params.sigma, params.beam, seed, stream)[0]


def estimate_restarts(p, p_star):
    """Independent tries needed to lift success probability p to p_star."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if not 0.0 < p_star < 1.0:
        raise ValueError(f"p_star must be in (0, 1), got {p_star}")
    ratio = math.log1p(-p_star) / math.log1p(-p)
    return max(1, math.ceil(ratio - 1e-9))
