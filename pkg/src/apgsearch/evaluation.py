"""Exact-search oracle, recall, and benchmark accounting.

Recall is measured against exhaustive search and macro-averaged over the
query set.  Query throughput is wall-clock only over the timed query
loop; index construction and ground-truth computation are reported
separately and never counted.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import GroundTruth
from .graph import (VARIANT_APG, VARIANT_BEAM, SearchParams, build)
from .search import run_query


def exact_knn(dataset, q, k):
    """The k smallest (distance, id) pairs by full scan."""
    if dataset.n < 1:
        raise ValueError("exact_knn over an empty dataset")
    if k < 1:
        raise ValueError("k must be >= 1")
    qp = dataset.query_payload(q)
    cap = min(k, dataset.n)
    out_d = np.empty(cap, dtype=np.float64)
    out_i = np.empty(cap, dtype=np.int64)
    cnt = kernels.exact_scan_kernel(
        dataset.metric_code, dataset.payload(), qp, dataset.n, k, out_d, out_i
    )
    return [(float(out_d[t]), int(out_i[t])) for t in range(cnt)]


def make_ground_truth(dataset, queries, k, progress=None):
    """Exact k-NN ids and distances for every query, sorted by (dist, id).

    Distances are rounded to single precision for storage, and rows are
    re-sorted on the rounded values so written files satisfy the format's
    ordering requirement.
    """
    if k > dataset.n:
        raise ValueError(f"k={k} exceeds database size n={dataset.n}")
    ids = np.empty((queries.n, k), dtype=np.int64)
    dists = np.empty((queries.n, k), dtype=np.float32)
    for qi in range(queries.n):
        pairs = exact_knn(dataset, queries.item(qi), k)
        rec = sorted((np.float32(d), i) for d, i in pairs)
        for t, (d, i) in enumerate(rec):
            ids[qi, t] = i
            dists[qi, t] = d
        if progress is not None and (qi + 1) % 64 == 0:
            progress(qi + 1, queries.n)
    return GroundTruth(ids=ids, dists=dists)


def _result_ids(result):
    pairs = result.pairs if hasattr(result, "pairs") else result
    return {int(i) for _, i in pairs}


def recall(approx, exact):
    """Fraction of the exact k nearest present in the approximate result."""
    if hasattr(exact, "__len__") and len(exact) == 0:
        raise ValueError("exact result set is empty")
    exact_ids = {int(p[1]) if isinstance(p, tuple) else int(p) for p in exact}
    return len(_result_ids(approx) & exact_ids) / len(exact_ids)


def macro_recall(per_query):
    """Arithmetic mean of per-query recalls."""
    vals = list(per_query)
    if not vals:
        raise ValueError("macro_recall of an empty sequence")
    return sum(vals) / len(vals)


def queries_per_second(num_queries, elapsed_seconds):
    if elapsed_seconds <= 0:
        raise ValueError("elapsed time must be positive")
    return num_queries / elapsed_seconds


@dataclass
class BenchConfig:
    """One benchmark row: a search configuration plus its graph degree."""

    params: SearchParams
    n_links: int

    @property
    def name(self):
        p = self.params
        if p.variant == VARIANT_APG:
            return f"apg m={p.m} N={self.n_links}"
        if p.variant == VARIANT_BEAM:
            return f"beam b={p.beam} N={self.n_links}"
        return f"{p.variant} N={self.n_links}"


@dataclass
class BenchRow:
    name: str
    recall: float
    qps: float
    mean_dist_evals: float
    mean_hops: float
    build_seconds: float


@dataclass
class BenchReport:
    rows: list

    CSV_HEADER = "name,recall,qps,mean_dist_evals,mean_hops"

    def to_csv(self):
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.name},{r.recall:.6f},{r.qps:.2f},"
                f"{r.mean_dist_evals:.2f},{r.mean_hops:.2f}"
            )
        return "\n".join(lines) + "\n"

    def to_table(self):
        header = ("configuration", "recall", "q/s", "dist evals", "hops", "build s")
        body = [
            (r.name, f"{r.recall:.4f}", f"{r.qps:.1f}",
             f"{r.mean_dist_evals:.1f}", f"{r.mean_hops:.1f}",
             f"{r.build_seconds:.1f}")
            for r in self.rows
        ]
        widths = [max(len(h), *(len(row[c]) for row in body)) if body else len(h)
                  for c, h in enumerate(header)]
        def fmt(row):
            return "  ".join(cell.ljust(widths[c]) if c == 0 else cell.rjust(widths[c])
                             for c, cell in enumerate(row))
        lines = [fmt(header), fmt(tuple("-" * w for w in widths))]
        lines.extend(fmt(row) for row in body)
        return "\n".join(lines) + "\n"


def run_queries(graph, queries, gt, k, params, seed=0, parallel=False):
    """Timed query loop; returns (mean recall, qps, mean evals, mean hops).

    Single worker by default.  With parallel=True queries run on one
    thread per core (the graph is read-only), which changes the meaning
    of the throughput number.
    """
    if gt.k != k:
        raise ValueError(f"ground truth has k={gt.k}, requested k={k}")
    if gt.num_queries != queries.n:
        raise ValueError(
            f"ground truth covers {gt.num_queries} queries, got {queries.n}"
        )
    nq = queries.n
    if parallel:
        import os

        workers = min(os.cpu_count() or 1, nq) or 1
        chunks = [range(w, nq, workers) for w in range(workers)]

        def _run_chunk(idx):
            ws = graph.new_workspace()
            return [
                (qi, run_query(graph, queries.item(qi), k, params,
                               seed=seed, stream=qi, ws=ws))
                for qi in idx
            ]

        t0 = time.perf_counter()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, chunks))
        elapsed = time.perf_counter() - t0
        results = [None] * nq
        for part in parts:
            for qi, res in part:
                results[qi] = res
    else:
        ws = graph.new_workspace()
        t0 = time.perf_counter()
        results = [
            run_query(graph, queries.item(qi), k, params,
                      seed=seed, stream=qi, ws=ws)
            for qi in range(nq)
        ]
        elapsed = time.perf_counter() - t0
    recalls = [recall(results[qi], gt.ids[qi]) for qi in range(nq)]
    mean_evals = sum(r.stats.distance_evaluations for r in results) / nq
    mean_hops = sum(r.stats.hops for r in results) / nq
    return (
        macro_recall(recalls),
        queries_per_second(nq, max(elapsed, 1e-9)),
        mean_evals,
        mean_hops,
        results,
    )


def run_bench(dataset, queries, gt, configs, k, seed=0, parallel=False,
              progress=None):
    """Build and query every configuration; returns a BenchReport."""
    rows = []
    for cfg in configs:
        t0 = time.perf_counter()
        graph = build(dataset, params=cfg.params, n_links=cfg.n_links, seed=seed)
        build_s = time.perf_counter() - t0
        mean_rec, qps, mean_evals, mean_hops, _ = run_queries(
            graph, queries, gt, k, cfg.params, seed=seed, parallel=parallel
        )
        rows.append(BenchRow(
            name=cfg.name,
            recall=mean_rec,
            qps=qps,
            mean_dist_evals=mean_evals,
            mean_hops=mean_hops,
            build_seconds=build_s,
        ))
        if progress is not None:
            progress(cfg.name, rows[-1])
    return BenchReport(rows=rows)


def default_grid(sigma=4):
    """The benchmark grid used when no single configuration is requested:
    degrees 8/16/32 crossed with the per-variant capacity knobs."""
    sizes = (8, 16, 32)
    configs = []
    for n_links in sizes:
        for m in sizes:
            configs.append(BenchConfig(
                SearchParams(variant="apg", sigma=sigma, m=m), n_links))
    for n_links in sizes:
        configs.append(BenchConfig(
            SearchParams(variant="apg-star", sigma=sigma), n_links))
    for n_links in sizes:
        configs.append(BenchConfig(
            SearchParams(variant="apg-star-r", sigma=sigma), n_links))
    for n_links in sizes:
        for b in sizes:
            configs.append(BenchConfig(
                SearchParams(variant="beam", sigma=sigma, beam=b), n_links))
    return configs
