"""The search graph: item storage, adjacency, incremental construction.

Each inserted item is linked bidirectionally to its (approximate) nearest
neighbors among the items already indexed, found by running the graph's
own configured search algorithm over the partial graph.  Forward links
are capped at n_links per insertion; reverse links are unbounded.

Adjacency lives in one flat int32 pool with per-vertex (start, degree,
capacity) bookkeeping; rows relocate to the pool tail when they outgrow
their slot, preserving insertion order of links.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .data import DatasetHandle, FormatError

VARIANT_APG = "apg"
VARIANT_APG_STAR = "apg-star"
VARIANT_APG_STAR_R = "apg-star-r"
VARIANT_BEAM = "beam"

VARIANTS = (VARIANT_APG, VARIANT_APG_STAR, VARIANT_APG_STAR_R, VARIANT_BEAM)

_VARIANT_CODE = {name: code for code, name in enumerate(VARIANTS)}

_GRAPH_MAGIC = b"APGX"
_GRAPH_VERSION = 1


@dataclass
class SearchParams:
    """Algorithm selection shared by construction and querying.

    sigma is the minimum batch of tries between stopping checks; m is the
    restart count of the greedy baseline; beam is the frontier width of
    beam search.  Only the parameter relevant to the variant is used.
    """

    variant: str = VARIANT_APG_STAR
    sigma: int = 4
    m: int = 16
    beam: int = 16

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.beam < 1:
            raise ValueError("beam must be >= 1")


@dataclass
class GraphStats:
    n: int
    min_degree: int
    mean_degree: float
    max_degree: int
    connected: bool


class Workspace:
    """Reusable per-query scratch state (visited marks, distance cache).

    One workspace serves one in-flight query at a time; concurrent queries
    against a shared graph each need their own.
    """

    def __init__(self, n=0):
        self.gen = 0
        self._alloc(n)

    def _alloc(self, n):
        self.vis = np.zeros(n, dtype=np.int32)
        self.evl = np.zeros(n, dtype=np.int32)
        self.dch = np.zeros(n, dtype=np.float64)

    def next_query(self, n):
        """Bump the generation counter and return scratch arrays for n items."""
        if self.vis.shape[0] < n:
            self._alloc(max(n, 2 * self.vis.shape[0]))
        if self.gen >= 2**31 - 1:
            self._alloc(self.vis.shape[0])
            self.gen = 0
        self.gen += 1
        return self.vis, self.evl, self.dch, self.gen


class SearchGraph:
    """Database items plus per-item neighbor lists."""

    def __init__(self, kind="dense", params=None, n_links=16, seed=0, dim=None):
        if n_links < 1:
            raise ValueError("n_links must be >= 1")
        self.store = DatasetHandle(kind, dim=dim)
        self.params = params if params is not None else SearchParams()
        self.n_links = n_links
        self.seed = seed
        self._pool = np.empty(1024, dtype=np.int32)
        self._rstart = np.zeros(16, dtype=np.int64)
        self._deg = np.zeros(16, dtype=np.int32)
        self._rowcap = np.zeros(16, dtype=np.int32)
        self._tail = 0
        self._ws = None

    @property
    def n(self):
        return self.store.n

    def __len__(self):
        return self.store.n

    # --- adjacency plumbing ---

    def _grow_pool(self, need):
        if need <= self._pool.shape[0]:
            return
        cap = max(need, 2 * self._pool.shape[0])
        pool = np.empty(cap, dtype=np.int32)
        pool[:self._tail] = self._pool[:self._tail]
        self._pool = pool

    def _new_row(self, j, cap):
        if j >= self._rstart.shape[0]:
            rows = max(j + 1, 2 * self._rstart.shape[0])
            for name in ("_rstart", "_deg", "_rowcap"):
                old = getattr(self, name)
                arr = np.zeros(rows, dtype=old.dtype)
                arr[:old.shape[0]] = old
                setattr(self, name, arr)
        self._grow_pool(self._tail + cap)
        self._rstart[j] = self._tail
        self._rowcap[j] = cap
        self._deg[j] = 0
        self._tail += cap

    def _append_link(self, u, v):
        if self._deg[u] == self._rowcap[u]:
            cap = max(4, 2 * int(self._rowcap[u]))
            start = self._tail
            self._grow_pool(start + cap)
            d = int(self._deg[u])
            self._pool[start:start + d] = self._pool[self._rstart[u]:self._rstart[u] + d]
            self._rstart[u] = start
            self._rowcap[u] = cap
            self._tail = start + cap
        self._pool[self._rstart[u] + self._deg[u]] = v
        self._deg[u] += 1

    def _link(self, a, b):
        self._append_link(a, b)
        self._append_link(b, a)

    def compact(self):
        """Repack adjacency rows contiguously, dropping relocation slack."""
        n = self.store.n
        total = int(self._deg[:n].sum())
        pool = np.empty(max(total, 1), dtype=np.int32)
        rstart = np.zeros(max(n, 1), dtype=np.int64)
        tail = 0
        for v in range(n):
            d = int(self._deg[v])
            pool[tail:tail + d] = self._pool[self._rstart[v]:self._rstart[v] + d]
            rstart[v] = tail
            tail += d
        self._pool = pool
        self._rstart = rstart
        self._rowcap = self._deg[:n].copy()
        self._deg = self._deg[:n].copy()
        self._tail = tail

    # --- construction ---

    def insert(self, item):
        """Index one item; returns its id.

        The first n_links items are linked to every prior item; afterwards
        the configured search algorithm finds the neighbors to link.
        """
        j = self.store.append(item)
        row_cap = max(8, self.n_links + 4)
        self._new_row(j, row_cap)
        if j == 0:
            return 0
        if j <= self.n_links:
            for u in range(j):
                self._link(j, u)
            return j
        qp = self.store.query_payload(self.store.item(j))
        out_d, out_i, cnt, _ = self._kernel_query(
            qp, self.n_links, self.params, n=j, seed=self.seed, stream=j
        )
        for t in range(cnt):
            self._link(j, int(out_i[t]))
        return j

    def neighbors(self, item_id):
        """Neighbor ids of one vertex, in link insertion order."""
        if not 0 <= item_id < self.store.n:
            raise ValueError(f"vertex {item_id} out of range [0, {self.store.n})")
        s = self._rstart[item_id]
        return self._pool[s:s + self._deg[item_id]].tolist()

    def stats(self):
        n = self.store.n
        if n == 0:
            return GraphStats(0, 0, 0.0, 0, True)
        deg = self._deg[:n]
        return GraphStats(
            n=n,
            min_degree=int(deg.min()),
            mean_degree=float(deg.mean()),
            max_degree=int(deg.max()),
            connected=bool(
                kernels.connected_kernel(self._pool, self._rstart, self._deg, n)
            ),
        )

    # --- kernel dispatch ---

    def _workspace(self):
        if self._ws is None:
            self._ws = Workspace(self.store.n)
        return self._ws

    def new_workspace(self):
        """Scratch state for one more concurrent query stream."""
        return Workspace(self.store.n)

    def _kernel_query(self, qp, k, params, n=None, seed=0, stream=0, ws=None):
        """Run the compiled search; returns (out_d, out_i, count, stats)."""
        if n is None:
            n = self.store.n
        if n < 1:
            raise ValueError("search over an empty graph")
        if k < 1:
            raise ValueError("k must be >= 1")
        if ws is None:
            ws = self._workspace()
        vis, evl, dch, gen = ws.next_query(n)
        st = rng.new_state(seed, stream)
        out_d = np.empty(k, dtype=np.float64)
        out_i = np.empty(k, dtype=np.int64)
        mc = self.store.metric_code
        data = self.store.payload()
        variant = params.variant
        if variant == VARIANT_APG:
            ret = kernels.apg_kernel(
                mc, data, qp, self._pool, self._rstart, self._deg, n, k,
                params.m, st, vis, evl, dch, gen, out_d, out_i)
        elif variant == VARIANT_APG_STAR:
            ret = kernels.apg_star_kernel(
                mc, data, qp, self._pool, self._rstart, self._deg, n, k,
                params.sigma, st, vis, evl, dch, gen, out_d, out_i)
        elif variant == VARIANT_APG_STAR_R:
            ret = kernels.apg_star_r_kernel(
                mc, data, qp, self._pool, self._rstart, self._deg, n, k,
                params.sigma, st, vis, evl, dch, gen, out_d, out_i)
        else:
            ret = kernels.beam_kernel(
                mc, data, qp, self._pool, self._rstart, self._deg, n, k,
                params.sigma, params.beam, st, vis, evl, dch, gen, out_d, out_i)
        cnt = ret[0]
        return out_d, out_i, cnt, ret[1:]


def build(dataset, params=None, n_links=16, seed=0, progress=None):
    """Index a dataset in storage order; deterministic given the seed."""
    if dataset.n < 1:
        raise ValueError("cannot build from an empty dataset")
    graph = SearchGraph(
        dataset.kind, params=params, n_links=n_links, seed=seed, dim=dataset.dim
    )
    for i in range(dataset.n):
        graph.insert(dataset.item(i))
        if progress is not None and (i + 1) % 8192 == 0:
            progress(i + 1, dataset.n)
    graph.compact()
    return graph


def save_graph(graph, path):
    """Write adjacency to the binary graph format (items not included)."""
    n = graph.store.n
    with open(path, "wb") as fh:
        fh.write(struct.pack(
            "<4sIIBQ",
            _GRAPH_MAGIC,
            _GRAPH_VERSION,
            graph.n_links,
            _VARIANT_CODE[graph.params.variant],
            n,
        ))
        for v in range(n):
            d = int(graph._deg[v])
            row = graph._pool[graph._rstart[v]:graph._rstart[v] + d]
            fh.write(struct.pack("<I", d))
            fh.write(row.astype("<u4").tobytes())


def load_graph(path, dataset, sigma=4, m=16, beam=16):
    """Read a graph file and attach its companion dataset."""
    with open(path, "rb") as fh:
        buf = fh.read()
    header = struct.calcsize("<4sIIBQ")
    if len(buf) < header:
        raise FormatError(f"{path}: truncated header ({len(buf)} bytes)")
    magic, version, n_links, variant_code, n = struct.unpack_from("<4sIIBQ", buf, 0)
    if magic != _GRAPH_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if version != _GRAPH_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if variant_code >= len(VARIANTS):
        raise FormatError(f"{path}: unknown variant code {variant_code}")
    if dataset.n != n:
        raise ValueError(
            f"dataset has {dataset.n} items but graph indexes {n}"
        )
    params = SearchParams(
        variant=VARIANTS[variant_code], sigma=sigma, m=m, beam=beam
    )
    graph = SearchGraph(dataset.kind, params=params, n_links=n_links, dim=dataset.dim)
    graph.store = dataset
    rows = []
    offset = header
    for v in range(n):
        if offset + 4 > len(buf):
            raise FormatError(f"{path}: truncated at vertex {v} (byte {offset})")
        (d,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        end = offset + 4 * d
        if end > len(buf):
            raise FormatError(f"{path}: truncated row for vertex {v} (byte {offset})")
        row = np.frombuffer(buf, dtype="<u4", count=d, offset=offset)
        if d and row.max() >= n:
            raise FormatError(f"{path}: neighbor id out of range at vertex {v}")
        rows.append(row.astype(np.int32))
        offset = end
    if offset != len(buf):
        raise FormatError(f"{path}: {len(buf) - offset} trailing bytes")
    total = sum(r.shape[0] for r in rows)
    graph._pool = np.empty(max(total, 1), dtype=np.int32)
    graph._rstart = np.zeros(max(n, 1), dtype=np.int64)
    graph._deg = np.zeros(max(n, 1), dtype=np.int32)
    graph._rowcap = np.zeros(max(n, 1), dtype=np.int32)
    tail = 0
    for v, row in enumerate(rows):
        d = row.shape[0]
        graph._pool[tail:tail + d] = row
        graph._rstart[v] = tail
        graph._deg[v] = d
        graph._rowcap[v] = d
        tail += d
    graph._tail = tail
    return graph
