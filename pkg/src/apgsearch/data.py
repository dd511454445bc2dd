"""Dataset storage, synthetic generation, and bit-exact file formats.

A DatasetHandle owns the items of one database in flat, kernel-ready
arrays and knows its metric.  Handles are append-only: loaders build them
in bulk, incremental indexing appends one item at a time.

File formats (all little-endian):
  dense   "RVC1" | dim u32 | count u64 | count*dim float32 row-major
  gt      "GT01" | k u32 | count u64 | per query k * (id u32, dist f32)
  strings UTF-8 text, one item per line, empty lines skipped
  sparse  text, one vector per line of space-separated "termid:weight"
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import metrics
from .kernels import METRIC_ANGLE, METRIC_L2, METRIC_LEVENSHTEIN

DENSE = "dense"
STRING = "string"
SPARSE = "sparse"

KINDS = (DENSE, STRING, SPARSE)

_METRIC_CODE = {DENSE: METRIC_L2, STRING: METRIC_LEVENSHTEIN, SPARSE: METRIC_ANGLE}
_METRIC_NAME = {DENSE: metrics.L2, STRING: metrics.LEVENSHTEIN, SPARSE: metrics.ANGLE}

_EMPTY_VECS = np.empty((0, 0), dtype=np.float32)
_EMPTY_F32 = np.empty(0, dtype=np.float32)
_EMPTY_I32 = np.empty(0, dtype=np.int32)
_EMPTY_I64 = np.empty(0, dtype=np.int64)
_EMPTY_F64 = np.empty(0, dtype=np.float64)
_ZERO_I64 = np.zeros(1, dtype=np.int64)


class FormatError(Exception):
    """A data file violates its declared layout."""


def _grow(arr, need):
    cap = arr.shape[0]
    if need <= cap:
        return arr
    new_cap = max(need, 2 * cap, 16)
    out = np.empty((new_cap,) + arr.shape[1:], dtype=arr.dtype)
    out[:cap] = arr
    return out


class DatasetHandle:
    """Typed access to a dense, string, or sparse database and its metric."""

    def __init__(self, kind, dim=None):
        if kind not in KINDS:
            raise ValueError(f"unknown dataset kind {kind!r}")
        self.kind = kind
        self.n = 0
        self.dim = dim if kind == DENSE else None
        if kind == DENSE:
            self._vecs = _EMPTY_VECS
        elif kind == STRING:
            self._items = []
            self._codes = np.empty(0, dtype=np.int32)
            self._offs = np.zeros(1, dtype=np.int64)
        else:
            self._sp_ids = np.empty(0, dtype=np.int64)
            self._sp_wts = np.empty(0, dtype=np.float32)
            self._sp_ptr = np.zeros(1, dtype=np.int64)
            self._sp_norms = np.empty(0, dtype=np.float64)

    # --- constructors ---

    @classmethod
    def from_dense(cls, array):
        arr = np.ascontiguousarray(array, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError("dense data must be a 2-d array")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("dense data must be non-empty")
        if not np.isfinite(arr).all():
            raise ValueError("dense data contains non-finite coordinates")
        handle = cls(DENSE, dim=arr.shape[1])
        handle._vecs = arr
        handle.n = arr.shape[0]
        return handle

    @classmethod
    def from_strings(cls, items):
        handle = cls(STRING)
        for text in items:
            handle.append(text)
        return handle

    @classmethod
    def from_sparse(cls, vectors):
        handle = cls(SPARSE)
        for entries in vectors:
            handle.append(entries)
        return handle

    # --- properties ---

    @property
    def metric(self):
        return _METRIC_NAME[self.kind]

    @property
    def metric_code(self):
        return _METRIC_CODE[self.kind]

    def __len__(self):
        return self.n

    # --- item access ---

    def item(self, i):
        if not 0 <= i < self.n:
            raise ValueError(f"item index {i} out of range [0, {self.n})")
        if self.kind == DENSE:
            return self._vecs[i]
        if self.kind == STRING:
            return self._items[i]
        lo, hi = self._sp_ptr[i], self._sp_ptr[i + 1]
        return list(zip(self._sp_ids[lo:hi].tolist(), self._sp_wts[lo:hi].tolist()))

    def distance(self, a, b):
        """Metric distance between two items of this handle's domain."""
        if self.kind == DENSE:
            return metrics.l2_distance(a, b)
        if self.kind == STRING:
            return float(metrics.levenshtein(a, b))
        return metrics.angle_distance(a, b)

    # --- incremental growth ---

    def append(self, item):
        """Add one item; returns its id."""
        if self.kind == DENSE:
            vec = np.asarray(item, dtype=np.float32)
            if vec.ndim != 1:
                raise ValueError("dense item must be a 1-d vector")
            if self.dim is None:
                if vec.shape[0] < 1:
                    raise ValueError("dense item must be non-empty")
                self.dim = vec.shape[0]
            if self._vecs.shape[1] != self.dim:
                self._vecs = np.empty((16, self.dim), dtype=np.float32)
            if vec.shape[0] != self.dim:
                raise ValueError(
                    f"dimension mismatch: expected {self.dim}, got {vec.shape[0]}"
                )
            if not np.isfinite(vec).all():
                raise ValueError("dense item contains non-finite coordinates")
            self._vecs = _grow(self._vecs, self.n + 1)
            self._vecs[self.n] = vec
        elif self.kind == STRING:
            if not isinstance(item, str):
                raise ValueError("string item must be str")
            codes = metrics.encode_string(item)
            end = self._offs[self.n] + codes.shape[0]
            self._codes = _grow(self._codes, end)
            self._codes[self._offs[self.n]:end] = codes
            self._offs = _grow(self._offs, self.n + 2)
            self._offs[self.n + 1] = end
            self._items.append(item)
        else:
            ids, wts = metrics._as_sparse_arrays(item)
            end = self._sp_ptr[self.n] + ids.shape[0]
            self._sp_ids = _grow(self._sp_ids, end)
            self._sp_wts = _grow(self._sp_wts, end)
            self._sp_ids[self._sp_ptr[self.n]:end] = ids
            self._sp_wts[self._sp_ptr[self.n]:end] = wts
            self._sp_ptr = _grow(self._sp_ptr, self.n + 2)
            self._sp_ptr[self.n + 1] = end
            self._sp_norms = _grow(self._sp_norms, self.n + 1)
            self._sp_norms[self.n] = metrics.sparse_norm_kernel(wts)
        self.n += 1
        return self.n - 1

    # --- kernel payloads ---

    def payload(self):
        if self.kind == DENSE:
            vecs = self._vecs if self.dim is not None else _EMPTY_VECS
            return (vecs, _EMPTY_I32, _ZERO_I64, _EMPTY_I64, _EMPTY_F32,
                    _ZERO_I64, _EMPTY_F64)
        if self.kind == STRING:
            return (_EMPTY_VECS, self._codes, self._offs, _EMPTY_I64,
                    _EMPTY_F32, _ZERO_I64, _EMPTY_F64)
        return (_EMPTY_VECS, _EMPTY_I32, _ZERO_I64, self._sp_ids,
                self._sp_wts, self._sp_ptr, self._sp_norms)

    def query_payload(self, item):
        """Validate a query item and pack it for the kernels."""
        if self.kind == DENSE:
            vec = np.ascontiguousarray(item, dtype=np.float32)
            if vec.ndim != 1 or (self.dim is not None and vec.shape[0] != self.dim):
                raise ValueError(
                    f"query dimension mismatch: expected {self.dim}"
                )
            if not np.isfinite(vec).all():
                raise ValueError("query contains non-finite coordinates")
            return (vec, _EMPTY_I32, _EMPTY_I64, _EMPTY_F32, 0.0)
        if self.kind == STRING:
            if not isinstance(item, str):
                raise ValueError("query item must be str")
            return (_EMPTY_F32, metrics.encode_string(item), _EMPTY_I64,
                    _EMPTY_F32, 0.0)
        ids, wts = metrics._as_sparse_arrays(item)
        norm = float(metrics.sparse_norm_kernel(wts))
        return (_EMPTY_F32, _EMPTY_I32, ids, wts, norm)


def gen_rvec(dim, n, seed):
    """Uniform random vectors over [0, 1) from a seeded PCG64 stream.

    The generator is numpy's default_rng (PCG64); identical (dim, n, seed)
    produce bit-identical float32 output on every platform.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return DatasetHandle.from_dense(rng.random((n, dim), dtype=np.float32))


# --- ground truth ---


@dataclass
class GroundTruth:
    """Exact k-nearest ids and distances for a query set.

    Rows are sorted by (distance, id); distances are stored in single
    precision to match the file format.
    """

    ids: np.ndarray    # (num_queries, k) int64
    dists: np.ndarray  # (num_queries, k) float32

    @property
    def k(self):
        return self.ids.shape[1]

    @property
    def num_queries(self):
        return self.ids.shape[0]


# --- dense vector file format ---

_DENSE_MAGIC = b"RVC1"
_GT_MAGIC = b"GT01"


def write_dense(handle, path):
    if handle.kind != DENSE or handle.n < 1:
        raise ValueError("write_dense requires a non-empty dense handle")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIQ", _DENSE_MAGIC, handle.dim, handle.n))
        fh.write(np.ascontiguousarray(handle._vecs[:handle.n]).tobytes())


def read_dense(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 16:
        raise FormatError(f"{path}: truncated header ({len(buf)} bytes, need 16)")
    magic, dim, count = struct.unpack_from("<4sIQ", buf, 0)
    if magic != _DENSE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if dim == 0:
        raise FormatError(f"{path}: zero dimension at byte 4")
    if count == 0:
        raise FormatError(f"{path}: zero item count at byte 8")
    expected = 16 + count * dim * 4
    if len(buf) != expected:
        raise FormatError(
            f"{path}: payload ends at byte {len(buf)}, expected {expected}"
        )
    vecs = np.frombuffer(buf, dtype="<f4", offset=16).reshape(count, dim)
    return DatasetHandle.from_dense(vecs)


# --- string file format ---


def read_strings(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    items = []
    for lineno, line in enumerate(raw.split(b"\n"), start=1):
        if not line:
            continue
        try:
            items.append(line.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: invalid UTF-8 on line {lineno}: {exc}") from None
    if not items:
        raise FormatError(f"{path}: no items")
    return DatasetHandle.from_strings(items)


def write_strings(handle, path):
    if handle.kind != STRING or handle.n < 1:
        raise ValueError("write_strings requires a non-empty string handle")
    for i, text in enumerate(handle._items):
        if not text or "\n" in text:
            raise ValueError(
                f"item {i} cannot be represented in the line format"
            )
    with open(path, "wb") as fh:
        for text in handle._items:
            fh.write(text.encode("utf-8"))
            fh.write(b"\n")


# --- sparse vector file format ---


def _parse_sparse_line(path, lineno, line):
    tokens = line.split()
    if not tokens:
        raise FormatError(f"{path}: empty vector on line {lineno}")
    entries = []
    seen = set()
    for col, tok in enumerate(tokens, start=1):
        term_s, sep, weight_s = tok.partition(":")
        if not sep or not term_s or not weight_s:
            raise FormatError(
                f"{path}: malformed token {tok!r} at line {lineno}, column {col}"
            )
        try:
            term = int(term_s)
            weight = float(weight_s)
        except ValueError:
            raise FormatError(
                f"{path}: malformed token {tok!r} at line {lineno}, column {col}"
            ) from None
        if term < 0:
            raise FormatError(
                f"{path}: negative term id at line {lineno}, column {col}"
            )
        if not math.isfinite(weight) or weight <= 0.0:
            raise FormatError(
                f"{path}: weight must be finite and positive at line {lineno}, column {col}"
            )
        if term in seen:
            raise FormatError(
                f"{path}: duplicate term id {term} at line {lineno}, column {col}"
            )
        seen.add(term)
        entries.append((term, weight))
    entries.sort()
    return entries


def read_sparse(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError(f"{path}: no items")
    vectors = [
        _parse_sparse_line(path, lineno, line)
        for lineno, line in enumerate(lines, start=1)
    ]
    return DatasetHandle.from_sparse(vectors)


def write_sparse(handle, path):
    if handle.kind != SPARSE or handle.n < 1:
        raise ValueError("write_sparse requires a non-empty sparse handle")
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(handle.n):
            parts = [f"{term}:{float(weight)!r}" for term, weight in handle.item(i)]
            fh.write(" ".join(parts))
            fh.write("\n")


# --- ground truth file format ---


def write_gt(gt, path):
    ids = np.asarray(gt.ids, dtype=np.int64)
    dists = np.asarray(gt.dists, dtype=np.float32)
    if ids.ndim != 2 or ids.shape != dists.shape or ids.shape[1] < 1:
        raise ValueError("ground truth must be (num_queries, k) arrays")
    num_queries, k = ids.shape
    for qi in range(num_queries):
        for t in range(1, k):
            if (dists[qi, t - 1], ids[qi, t - 1]) > (dists[qi, t], ids[qi, t]):
                raise ValueError(f"ground truth rows must be sorted (query {qi})")
    rec = np.empty((num_queries, k), dtype=[("id", "<u4"), ("dist", "<f4")])
    rec["id"] = ids
    rec["dist"] = dists
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIQ", _GT_MAGIC, k, num_queries))
        fh.write(rec.tobytes())


def read_gt(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 16:
        raise FormatError(f"{path}: truncated header ({len(buf)} bytes, need 16)")
    magic, k, count = struct.unpack_from("<4sIQ", buf, 0)
    if magic != _GT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
    if k == 0:
        raise FormatError(f"{path}: zero k at byte 4")
    expected = 16 + count * k * 8
    if len(buf) != expected:
        raise FormatError(
            f"{path}: payload ends at byte {len(buf)}, expected {expected}"
        )
    rec = np.frombuffer(buf, dtype=[("id", "<u4"), ("dist", "<f4")], offset=16)
    rec = rec.reshape(count, k)
    ids = rec["id"].astype(np.int64)
    dists = rec["dist"].astype(np.float32)
    for qi in range(count):
        for t in range(1, k):
            if (dists[qi, t - 1], ids[qi, t - 1]) > (dists[qi, t], ids[qi, t]):
                raise FormatError(
                    f"{path}: records out of (dist, id) order in query {qi}"
                )
    return GroundTruth(ids=ids, dists=dists)
