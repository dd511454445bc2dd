"""Distance functions for the three supported item domains.

Dense vectors are compared with the Euclidean distance, strings with the
Levenshtein edit distance over Unicode code points, and sparse
(term_id, weight) vectors with the angle between them.  Inputs may be
stored in single precision but every accumulation runs in double
precision so that distance orderings are stable.
"""

import math

import numpy as np
from numba import njit

L2 = "l2"
LEVENSHTEIN = "levenshtein"
ANGLE = "angle"


@njit(cache=True, nogil=True)
def l2_kernel(u, v):
    acc = 0.0
    for j in range(u.shape[0]):
        d = np.float64(u[j]) - np.float64(v[j])
        acc += d * d
    return math.sqrt(acc)


@njit(cache=True, nogil=True)
def levenshtein_kernel(a, b):
    """Edit distance between two int32 code-point arrays."""
    la = a.shape[0]
    lb = b.shape[0]
    if la == 0:
        return float(lb)
    if lb == 0:
        return float(la)
    prev = np.empty(lb + 1, dtype=np.int64)
    cur = np.empty(lb + 1, dtype=np.int64)
    for j in range(lb + 1):
        prev[j] = j
    for i in range(1, la + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ai == b[j - 1] else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev, cur = cur, prev
    return float(prev[lb])


@njit(cache=True, nogil=True)
def sparse_norm_kernel(weights):
    acc = 0.0
    for t in range(weights.shape[0]):
        w = np.float64(weights[t])
        acc += w * w
    return math.sqrt(acc)


@njit(cache=True, nogil=True)
def angle_kernel(ids_a, wts_a, norm_a, ids_b, wts_b, norm_b):
    """Angle in radians between two sparse vectors with precomputed norms."""
    dot = 0.0
    i = 0
    j = 0
    na = ids_a.shape[0]
    nb = ids_b.shape[0]
    while i < na and j < nb:
        ta = ids_a[i]
        tb = ids_b[j]
        if ta == tb:
            dot += np.float64(wts_a[i]) * np.float64(wts_b[j])
            i += 1
            j += 1
        elif ta < tb:
            i += 1
        else:
            j += 1
    c = dot / (norm_a * norm_b)
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return math.acos(c)


def encode_string(text):
    """Unicode string -> int32 array of code points."""
    if not text:
        return np.empty(0, dtype=np.int32)
    return np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32).astype(np.int32)


def _as_sparse_arrays(entries):
    if len(entries) == 0:
        raise ValueError("sparse vector must have at least one entry")
    ids = np.empty(len(entries), dtype=np.int64)
    wts = np.empty(len(entries), dtype=np.float32)
    prev = -1
    for t, (term, weight) in enumerate(entries):
        term = int(term)
        weight = float(weight)
        if term < 0:
            raise ValueError(f"negative term id {term}")
        if term <= prev:
            raise ValueError("term ids must be strictly increasing")
        if not math.isfinite(weight) or weight <= 0.0:
            raise ValueError(f"weights must be finite and positive, got {weight}")
        ids[t] = term
        wts[t] = weight
        prev = term
    return ids, wts


def l2_distance(u, v):
    """Euclidean distance between two equal-length dense vectors."""
    ua = np.ascontiguousarray(u, dtype=np.float32)
    va = np.ascontiguousarray(v, dtype=np.float32)
    if ua.ndim != 1 or va.ndim != 1 or ua.shape[0] != va.shape[0]:
        raise ValueError(f"dimension mismatch: {ua.shape} vs {va.shape}")
    return float(l2_kernel(ua, va))


def levenshtein(a, b):
    """Minimum number of code-point edits transforming a into b."""
    return int(levenshtein_kernel(encode_string(a), encode_string(b)))


def angle_distance(u, v):
    """Angle in [0, pi] between two sparse vectors given as sorted
    (term_id, weight) pairs with positive weights."""
    ids_a, wts_a = _as_sparse_arrays(u)
    ids_b, wts_b = _as_sparse_arrays(v)
    na = float(sparse_norm_kernel(wts_a))
    nb = float(sparse_norm_kernel(wts_b))
    return float(angle_kernel(ids_a, wts_a, na, ids_b, wts_b, nb))
