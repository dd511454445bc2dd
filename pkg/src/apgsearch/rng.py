"""Deterministic 32-bit PRNG driving all search-time randomness.

The generator is xorshift128 (Marsaglia, 2003): four 32-bit words updated
with shifts and xors only, so every intermediate value fits comfortably in
an int64.  The same compiled routines back both the fast kernels and the
pure-Python reference algorithms, which keeps their random choices
bit-identical under a common seed.
"""

import numpy as np
from numba import njit

_MASK32 = 0xFFFFFFFF
_TWO32 = 0x100000000


@njit(cache=True, nogil=True)
def _mix32(x):
    # 32-bit avalanche; the multiplier is < 2**27 so products stay in int64
    x = (x ^ (x >> 16)) & _MASK32
    x = (x * 0x45D9F3B) & _MASK32
    x = (x ^ (x >> 16)) & _MASK32
    x = (x * 0x45D9F3B) & _MASK32
    return (x ^ (x >> 16)) & _MASK32


@njit(cache=True, nogil=True)
def seed_state(state, seed_lo, seed_hi, stream_lo, stream_hi):
    """Initialize the 4-word state from a (seed, stream) pair."""
    a = _mix32((seed_lo + 0x9E3779B9) & _MASK32)
    b = _mix32((seed_hi ^ a) & _MASK32)
    c = _mix32((stream_lo + b + 0x85EBCA6B) & _MASK32)
    d = _mix32((stream_hi ^ c) & _MASK32)
    state[0] = a
    state[1] = b
    state[2] = c
    state[3] = d
    if state[0] == 0 and state[1] == 0 and state[2] == 0 and state[3] == 0:
        state[0] = 1


@njit(cache=True, nogil=True)
def next_u32(state):
    """Advance the state; returns a uniform value in [0, 2**32)."""
    t = state[0]
    t = (t ^ (t << 11)) & _MASK32
    t ^= t >> 8
    state[0] = state[1]
    state[1] = state[2]
    state[2] = state[3]
    w = (state[3] ^ (state[3] >> 19) ^ t) & _MASK32
    state[3] = w
    return w


@njit(cache=True, nogil=True)
def rand_below(state, n):
    """Uniform integer in [0, n) via rejection; n must be in [1, 2**31)."""
    lim = (_TWO32 // n) * n
    while True:
        u = next_u32(state)
        if u < lim:
            return u % n


def new_state(seed, stream):
    """Allocate and seed a fresh state array for (seed, stream)."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    st = np.empty(4, dtype=np.int64)
    seed_state(
        st,
        seed & _MASK32,
        (seed >> 32) & _MASK32,
        stream & _MASK32,
        (stream >> 32) & _MASK32,
    )
    return st
