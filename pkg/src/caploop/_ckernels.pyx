# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: word-level Levenshtein alignment and waveform peaks.

Contracts mirror caploop._kernels_py exactly; caploop.kernels selects one of
the two at import time.
"""

from libc.stdlib cimport free, malloc

BACKEND = "c"

OP_HIT = 0
OP_SUB = 1
OP_INS = 2
OP_DEL = 3

cdef enum:
    C_HIT = 0
    C_SUB = 1
    C_INS = 2
    C_DEL = 3


def levenshtein_ops(const int[:] ref, const int[:] hyp):
    """Optimal word alignment between two integer id sequences, unit costs.

    Returns (subs, dels, ins, hits, ops) where ops is a bytes object of op
    codes in left-to-right order. Ties during backtrace are resolved as
    match, then substitution, then insertion, then deletion.
    """
    cdef Py_ssize_t n = ref.shape[0]
    cdef Py_ssize_t m = hyp.shape[0]
    cdef Py_ssize_t w = m + 1
    cdef int* dp = <int*> malloc((n + 1) * w * sizeof(int))
    cdef unsigned char* trace = <unsigned char*> malloc(n + m + 1 if n + m > 0 else 1)
    if dp == NULL or trace == NULL:
        if dp != NULL:
            free(dp)
        if trace != NULL:
            free(trace)
        raise MemoryError()

    cdef Py_ssize_t i, j, base, prev
    cdef int cost, up, left, ri, cur
    cdef int subs = 0, dels = 0, ins = 0, hits = 0
    cdef Py_ssize_t pos = 0

    try:
        for j in range(w):
            dp[j] = <int> j
        for i in range(1, n + 1):
            base = i * w
            prev = base - w
            dp[base] = <int> i
            ri = ref[i - 1]
            for j in range(1, w):
                cost = dp[prev + j - 1] + (0 if ri == hyp[j - 1] else 1)
                up = dp[prev + j] + 1
                if up < cost:
                    cost = up
                left = dp[base + j - 1] + 1
                if left < cost:
                    cost = left
                dp[base + j] = cost

        i = n
        j = m
        while i > 0 or j > 0:
            cur = dp[i * w + j]
            if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dp[(i - 1) * w + j - 1] == cur:
                trace[pos] = C_HIT
                hits += 1
                i -= 1
                j -= 1
            elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and dp[(i - 1) * w + j - 1] + 1 == cur:
                trace[pos] = C_SUB
                subs += 1
                i -= 1
                j -= 1
            elif j > 0 and dp[i * w + j - 1] + 1 == cur:
                trace[pos] = C_INS
                ins += 1
                j -= 1
            else:
                trace[pos] = C_DEL
                dels += 1
                i -= 1
            pos += 1

        out = bytearray(pos)
        for i in range(pos):
            out[i] = trace[pos - 1 - i]
        return subs, dels, ins, hits, bytes(out)
    finally:
        free(dp)
        free(trace)


def window_max_abs(const short[:] samples, Py_ssize_t window):
    """Per-window max absolute value over a sample buffer.

    len(samples) must be a multiple of window; returns one int per window.
    """
    cdef Py_ssize_t n = samples.shape[0]
    if window < 1:
        raise ValueError("window must be >= 1")
    if n % window:
        raise ValueError("buffer length must be a multiple of window")
    cdef Py_ssize_t start, k
    cdef int peak, v
    out = []
    for start in range(0, n, window):
        peak = 0
        for k in range(start, start + window):
            v = samples[k]
            if v < 0:
                v = -v
            if v > peak:
                peak = v
        out.append(peak)
    return out
