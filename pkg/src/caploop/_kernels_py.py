"""Pure-Python fallback for the hot kernels.

Mirrors the contracts of the compiled module `caploop._ckernels` exactly;
`caploop.kernels` picks one of the two at import time.
"""

BACKEND = "python"

# op codes shared with the compiled kernel
OP_HIT = 0
OP_SUB = 1
OP_INS = 2
OP_DEL = 3


def levenshtein_ops(ref, hyp):
    """Optimal word alignment between two integer id sequences, unit costs.

    Returns (subs, dels, ins, hits, ops) where ops is a bytes object of op
    codes in left-to-right order. Ties during backtrace are resolved as
    match, then substitution, then insertion, then deletion.
    """
    n = len(ref)
    m = len(hyp)
    w = m + 1
    dp = [0] * ((n + 1) * w)
    for j in range(1, w):
        dp[j] = j
    for i in range(1, n + 1):
        base = i * w
        prev = base - w
        dp[base] = i
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

    codes = bytearray()
    subs = dels = ins = hits = 0
    i, j = n, m
    while i > 0 or j > 0:
        cur = dp[i * w + j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dp[(i - 1) * w + j - 1] == cur:
            codes.append(OP_HIT)
            hits += 1
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and dp[(i - 1) * w + j - 1] + 1 == cur:
            codes.append(OP_SUB)
            subs += 1
            i -= 1
            j -= 1
        elif j > 0 and dp[i * w + j - 1] + 1 == cur:
            codes.append(OP_INS)
            ins += 1
            j -= 1
        else:
            codes.append(OP_DEL)
            dels += 1
            i -= 1
    codes.reverse()
    return subs, dels, ins, hits, bytes(codes)


def window_max_abs(samples, window):
    """Per-window max absolute value over a sample buffer.

    len(samples) must be a multiple of window; returns one int per window.
    """
    n = len(samples)
    if window < 1:
        raise ValueError("window must be >= 1")
    if n % window:
        raise ValueError("buffer length must be a multiple of window")
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
