# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled edit-distance kernel.

Must stay value-identical to cskit/ter/_pure.py, including the backtrace
preference order (match, substitution, deletion, insertion).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lev_distance_bounded(object a_obj, object b_obj, int limit):
    """Word-level Levenshtein distance, capped at ``limit``.

    Returns the exact distance when it is <= limit, otherwise limit + 1.
    Uses a banded DP (cells with |i - j| > limit can never be on a path of
    cost <= limit).
    """
    cdef cnp.ndarray[cnp.int32_t, ndim=1] a = np.ascontiguousarray(a_obj, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] b = np.ascontiguousarray(b_obj, dtype=np.int32)
    cdef int m = a.shape[0]
    cdef int n = b.shape[0]
    if limit < 0:
        limit = 0
    if m - n > limit or n - m > limit:
        return limit + 1
    if m == 0 or n == 0:
        return max(m, n) if max(m, n) <= limit else limit + 1

    cdef int inf = limit + 1
    cdef cnp.ndarray[cnp.int32_t, ndim=1] prev = np.empty(n + 1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] cur = np.empty(n + 1, dtype=np.int32)
    cdef int i, j, lo, hi, best, c, rowmin
    for j in range(n + 1):
        prev[j] = j if j <= limit else inf
    for i in range(1, m + 1):
        lo = i - limit
        if lo < 1:
            lo = 1
            cur[0] = i
        else:
            cur[lo - 1] = inf
        hi = i + limit
        if hi > n:
            hi = n
        rowmin = inf
        for j in range(lo, hi + 1):
            best = prev[j - 1] + (1 if a[i - 1] != b[j - 1] else 0)
            c = prev[j] + 1
            if c < best:
                best = c
            c = cur[j - 1] + 1
            if c < best:
                best = c
            if best > inf:
                best = inf
            cur[j] = best
            if best < rowmin:
                rowmin = best
        if rowmin > limit:
            return inf
        if hi + 1 <= n:
            cur[hi + 1] = inf
        prev, cur = cur, prev
    return prev[n] if prev[n] <= limit else inf


def lev_align(object a_obj, object b_obj):
    """Full Levenshtein DP with backtrace; see _pure.lev_align."""
    cdef cnp.ndarray[cnp.int32_t, ndim=1] a = np.ascontiguousarray(a_obj, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] b = np.ascontiguousarray(b_obj, dtype=np.int32)
    cdef int m = a.shape[0]
    cdef int n = b.shape[0]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] dp = np.empty((m + 1, n + 1), dtype=np.int32)
    cdef int i, j, best, c
    for j in range(n + 1):
        dp[0, j] = j
    for i in range(1, m + 1):
        dp[i, 0] = i
        for j in range(1, n + 1):
            best = dp[i - 1, j - 1] + (1 if a[i - 1] != b[j - 1] else 0)
            c = dp[i - 1, j] + 1
            if c < best:
                best = c
            c = dp[i, j - 1] + 1
            if c < best:
                best = c
            dp[i, j] = best

    cdef cnp.ndarray[cnp.int32_t, ndim=1] aligned = np.full(m, -1, dtype=np.int32)
    cdef int n_ins = 0, n_del = 0, n_sub = 0
    i = m
    j = n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and a[i - 1] == b[j - 1] and dp[i, j] == dp[i - 1, j - 1]:
            aligned[i - 1] = j - 1
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and dp[i, j] == dp[i - 1, j - 1] + 1:
            n_sub += 1
            i -= 1
            j -= 1
        elif i > 0 and dp[i, j] == dp[i - 1, j] + 1:
            n_del += 1
            i -= 1
        else:
            n_ins += 1
            j -= 1
    return int(dp[m, n]), n_ins, n_del, n_sub, aligned
