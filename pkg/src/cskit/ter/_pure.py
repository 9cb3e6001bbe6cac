"""Numpy fallback for the edit-distance kernel.

Mirrors the compiled extension in cskit/ter/_speedups.pyx; both backends
must produce identical values (the backtrace preference order below is part
of the contract).
"""

from __future__ import annotations

import numpy as np


def lev_distance_bounded(a, b, limit: int) -> int:
    """Word-level Levenshtein distance, capped at ``limit``.

    Returns the exact distance when it is <= limit, otherwise limit + 1.
    """
    a = np.asarray(a, dtype=np.int32)
    b = np.asarray(b, dtype=np.int32)
    m, n = len(a), len(b)
    if limit < 0:
        limit = 0
    if abs(m - n) > limit:
        return limit + 1
    if m == 0 or n == 0:
        d = max(m, n)
        return d if d <= limit else limit + 1

    steps = np.arange(n + 1, dtype=np.int32)
    prev = steps.copy()
    for i in range(1, m + 1):
        sub = prev[:-1] + (b != a[i - 1])
        v = np.minimum(prev[1:] + 1, sub)
        row = np.concatenate(([np.int32(i)], v))
        # resolve cur[j] = min(v[j], cur[j-1] + 1) with a running minimum
        row -= steps
        np.minimum.accumulate(row, out=row)
        row += steps
        if row.min() > limit:
            return limit + 1
        prev = row
    d = int(prev[n])
    return d if d <= limit else limit + 1


def lev_align(a, b):
    """Full Levenshtein DP with backtrace.

    Returns (distance, n_ins, n_del, n_sub, aligned) where aligned[i] is the
    index in ``b`` that a[i] exactly matches in the traced alignment, or -1.
    Insertions add tokens of ``b`` missing from ``a``; deletions drop tokens
    of ``a``. Backtrace preference: match, substitution, deletion, insertion.
    """
    a = np.asarray(a, dtype=np.int32)
    b = np.asarray(b, dtype=np.int32)
    m, n = len(a), len(b)
    steps = np.arange(n + 1, dtype=np.int32)
    dp = np.empty((m + 1, n + 1), dtype=np.int32)
    dp[0] = steps
    for i in range(1, m + 1):
        sub = dp[i - 1, :-1] + (b != a[i - 1])
        row = np.concatenate(([np.int32(i)], np.minimum(dp[i - 1, 1:] + 1, sub)))
        row -= steps
        np.minimum.accumulate(row, out=row)
        row += steps
        dp[i] = row

    aligned = np.full(m, -1, dtype=np.int32)
    n_ins = n_del = n_sub = 0
    i, j = m, n
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
