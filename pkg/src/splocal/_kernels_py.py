"""Pure-Python fallback for the compiled edit-distance kernel.

Same contract as _kernels.pyx; used when the extension is not built or when
SPLOCAL_PURE_PYTHON is set.
"""

from __future__ import annotations


def edit_distance(a, b) -> int:
    """Levenshtein distance (insert/delete/substitute, unit costs)."""
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    a = list(a)
    b = list(b)
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ai = a[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + (0 if ai == b[j - 1] else 1)
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev = cur
    return prev[m]


def hamming_plus_length_gap(a, b) -> int:
    """Substitution-only distance: positional mismatches plus the length gap."""
    d = abs(len(a) - len(b))
    for x, y in zip(a, b):
        if x != y:
            d += 1
    return d
