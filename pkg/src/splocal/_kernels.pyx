# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled edit-distance kernel.

The greedy block-shift search in TER recomputes token-level Levenshtein
distance for every candidate shift, so this inner loop dominates similarity
scoring at corpus scale. Token sequences arrive as int32 id arrays.
"""

import numpy as np


def edit_distance(int[:] a, int[:] b):
    """Levenshtein distance (insert/delete/substitute, unit costs)."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    if n == 0:
        return m
    if m == 0:
        return n
    cdef int[:] prev = np.empty(m + 1, dtype=np.intc)
    cdef int[:] cur = np.empty(m + 1, dtype=np.intc)
    cdef int[:] tmp
    cdef Py_ssize_t i, j
    cdef int cost, best
    for j in range(m + 1):
        prev[j] = <int> j
    for i in range(1, n + 1):
        cur[0] = <int> i
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        tmp = prev
        prev = cur
        cur = tmp
    return int(prev[m])


def hamming_plus_length_gap(int[:] a, int[:] b):
    """Substitution-only distance: positional mismatches plus the length gap."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t k = n if n < m else m
    cdef Py_ssize_t i
    cdef int d = <int> ((n - m) if n > m else (m - n))
    for i in range(k):
        if a[i] != b[i]:
            d += 1
    return int(d)
