"""Reference construction for span alignment, by exhaustive search.

This module deliberately repeats the alignment semantics with plain loops and
full enumeration instead of vectorized argmax and dynamic programming. It
exists to cross-check align_spans (the ``align --oracle`` CLI flag and the
test suite); keep it dumb and independent.
"""

from __future__ import annotations

from .align import ATTENTION_FALLBACK, QUOTES_RETAINED, SpanAlignment
from .preproc import is_quote_token


def _column_argmax_rows(weights, column: int, rows) -> int:
    best_row = None
    best = None
    for r in rows:
        v = weights[r][column]
        if best is None or v > best:
            best = v
            best_row = r
    return best_row


def _enumerate_assignments(n_pairs: int, n_slots: int, start: int = 0):
    """Yield every monotone non-overlapping slot-pair assignment, lexicographically."""
    if n_pairs == 0:
        yield ()
        return
    for i in range(start, n_slots - 1):
        for j in range(i + 1, n_slots):
            for rest in _enumerate_assignments(n_pairs - 1, n_slots, j + 1):
                yield ((i, j),) + rest


def oracle_align_spans(src_tokens, tgt_tokens, weights, src_quote_positions) -> list[SpanAlignment]:
    """Brute-force equivalent of align_spans over a plain nested-list matrix."""
    weights = [[float(v) for v in row] for row in weights]
    n_spans = len(src_quote_positions)
    if n_spans == 0:
        return []
    tgt_quote_pos = [i for i, tok in enumerate(tgt_tokens) if is_quote_token(tok)]

    raw: list[tuple[int, int, str]] = []
    if len(tgt_quote_pos) == 2 * n_spans:
        matches = []
        for open_q, close_q in src_quote_positions:
            t_open = _column_argmax_rows(weights, open_q, tgt_quote_pos)
            t_close = _column_argmax_rows(weights, close_q, tgt_quote_pos)
            matches.append((t_open, t_close))
        used = [t for pair in matches for t in pair]
        ranges = [(min(p) + 1, max(p)) for p in matches]
        ok = len(set(used)) == len(used) and all(p[0] != p[1] for p in matches)
        for k in range(1, len(ranges)):
            if ranges[k][0] < ranges[k - 1][1]:
                ok = False
        if ok:
            raw = [(s, e, QUOTES_RETAINED) for s, e in ranges]
        else:
            best_total = None
            best_assignment = None
            for assignment in _enumerate_assignments(n_spans, len(tgt_quote_pos)):
                total = 0.0
                for k in range(n_spans - 1, -1, -1):
                    i, j = assignment[k]
                    open_q, close_q = src_quote_positions[k]
                    ti, tj = tgt_quote_pos[i], tgt_quote_pos[j]
                    forward = weights[ti][open_q] + weights[tj][close_q]
                    backward = weights[ti][close_q] + weights[tj][open_q]
                    total = max(forward, backward) + total
                if best_total is None or total > best_total:
                    best_total = total
                    best_assignment = assignment
            if best_assignment is None:
                raw = [(0, 0, QUOTES_RETAINED)] * n_spans
            else:
                raw = [
                    (tgt_quote_pos[i] + 1, tgt_quote_pos[j], QUOTES_RETAINED)
                    for i, j in best_assignment
                ]
    else:
        all_rows = list(range(len(tgt_tokens)))
        for open_q, close_q in src_quote_positions:
            t_open = _column_argmax_rows(weights, open_q, all_rows)
            t_close = _column_argmax_rows(weights, close_q, all_rows)
            lo, hi = min(t_open, t_close), max(t_open, t_close)
            if lo != hi and is_quote_token(tgt_tokens[lo]) and is_quote_token(tgt_tokens[hi]):
                raw.append((lo + 1, hi, QUOTES_RETAINED))
            else:
                raw.append((lo, hi, ATTENTION_FALLBACK))

    out = []
    prev_end = 0
    for k, (start, end, method) in enumerate(raw):
        while start < end and is_quote_token(tgt_tokens[start]):
            start += 1
        while end > start and is_quote_token(tgt_tokens[end - 1]):
            end -= 1
        if start < prev_end:
            start = prev_end
        if end < start:
            end = start
        out.append(SpanAlignment(k, start, end, method))
        prev_end = max(prev_end, end)
    return out
