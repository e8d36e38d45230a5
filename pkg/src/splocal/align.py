"""Locate translated entity spans and override them with source values.

Spans are found either from retained quotation marks (matched to source
quotes by cross-attention) or, when quotes were dropped in translation, from
the attention argmax of the surrounding source quote columns. Cross-span
conflicts are repaired to a maximum-score monotone non-crossing assignment so
the output ranges are always disjoint and in source-span order, which the
downstream substitution requires.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import EntitySpan, byte_len
from .nmt import AttentionMatrix
from .preproc import is_quote_token

log = logging.getLogger(__name__)

QUOTES_RETAINED = "quotes_retained"
ATTENTION_FALLBACK = "attention_fallback"


class ShapeMismatch(Exception):
    pass


class AlignmentError(Exception):
    pass


@dataclass(frozen=True)
class SpanAlignment:
    """Half-open target token range for one source span.

    A degenerate range (start_tok == end_tok) marks a span whose tokens were
    not found; the override step inserts the value at that position instead of
    failing, keeping the sentence in the training pool.
    """

    source_span_index: int
    start_tok: int
    end_tok: int
    method: str
    score: float = 0.0

    def __post_init__(self):
        if not (0 <= self.start_tok <= self.end_tok):
            raise AlignmentError(f"bad range [{self.start_tok}, {self.end_tok})")

    @property
    def is_degenerate(self) -> bool:
        return self.start_tok == self.end_tok


def quote_pairs_from_tokens(tokens) -> list[tuple[int, int]]:
    """Pair up quote tokens left to right into (open, close) positions."""
    positions = [i for i, tok in enumerate(tokens) if is_quote_token(tok)]
    if len(positions) % 2:
        raise AlignmentError(f"odd number of quote tokens ({len(positions)})")
    return [(positions[i], positions[i + 1]) for i in range(0, len(positions), 2)]


def _pair_score(weights: np.ndarray, ti: int, tj: int, open_q: int, close_q: int) -> float:
    # Translation may reverse a span; score the better orientation.
    return max(
        weights[ti][open_q] + weights[tj][close_q],
        weights[ti][close_q] + weights[tj][open_q],
    )


def _monotone_pair_assignment(
    weights: np.ndarray, slots: list[int], quote_pairs: list[tuple[int, int]]
) -> list[tuple[int, int]] | None:
    """Max-score complete assignment of one target-quote slot pair per span.

    Pairs must be strictly increasing and non-overlapping across spans, and
    every span must receive a pair (partial assignments are not valid).
    Returns per-span (slot_i, slot_j) index pairs into ``slots``, or None when
    fewer than 2 * n slots remain; ties resolve to the lexicographically
    smallest choice.
    """
    n = len(quote_pairs)
    memo: dict[tuple[int, int], tuple[float, tuple] | None] = {}

    def best(k: int, s: int) -> tuple[float, tuple] | None:
        if k == n:
            return 0.0, ()
        if len(slots) - s < 2 * (n - k):
            return None
        key = (k, s)
        if key in memo:
            return memo[key]
        open_q, close_q = quote_pairs[k]
        top: tuple[float, tuple] | None = None
        for i in range(s, len(slots) - 1):
            for j in range(i + 1, len(slots)):
                rest = best(k + 1, j + 1)
                if rest is None:
                    continue
                score = _pair_score(weights, slots[i], slots[j], open_q, close_q) + rest[0]
                if top is None or score > top[0]:
                    top = (score, ((i, j),) + rest[1])
        memo[key] = top
        return top

    result = best(0, 0)
    return list(result[1]) if result is not None else None


def _argmax_lowest(column: np.ndarray) -> int:
    return int(np.argmax(column))  # np.argmax returns the first (lowest) index on ties


def _shrink_quotes(tokens, start: int, end: int) -> tuple[int, int]:
    while start < end and is_quote_token(tokens[start]):
        start += 1
    while end > start and is_quote_token(tokens[end - 1]):
        end -= 1
    return start, end


def _range_score(weights: np.ndarray, start: int, end: int, open_q: int, close_q: int) -> float:
    if start >= end or close_q - open_q <= 1:
        return 0.0
    return float(np.mean(weights[start:end, open_q + 1 : close_q]))


def align_spans(
    src_tokens,
    tgt_tokens,
    attention: AttentionMatrix,
    src_quote_positions: list[tuple[int, int]],
) -> list[SpanAlignment]:
    """Resolve each source span's token range in the target sentence.

    When every quote survived translation (target quote count equals twice
    the span count), source quotes are matched to target quotes by highest
    cross-attention; otherwise each span falls back to the attention argmax of
    its surrounding source quote columns. Either way the final ranges are
    repaired to be disjoint and ordered like the source spans.
    """
    weights = attention.weights
    if weights.shape != (len(tgt_tokens), len(src_tokens)):
        raise ShapeMismatch(
            f"attention {weights.shape} does not match {len(tgt_tokens)}x{len(src_tokens)} tokens"
        )
    for open_q, close_q in src_quote_positions:
        if not (0 <= open_q < close_q < len(src_tokens)):
            raise ShapeMismatch(f"source quote pair ({open_q}, {close_q}) out of range")
    if not src_quote_positions:
        return []

    tgt_quote_pos = [i for i, tok in enumerate(tgt_tokens) if is_quote_token(tok)]
    if len(tgt_quote_pos) == 2 * len(src_quote_positions):
        raw = _align_retained(weights, tgt_quote_pos, src_quote_positions)
    else:
        raw = _align_fallback(weights, tgt_tokens, src_quote_positions)

    return _finalize(raw, tgt_tokens, weights, src_quote_positions)


def _align_retained(weights, tgt_quote_pos, quote_pairs) -> list[tuple[int, int, str]]:
    matches = []
    for open_q, close_q in quote_pairs:
        t_open = tgt_quote_pos[_argmax_lowest(weights[tgt_quote_pos, open_q])]
        t_close = tgt_quote_pos[_argmax_lowest(weights[tgt_quote_pos, close_q])]
        matches.append((t_open, t_close))

    used = [t for pair in matches for t in pair]
    ranges = [(min(p) + 1, max(p)) for p in matches]
    injective = len(set(used)) == len(used) and all(p[0] != p[1] for p in matches)
    monotone = all(ranges[k][0] >= ranges[k - 1][1] for k in range(1, len(ranges)))
    if injective and monotone:
        return [(s, e, QUOTES_RETAINED) for s, e in ranges]

    slots = list(tgt_quote_pos)
    assignment = _monotone_pair_assignment(weights, slots, quote_pairs)
    # The retained branch always has exactly 2n slots, so a complete
    # assignment exists (and is in fact the consecutive pairing).
    assert assignment is not None
    return [(slots[i] + 1, slots[j], QUOTES_RETAINED) for i, j in assignment]


def _align_fallback(weights, tgt_tokens, quote_pairs) -> list[tuple[int, int, str]]:
    out = []
    for open_q, close_q in quote_pairs:
        t_open = _argmax_lowest(weights[:, open_q])
        t_close = _argmax_lowest(weights[:, close_q])
        lo, hi = min(t_open, t_close), max(t_open, t_close)
        if (
            lo != hi
            and is_quote_token(tgt_tokens[lo])
            and is_quote_token(tgt_tokens[hi])
        ):
            # This span's own quotes survived even though others were dropped.
            out.append((lo + 1, hi, QUOTES_RETAINED))
        else:
            out.append((lo, hi, ATTENTION_FALLBACK))
    return out


def _finalize(raw, tgt_tokens, weights, quote_pairs) -> list[SpanAlignment]:
    alignments = []
    prev_end = 0
    for k, (start, end, method) in enumerate(raw):
        start, end = _shrink_quotes(tgt_tokens, start, end)
        if start < prev_end:
            start = prev_end
        if end < start:
            end = start
        if start == end:
            log.warning("span %d resolved to an empty range at token %d", k, start)
        open_q, close_q = quote_pairs[k]
        alignments.append(
            SpanAlignment(
                source_span_index=k,
                start_tok=start,
                end_tok=end,
                method=method,
                score=_range_score(weights, start, end, open_q, close_q),
            )
        )
        prev_end = max(prev_end, end)
    return alignments


_CJK_RANGES = (
    (0x3040, 0x30FF),   # kana
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
)


def _is_cjk_char(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


WORD_MARK = "▁"


def detokenize(tokens, lang: str = "") -> str:
    return detokenize_with_bounds(tokens, lang)[0]


def detokenize_with_bounds(tokens, lang: str = "") -> tuple[str, list[tuple[int, int]]]:
    """Join tokens into text, returning each token's character extent.

    When any token carries the sentencepiece word mark, unmarked pieces are
    continuations and merge leftward; otherwise plain tokens are whole words
    joined by spaces. ##-prefixed pieces always merge leftward, and adjacent
    CJK codepoints join without a space.
    """
    sp_mode = any(tok.startswith(WORD_MARK) for tok in tokens)
    text = []
    bounds = []
    pos = 0
    prev_char = ""
    for i, tok in enumerate(tokens):
        if tok.startswith(WORD_MARK):
            piece, space = tok[1:], i > 0
        elif tok.startswith("##"):
            piece, space = tok[2:], False
        elif sp_mode:
            piece, space = tok, False
        else:
            piece = tok
            space = i > 0
            if space and piece and prev_char and _is_cjk_char(prev_char) and _is_cjk_char(piece[0]):
                space = False
        if space and piece:
            text.append(" ")
            pos += 1
        start = pos
        text.append(piece)
        pos += len(piece)
        bounds.append((start, pos))
        if piece:
            prev_char = piece[-1]
    return "".join(text), bounds


@dataclass(frozen=True)
class OverrideResult:
    tokens: tuple[str, ...]
    text: str
    spans: tuple[EntitySpan, ...]


def override_spans(tgt_tokens, alignments: list[SpanAlignment], source_spans, lang: str = "") -> OverrideResult:
    """Replace aligned target ranges with the source span values.

    Quote tokens are removed everywhere; degenerate alignments insert the
    value at the resolved position. Byte-offset spans are recomputed on the
    detokenized text.
    """
    if len(alignments) != len(source_spans):
        raise AlignmentError(f"{len(alignments)} alignments for {len(source_spans)} spans")
    ordered = sorted(alignments, key=lambda a: (a.start_tok, a.end_tok))
    sp_mode = any(tok.startswith(WORD_MARK) for tok in tgt_tokens)

    new_tokens: list[str] = []
    runs: list[tuple[int, tuple[int, int]]] = []  # (source span index, token run)
    cursor = 0
    for a in ordered:
        for tok in tgt_tokens[cursor : a.start_tok]:
            if not is_quote_token(tok):
                new_tokens.append(tok)
        value_tokens = source_spans[a.source_span_index].value.split()
        if sp_mode:
            # Inserted words need word marks or they would merge leftward.
            value_tokens = [WORD_MARK + tok for tok in value_tokens]
        runs.append((a.source_span_index, (len(new_tokens), len(new_tokens) + len(value_tokens))))
        new_tokens.extend(value_tokens)
        cursor = max(cursor, a.end_tok)
    for tok in tgt_tokens[cursor:]:
        if not is_quote_token(tok):
            new_tokens.append(tok)

    text, bounds = detokenize_with_bounds(new_tokens, lang)
    new_spans = []
    for span_index, (tok_start, tok_end) in runs:
        src = source_spans[span_index]
        char_start = bounds[tok_start][0]
        char_end = bounds[tok_end - 1][1]
        value = text[char_start:char_end]
        new_spans.append(
            EntitySpan(
                start=byte_len(text[:char_start]),
                end=byte_len(text[:char_start]) + byte_len(value),
                param_type=src.param_type,
                value=value,
                is_placeholder=src.is_placeholder,
            )
        )
    new_spans.sort(key=lambda s: s.start)
    return OverrideResult(tokens=tuple(new_tokens), text=text, spans=tuple(new_spans))
