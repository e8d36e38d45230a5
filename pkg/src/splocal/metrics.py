"""Parser-output scoring (exact match, structure match) and translation
similarity (corpus BLEU, TER).

Exact match compares logical forms token by token. Structure match masks
every parameter first: quoted regions collapse to one mask token and
placeholders to their class, so exact match always implies structure match.
BLEU is aggregate 4-gram corpus BLEU with brevity penalty and add-one
smoothing on the higher-order precisions; TER is computed per sentence
(edits plus greedy block shifts over reference length) and averaged.
"""

from __future__ import annotations

import csv
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    QUOTE,
    Dataset,
    DatasetError,
    LogicalForm,
    PLACEHOLDER_RE,
    parse_logical_form,
)

BLEU_ORDER = 4
TER_SHIFT_CAP = 10
TER_MAX_BLOCK = 10
PARAM_MASK = "<param>"


class MetricsError(Exception):
    pass


class LengthMismatch(MetricsError):
    pass


def exact_match(pred: LogicalForm, gold: LogicalForm) -> int:
    return int(pred.tokens == gold.tokens)


def mask_parameters(lf: LogicalForm) -> tuple[str, ...]:
    """Collapse quoted regions to one mask token; placeholders to their class."""
    out = []
    inside = False
    for tok in lf.tokens:
        if tok == QUOTE:
            if not inside:
                out.append(PARAM_MASK)
            inside = not inside
            continue
        if inside:
            continue
        m = PLACEHOLDER_RE.match(tok)
        out.append(m.group(1) if m else tok)
    return tuple(out)


def structure_match(pred: LogicalForm, gold: LogicalForm) -> int:
    return int(mask_parameters(pred) == mask_parameters(gold))


@dataclass(frozen=True)
class EvalReport:
    em: float
    sm: float
    n: int
    per_example: tuple[tuple[str, int, int], ...]
    missing: int = 0
    unparseable: int = 0

    def as_dict(self) -> dict:
        return {
            "em": self.em,
            "sm": self.sm,
            "n": self.n,
            "missing": self.missing,
            "unparseable": self.unparseable,
        }


def evaluate_run(preds: dict[str, str], golds: Dataset, csv_path=None) -> EvalReport:
    """Score predictions against gold logical forms by example id.

    ``preds`` maps example id to a serialized logical form. Missing or
    unparseable predictions score 0 on both metrics and are counted; the
    harness never dies on parser garbage.
    """
    rows = []
    missing = 0
    unparseable = 0
    for e in golds:
        pred_text = preds.get(e.id)
        if pred_text is None:
            missing += 1
            rows.append((e.id, 0, 0))
            continue
        try:
            pred = parse_logical_form(pred_text)
        except DatasetError:
            unparseable += 1
            rows.append((e.id, 0, 0))
            continue
        rows.append((e.id, exact_match(pred, e.logical_form), structure_match(pred, e.logical_form)))
    n = len(rows)
    em = sum(r[1] for r in rows) / n if n else 0.0
    sm = sum(r[2] for r in rows) / n if n else 0.0
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "em", "sm"])
            writer.writerows(rows)
    return EvalReport(em=em, sm=sm, n=n, per_example=tuple(rows), missing=missing, unparseable=unparseable)


def bleu_tokenize(text: str, char_level: bool = False) -> list[str]:
    text = unicodedata.normalize("NFC", text)
    if char_level:
        return [c for c in text if not c.isspace()]
    return text.split()


def _ngrams(tokens: list[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def corpus_bleu(cands: list[str], refs: list[str], char_level: bool = False) -> float:
    """Aggregate 4-gram BLEU with brevity penalty, as a percentage.

    Higher-order precisions (n >= 2) get add-one smoothing so short corpora
    do not zero out; unigram precision is unsmoothed.
    """
    if len(cands) != len(refs):
        raise LengthMismatch(f"{len(cands)} candidates vs {len(refs)} references")
    if not cands:
        raise LengthMismatch("empty corpus")
    matches = [0] * BLEU_ORDER
    totals = [0] * BLEU_ORDER
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(cands, refs):
        cand_toks = bleu_tokenize(cand, char_level)
        ref_toks = bleu_tokenize(ref, char_level)
        cand_len += len(cand_toks)
        ref_len += len(ref_toks)
        for n in range(1, BLEU_ORDER + 1):
            cand_counts = _ngrams(cand_toks, n)
            ref_counts = _ngrams(ref_toks, n)
            totals[n - 1] += sum(cand_counts.values())
            matches[n - 1] += sum(min(c, ref_counts.get(g, 0)) for g, c in cand_counts.items())
    if totals[0] == 0 or matches[0] == 0:
        return 0.0
    log_precision = math.log(matches[0] / totals[0])
    for n in range(2, BLEU_ORDER + 1):
        log_precision += math.log((matches[n - 1] + 1) / (totals[n - 1] + 1))
    brevity = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / max(cand_len, 1))
    return 100.0 * brevity * math.exp(log_precision / BLEU_ORDER)


def _token_ids(hyp: list[str], ref: list[str]) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict[str, int] = {}
    def ids(tokens):
        return np.array([vocab.setdefault(t, len(vocab)) for t in tokens], dtype=np.intc)
    return ids(hyp), ids(ref)


def _ref_blocks(ref: np.ndarray, max_block: int) -> set[tuple[int, ...]]:
    blocks = set()
    m = len(ref)
    for i in range(m):
        for j in range(i + 1, min(i + max_block, m) + 1):
            blocks.add(tuple(int(x) for x in ref[i:j]))
    return blocks


def sentence_ter(hyp_tokens: list[str], ref_tokens: list[str], shift_cap: int = TER_SHIFT_CAP) -> float:
    """TER for one sentence pair, as a percentage of the reference length.

    Edits are insert/delete/substitute plus block shifts found greedily; each
    pass applies the shift with the lowest resulting edit distance, and only
    when the move strictly lowers the running total (the shift itself costs
    one edit). Per the original formulation, only blocks that occur verbatim
    in the reference are candidates, capped at TER_MAX_BLOCK tokens.
    """
    if not ref_tokens:
        raise MetricsError("empty reference")
    hyp, ref = _token_ids(hyp_tokens, ref_tokens)
    edits = kernels.edit_distance(hyp, ref)
    ref_blocks = _ref_blocks(ref, TER_MAX_BLOCK)
    shifts = 0
    while shifts < shift_cap and edits > 1:
        best_d = None
        best_hyp = None
        n = len(hyp)
        for i in range(n):
            for j in range(i + 1, min(i + TER_MAX_BLOCK, n) + 1):
                block = tuple(int(x) for x in hyp[i:j])
                if block not in ref_blocks:
                    continue
                rest = np.concatenate([hyp[:i], hyp[j:]])
                for k in range(len(rest) + 1):
                    if k == i:
                        continue
                    moved = np.concatenate([rest[:k], hyp[i:j], rest[k:]]).astype(np.intc)
                    d = kernels.edit_distance(moved, ref)
                    if d < edits - 1 and (best_d is None or d < best_d):
                        best_d = d
                        best_hyp = moved
        if best_hyp is None:
            break
        hyp = best_hyp
        edits = best_d
        shifts += 1
    return 100.0 * (shifts + edits) / len(ref_tokens)


@dataclass(frozen=True)
class SimilarityReport:
    bleu: float
    ter: float
    n: int
    skipped_empty_refs: int = 0
    per_sentence_ter: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        return {"bleu": self.bleu, "ter": self.ter, "n": self.n,
                "skipped_empty_refs": self.skipped_empty_refs}


def corpus_ter(cands: list[str], refs: list[str], char_level: bool = False,
               shift_cap: int = TER_SHIFT_CAP) -> float:
    return similarity_report(cands, refs, char_level, shift_cap).ter


def similarity_report(cands: list[str], refs: list[str], char_level: bool = False,
                      shift_cap: int = TER_SHIFT_CAP) -> SimilarityReport:
    if len(cands) != len(refs):
        raise LengthMismatch(f"{len(cands)} candidates vs {len(refs)} references")
    if not cands:
        raise LengthMismatch("empty corpus")
    ters = []
    skipped = 0
    pairs = []
    for cand, ref in zip(cands, refs):
        ref_toks = bleu_tokenize(ref, char_level)
        if not ref_toks:
            skipped += 1
            continue
        pairs.append((cand, ref))
        ters.append(sentence_ter(bleu_tokenize(cand, char_level), ref_toks, shift_cap))
    if not pairs:
        raise MetricsError("all references empty")
    bleu = corpus_bleu([c for c, _ in pairs], [r for _, r in pairs], char_level)
    return SimilarityReport(
        bleu=bleu,
        ter=sum(ters) / len(ters),
        n=len(pairs),
        skipped_empty_refs=skipped,
        per_sentence_ter=tuple(ters),
    )
