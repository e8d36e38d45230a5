"""Build target-language training data.

localize_dataset runs the full pipeline per example: pre-rules, entity
marking, translation, post-rules, span alignment, span override, then k-fold
substitution of localized ontology values into utterance and logical form
together. Failures at any stage quarantine the example with a stage tag and
never abort the batch. Substitution is keyed by span index, not string
search, so repeated values survive.
"""

from __future__ import annotations

import json
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .align import AlignmentError, ShapeMismatch, align_spans, override_spans, quote_pairs_from_tokens
from .core import (
    QUOTE,
    Dataset,
    Example,
    EntitySpan,
    LogicalForm,
    Provenance,
    byte_len,
    example_to_dict,
    nfc,
    validate_example,
)
from .nmt import (
    AttentionMatrix,
    Backend,
    TranslationError,
    TranslationRequest,
    translate,
    translate_with_placeholders,
)
from .ontology import Ontology, ShortSample, sample_values
from .preproc import RulePack, apply_rules, apply_rules_outside_spans, mark_entities

log = logging.getLogger(__name__)

STRATEGY_ALIGN = "align"
STRATEGY_PLACEHOLDER = "placeholder"


class StageFailure(Exception):
    """Pipeline failure carrying the stage tag used for quarantine records."""

    def __init__(self, stage: str, reason: str):
        super().__init__(f"[{stage}] {reason}")
        self.stage = stage
        self.reason = reason


@dataclass(frozen=True)
class LocalizationConfig:
    tgt_lang: str
    backend: Backend
    ontology: Ontology
    rulepack: RulePack = field(default_factory=lambda: RulePack(lang=""))
    k_augment: int = 10
    seed: int = 0
    strategy: str | None = None  # None selects by backend attention support
    parallel_width: int = 8
    quarantine_path: str | None = None

    def __post_init__(self):
        if self.k_augment < 1:
            raise ValueError("k_augment must be >= 1")
        if self.strategy not in (None, STRATEGY_ALIGN, STRATEGY_PLACEHOLDER):
            raise ValueError(f"unknown strategy {self.strategy!r}")

    def effective_strategy(self) -> str:
        if self.strategy:
            return self.strategy
        return STRATEGY_ALIGN if getattr(self.backend, "emits_attention", False) else STRATEGY_PLACEHOLDER


@dataclass(frozen=True)
class Quarantined:
    example_id: str
    stage: str
    reason: str
    expansions_lost: int
    record: dict

    def as_dict(self) -> dict:
        return {
            "id": self.example_id,
            "stage": self.stage,
            "reason": self.reason,
            "expansions_lost": self.expansions_lost,
            "example": self.record,
        }


def _pair_spans_to_params(e: Example) -> dict[int, int]:
    """Map span index to logical-form parameter index by value, in order."""
    params = e.logical_form.parameters()
    unmatched = list(range(len(params)))
    pairing: dict[int, int] = {}
    for si, span in enumerate(e.spans):
        for uj in unmatched:
            if params[uj].value == span.value:
                pairing[si] = uj
                unmatched.remove(uj)
                break
        else:
            raise StageFailure("validate", f"span {si} value {span.value!r} has no logical-form parameter")
    return pairing


def _substitute(e: Example, span_to_param: dict[int, int], values: dict[int, str],
                new_id: str) -> Example:
    """One transactional substitution of span values into utterance and logical form."""
    raw = e.utterance.encode("utf-8")
    pieces: list[str] = []
    new_spans: list[EntitySpan] = []
    cursor = 0
    offset = 0
    for si, span in enumerate(e.spans):
        gap = raw[cursor : span.start].decode("utf-8")
        pieces.append(gap)
        offset += byte_len(gap)
        value = nfc(values.get(si, span.value))
        pieces.append(value)
        new_spans.append(
            EntitySpan(
                start=offset,
                end=offset + byte_len(value),
                param_type=span.param_type,
                value=value,
                is_placeholder=span.is_placeholder and si not in values,
            )
        )
        offset += byte_len(value)
        cursor = span.end
    pieces.append(raw[cursor:].decode("utf-8"))

    params = e.logical_form.parameters()
    tokens = list(e.logical_form.tokens)
    edits = []
    for si, value in values.items():
        region = params[span_to_param[si]]
        edits.append((region.start_tok, region.end_tok, [QUOTE, *nfc(value).split(), QUOTE]))
    for start_tok, end_tok, replacement in sorted(edits, reverse=True):
        tokens[start_tok:end_tok] = replacement

    return Example(
        id=new_id,
        lang=e.lang,
        utterance="".join(pieces),
        logical_form=LogicalForm(tuple(tokens)),
        spans=tuple(new_spans),
        provenance=Provenance.AUGMENTED,
    )


def _post_rules_on_tokens(tokens, attention: AttentionMatrix | None, pack: RulePack):
    """Apply post rules token-wise; split tokens duplicate their attention row.

    Duplicated rows stay row-stochastic, so the attention invariant holds
    through post-processing.
    """
    if not pack.post_rules:
        return tuple(tokens), attention
    new_tokens: list[str] = []
    row_sources: list[int] = []
    for i, tok in enumerate(tokens):
        rewritten = apply_rules(tok, pack, "post")
        pieces = rewritten.split() if rewritten.strip() else [tok]
        for piece in pieces:
            new_tokens.append(piece)
            row_sources.append(i)
    if attention is None:
        return tuple(new_tokens), None
    if len(new_tokens) == len(tokens):
        return tuple(new_tokens), attention
    weights = attention.weights[np.asarray(row_sources)]
    return tuple(new_tokens), AttentionMatrix(weights)


def translate_aligned(e: Example, backend: Backend, tgt_lang: str, rulepack: RulePack) -> Example:
    """Mark entities, translate with attention, align spans, override values.

    Returns the target-language example whose spans still carry the source
    values; the logical form is untouched. Raises StageFailure with the
    failing stage tag.
    """
    problems = validate_example(e)
    if problems:
        raise StageFailure("validate", "; ".join(problems))
    _pair_spans_to_params(e)  # every span must pair with a logical-form parameter

    try:
        prepped = apply_rules_outside_spans(e, rulepack, "pre")
        marked = mark_entities(prepped)
    except Exception as exc:
        raise StageFailure("preproc", str(exc)) from exc

    try:
        result = translate(
            backend,
            TranslationRequest(e.lang, tgt_lang, marked.text, want_attention=True),
        )
    except TranslationError as exc:
        raise StageFailure("translate", str(exc)) from exc

    try:
        tgt_tokens, attention = _post_rules_on_tokens(result.tgt_tokens, result.attention, rulepack)
        quote_pairs = quote_pairs_from_tokens(result.src_tokens)
        if len(quote_pairs) != len(prepped.spans):
            raise AlignmentError(
                f"{len(quote_pairs)} marked source spans but example has {len(prepped.spans)}"
            )
        alignments = align_spans(result.src_tokens, tgt_tokens, attention, quote_pairs)
    except (AlignmentError, ShapeMismatch) as exc:
        raise StageFailure("align", str(exc)) from exc

    try:
        override = override_spans(tgt_tokens, alignments, prepped.spans, lang=tgt_lang)
        return Example(
            id=e.id,
            lang=tgt_lang,
            utterance=override.text,
            logical_form=e.logical_form,
            spans=override.spans,
            provenance=Provenance.MACHINE_TRANSLATED,
        )
    except Exception as exc:
        raise StageFailure("override", str(exc)) from exc


def _translate_placeholder(e: Example, cfg: LocalizationConfig) -> Example:
    problems = validate_example(e)
    if problems:
        raise StageFailure("validate", "; ".join(problems))
    _pair_spans_to_params(e)
    try:
        prepped = apply_rules_outside_spans(e, cfg.rulepack, "pre")
    except Exception as exc:
        raise StageFailure("preproc", str(exc)) from exc
    try:
        inter = translate_with_placeholders(cfg.backend, prepped, cfg.tgt_lang)
    except TranslationError as exc:
        raise StageFailure("translate", str(exc)) from exc
    try:
        inter = apply_rules_outside_spans(inter, cfg.rulepack, "post")
    except Exception as exc:
        raise StageFailure("postproc", str(exc)) from exc
    return inter


def localize_example(e: Example, cfg: LocalizationConfig) -> list[Example]:
    """Localize one example into at most k_augment variants.

    Raises StageFailure on pipeline errors; localize_dataset turns those into
    quarantine records. Variants substitute pairwise-distinct ontology values
    per span whenever the catalog is large enough; identical variants (for
    example when there is nothing to substitute) collapse to one.
    """
    if cfg.effective_strategy() == STRATEGY_ALIGN:
        # Override keeps source span order and the logical form unchanged, so
        # the span/parameter pairing computed on the source example carries over.
        pairing = _pair_spans_to_params(e)
        inter = translate_aligned(e, cfg.backend, cfg.tgt_lang, cfg.rulepack)
    else:
        inter = _translate_placeholder(e, cfg)
        pairing = _pair_spans_to_params(inter)

    substitutable = [si for si, span in enumerate(inter.spans) if span.param_type in cfg.ontology.entries]
    for si, span in enumerate(inter.spans):
        if si not in substitutable and not span.is_placeholder:
            raise StageFailure("substitute", f"ontology does not cover param type {span.param_type!r}")

    if not substitutable:
        variant = _substitute(inter, pairing, {}, new_id=f"{e.id}-1")
        bad = validate_example(variant)
        if bad:
            raise StageFailure("substitute", "; ".join(bad))
        return [variant]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ShortSample)
        per_span_values = {
            si: sample_values(
                cfg.ontology,
                inter.spans[si].param_type,
                cfg.k_augment,
                seed=f"{cfg.seed}:{e.id}:{si}",
                distinct=True,
            )
            for si in substitutable
        }
    n_variants = min(len(v) for v in per_span_values.values())

    outputs: list[Example] = []
    seen: set[tuple[str, str]] = set()
    for i in range(n_variants):
        values = {si: per_span_values[si][i].text for si in substitutable}
        try:
            variant = _substitute(inter, pairing, values, new_id=f"{e.id}-{i + 1}")
        except Exception as exc:
            raise StageFailure("substitute", str(exc)) from exc
        bad = validate_example(variant)
        if bad:
            raise StageFailure("substitute", "; ".join(bad))
        key = (variant.utterance, variant.logical_form.serialize())
        if key in seen:
            continue
        seen.add(key)
        outputs.append(variant)
    return outputs


def dedup_by_masked_utterance(d: Dataset) -> tuple[list[Example], int]:
    """Drop examples identical after masking span values with their types."""
    seen: set[str] = set()
    kept = []
    for e in d:
        key = e.masked_utterance()
        if key in seen:
            continue
        seen.add(key)
        kept.append(e)
    return kept, len(d) - len(kept)


def localize_dataset(d: Dataset, cfg: LocalizationConfig,
                     quarantine_path=None) -> Dataset:
    """Localize a dataset with per-example parallelism and a quarantine file.

    Output order is input order crossed with augmentation index. Per-stage
    counts land in the returned dataset's meta, including the accounting
    identity fields: for span-bearing inputs,
    inputs * k == outputs + quarantined expansions.
    """
    if quarantine_path is None:
        quarantine_path = cfg.quarantine_path
    kept, duplicates = dedup_by_masked_utterance(d)

    def job(e: Example):
        try:
            return localize_example(e, cfg)
        except StageFailure as exc:
            return exc
        except Exception as exc:  # never abort the batch
            log.exception("localize: unexpected failure for %s", e.id)
            return StageFailure("internal", f"{type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=max(1, cfg.parallel_width)) as pool:
        results = list(pool.map(job, kept))

    outputs: list[Example] = []
    quarantined: list[Quarantined] = []
    stage_counts: dict[str, int] = {}
    for e, res in zip(kept, results):
        if isinstance(res, StageFailure):
            lost = cfg.k_augment if e.spans else 1
            quarantined.append(
                Quarantined(e.id, res.stage, res.reason, lost, example_to_dict(e))
            )
            stage_counts[res.stage] = stage_counts.get(res.stage, 0) + 1
            continue
        outputs.extend(res)
        if e.spans and len(res) < cfg.k_augment:
            # Keeps the accounting identity exact for span-bearing inputs:
            # inputs * k == outputs + quarantined expansions.
            lost = cfg.k_augment - len(res)
            quarantined.append(
                Quarantined(
                    e.id,
                    "substitute",
                    f"only {len(res)} of {cfg.k_augment} variants (catalog short or duplicates collapsed)",
                    lost,
                    example_to_dict(e),
                )
            )
            stage_counts["substitute-short"] = stage_counts.get("substitute-short", 0) + 1

    if quarantine_path is not None:
        with open(quarantine_path, "w", encoding="utf-8") as fh:
            for q in quarantined:
                fh.write(json.dumps(q.as_dict(), ensure_ascii=False, sort_keys=True))
                fh.write("\n")

    for stage, count in sorted(stage_counts.items()):
        log.info("localize: %d examples quarantined at stage %s", count, stage)

    meta = dict(d.meta)
    meta.update(
        {
            "localize_inputs": str(len(d)),
            "localize_deduped": str(duplicates),
            "localize_outputs": str(len(outputs)),
            "localize_quarantined_examples": str(len(quarantined)),
            "localize_quarantined_expansions": str(sum(q.expansions_lost for q in quarantined)),
            "localize_k": str(cfg.k_augment),
            "localize_strategy": cfg.effective_strategy(),
        }
    )
    return Dataset(tuple(outputs), split=d.split, meta=meta)


class LanguageMismatch(Exception):
    pass


def _dataset_lang(d: Dataset) -> str | None:
    langs = {e.lang for e in d}
    if len(langs) > 1:
        raise LanguageMismatch(f"dataset mixes languages {sorted(langs)}")
    return next(iter(langs)) if langs else None


def _concat(parts: list[tuple[Dataset, str]], split, meta) -> Dataset:
    out: list[Example] = []
    used: set[str] = set()
    for dataset, suffix in parts:
        for e in dataset:
            new_id = e.id
            if new_id in used:
                new_id = f"{e.id}{suffix}"
                n = 2
                while new_id in used:
                    new_id = f"{e.id}{suffix}{n}"
                    n += 1
            used.add(new_id)
            out.append(
                Example(new_id, e.lang, e.utterance, e.logical_form, e.spans, e.provenance)
                if new_id != e.id
                else e
            )
    return Dataset(tuple(out), split=split, meta=meta)


def mix_fewshot(train: Dataset, human_dev: Dataset, machine_dev: Dataset) -> tuple[Dataset, Dataset]:
    """Add the human-translated slice to training; mix both dev sources.

    Ids are suffixed on collision so no record is dropped; the human share is
    recorded in the output meta.
    """
    langs = {lang for lang in (_dataset_lang(train), _dataset_lang(human_dev), _dataset_lang(machine_dev))
             if lang is not None}
    if len(langs) > 1:
        raise LanguageMismatch(f"datasets mix languages {sorted(langs)}")

    human_share = len(human_dev) / len(train) if len(train) else 0.0
    train_meta = dict(train.meta)
    train_meta.update({"fewshot_human_examples": str(len(human_dev)),
                       "fewshot_human_share": f"{human_share:.6f}"})
    train_mixed = _concat([(train, ""), (human_dev, "-h")], train.split, train_meta)

    dev_meta = dict(machine_dev.meta)
    dev_meta.update({"dev_machine_examples": str(len(machine_dev)),
                     "dev_human_examples": str(len(human_dev))})
    dev_mixed = _concat([(machine_dev, ""), (human_dev, "-h")], machine_dev.split, dev_meta)
    return train_mixed, dev_mixed


def build_bootstrap_dataset(d: Dataset, backend: Backend, tgt_lang: str,
                            quarantine_path=None) -> Dataset:
    """Directly translate utterances; leave logical forms with source entities.

    The baseline comparator: spans are dropped and the alignment invariant is
    knowingly broken (provenance machine_translated, meta bootstrap=true).
    """
    outputs: list[Example] = []
    quarantined: list[Quarantined] = []
    for e in d:
        try:
            result = translate(backend, TranslationRequest(e.lang, tgt_lang, e.utterance))
        except TranslationError as exc:
            quarantined.append(Quarantined(e.id, "translate", str(exc), 1, example_to_dict(e)))
            continue
        outputs.append(
            Example(
                id=e.id,
                lang=tgt_lang,
                utterance=result.tgt_text,
                logical_form=e.logical_form,
                spans=(),
                provenance=Provenance.MACHINE_TRANSLATED,
            )
        )
    if quarantine_path is not None:
        with open(quarantine_path, "w", encoding="utf-8") as fh:
            for q in quarantined:
                fh.write(json.dumps(q.as_dict(), ensure_ascii=False, sort_keys=True))
                fh.write("\n")
    meta = dict(d.meta)
    meta.update({"bootstrap": "true", "bootstrap_quarantined": str(len(quarantined))})
    return Dataset(tuple(outputs), split=d.split, meta=meta)
