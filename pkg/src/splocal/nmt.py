"""Pluggable translation backends.

Three implementations share one contract: a wire-protocol client for
attention-emitting translation services, a placeholder round-trip wrapper for
services without attention access, and a deterministic mock for tests.
Attention invariants are enforced at this boundary; violating results are
rejected, never repaired.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

import httpx
import numpy as np

from .core import (
    Example,
    EntitySpan,
    LogicalForm,
    Provenance,
    byte_len,
    nfc,
)
from .preproc import is_quote_token

DEFAULT_PARALLEL_WIDTH = 8
DEFAULT_TIMEOUT = 30.0
RETRY_ATTEMPTS = 3
ROW_SUM_TOLERANCE = 1e-3


class TranslationError(Exception):
    pass


class BackendUnreachable(TranslationError):
    def __init__(self, cause):
        super().__init__(f"backend unreachable: {cause}")
        self.cause = cause


class AttentionUnavailable(TranslationError):
    pass


class NonStochasticAttention(TranslationError):
    pass


class PlaceholderLost(TranslationError):
    def __init__(self, index: int, example_id: str = ""):
        super().__init__(f"placeholder {index} lost in translation of {example_id or 'input'}")
        self.index = index


@dataclass(frozen=True)
class TranslationRequest:
    src_lang: str
    tgt_lang: str
    text: str
    want_attention: bool = False
    options: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.text.strip():
            raise TranslationError("empty translation request text")


@dataclass(frozen=True, eq=False)
class AttentionMatrix:
    """Dense target-by-source cross-attention weights; rows sum to 1."""

    weights: np.ndarray

    def __eq__(self, other) -> bool:
        return isinstance(other, AttentionMatrix) and np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash((self.weights.shape, self.weights.tobytes()))

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise NonStochasticAttention(f"attention must be 2-D, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise NonStochasticAttention("attention has non-finite entries")
        if np.any(w < 0) or np.any(w > 1):
            raise NonStochasticAttention("attention weights outside [0, 1]")
        row_sums = w.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE):
            worst = float(np.max(np.abs(row_sums - 1.0)))
            raise NonStochasticAttention(f"row sums off by {worst:.2e} (> {ROW_SUM_TOLERANCE})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TranslationResult:
    src_tokens: tuple[str, ...]
    tgt_tokens: tuple[str, ...]
    tgt_text: str
    attention: AttentionMatrix | None = None

    def __post_init__(self):
        if self.attention is not None:
            shape = (len(self.tgt_tokens), len(self.src_tokens))
            if self.attention.weights.shape != shape:
                raise NonStochasticAttention(
                    f"attention shape {self.attention.weights.shape} != tokens shape {shape}"
                )


class Backend(Protocol):
    emits_attention: bool

    def run(self, req: TranslationRequest) -> TranslationResult: ...

    def health(self) -> dict: ...


def translate(backend: Backend, req: TranslationRequest) -> TranslationResult:
    """Translate one request, enforcing the result invariants at the boundary."""
    try:
        result = backend.run(req)
    except TranslationError:
        raise
    except Exception as exc:
        raise BackendUnreachable(exc) from exc
    if req.want_attention and result.attention is None:
        raise AttentionUnavailable(f"backend {backend!r} returned no attention")
    return result


def translate_many(
    backend: Backend,
    requests: Sequence[TranslationRequest],
    width: int = DEFAULT_PARALLEL_WIDTH,
    attempts: int = RETRY_ATTEMPTS,
    backoff: float = 0.2,
) -> list[TranslationResult | TranslationError]:
    """Bounded-parallel translation with per-request retry.

    Output order matches input order. Failures surface as exception objects in
    the result list so callers can quarantine per item instead of aborting.
    """

    def one(req: TranslationRequest) -> TranslationResult | TranslationError:
        last: TranslationError | None = None
        for attempt in range(attempts):
            try:
                return translate(backend, req)
            except (AttentionUnavailable, NonStochasticAttention, PlaceholderLost) as exc:
                return exc  # not transient; retrying cannot help
            except TranslationError as exc:
                last = exc
                if attempt + 1 < attempts:
                    time.sleep(backoff * (2**attempt))
        return last if last is not None else TranslationError("unknown failure")

    if not requests:
        return []
    with ThreadPoolExecutor(max_workers=max(1, width)) as pool:
        return list(pool.map(one, requests))


class HttpBackend:
    """Client for the wire protocol: POST /translate and GET /health."""

    emits_attention = True

    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT):
        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(base_url=self.base_url, timeout=timeout)

    def run(self, req: TranslationRequest) -> TranslationResult:
        try:
            resp = self._client.post(
                "/translate",
                json={
                    "src_lang": req.src_lang,
                    "tgt_lang": req.tgt_lang,
                    "text": req.text,
                    "return_attention": req.want_attention,
                },
            )
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise BackendUnreachable(exc) from exc
        doc = resp.json()
        attention = None
        if doc.get("attention") is not None:
            attention = AttentionMatrix(np.asarray(doc["attention"], dtype=np.float64))
        return TranslationResult(
            src_tokens=tuple(doc["src_tokens"]),
            tgt_tokens=tuple(doc["tgt_tokens"]),
            tgt_text=doc["tgt_text"],
            attention=attention,
        )

    def health(self) -> dict:
        try:
            resp = self._client.get("/health")
            resp.raise_for_status()
            return resp.json()
        except httpx.HTTPError as exc:
            raise BackendUnreachable(exc) from exc


@dataclass(frozen=True)
class MockConfig:
    """Deterministic test-double behavior, composable.

    dictionary maps whole source tokens; reverse flips target token order;
    quote_drop_p drops each retained quote with that probability under a
    request-keyed seeded RNG; delete_tokens removes exact target tokens
    (placeholder-deletion mode).
    """

    dictionary: Mapping[str, str] = field(default_factory=dict)
    reverse: bool = False
    quote_drop_p: float = 0.0
    delete_tokens: frozenset[str] = frozenset()
    seed: int = 0


class MockBackend:
    """Deterministic in-process translation double with synthetic attention.

    Attention starts as the one-hot matrix of the mock's own permutation and
    dictionary mapping. When a target token is dropped, its probability mass
    folds into the next surviving row (previous row at the end of sentence),
    which mirrors how real decoders spread attention around omitted tokens.
    """

    emits_attention = True

    def __init__(self, config: MockConfig | None = None, **kwargs):
        self.config = config or MockConfig(**kwargs)

    def run(self, req: TranslationRequest) -> TranslationResult:
        cfg = self.config
        src_tokens = tuple(req.text.split())
        n = len(src_tokens)
        order = list(range(n))
        if cfg.reverse:
            order.reverse()
        tgt_full = [cfg.dictionary.get(src_tokens[i], src_tokens[i]) for i in order]

        rng = random.Random(f"{cfg.seed}:{req.text}")
        keep = []
        for j, tok in enumerate(tgt_full):
            if tok in cfg.delete_tokens:
                keep.append(False)
            elif is_quote_token(tok) and cfg.quote_drop_p > 0 and rng.random() < cfg.quote_drop_p:
                keep.append(False)
            else:
                keep.append(True)

        weights = np.zeros((n, n), dtype=np.float64)
        for j, i in enumerate(order):
            weights[j, i] = 1.0
        surviving = [j for j in range(n) if keep[j]]
        if surviving:
            for j in range(n):
                if keep[j]:
                    continue
                later = [s for s in surviving if s > j]
                target = later[0] if later else surviving[-1]
                weights[target] += weights[j]
            weights = weights[surviving]
            weights = weights / weights.sum(axis=1, keepdims=True)
        else:
            weights = np.zeros((0, n), dtype=np.float64)

        tgt_tokens = tuple(tgt_full[j] for j in surviving)
        attention = AttentionMatrix(weights) if req.want_attention else None
        return TranslationResult(
            src_tokens=src_tokens,
            tgt_tokens=tgt_tokens,
            tgt_text=" ".join(tgt_tokens),
            attention=attention,
        )

    def health(self) -> dict:
        return {"ok": True, "model": "mock"}


def make_mock_backend(mode: str, seed: int = 0, dictionary: Mapping[str, str] | None = None,
                      quote_drop_p: float = 0.3, delete_tokens: Iterable[str] = ()) -> MockBackend:
    """Build a mock from a named mode (CLI surface)."""
    modes = {
        "identity": MockConfig(seed=seed),
        "dictionary": MockConfig(dictionary=dict(dictionary or {}), seed=seed),
        "reversal": MockConfig(reverse=True, seed=seed),
        "quote-drop": MockConfig(dictionary=dict(dictionary or {}), quote_drop_p=quote_drop_p, seed=seed),
        "placeholder-delete": MockConfig(delete_tokens=frozenset(delete_tokens), seed=seed),
    }
    try:
        return MockBackend(modes[mode])
    except KeyError:
        raise TranslationError(f"unknown mock mode {mode!r}; choose from {sorted(modes)}") from None


def write_review_csv(rows: Sequence[tuple[str, str, str]], path) -> None:
    """Dump (id, original, round_trip) rows for manual quality review.

    Backend quality gating (does back-translation preserve meaning for at
    least 90% of samples?) is a human judgment; this only prepares the sheet.
    """
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "original", "round_trip", "meaning_preserved"])
        for row_id, original, round_trip in rows:
            writer.writerow([row_id, original, round_trip, ""])


def _placeholder_base(e: Example) -> str:
    """Pick a placeholder stem that cannot collide with the example's text."""
    haystack = e.utterance + " " + e.logical_form.serialize()
    for base in ("PARAM", "XPARAM", "QPARAM", "ZPARAM", "XXPARAM", "QQPARAM"):
        if base not in haystack:
            return base
    raise TranslationError(f"example {e.id}: cannot pick a collision-free placeholder stem")


def translate_with_placeholders(backend: Backend, e: Example, tgt_lang: str) -> Example:
    """Replace span values with placeholders, translate, and restore spans.

    Open-ontology span values become PARAM_i tokens (i = span index); existing
    placeholder spans keep their own tokens. All of them must survive the
    translation verbatim; a missing one raises PlaceholderLost so the caller
    can quarantine the example.
    """
    base = _placeholder_base(e)
    raw = e.utterance.encode("utf-8")
    pieces = []
    cursor = 0
    expected: list[tuple[int, str, str]] = []  # (span index, token, param_type)
    for si, span in enumerate(e.spans):
        pieces.append(raw[cursor : span.start].decode("utf-8"))
        if span.is_placeholder:
            token = span.value
        else:
            token = f"{base}_{si}"
        pieces.append(token)
        expected.append((si, token, span.param_type))
        cursor = span.end
    pieces.append(raw[cursor:].decode("utf-8"))
    masked_utterance = "".join(pieces)

    params = e.logical_form.parameters()
    unmatched = list(range(len(params)))
    tokens = list(e.logical_form.tokens)
    edits = []
    for si, span in enumerate(e.spans):
        for uj in list(unmatched):
            if params[uj].value == span.value:
                unmatched.remove(uj)
                if not span.is_placeholder:
                    edits.append((params[uj].start_tok, params[uj].end_tok, [f"{base}_{si}"]))
                break
    for start_tok, end_tok, replacement in sorted(edits, reverse=True):
        tokens[start_tok:end_tok] = replacement

    result = translate(
        backend,
        TranslationRequest(src_lang=e.lang, tgt_lang=tgt_lang, text=masked_utterance),
    )
    tgt_text = nfc(result.tgt_text)

    found: list[EntitySpan] = []
    for si, token, param_type in expected:
        char_idx = tgt_text.find(token)
        if char_idx < 0:
            raise PlaceholderLost(si, e.id)
        start = byte_len(tgt_text[:char_idx])
        found.append(
            EntitySpan(start, start + byte_len(token), param_type, token, is_placeholder=True)
        )
    found.sort(key=lambda s: s.start)

    return Example(
        id=e.id,
        lang=tgt_lang,
        utterance=tgt_text,
        logical_form=LogicalForm(tuple(tokens)),
        spans=tuple(found),
        provenance=Provenance.MACHINE_TRANSLATED,
    )
