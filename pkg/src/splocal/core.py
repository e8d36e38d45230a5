"""Domain types, logical-form token algebra, and dataset serialization.

Utterances are NFC-normalized on ingest and indexed by UTF-8 byte offsets,
so spans slice identically across scripts (including CJK). Logical forms are
whitespace-joined token sequences in which each string parameter is a run of
tokens enclosed between two literal double-quote tokens, and placeholders
(TIME_0, DATE_1, ...) are single tokens.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

# TIME/DATE/NUMBER/PHONE are the rule-based preprocessing classes; PARAM_i
# (and its collision-escaped stems like XPARAM) is the synthetic class used by
# the placeholder translation mode.
PLACEHOLDER_CLASSES = ("TIME", "DATE", "NUMBER", "PHONE", "PARAM")
PLACEHOLDER_RE = re.compile(r"^(TIME|DATE|NUMBER|PHONE|[A-Z]*PARAM)_(\d+)$")

QUOTE = '"'


class DatasetError(Exception):
    """Base class for dataset and logical-form errors."""


class EmptyInput(DatasetError):
    pass


class UnbalancedQuotes(DatasetError):
    pass


class MalformedRecord(DatasetError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no


class SpanMismatch(DatasetError):
    def __init__(self, example_id: str, detail: str):
        super().__init__(f"example {example_id}: {detail}")
        self.example_id = example_id


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def byte_len(text: str) -> int:
    return len(text.encode("utf-8"))


def byte_slice(text: str, start: int, end: int) -> str:
    return text.encode("utf-8")[start:end].decode("utf-8", errors="strict")


def is_placeholder_token(token: str) -> bool:
    return bool(PLACEHOLDER_RE.match(token))


class Provenance(str, Enum):
    SYNTHESIZED = "synthesized"
    PARAPHRASED = "paraphrased"
    MACHINE_TRANSLATED = "machine_translated"
    HUMAN_TRANSLATED = "human_translated"
    AUGMENTED = "augmented"


class Split(str, Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


@dataclass(frozen=True, slots=True)
class EntitySpan:
    """A parameter occurrence in an utterance, by UTF-8 byte extent."""

    start: int
    end: int
    param_type: str
    value: str
    is_placeholder: bool = False

    def __post_init__(self):
        if self.start < 0 or self.start >= self.end:
            raise ValueError(f"bad span extent [{self.start}, {self.end})")
        if not self.value.strip():
            raise ValueError("span value is empty")
        if self.is_placeholder and not is_placeholder_token(self.value):
            raise ValueError(f"placeholder span value {self.value!r} does not match CLASS_INDEX")


@dataclass(frozen=True, slots=True)
class QuotedRegion:
    """Token extent of one logical-form parameter.

    start_tok/end_tok is the half-open token range including the enclosing
    quote tokens for string parameters, or the single token for placeholders.
    """

    start_tok: int
    end_tok: int
    value_tokens: tuple[str, ...]
    is_placeholder: bool = False

    @property
    def value(self) -> str:
        return " ".join(self.value_tokens)


@dataclass(frozen=True)
class LogicalForm:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.tokens.count(QUOTE) % 2:
            raise UnbalancedQuotes(f"odd number of quote tokens in {self.serialize()!r}")

    def serialize(self) -> str:
        return " ".join(self.tokens)

    def quoted_regions(self) -> list[QuotedRegion]:
        """String-parameter regions (quote pairs), left to right."""
        regions = []
        open_idx = None
        for i, tok in enumerate(self.tokens):
            if tok != QUOTE:
                continue
            if open_idx is None:
                open_idx = i
            else:
                regions.append(
                    QuotedRegion(open_idx, i + 1, tuple(self.tokens[open_idx + 1 : i]))
                )
                open_idx = None
        return regions

    def parameters(self) -> list[QuotedRegion]:
        """All parameters: quoted regions plus placeholder tokens, in order."""
        params = list(self.quoted_regions())
        inside = False
        for i, tok in enumerate(self.tokens):
            if tok == QUOTE:
                inside = not inside
            elif not inside and is_placeholder_token(tok):
                params.append(QuotedRegion(i, i + 1, (tok,), is_placeholder=True))
        params.sort(key=lambda r: r.start_tok)
        return params


def parse_logical_form(text: str) -> LogicalForm:
    """Tokenize one canonical logical-form line.

    Raises EmptyInput on blank input and UnbalancedQuotes on an odd count of
    double-quote tokens.
    """
    tokens = nfc(text).split()
    if not tokens:
        raise EmptyInput("empty logical form")
    return LogicalForm(tuple(tokens))


def extract_parameters(lf: LogicalForm) -> list[QuotedRegion]:
    return lf.parameters()


@dataclass(frozen=True)
class Example:
    id: str
    lang: str
    utterance: str
    logical_form: LogicalForm
    spans: tuple[EntitySpan, ...] = ()
    provenance: Provenance = Provenance.SYNTHESIZED

    def __post_init__(self):
        object.__setattr__(self, "utterance", nfc(self.utterance))
        prev_end = -1
        for span in self.spans:
            if span.start < prev_end:
                raise SpanMismatch(self.id, f"span at {span.start} overlaps or is out of order")
            prev_end = span.end
            try:
                actual = byte_slice(self.utterance, span.start, span.end)
            except (UnicodeDecodeError, IndexError) as exc:
                raise SpanMismatch(self.id, f"span [{span.start}, {span.end}) not sliceable: {exc}")
            if actual != span.value:
                raise SpanMismatch(
                    self.id,
                    f"span value {span.value!r} != utterance slice {actual!r}",
                )

    def masked_utterance(self) -> str:
        """Utterance with every span value replaced by its param_type.

        This is the dedup key for localization: augmented variants of one
        sentence differ only in parameter values.
        """
        out = []
        raw = self.utterance.encode("utf-8")
        cursor = 0
        for span in self.spans:
            out.append(raw[cursor : span.start].decode("utf-8"))
            out.append(span.param_type)
            cursor = span.end
        out.append(raw[cursor:].decode("utf-8"))
        return "".join(out)


def validate_example(e: Example) -> list[str]:
    """Check the cross-field alignment invariants; return violation messages.

    Span extents and ordering are enforced at construction; this adds the
    parameter/utterance alignment check: every logical-form parameter value
    must appear verbatim in the utterance.
    """
    problems = []
    span_values = [s.value for s in e.spans]
    for region in e.logical_form.parameters():
        value = region.value
        if value and value not in e.utterance:
            problems.append(f"parameter {value!r} not found verbatim in utterance")
        elif value in span_values:
            span_values.remove(value)
    return problems


@dataclass(frozen=True)
class Dataset:
    examples: tuple[Example, ...]
    split: Split = Split.TRAIN
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for e in self.examples:
            if e.id in seen:
                raise DatasetError(f"duplicate example id {e.id!r}")
            seen.add(e.id)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def by_id(self) -> dict[str, Example]:
        return {e.id: e for e in self.examples}


def example_to_dict(e: Example) -> dict:
    return {
        "id": e.id,
        "lang": e.lang,
        "utterance": e.utterance,
        "logical_form": e.logical_form.serialize(),
        "spans": [
            {
                "start": s.start,
                "end": s.end,
                "param_type": s.param_type,
                "value": s.value,
                "is_placeholder": s.is_placeholder,
            }
            for s in e.spans
        ],
        "provenance": e.provenance.value,
    }


def example_from_dict(record: dict) -> Example:
    spans = tuple(
        EntitySpan(
            start=int(s["start"]),
            end=int(s["end"]),
            param_type=s["param_type"],
            value=s["value"],
            is_placeholder=bool(s.get("is_placeholder", False)),
        )
        for s in record.get("spans", [])
    )
    return Example(
        id=record["id"],
        lang=record["lang"],
        utterance=record["utterance"],
        logical_form=parse_logical_form(record["logical_form"]),
        spans=spans,
        provenance=Provenance(record.get("provenance", "synthesized")),
    )


def read_dataset(path, split: Split = Split.TRAIN, meta: dict[str, str] | None = None) -> Dataset:
    """Read JSONL records; abort with record id and line number on violations."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc}") from exc
            try:
                examples.append(example_from_dict(record))
            except SpanMismatch:
                raise
            except (KeyError, TypeError, ValueError, DatasetError) as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
    return Dataset(tuple(examples), split=split, meta=dict(meta or {}))


def write_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in dataset:
            fh.write(json.dumps(example_to_dict(e), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


