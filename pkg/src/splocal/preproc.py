"""Pre- and post-translation text normalization.

Marking wraps entity and placeholder spans in ASCII double quotes before
translation so the spans can be tracked through the NMT system. Unmarking is
byte-exact. Rule packs are per-language regex pipelines shipped as data
files; application order matters and is preserved.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from importlib import resources

from .core import Example, EntitySpan, byte_len, is_placeholder_token

log = logging.getLogger(__name__)

# NMT systems localize punctuation; treat typographic quotes as one class.
QUOTE_CLASS = '"«»„“”「」‘’‚'


def is_quote_char(ch: str) -> bool:
    return len(ch) == 1 and ch in QUOTE_CLASS


def is_quote_token(token: str) -> bool:
    stripped = token.lstrip("▁").lstrip("##")
    return bool(stripped) and all(c in QUOTE_CLASS for c in stripped)


@dataclass(frozen=True)
class MarkedUtterance:
    """Utterance with spans wrapped in quotes; insertion points tracked.

    regions[i] = (open_quote_index, close_quote_index, span) where indices are
    character positions of the inserted quote characters in ``text`` (-1 for
    spans left unwrapped). ``inserted`` lists every inserted character range,
    so unmark() recovers the original utterance byte-exactly.
    """

    text: str
    regions: tuple[tuple[int, int, EntitySpan], ...]
    inserted: tuple[tuple[int, int], ...]


def mark_entities(e: Example, include_placeholders: bool = True) -> MarkedUtterance:
    """Wrap each span as ``" value "`` with single-space padding.

    Placeholder spans are wrapped too unless include_placeholders is False
    (backends that translate placeholders verbatim do not need the quotes).
    Adjacent spans that would produce touching quotes get a separating space
    (reported as a warning).
    """
    raw = e.utterance.encode("utf-8")
    pieces: list[str] = []
    regions: list[tuple[int, int, EntitySpan]] = []
    inserted: list[tuple[int, int]] = []
    cursor = 0
    char_pos = 0
    prev_wrapped_end = None

    def insert(segment: str) -> None:
        nonlocal char_pos
        pieces.append(segment)
        inserted.append((char_pos, char_pos + len(segment)))
        char_pos += len(segment)

    for span in e.spans:
        wrap = include_placeholders or not span.is_placeholder
        gap = raw[cursor : span.start].decode("utf-8")
        pieces.append(gap)
        char_pos += len(gap)
        if wrap and prev_wrapped_end == span.start and not gap:
            log.warning("example %s: adjacent spans at byte %d, inserting separator space", e.id, span.start)
            insert(" ")
        value = raw[span.start : span.end].decode("utf-8")
        if wrap:
            open_idx = char_pos
            insert('" ')
            pieces.append(value)
            char_pos += len(value)
            close_idx = char_pos + 1
            insert(' "')
            regions.append((open_idx, close_idx, span))
            prev_wrapped_end = span.end
        else:
            pieces.append(value)
            char_pos += len(value)
            regions.append((-1, -1, span))
            prev_wrapped_end = None
        cursor = span.end
    pieces.append(raw[cursor:].decode("utf-8"))
    return MarkedUtterance(text="".join(pieces), regions=tuple(regions), inserted=tuple(inserted))


def unmark(m: MarkedUtterance) -> str:
    """Remove every inserted segment, recovering the original utterance."""
    drop = set()
    for start, end in m.inserted:
        drop.update(range(start, end))
    return "".join(ch for i, ch in enumerate(m.text) if i not in drop)


@dataclass(frozen=True)
class Rule:
    pattern: re.Pattern
    replace: str
    why: str = ""


@dataclass(frozen=True)
class RulePack:
    lang: str
    pre_rules: tuple[Rule, ...] = ()
    post_rules: tuple[Rule, ...] = ()


def _parse_rules(items) -> tuple[Rule, ...]:
    return tuple(Rule(re.compile(r["pattern"]), r["replace"], r.get("why", "")) for r in items)


def load_rulepack(source) -> RulePack:
    """Load a rule pack from a path or parsed JSON dict."""
    doc = source if isinstance(source, dict) else json.loads(open(source, encoding="utf-8").read())
    return RulePack(
        lang=doc["lang"],
        pre_rules=_parse_rules(doc.get("pre", [])),
        post_rules=_parse_rules(doc.get("post", [])),
    )


def builtin_rulepack(lang: str) -> RulePack:
    """Load the shipped rule pack for a language; empty pack when none exists."""
    base = lang.split("-")[0].lower()
    try:
        text = resources.files("splocal.rulepacks").joinpath(f"{base}.json").read_text("utf-8")
    except FileNotFoundError:
        return RulePack(lang=lang)
    return load_rulepack(json.loads(text))


def apply_rules(text: str, pack: RulePack, phase: str) -> str:
    """Apply the pack's pre or post rules in order. Not necessarily idempotent."""
    rules = pack.pre_rules if phase == "pre" else pack.post_rules
    for rule in rules:
        text = rule.pattern.sub(rule.replace, text)
    return text


def apply_rules_outside_spans(e: Example, pack: RulePack, phase: str) -> Example:
    """Apply rules to the utterance segments between spans, recomputing offsets.

    Span values are never rewritten, so the span/logical-form alignment is
    preserved. Rules cannot match across a span boundary.
    """
    raw = e.utterance.encode("utf-8")
    pieces: list[str] = []
    new_spans: list[EntitySpan] = []
    cursor = 0
    offset = 0
    for span in e.spans:
        segment = apply_rules(raw[cursor : span.start].decode("utf-8"), pack, phase)
        pieces.append(segment)
        offset += byte_len(segment)
        value = raw[span.start : span.end].decode("utf-8")
        pieces.append(value)
        new_spans.append(
            EntitySpan(offset, offset + byte_len(value), span.param_type, value, span.is_placeholder)
        )
        offset += byte_len(value)
        cursor = span.end
    pieces.append(apply_rules(raw[cursor:].decode("utf-8"), pack, phase))
    return Example(
        id=e.id,
        lang=e.lang,
        utterance="".join(pieces),
        logical_form=e.logical_form,
        spans=tuple(new_spans),
        provenance=e.provenance,
    )


_WS_SPLIT = re.compile(r"(\s+)")


def lowercase_except_placeholders(text: str) -> str:
    """Lowercase every token unless it is an entity placeholder (TIME_0, ...).

    Uses default unicode lowercasing, which is locale-independent; idempotent.
    """
    parts = _WS_SPLIT.split(text)
    return "".join(p if is_placeholder_token(p) else p.lower() for p in parts)
