from hypothesis import given, strategies as st

from splocal.core import EntitySpan, Example, parse_logical_form
from splocal.preproc import (
    RulePack,
    apply_rules,
    apply_rules_outside_spans,
    builtin_rulepack,
    is_quote_token,
    load_rulepack,
    lowercase_except_placeholders,
    mark_entities,
    unmark,
)

from fixtures import make_source_dataset


def example(utterance, spans, lf='x'):
    return Example("e1", "en", utterance, parse_logical_form(lf), spans)


def test_mark_wraps_each_span():
    e = example(
        "find burgers near Woodland Pond",
        (
            EntitySpan(5, 12, "cuisine", "burgers"),
            EntitySpan(18, 31, "location", "Woodland Pond"),
        ),
        lf='c == " burgers " and l == " Woodland Pond "',
    )
    marked = mark_entities(e)
    assert marked.text == 'find " burgers " near " Woodland Pond "'
    assert len(marked.regions) == 2
    for open_idx, close_idx, span in marked.regions:
        assert marked.text[open_idx] == '"'
        assert marked.text[close_idx] == '"'


def test_mark_zero_spans_is_identity():
    e = example("nothing to see", ())
    marked = mark_entities(e)
    assert marked.text == "nothing to see"
    assert marked.regions == ()


def test_mark_wraps_placeholders():
    e = example("at TIME_0", (EntitySpan(3, 9, "TIME", "TIME_0", True),), lf="t == TIME_0")
    assert mark_entities(e).text == 'at " TIME_0 "'


def test_mark_can_skip_placeholders():
    e = example("at TIME_0", (EntitySpan(3, 9, "TIME", "TIME_0", True),), lf="t == TIME_0")
    marked = mark_entities(e, include_placeholders=False)
    assert marked.text == "at TIME_0"
    assert marked.regions[0][:2] == (-1, -1)


def test_mark_adjacent_spans_get_separator(caplog):
    e = example(
        "pizzapasta",
        (EntitySpan(0, 5, "cuisine", "pizza"), EntitySpan(5, 10, "cuisine", "pasta")),
        lf='a == " pizza " and b == " pasta "',
    )
    with caplog.at_level("WARNING"):
        marked = mark_entities(e)
    assert '""' not in marked.text
    assert unmark(marked) == e.utterance


def test_unmark_inverts_mark_on_toy_corpus():
    for e in make_source_dataset(n=50):
        marked = mark_entities(e)
        assert unmark(marked) == e.utterance
        assert len(marked.regions) == len(e.spans)


def test_rule_application_order_dependent():
    pack = RulePack(
        lang="x",
        pre_rules=load_rulepack({"lang": "x", "pre": [
            {"pattern": "a", "replace": "b", "why": ""},
            {"pattern": "b", "replace": "c", "why": ""},
        ], "post": []}).pre_rules,
    )
    assert apply_rules("a", pack, "pre") == "c"


def test_cjk_pack_splits_english_parameters():
    pack = builtin_rulepack("zh")
    assert apply_rules("意大利pizza", pack, "post") == "意大利 pizza"
    assert apply_rules("找pizza店", pack, "post") == "找 pizza 店"


def test_empty_pack_is_identity():
    pack = RulePack(lang="xx")
    assert apply_rules("anything at all", pack, "pre") == "anything at all"


def test_arabic_pack_question_mark_round_trip():
    pack = builtin_rulepack("fa")
    stripped = apply_rules("do you have wifi ?", pack, "pre")
    assert "?" not in stripped
    # The NMT emitted an ASCII mark; the post rule restores the Arabic-script one.
    restored = apply_rules("آیا وای فای دارید ?", pack, "post")
    assert restored.endswith("؟")
    assert "?" not in restored


def test_rules_outside_spans_preserve_values():
    pack = load_rulepack({"lang": "x", "pre": [{"pattern": "a", "replace": "@", "why": ""}], "post": []})
    e = example(
        "a la carte pasta anyway",
        (EntitySpan(11, 16, "cuisine", "pasta"),),
        lf='c == " pasta "',
    )
    rewritten = apply_rules_outside_spans(e, pack, "pre")
    assert rewritten.spans[0].value == "pasta"
    assert "@ l@ c@rte" in rewritten.utterance
    assert "p@st@" not in rewritten.utterance


def test_lowercase_keeps_placeholders():
    assert lowercase_except_placeholders("Find Hotels at TIME_0") == "find hotels at TIME_0"
    assert lowercase_except_placeholders("TIME_0 DATE_1") == "TIME_0 DATE_1"


def test_lowercase_unicode_default():
    # Locale-independent lowercasing: U+0130 maps to 'i' + combining dot above.
    assert lowercase_except_placeholders("İstanbul") == "İstanbul".lower() == "i̇stanbul"


@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=60))
def test_lowercase_idempotent(text):
    once = lowercase_except_placeholders(text)
    assert lowercase_except_placeholders(once) == once


def test_quote_class_accepts_typographic_quotes():
    for tok in ['"', "«", "»", "„", "“", "”", "「", "」"]:
        assert is_quote_token(tok)
    assert not is_quote_token("word")
    assert not is_quote_token("")


WORDS = st.sampled_from(
    ["find", "burgers", "near", "café", "überall", "北京", "烤鸭", "فندق", "γειά", "x"]
)


@given(st.lists(WORDS, min_size=1, max_size=8), st.data())
def test_unmark_inverts_mark_property(words, data):
    """Byte-exact recovery across scripts, for any subset of words as spans."""
    from splocal.core import byte_len

    utterance = " ".join(words)
    span_choices = data.draw(
        st.lists(st.integers(min_value=0, max_value=len(words) - 1), unique=True, max_size=4)
    )
    spans = []
    offset = 0
    for i, word in enumerate(words):
        if i in sorted(span_choices):
            spans.append(EntitySpan(offset, offset + byte_len(word), "t", word))
        offset += byte_len(word) + 1  # the joining space
    lf = " ".join(f'p{i} == " {words[i]} "' for i in sorted(span_choices)) or "none"
    e = example(utterance, tuple(spans), lf=lf)
    marked = mark_entities(e)
    assert unmark(marked) == e.utterance
    assert len(marked.regions) == len(spans)
    for open_idx, close_idx, span in marked.regions:
        assert marked.text[open_idx] == '"'
        assert marked.text[close_idx] == '"'
