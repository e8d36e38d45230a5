import json

import pytest
from hypothesis import given, strategies as st

from splocal.core import (
    Dataset,
    EmptyInput,
    EntitySpan,
    Example,
    MalformedRecord,
    Provenance,
    SpanMismatch,
    UnbalancedQuotes,
    byte_len,
    example_to_dict,
    extract_parameters,
    parse_logical_form,
    read_dataset,
    validate_example,
    write_dataset,
)

from fixtures import make_source_dataset


def test_parse_quoted_region():
    lf = parse_logical_form('@restaurant filter cuisine == " italian food "')
    assert lf.tokens == ("@restaurant", "filter", "cuisine", "==", '"', "italian", "food", '"')
    regions = lf.quoted_regions()
    assert len(regions) == 1
    assert regions[0].value_tokens == ("italian", "food")
    assert (regions[0].start_tok, regions[0].end_tok) == (4, 8)


def test_parse_placeholder_single_token():
    lf = parse_logical_form("@hotel filter checkin == TIME_0")
    assert lf.tokens == ("@hotel", "filter", "checkin", "==", "TIME_0")
    assert lf.quoted_regions() == []
    params = lf.parameters()
    assert len(params) == 1 and params[0].is_placeholder
    assert params[0].value_tokens == ("TIME_0",)


def test_parse_unbalanced_quotes():
    with pytest.raises(UnbalancedQuotes):
        parse_logical_form('a " b')


def test_parse_empty_input():
    with pytest.raises(EmptyInput):
        parse_logical_form("   ")


def test_extract_parameters_two_regions_in_order():
    lf = parse_logical_form('p == " x " and q == " y "')
    # Independent scan: enumerate quote token indices pairwise.
    quote_positions = [i for i, t in enumerate(lf.tokens) if t == '"']
    expected = [
        (quote_positions[0], quote_positions[1] + 1),
        (quote_positions[2], quote_positions[3] + 1),
    ]
    params = extract_parameters(lf)
    assert [(p.start_tok, p.end_tok) for p in params] == expected
    assert [p.value for p in params] == ["x", "y"]


def test_extract_parameters_empty():
    assert extract_parameters(parse_logical_form("a b c")) == []


@given(
    st.lists(
        st.one_of(
            st.sampled_from(["find", "near", "==", "@restaurant", "TIME_0"]),
            st.tuples(st.sampled_from(["pizza", "roma", "sole mare"])).map(
                lambda v: f'" {v[0]} "'
            ),
        ),
        min_size=1,
        max_size=8,
    )
)
def test_parse_serialize_round_trip(segments):
    text = " ".join(segments)
    lf = parse_logical_form(text)
    assert parse_logical_form(lf.serialize()) == lf
    assert lf.serialize() == text


def test_span_slice_must_match():
    with pytest.raises(SpanMismatch):
        Example(
            id="x",
            lang="en",
            utterance="find pizza here",
            logical_form=parse_logical_form('c == " pizza "'),
            spans=(EntitySpan(0, 4, "cuisine", "pizza"),),
        )


def test_spans_must_be_ordered_and_disjoint():
    with pytest.raises(SpanMismatch):
        Example(
            id="x",
            lang="en",
            utterance="pizza pasta",
            logical_form=parse_logical_form("a"),
            spans=(
                EntitySpan(6, 11, "cuisine", "pasta"),
                EntitySpan(0, 5, "cuisine", "pizza"),
            ),
        )


def test_byte_offsets_cover_multibyte_text():
    utterance = "找 北京烤鸭 餐厅"
    value = "北京烤鸭"
    start = byte_len("找 ")
    e = Example(
        id="zh-1",
        lang="zh",
        utterance=utterance,
        logical_form=parse_logical_form(f'cuisine == " {value} "'),
        spans=(EntitySpan(start, start + byte_len(value), "cuisine", value),),
    )
    assert validate_example(e) == []


def test_validate_flags_missing_parameter():
    e = Example(
        id="x",
        lang="en",
        utterance="find pasta",
        logical_form=parse_logical_form('c == " pizza "'),
        spans=(),
    )
    assert validate_example(e) != []


def test_masked_utterance_replaces_values_with_types():
    d = make_source_dataset(n=1)
    e = d.examples[0]
    masked = e.masked_utterance()
    for span in e.spans:
        assert span.param_type in masked
        assert span.value not in masked or span.value in span.param_type


def test_dataset_rejects_duplicate_ids():
    e = make_source_dataset(n=1).examples[0]
    with pytest.raises(Exception):
        Dataset((e, e))


def test_round_trip_dataset(tmp_path):
    dataset = make_source_dataset(n=25)
    path = tmp_path / "toy.jsonl"
    write_dataset(dataset, path)
    again = read_dataset(path)
    assert again.examples == dataset.examples


def test_read_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert len(read_dataset(path)) == 0


def test_read_rejects_bad_span(tmp_path):
    e = make_source_dataset(n=1).examples[0]
    record = example_to_dict(e)
    record["spans"][0]["value"] = "wrong"
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(SpanMismatch):
        read_dataset(path)


def test_read_reports_line_numbers(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": "a"}\n')
    with pytest.raises(MalformedRecord) as exc:
        read_dataset(path)
    assert exc.value.line_no == 1


def test_provenance_round_trip(tmp_path):
    e = make_source_dataset(n=1).examples[0]
    augmented = Example(e.id, e.lang, e.utterance, e.logical_form, e.spans, Provenance.AUGMENTED)
    path = tmp_path / "p.jsonl"
    write_dataset(Dataset((augmented,)), path)
    assert read_dataset(path).examples[0].provenance is Provenance.AUGMENTED
