from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invdiff.traces import (FNV64_OFFSET, TraceFormatError, TraceSet, TraceValidationError,
                            decimalize, format_decimal, hash_string_value, parse_trace_file,
                            parse_traces, sample_traces, serialize_traces, write_trace_file)


def test_hash_empty_is_offset_basis():
    assert hash_string_value(b"") == FNV64_OFFSET == 14695981039346656037


def test_hash_pinned_values():
    # FNV-1a 64 reference values
    assert hash_string_value(b"a") == 0xAF63DC4C8601EC8C
    assert hash_string_value(b"abc") == 0xE71FA2190541574B
    assert hash_string_value(b"abd") == 0xE71FA71905415FCA
    assert hash_string_value("abc") == hash_string_value(b"abc")


def test_hash_no_collisions_on_random_corpus():
    rng = random.Random(3)
    words = {bytes(rng.randrange(256) for _ in range(rng.randrange(1, 12))) for _ in range(10_000)}
    hashes = {hash_string_value(w) for w in words}
    assert len(hashes) == len(words)


@pytest.mark.parametrize("value,text", [
    (3, "3"), (3.0, "3"), (-2.5, "-2.5"), (0.1234567, "0.123457"), (1e-9, "0"),
    (-1e-9, "0"), (2.100, "2.1"), (18446744073709551615, "18446744073709551615"),
])
def test_format_decimal(value, text):
    assert format_decimal(value) == text


def test_non_finite_rejected():
    with pytest.raises(TraceValidationError):
        format_decimal(float("nan"))


def _ts(rows, names=("x", "y"), bp="bp1", version="clean", input_id="in1"):
    return TraceSet.from_values(input_id, version, bp, names, rows)


def test_parse_two_rounds(tmp_path):
    p = tmp_path / "t.trace"
    p.write_text("#bp bp1 clean in1\n#vars x,y\n1,2\n3,4\n")
    [t] = parse_trace_file(p)
    assert len(t.rows) == 2 and t.variables == ("x", "y")
    assert t.rows[1].values == (3.0, 4.0)


def test_empty_file(tmp_path):
    p = tmp_path / "e.trace"
    p.write_text("")
    assert parse_trace_file(p) == []


def test_eleven_variables_rejected():
    names = ",".join(f"v{i}" for i in range(11))
    with pytest.raises(TraceValidationError):
        parse_traces(f"#bp b clean i\n#vars {names}\n" + ",".join(["1"] * 11) + "\n")


def test_row_width_mismatch_reports_line():
    with pytest.raises(TraceValidationError, match="line 4"):
        parse_traces("#bp b clean i\n#vars x,y\n1,2\n1\n")


def test_malformed_value_reports_line():
    with pytest.raises(TraceFormatError) as err:
        parse_traces("#bp b clean i\n#vars x\n1\nabc\n")
    assert err.value.line == 4


def test_data_before_header():
    with pytest.raises(TraceFormatError):
        parse_traces("1,2\n")


def test_zero_row_record_round_trips():
    t = _ts([])
    assert parse_traces(serialize_traces([t])) == [t]


def test_sample_below_cap_is_identity():
    t = _ts([(i, i) for i in range(100)])
    assert sample_traces(t, 1500, 1) is t


def test_sample_cap_subset_order_and_determinism():
    t = _ts([(i, 2 * i) for i in range(2000)])
    a = sample_traces(t, 1500, 7)
    b = sample_traces(t, 1500, 7)
    assert a == b and len(a.rows) == 1500
    idx = [r.round_index for r in a.rows]
    assert idx == sorted(idx)
    originals = set(t.rows)
    assert all(r in originals for r in a.rows)
    assert sample_traces(t, 1500, 8) != a


def test_sampled_trace_round_trips(tmp_path):
    t = sample_traces(_ts([(i, -i * 0.5) for i in range(50)]), 10, 2)
    write_trace_file(tmp_path / "s.trace", [t])
    assert parse_trace_file(tmp_path / "s.trace") == [t]


_values = st.one_of(st.integers(-10**6, 10**6),
                    st.floats(-1e6, 1e6, allow_nan=False).map(decimalize))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(_values, min_size=3, max_size=3), max_size=8),
       st.lists(st.lists(_values, min_size=1, max_size=1), max_size=4))
def test_round_trip_property(rows_a, rows_b):
    records = [_ts(rows_a, names=("a", "b", "c"), bp="p.q"), _ts(rows_b, names=("z",), version="buggy")]
    assert parse_traces(serialize_traces(records)) == records
