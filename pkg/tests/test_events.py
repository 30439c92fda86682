import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clf_denoise.events import (
    CoordinateOutOfRange,
    Event,
    EventError,
    EventStream,
    GeometryMismatch,
    Label,
    MalformedRecord,
    NonMonotonicTimestamp,
    Polarity,
    SensorGeometry,
    format_csv,
    merge_streams,
    parse_csv,
    read_csv,
    sniff_geometry,
    write_csv,
)

from conftest import G64, random_stream, stream_from_tuples


def test_parse_single_record():
    s = parse_csv("100,5,3,1", G64)
    assert len(s) == 1
    assert s[0] == Event(100, 5, 3, Polarity.ON, Label.UNKNOWN)


def test_parse_labels_and_comments():
    s = parse_csv("# a comment\n1,0,0,0,1\n\n2,1,1,1,0\n", G64)
    assert s.label.tolist() == [Label.SIGNAL, Label.NOISE]
    assert s.p.tolist() == [0, 1]


def test_parse_out_of_range():
    with pytest.raises(CoordinateOutOfRange) as e:
        parse_csv("100,70,3,1", G64)
    assert e.value.line == 1


def test_parse_non_monotonic():
    with pytest.raises(NonMonotonicTimestamp) as e:
        parse_csv("200,1,1,0\n100,2,2,1", G64)
    assert e.value.line == 2


@pytest.mark.parametrize("line", ["1,2,3", "a,1,1,1", "1,1,1,2", "1,1,1,1,5", "1,1,1,1,1,1", "-5,1,1,1"])
def test_parse_malformed(line):
    with pytest.raises(MalformedRecord):
        parse_csv(line, G64)


def test_geometry_bounds():
    assert SensorGeometry.parse("346x260") == SensorGeometry(346, 260)
    assert str(SensorGeometry(4, 3)) == "4x3"
    for bad in ((0, 5), (5, 0), (2049, 4), (4, 2049)):
        with pytest.raises(ValueError):
            SensorGeometry(*bad)
    with pytest.raises(ValueError):
        SensorGeometry.parse("12x")


def test_stream_rejects_bad_columns():
    with pytest.raises(EventError):
        EventStream(G64, [5, 4], [0, 0], [0, 0], [0, 0], [0, 0])
    with pytest.raises(EventError):
        EventStream(G64, [1], [64], [0], [0], [0])


def test_stream_is_read_only():
    s = random_stream(0, n=10)
    with pytest.raises(ValueError):
        s.t[0] = 3


def test_write_empty_stream_reparses_empty():
    text = format_csv(EventStream.empty(G64))
    assert all(line.startswith("#") for line in text.splitlines())
    assert len(parse_csv(text, G64)) == 0


def test_one_event_round_trip(tmp_path):
    s = stream_from_tuples(G64, [(10, 1, 2, 0, 1)])
    write_csv(s, tmp_path / "a.csv")
    assert read_csv(tmp_path / "a.csv") == s
    assert sniff_geometry(tmp_path / "a.csv") == G64


def test_round_trip_10k():
    s = random_stream(3)
    buf = io.StringIO()
    write_csv(s, buf)
    assert parse_csv(buf.getvalue(), G64) == s


def test_unknown_labels_round_trip():
    s = stream_from_tuples(G64, [(1, 1, 1), (2, 2, 2, 0)])
    assert parse_csv(format_csv(s), G64) == s


def test_extra_columns_keep_label_alignment():
    s = stream_from_tuples(G64, [(1, 1, 1), (2, 2, 2, 0, 1)])
    rows = [line.split(",") for line in format_csv(s, {"decision": np.array([1, 0])}).splitlines()
            if not line.startswith("#")]
    assert rows == [["1", "1", "1", "1", "-1", "1"], ["2", "2", "2", "0", "1", "0"]]


events_st = st.lists(st.tuples(st.integers(0, 10**12), st.integers(0, 15), st.integers(0, 7),
                               st.integers(0, 1), st.sampled_from([-1, 0, 1])), max_size=40)


@given(events_st)
def test_round_trip_property(rows):
    g = SensorGeometry(16, 8)
    rows.sort(key=lambda r: r[0])
    s = stream_from_tuples(g, rows)
    assert parse_csv(format_csv(s), g) == s


def test_merge_orders_and_labels():
    sig = stream_from_tuples(G64, [(10, 1, 1)])
    noise = stream_from_tuples(G64, [(5, 2, 2)])
    m = merge_streams(sig, noise)
    assert m.t.tolist() == [5, 10]
    assert m.label.tolist() == [Label.NOISE, Label.SIGNAL]


def test_merge_empty():
    assert len(merge_streams(EventStream.empty(G64), EventStream.empty(G64))) == 0


def test_merge_tie_signal_first():
    m = merge_streams(stream_from_tuples(G64, [(7, 1, 1)]), stream_from_tuples(G64, [(7, 2, 2)]))
    assert m.label.tolist() == [Label.SIGNAL, Label.NOISE]


def test_merge_geometry_mismatch():
    with pytest.raises(GeometryMismatch):
        merge_streams(EventStream.empty(G64), EventStream.empty(SensorGeometry(8, 8)))


@given(st.lists(st.integers(0, 1000), max_size=30), st.lists(st.integers(0, 1000), max_size=30))
def test_merge_property(ts, tn):
    a = stream_from_tuples(G64, [(t, 0, 0) for t in sorted(ts)])
    b = stream_from_tuples(G64, [(t, 1, 1) for t in sorted(tn)])
    m = merge_streams(a, b)
    assert len(m) == len(a) + len(b)
    assert np.all(np.diff(m.t) >= 0)
    assert m.count(Label.SIGNAL) == len(a)
    # stable: within equal t, all signal events come before noise events
    for t in set(ts) & set(tn):
        labs = m.label[m.t == t].tolist()
        assert labs == sorted(labs, reverse=True)
