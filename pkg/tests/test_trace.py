import pytest
from hypothesis import given

from dslice.core import EventId, Kind
from dslice.fixtures import three_process_example, two_process_example
from dslice.trace import TraceBuilder, TraceError, dumps, load_trace, loads, save_trace

from conftest import small_traces


def test_fig2_fixture_shape(fig2):
    assert len(fig2) == 6
    assert len(fig2.messages()) == 1
    assert fig2.event("f").vc == (2, 2)
    assert fig2.event("f").sender == fig2.names["b"]
    assert fig2 == two_process_example()


def test_fig1_fixture_shape(fig1):
    assert len(fig1) == 12
    pairs = {(fig1.label(s.id), fig1.label(r.id)) for s, r in fig1.messages()}
    assert pairs == {("c", "h"), ("f", "v"), ("w", "g")}
    assert fig1.event("h").vc == (3, 4, 3)
    assert fig1.event("g").vc == (0, 3, 3)
    assert [fig1.event(x).state.vars["x1"] for x in "abcd"] == [1, 2, -1, 0]
    assert fig1 == three_process_example()


def test_round_trip_file(tmp_path, fig1):
    path = tmp_path / "t.trace"
    save_trace(fig1, path)
    again = load_trace(path)
    assert again == fig1
    assert again.names == fig1.names


@given(small_traces())
def test_round_trip_random(trace):
    assert loads(dumps(trace)) == trace
    trace.validate()


def test_receive_before_send_rejected():
    text = "n=2\n2 1 recv vc=[1,1] vars{} recv<-1#1\n1 1 send vc=[1,0] vars{} send->2#1\n"
    with pytest.raises(TraceError, match="line 2"):
        loads(text)


def test_clock_mismatch_names_line():
    text = "n=2\n1 1 internal vc=[1,0] vars{}\n1 2 internal vc=[3,0] vars{}\n"
    with pytest.raises(TraceError) as err:
        loads(text)
    assert err.value.line == 3


def test_fifo_violation_rejected():
    text = (
        "n=2\n1 1 send vc=[1,0] vars{} send->2#1\n1 2 send vc=[2,0] vars{} send->2#2\n"
        "2 1 recv vc=[2,1] vars{} recv<-1#2\n"
    )
    with pytest.raises(TraceError, match="FIFO"):
        loads(text)


@pytest.mark.parametrize("text, line", [
    ("", None),
    ("n=0\n", 1),
    ("n=2\n3 1 internal vc=[1,0] vars{}\n", 2),
    ("n=2\n1 2 internal vc=[2,0] vars{}\n", 2),
    ("n=2\n1 1 internal vc=[1] vars{}\n", 2),
    ("n=2\n1 1 bogus\n", 2),
])
def test_malformed_records(text, line):
    with pytest.raises(TraceError) as err:
        loads(text)
    assert err.value.line == line


def test_builder_tracks_channel_counters():
    b = TraceBuilder(2)
    b.send(1, 2)
    b.send(1, 2)
    r = b.recv(2, 1)
    t = b.build()
    assert t.event((1, 2)).state.sent == (0, 2)
    assert r.state.recvd == (1, 0)
    assert r.msg.sender == EventId(1, 1)
    assert [e.id for e in t.unmatched_sends()] == [EventId(1, 2)]
    assert t.event((2, 1)).kind is Kind.MSGRECV


def test_empty_trace_round_trip():
    t = loads("n=3\n")
    assert len(t) == 0 and t.n == 3
    assert loads(dumps(t)) == t
