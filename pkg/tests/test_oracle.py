import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dslice.core import EventId
from dslice.oracle import (
    CentralSlicer,
    LatticeBudgetExceeded,
    centralized_online_slice,
    enumerate_lattice,
    jb_of_event,
    join_irreducible,
    satisfying_cuts_from_slice,
    slice_bruteforce,
)
from dslice.predicates import CHANNELS_EMPTY, FALSE, conj, evaluate, holds
from dslice.trace import TraceBuilder

from conftest import regular_specs, small_traces

TABLE_TRUE = {(0, 0), (1, 0), (0, 1), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)}
TABLE_FALSE = {(2, 0), (3, 0), (2, 1), (3, 1)}
FIG2_JB = {"a": (1, 0), "b": (2, 2), "c": (3, 2), "e": (0, 1), "f": (2, 2), "g": (2, 3)}


def unmatched_send_trace():
    b = TraceBuilder(2)
    b.internal(1)
    b.send(1, 2)
    b.internal(2)
    return b.build()


def test_fig2_lattice_and_verdicts(fig2):
    lattice = enumerate_lattice(fig2)
    assert len(lattice) == 12
    verdict = {c.frontier: evaluate(CHANNELS_EMPTY, c) for c in lattice.cuts}
    assert {f for f, v in verdict.items() if v} == TABLE_TRUE
    assert {f for f, v in verdict.items() if not v} == TABLE_FALSE


def test_lattice_counts(fig1):
    # every cut including those where some process has not started yet
    assert len(enumerate_lattice(fig1)) == 59
    started = [f for f in enumerate_lattice(fig1).frontiers if min(f) >= 1]
    assert len(started) == 32


def test_chain_lattice():
    b = TraceBuilder(1)
    for _ in range(3):
        b.internal(1)
    assert len(enumerate_lattice(b.build())) == 4


def test_lattice_budget(fig1):
    with pytest.raises(LatticeBudgetExceeded):
        enumerate_lattice(fig1, budget=10)


def test_lattice_edges_are_single_steps(fig2):
    lattice = enumerate_lattice(fig2)
    edges = list(lattice.covering_edges())
    assert all(sum(g) - sum(f) == 1 for f, g in edges)
    # 8 steps on P1 and 8 on P2 over the 12 cuts
    assert len(edges) == 16


def test_jb_examples(fig2):
    for label, cut in FIG2_JB.items():
        assert jb_of_event(fig2, CHANNELS_EMPTY, label) == cut


def test_jb_absent_for_unreceived_send():
    t = unmatched_send_trace()
    assert jb_of_event(t, CHANNELS_EMPTY, (1, 2)) is None
    assert jb_of_event(t, CHANNELS_EMPTY, (1, 1)) == (1, 0)


def test_slice_of_fig2(fig2):
    sl = slice_bruteforce(fig2, CHANNELS_EMPTY)
    assert sl.cuts == {(1, 0), (0, 1), (2, 2), (3, 2), (2, 3)}
    assert {fig2.label(e): c for e, c in sl.jb.items()} == FIG2_JB
    assert satisfying_cuts_from_slice(sl) == TABLE_TRUE


def test_slice_of_fig1(fig1):
    sl = slice_bruteforce(fig1, conj("x1>=1", "x3<=3"))
    states = {c for c in satisfying_cuts_from_slice(sl) if min(c) >= 1}
    listed = [
        "aefuv", "aefuvb", "aefuvw", "aefuvbw", "aefuvwg", "aefuvbwg",
    ]
    assert states == {fig1.cut_of(list(s)).frontier for s in listed}


def test_false_gives_empty_slice(fig2):
    sl = slice_bruteforce(fig2, FALSE)
    assert sl.jb == {} and satisfying_cuts_from_slice(sl) == set()


def test_central_single_event():
    b = TraceBuilder(2)
    a = b.internal(1)
    t = b.build()
    c = CentralSlicer(2, CHANNELS_EMPTY, t.initial_states)
    c.on_event(a)
    assert c.outputs == [(1, 1, (1, 0))]


def test_central_unreceived_send_emits_nothing():
    t = unmatched_send_trace()
    sl = centralized_online_slice(t.linearize(), CHANNELS_EMPTY, t)
    assert EventId(1, 2) not in sl.jb
    assert sl.jb == slice_bruteforce(t, CHANNELS_EMPTY).jb


def interleavings(trace, rng):
    pos = [0] * trace.n
    out = []
    while len(out) < len(trace):
        i = rng.choice([i for i in range(trace.n) if pos[i] < len(trace.events[i])])
        out.append(trace.events[i][pos[i]])
        pos[i] += 1
    return out


def test_central_fig2_any_interleaving(fig2):
    expect = slice_bruteforce(fig2, CHANNELS_EMPTY)
    rng = random.Random(1)
    for _ in range(30):
        got = centralized_online_slice(interleavings(fig2, rng), CHANNELS_EMPTY, fig2)
        assert got.jb == expect.jb


@given(st.data())
def test_central_matches_bruteforce(data):
    trace = data.draw(small_traces(max_n=4, max_bound=5))
    spec = data.draw(regular_specs(trace.n))
    order = interleavings(trace, random.Random(data.draw(st.integers(0, 10**6))))
    assert centralized_online_slice(order, spec, trace).jb == slice_bruteforce(trace, spec).jb


@given(st.data())
def test_satisfying_cuts_form_sublattice(data):
    trace = data.draw(small_traces(max_n=3, max_bound=4))
    spec = data.draw(regular_specs(trace.n))
    sat = {c.frontier for c in enumerate_lattice(trace).cuts if holds(spec, c.states)}
    for x, y in itertools.combinations(sat, 2):
        assert tuple(map(max, x, y)) in sat
        assert tuple(map(min, x, y)) in sat


@given(st.data())
def test_slice_cuts_are_join_irreducible(data):
    trace = data.draw(small_traces(max_n=3, max_bound=4))
    spec = data.draw(regular_specs(trace.n))
    lattice = enumerate_lattice(trace)
    sat = {c.frontier for c in lattice.cuts if holds(spec, c.states)}
    for cut in slice_bruteforce(trace, spec, lattice).cuts:
        assert cut in sat
        assert join_irreducible(cut, sat)


@given(st.data())
def test_reconstruction_from_slice(data):
    trace = data.draw(small_traces(max_n=3, max_bound=5))
    spec = data.draw(regular_specs(trace.n))
    lattice = enumerate_lattice(trace)
    sat = {c.frontier for c in lattice.cuts if holds(spec, c.states)}
    assert satisfying_cuts_from_slice(slice_bruteforce(trace, spec, lattice)) == sat
