import itertools

import pytest
from hypothesis import given

from dslice.core import (
    ConfigurationError,
    Event,
    EventId,
    concurrent,
    cut_clock,
    happened_before,
    is_consistent,
    vc_less,
)
from dslice.oracle import enumerate_lattice

from conftest import small_traces


def ev(pid, eid, vc):
    return Event(EventId(pid, eid), tuple(vc))


a, b, c = ev(1, 1, [1, 0]), ev(1, 2, [2, 0]), ev(1, 3, [3, 0])
e, f, g = ev(2, 1, [0, 1]), ev(2, 2, [2, 2]), ev(2, 3, [2, 3])


def test_happened_before_examples():
    assert happened_before(b, f)
    assert not happened_before(a, e) and not happened_before(e, a)
    assert not happened_before(e, e)


def test_concurrent_examples():
    assert concurrent(a, e)
    assert not concurrent(b, f)
    assert not concurrent(e, e)


def test_mismatched_clock_lengths():
    with pytest.raises(ConfigurationError):
        happened_before(a, ev(3, 1, [0, 0, 1]))
    with pytest.raises(ConfigurationError):
        is_consistent([1, 0], [1, 0, 0])


def test_cut_clock_examples():
    assert cut_clock([a, b, e], 2) == (2, 1)
    assert cut_clock([], 2) == (0, 0)
    assert cut_clock([c, g], 2) == (3, 3)


def test_is_consistent_examples():
    assert not is_consistent([1, 2], [2, 2])
    assert is_consistent([3, 1], [3, 1])
    assert is_consistent([0, 0], [0, 0])


def test_join_meet_examples(fig2):
    cf, bg = fig2.cut([3, 2]), fig2.cut([2, 3])
    assert fig2.join(cf, bg).frontier == (3, 3)
    assert fig2.meet(cf, bg).frontier == (2, 2)
    assert fig2.join(cf, cf) == cf


def test_cut_equality_ignores_states(fig2):
    assert fig2.cut([1, 0]) == fig2.cut_of(["a"])
    assert str(fig2.cut([2, 1])) == "[2,1]"
    assert fig2.format_cut(fig2.cut([2, 1])) == "[b,e]"


@given(small_traces())
def test_happened_before_is_strict_partial_order(trace):
    evs = list(trace)
    for x in evs:
        assert not happened_before(x, x)
    for x, y in itertools.permutations(evs, 2):
        if happened_before(x, y):
            assert not happened_before(y, x)
            for z in evs:
                if happened_before(y, z):
                    assert happened_before(x, z)


@given(small_traces(max_n=3, max_bound=4))
def test_consistent_cuts_are_causally_closed(trace):
    lattice = enumerate_lattice(trace)
    evs = list(trace)
    for cut in lattice.cuts:
        inside = [x for x in evs if cut.frontier[x.pid - 1] >= x.eid]
        for x in inside:
            for y in evs:
                if happened_before(y, x):
                    assert cut.frontier[y.pid - 1] >= y.eid
        assert cut.consistent


@given(small_traces(max_n=3, max_bound=4))
def test_join_and_meet_preserve_consistency(trace):
    cuts = enumerate_lattice(trace).cuts
    for c1, c2 in itertools.combinations(cuts, 2):
        assert trace.join(c1, c2).consistent
        assert trace.meet(c1, c2).consistent


@given(small_traces())
def test_clock_of_frontier_events_equals_frontier(trace):
    for cut in enumerate_lattice(trace).cuts:
        frontier_events = [trace.event((i + 1, k)) for i, k in enumerate(cut.frontier) if k]
        assert cut_clock(frontier_events, trace.n) == cut.frontier


def test_vc_less_requires_strict_component():
    assert not vc_less((1, 1), (1, 1))
    assert vc_less((1, 0), (1, 1))
