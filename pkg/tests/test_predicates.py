import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dslice.core import LocalState
from dslice.oracle import enumerate_lattice, verdicts
from dslice.predicates import (
    CHANNELS_EMPTY,
    FALSE,
    TRUE,
    ContractViolation,
    PredKind,
    SpecificationError,
    conj,
    evaluate,
    forbidden_process,
    holds,
    is_regular_witness,
    parse,
)
from dslice.trace import TraceBuilder

from conftest import regular_specs, small_traces


def test_channels_empty_on_table_rows(fig2):
    assert not evaluate(CHANNELS_EMPTY, fig2.cut([2, 1]))
    assert evaluate(CHANNELS_EMPTY, fig2.cut([2, 2]))
    assert evaluate(CHANNELS_EMPTY, fig2.cut([0, 0]))


def test_forbidden_process_examples(fig2):
    assert forbidden_process(CHANNELS_EMPTY, fig2.cut([2, 1]), 1) == 2
    assert forbidden_process(CHANNELS_EMPTY, fig2.cut([2, 0]), 1) == 2
    states = (LocalState({"x1": 0}, (0, 0), (0, 0)), LocalState({"x2": 5}, (0, 0), (0, 0)))
    assert forbidden_process(conj("x1>=1", "x2>=1"), states, 1) == 1


def test_forbidden_process_prefers_self_then_lowest_pid():
    states = tuple(LocalState({f"x{i}": 0}, (0,) * 3, (0,) * 3) for i in (1, 2, 3))
    spec = conj("x1>=1", "x2>=1", "x3>=1")
    assert forbidden_process(spec, states, 3) == 3
    assert forbidden_process(conj("x2>=1", "x3>=1"), states, 1) == 2


def test_forbidden_process_on_satisfying_cut(fig2):
    with pytest.raises(ContractViolation):
        forbidden_process(CHANNELS_EMPTY, fig2.cut([2, 2]), 1)


def test_unknown_variable(fig2):
    with pytest.raises(SpecificationError):
        evaluate(conj("y1>=0"), fig2.cut([1, 0]))


def test_clause_on_missing_process(fig2):
    with pytest.raises(SpecificationError):
        evaluate(conj("x5>=0"), fig2.cut([1, 0]))


@pytest.mark.parametrize("text, kind", [
    ("conj x1>=1 x3<=3", PredKind.CONJUNCTIVE),
    ("channels-empty", PredKind.ALL_CHANNELS_EMPTY),
    ("in-transit 1 2 <=0", PredKind.AT_MOST_K_IN_TRANSIT),
    ("channels-empty ; conj x1>0", PredKind.CONJUNCTION_OF_THESE),
    ("true", PredKind.CONSTANT),
])
def test_parse_kinds(text, kind):
    spec = parse(text)
    assert spec.kind is kind
    assert parse(str(spec)) == spec


def test_parse_details():
    spec = parse("conj level@2>=4 x1<0")
    assert [(c.pid, c.var, c.op, c.const) for c in spec.clauses] == [(2, "level", ">=", 4), (1, "x1", "<", 0)]
    assert parse("in-transit 2 1 <3").bound == 2


@pytest.mark.parametrize("text", ["", "bogus", "conj", "conj x>=1", "conj x1=>1", "in-transit 1 1 <=0",
                                  "in-transit 1 2", "channels-empty 3", "in-transit 1 2 <0"])
def test_parse_errors(text):
    with pytest.raises(SpecificationError):
        parse(text)


def test_constants(fig2):
    assert evaluate(TRUE, fig2.cut([0, 0]))
    assert not evaluate(FALSE, fig2.cut([3, 3]))


def test_in_transit_bound():
    b = TraceBuilder(2)
    b.send(1, 2)
    b.send(1, 2)
    t = b.build()
    assert evaluate(parse("in-transit 1 2 <=2"), t.cut([2, 0]))
    assert not evaluate(parse("in-transit 1 2 <=1"), t.cut([2, 0]))
    assert forbidden_process(parse("in-transit 1 2 <=1"), t.cut([2, 0]), 1) == 2
    assert evaluate(parse("in-transit 2 1 <=0"), t.cut([2, 0]))


def test_regular_witness_examples(fig1, fig2):
    assert is_regular_witness(CHANNELS_EMPTY, fig2)
    assert is_regular_witness(conj("x1>=1", "x3<=3"), fig1)


def test_relational_sum_is_not_regular():
    b = TraceBuilder(2)
    b.internal(1, x1=1)
    b.internal(1, x1=2)
    b.internal(2, x2=1)
    b.internal(2, x2=2)
    t = b.build()
    assert not is_regular_witness(lambda s: s[0].vars["x1"] + s[1].vars["x2"] == 3, t)


@given(st.data())
def test_linearity_contract(data):
    trace = data.draw(small_traces(max_n=3, max_bound=4))
    spec = data.draw(regular_specs(trace.n))
    lattice = enumerate_lattice(trace)
    sat = [c for c in lattice.cuts if evaluate(spec, c)]
    for cut in lattice.cuts:
        if evaluate(spec, cut):
            continue
        for me in range(1, trace.n + 1):
            k = forbidden_process(spec, cut, me)
            for d in sat:
                above = all(x >= y for x, y in zip(d.frontier, cut.frontier))
                assert not (above and d.frontier[k - 1] == cut.frontier[k - 1])


@given(st.data())
def test_generated_specs_are_regular(data):
    trace = data.draw(small_traces(max_n=3, max_bound=4))
    assert is_regular_witness(data.draw(regular_specs(trace.n)), trace)


@given(st.data())
def test_vectorised_verdicts_match_scalar(data):
    trace = data.draw(small_traces(max_n=4, max_bound=4))
    spec = data.draw(regular_specs(trace.n))
    lattice = enumerate_lattice(trace)
    expect = np.array([holds(spec, c.states) for c in lattice.cuts])
    assert (verdicts(spec, trace, lattice.frontiers) == expect).all()


@given(st.data())
def test_conjunctive_is_and_of_local_clauses(data):
    trace = data.draw(small_traces(max_n=3, max_bound=4))
    spec = data.draw(regular_specs(trace.n))
    if spec.kind is not PredKind.CONJUNCTIVE:
        return
    for cut in enumerate_lattice(trace).cuts:
        local = all(cl.holds(cut.states[cl.pid - 1]) for cl in spec.clauses)
        assert evaluate(spec, cut) == local == evaluate(spec, cut)
