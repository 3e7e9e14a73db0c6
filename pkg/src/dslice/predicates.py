"""Regular predicates over global states and their forbidden-process search.

Text grammar (whitespace separated, used by the CLI)::

    conj x1>=1 x3<=3        conjunction of local clauses
    channels-empty          every channel empty
    in-transit 1 2 <=0      at most k messages in transit from P1 to P2
    A ; B                   conjunction of any of the above
    true | false            constants

A clause variable is bound to a process either explicitly (``x@2>=1``) or
by its trailing digits (``x2`` lives on P2).
"""

from __future__ import annotations

import enum
import itertools
import operator
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from .core import Cut, LocalState


class SpecificationError(ValueError):
    """Malformed predicate text or a clause naming an unknown variable."""


class ContractViolation(RuntimeError):
    pass


class PredKind(enum.Enum):
    CONJUNCTIVE = "conj"
    ALL_CHANNELS_EMPTY = "channels-empty"
    AT_MOST_K_IN_TRANSIT = "in-transit"
    CONJUNCTION_OF_THESE = "and"
    CONSTANT = "const"


_OPS: dict[str, Callable[[int, int], bool]] = {
    "<=": operator.le,
    ">=": operator.ge,
    "<": operator.lt,
    ">": operator.gt,
    "=": operator.eq,
    "==": operator.eq,
}


@dataclass(frozen=True)
class Clause:
    pid: int
    var: str
    op: str
    const: int

    def holds(self, state: LocalState) -> bool:
        try:
            value = state.vars[self.var]
        except KeyError:
            raise SpecificationError(f"P{self.pid} has no variable {self.var!r}") from None
        return _OPS[self.op](value, self.const)

    def __str__(self):
        return f"{self.var}{self.op}{self.const}"


@dataclass(frozen=True)
class PredicateSpec:
    kind: PredKind
    clauses: tuple[Clause, ...] = ()
    channel: tuple[int, int] = (0, 0)
    bound: int = 0
    members: tuple["PredicateSpec", ...] = ()
    value: bool = True

    def __post_init__(self):
        if self.kind is PredKind.CONJUNCTION_OF_THESE and not self.members:
            raise SpecificationError("a conjunction needs at least one member")

    def __str__(self):
        k = self.kind
        if k is PredKind.CONJUNCTIVE:
            return "conj " + " ".join(map(str, self.clauses))
        if k is PredKind.ALL_CHANNELS_EMPTY:
            return "channels-empty"
        if k is PredKind.AT_MOST_K_IN_TRANSIT:
            return f"in-transit {self.channel[0]} {self.channel[1]} <={self.bound}"
        if k is PredKind.CONSTANT:
            return "true" if self.value else "false"
        return " ; ".join(map(str, self.members))


TRUE = PredicateSpec(PredKind.CONSTANT, value=True)
FALSE = PredicateSpec(PredKind.CONSTANT, value=False)
CHANNELS_EMPTY = PredicateSpec(PredKind.ALL_CHANNELS_EMPTY)


def conj(*clauses: str) -> PredicateSpec:
    return parse("conj " + " ".join(clauses))


# -- parsing ---------------------------------------------------------------

_CLAUSE = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*?)(?:@(\d+))?(<=|>=|==|=|<|>)(-?\d+)$")


def _parse_clause(tok: str) -> Clause:
    m = _CLAUSE.match(tok)
    if not m:
        raise SpecificationError(f"bad clause {tok!r}")
    name, pid, op, const = m.groups()
    if pid is None:
        digits = re.search(r"(\d+)$", name)
        if not digits:
            raise SpecificationError(f"cannot tell which process owns {name!r}; write {name}@<pid>")
        pid = digits.group(1)
    return Clause(int(pid), name, op, int(const))


def parse(text: str) -> PredicateSpec:
    parts = [p.strip() for p in text.split(";") if p.strip()]
    if not parts:
        raise SpecificationError("empty predicate")
    specs = [_parse_one(p) for p in parts]
    return specs[0] if len(specs) == 1 else PredicateSpec(PredKind.CONJUNCTION_OF_THESE, members=tuple(specs))


def _parse_one(text: str) -> PredicateSpec:
    toks = text.split()
    head, args = toks[0], toks[1:]
    if head == "conj":
        if not args:
            raise SpecificationError("conj needs at least one clause")
        return PredicateSpec(PredKind.CONJUNCTIVE, clauses=tuple(_parse_clause(a) for a in args))
    if head in ("channels-empty", "all-channels-empty"):
        if args:
            raise SpecificationError("channels-empty takes no arguments")
        return CHANNELS_EMPTY
    if head == "in-transit":
        if len(args) != 3:
            raise SpecificationError("usage: in-transit <src> <dst> <=<k>")
        m = re.fullmatch(r"<=?(\d+)", args[2])
        if not m or not args[0].isdigit() or not args[1].isdigit():
            raise SpecificationError(f"bad in-transit arguments {args}")
        src, dst = int(args[0]), int(args[1])
        if src == dst:
            raise SpecificationError("in-transit channel needs two distinct processes")
        bound = int(m.group(1)) - (1 if args[2].startswith("<") and not args[2].startswith("<=") else 0)
        if bound < 0:
            raise SpecificationError("in-transit bound must be non-negative")
        return PredicateSpec(PredKind.AT_MOST_K_IN_TRANSIT, channel=(src, dst), bound=bound)
    if head in ("true", "false") and not args:
        return TRUE if head == "true" else FALSE
    raise SpecificationError(f"unknown predicate {head!r}")


# -- evaluation ------------------------------------------------------------

def _check_pid(pid: int, n: int) -> None:
    if not 1 <= pid <= n:
        raise SpecificationError(f"predicate names P{pid} but the computation has {n} processes")


def falsifiers(spec: PredicateSpec, states: Sequence[LocalState]) -> set[int]:
    """Processes that must advance before ``spec`` can hold again.

    Empty exactly when ``spec`` holds on ``states``.  For ``false`` every
    process is returned; no satisfying cut is reachable anyway.
    """
    n = len(states)
    k = spec.kind
    if k is PredKind.CONSTANT:
        return set() if spec.value else set(range(1, n + 1))
    if k is PredKind.CONJUNCTIVE:
        out = set()
        for c in spec.clauses:
            _check_pid(c.pid, n)
            if not c.holds(states[c.pid - 1]):
                out.add(c.pid)
        return out
    if k is PredKind.ALL_CHANNELS_EMPTY:
        return {
            j + 1
            for j in range(n)
            if any(states[i].sent[j] > states[j].recvd[i] for i in range(n) if i != j)
        }
    if k is PredKind.AT_MOST_K_IN_TRANSIT:
        src, dst = spec.channel
        _check_pid(src, n)
        _check_pid(dst, n)
        in_transit = states[src - 1].sent[dst - 1] - states[dst - 1].recvd[src - 1]
        return {dst} if in_transit > spec.bound else set()
    out = set()
    for m in spec.members:
        out |= falsifiers(m, states)
    return out


def holds(spec: PredicateSpec, states: Sequence[LocalState]) -> bool:
    k = spec.kind
    n = len(states)
    if k is PredKind.CONSTANT:
        return spec.value
    if k is PredKind.CONJUNCTIVE:
        ok = True
        for c in spec.clauses:
            _check_pid(c.pid, n)
            ok = c.holds(states[c.pid - 1]) and ok
        return ok
    if k is PredKind.CONJUNCTION_OF_THESE:
        return all([holds(m, states) for m in spec.members])
    return not falsifiers(spec, states)


def evaluate(spec: PredicateSpec, cut: Union[Cut, Sequence[LocalState]]) -> bool:
    """Verdict of ``spec`` on the global state after all events of ``cut``."""
    states = cut.states if isinstance(cut, Cut) else cut
    return holds(spec, states)


def forbidden_process(spec: PredicateSpec, cut: Union[Cut, Sequence[LocalState]], self_pid: int) -> int:
    """Self if self must advance, otherwise the smallest pid that must."""
    states = cut.states if isinstance(cut, Cut) else cut
    bad = falsifiers(spec, states)
    if not bad:
        raise ContractViolation("forbidden_process called on a satisfying cut")
    return self_pid if self_pid in bad else min(bad)


# -- regularity witness --------------------------------------------------------

def is_regular_witness(pred, trace, cuts=None) -> bool:
    """True iff the satisfying consistent cuts of ``trace`` are join/meet closed.

    ``pred`` is a ``PredicateSpec`` or any callable on a tuple of local
    states.  ``cuts`` defaults to the full lattice, so keep traces small.
    """
    from .oracle import enumerate_lattice

    test = pred if callable(pred) else (lambda states: holds(pred, states))
    if cuts is None:
        cuts = enumerate_lattice(trace).cuts
    sat = [c for c in cuts if test(c.states)]
    sat_frontiers = {c.frontier for c in sat}
    for c, d in itertools.combinations(sat, 2):
        j = tuple(max(a, b) for a, b in zip(c.frontier, d.frontier))
        m = tuple(min(a, b) for a, b in zip(c.frontier, d.frontier))
        if j not in sat_frontiers or m not in sat_frontiers:
            return False
    return True
