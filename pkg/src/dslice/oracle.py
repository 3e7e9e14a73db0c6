"""Ground truth for slicing: lattice enumeration, brute-force J_B, and the
centralized online slicer.

The enumeration works level by level on numpy frontier arrays; predicate
verdicts for the built-in predicate kinds are computed from per-process
truth tables rather than by materialising every global state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import Event, EventId, is_consistent, vmax
from .predicates import (
    PredicateSpec,
    PredKind,
    SpecificationError,
    forbidden_process,
    holds,
)
from .trace import Trace

DEFAULT_BUDGET = 200_000


class LatticeBudgetExceeded(RuntimeError):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"more than {budget} consistent cuts; refusing to enumerate")


class CutLattice:
    """All consistent cuts of a trace, as an ``(m, n)`` frontier array.

    Rows are ordered by level (number of events); within a level the last
    process varies slowest.
    """

    def __init__(self, trace: Trace, frontiers: np.ndarray):
        self.trace = trace
        self.frontiers = frontiers
        self._index = None

    def __len__(self) -> int:
        return len(self.frontiers)

    def __contains__(self, frontier) -> bool:
        return tuple(frontier) in self.index

    @property
    def index(self) -> dict[tuple[int, ...], int]:
        if self._index is None:
            self._index = {tuple(map(int, row)): k for k, row in enumerate(self.frontiers)}
        return self._index

    @property
    def cuts(self):
        return [self.trace.cut(tuple(map(int, row))) for row in self.frontiers]

    def covering_edges(self) -> Iterable[tuple[tuple[int, ...], tuple[int, ...]]]:
        index = self.index
        for f in index:
            for i in range(len(f)):
                g = f[:i] + (f[i] + 1,) + f[i + 1:]
                if g in index:
                    yield f, g


def _next_clocks(trace: Trace) -> list[np.ndarray]:
    """Per process, row k is the clock of event k+1; the last row can never fit."""
    big = np.iinfo(np.int64).max // 4
    tables = []
    for evs in trace.events:
        rows = [e.vc for e in evs] + [(big,) * trace.n]
        tables.append(np.array(rows, dtype=np.int64).reshape(len(rows), trace.n))
    return tables


def enumerate_lattice(trace: Trace, budget: int = DEFAULT_BUDGET) -> CutLattice:
    n = trace.n
    nxt = _next_clocks(trace)
    eye = np.eye(n, dtype=np.int64)
    # mixed-radix row keys make deduplication a 1-d unique
    radix = np.cumprod([1] + [len(evs) + 1 for evs in trace.events[:-1]]).astype(np.int64)
    level = np.zeros((1, n), dtype=np.int64)
    levels = [level]
    total = 1
    while len(level):
        found = []
        for i in range(n):
            clocks = nxt[i][level[:, i]]
            succ = level + eye[i]
            ok = np.all(clocks <= succ, axis=1)
            if ok.any():
                found.append(succ[ok])
        if not found:
            break
        cand = np.concatenate(found)
        _, first = np.unique(cand @ radix, return_index=True)
        level = cand[first]
        total += len(level)
        if total > budget:
            raise LatticeBudgetExceeded(budget)
        levels.append(level)
    return CutLattice(trace, np.concatenate(levels))


# -- vectorised predicate verdicts -----------------------------------------------

def _state_table(trace: Trace, pid: int, fn) -> np.ndarray:
    vals = [fn(trace.state(pid, k)) for k in range(len(trace.events[pid - 1]) + 1)]
    return np.array(vals)


def verdicts(spec, trace: Trace, frontiers: np.ndarray) -> np.ndarray:
    """Boolean verdict per frontier row.

    ``spec`` may be a ``PredicateSpec`` or a callable on a tuple of states;
    callables are evaluated one cut at a time.
    """
    if not isinstance(spec, PredicateSpec):
        return np.array([bool(spec(trace.cut(tuple(map(int, f))).states)) for f in frontiers], dtype=bool)
    m = len(frontiers)
    n = trace.n
    k = spec.kind
    if k is PredKind.CONSTANT:
        return np.full(m, spec.value, dtype=bool)
    if k is PredKind.CONJUNCTIVE:
        out = np.ones(m, dtype=bool)
        for c in spec.clauses:
            if not 1 <= c.pid <= n:
                raise SpecificationError(f"predicate names P{c.pid} but the computation has {n} processes")
            table = _state_table(trace, c.pid, c.holds).astype(bool)
            out &= table[frontiers[:, c.pid - 1]]
        return out
    if k is PredKind.ALL_CHANNELS_EMPTY:
        out = np.ones(m, dtype=bool)
        for i, j in itertools.permutations(range(1, n + 1), 2):
            sent = _state_table(trace, i, lambda s: s.sent[j - 1])
            recvd = _state_table(trace, j, lambda s: s.recvd[i - 1])
            out &= sent[frontiers[:, i - 1]] == recvd[frontiers[:, j - 1]]
        return out
    if k is PredKind.AT_MOST_K_IN_TRANSIT:
        i, j = spec.channel
        sent = _state_table(trace, i, lambda s: s.sent[j - 1])
        recvd = _state_table(trace, j, lambda s: s.recvd[i - 1])
        return sent[frontiers[:, i - 1]] - recvd[frontiers[:, j - 1]] <= spec.bound
    out = np.ones(m, dtype=bool)
    for member in spec.members:
        out &= verdicts(member, trace, frontiers)
    return out


# -- slices ------------------------------------------------------------------------

@dataclass
class Slice:
    """``jb`` maps each event with an existing J_B to that cut's frontier."""

    n: int
    jb: dict[EventId, tuple[int, ...]] = field(default_factory=dict)
    bottom_satisfies: bool = False

    @property
    def unique_cuts(self) -> list[tuple[int, ...]]:
        return sorted(set(self.jb.values()), key=lambda f: (sum(f), f))

    @property
    def cuts(self) -> set[tuple[int, ...]]:
        return set(self.jb.values())


def _sat_frontiers(trace, spec, lattice) -> np.ndarray:
    f = lattice.frontiers
    return f[verdicts(spec, trace, f)]


def jb_of_event(trace: Trace, spec, e, lattice: Optional[CutLattice] = None) -> Optional[tuple[int, ...]]:
    """Least satisfying consistent cut containing ``e``; ``None`` if absent."""
    lattice = lattice or enumerate_lattice(trace)
    e = trace.event(e)
    sat = _sat_frontiers(trace, spec, lattice)
    sat = sat[sat[:, e.pid - 1] >= e.eid]
    if not len(sat):
        return None
    least = tuple(map(int, sat.min(axis=0)))
    if not any((row == least).all() for row in sat):
        raise SpecificationError("satisfying cuts are not meet-closed; predicate is not regular here")
    return least


def slice_bruteforce(trace: Trace, spec, lattice: Optional[CutLattice] = None,
                     budget: int = DEFAULT_BUDGET) -> Slice:
    lattice = lattice or enumerate_lattice(trace, budget)
    sat = _sat_frontiers(trace, spec, lattice)
    sat_set = {tuple(map(int, row)) for row in sat}
    out = Slice(trace.n, bottom_satisfies=(0,) * trace.n in sat_set)
    for i in range(trace.n):
        col = sat[:, i]
        best = None
        # suffix meets: cuts with frontier[i] >= k, walking k downwards
        for k in range(len(trace.events[i]), 0, -1):
            rows = sat[col == k]
            if len(rows):
                m = rows.min(axis=0)
                best = m if best is None else np.minimum(best, m)
            if best is not None:
                least = tuple(map(int, best))
                if least not in sat_set:
                    raise SpecificationError("satisfying cuts are not meet-closed; predicate is not regular here")
                out.jb[EventId(i + 1, k)] = least
    return out


def satisfying_cuts_from_slice(sl: Slice) -> set[tuple[int, ...]]:
    """Every join of a nonempty subset of the slice, plus bottom if it satisfies."""
    closed = set(sl.cuts)
    frontier = set(closed)
    while frontier:
        new = set()
        for a in frontier:
            for b in closed:
                j = vmax(a, b)
                if j not in closed:
                    new.add(j)
        closed |= new
        frontier = new
    if sl.bottom_satisfies:
        closed.add((0,) * sl.n)
    return closed


def join_irreducible(cut: tuple[int, ...], candidates: Iterable[tuple[int, ...]]) -> bool:
    """True unless ``cut`` is the join of two strictly smaller candidates."""
    below = [c for c in candidates if c != cut and all(x <= y for x, y in zip(c, cut))]
    if not below:
        return any(cut)
    for a, b in itertools.combinations_with_replacement(below, 2):
        if vmax(a, b) == cut:
            return False
    return True


# -- centralized online slicer ------------------------------------------------------

class _Search:
    __slots__ = ("gcut", "depend", "states", "origin", "need")

    def __init__(self, gcut, depend, states):
        self.gcut = gcut
        self.depend = depend
        self.states = states
        self.origin = None
        self.need = None


class CentralSlicer:
    """One slicer that receives every event and computes J_B(e) per event.

    Each process has its own search, started from J_B of the previous
    event (or the empty cut) and advanced one event at a time along
    inconsistent or forbidden processes.  A search that needs an event
    that has not arrived is parked until it does.
    """

    def __init__(self, n: int, spec: PredicateSpec, initial_states):
        self.n = n
        self.spec = spec
        self.events: list[list[Event]] = [[] for _ in range(n)]
        self.initial_states = tuple(initial_states)
        self.searches = [
            _Search([0] * n, [0] * n, list(self.initial_states)) for _ in range(n)
        ]
        self.determined = [1] * n
        self.jb: dict[EventId, tuple[int, ...]] = {}
        self.outputs: list[tuple[int, int, tuple[int, ...]]] = []
        self._emitted = set()
        self._waiting: dict[EventId, list[int]] = {}
        self.steps = 0

    @property
    def stored_units(self) -> int:
        ev = sum(self.n + e.state.size for evs in self.events for e in evs)
        return ev + sum(3 * self.n + sum(s.size for s in srch.states) for srch in self.searches)

    def _have(self, eid: EventId) -> Optional[Event]:
        evs = self.events[eid.pid - 1]
        return evs[eid.eid - 1] if eid.eid <= len(evs) else None

    def on_event(self, e: Event) -> None:
        evs = self.events[e.pid - 1]
        if e.eid != len(evs) + 1:
            raise RuntimeError(f"event {e.id} out of order at central slicer")
        evs.append(e)
        pids = self._waiting.pop(e.id, [])
        if e.eid == self.determined[e.pid - 1] and self.searches[e.pid - 1].origin is None:
            pids.append(e.pid)
        for pid in sorted(set(pids)):
            self._run(pid)

    def _absorb(self, s: _Search, e: Event) -> None:
        s.gcut[e.pid - 1] = e.eid
        s.states[e.pid - 1] = e.state
        s.depend = list(vmax(s.depend, e.vc))

    def _run(self, pid: int) -> None:
        s = self.searches[pid - 1]
        while True:
            if s.origin is None:
                nxt = self._have(EventId(pid, self.determined[pid - 1]))
                if nxt is None:
                    return
                s.origin = nxt.eid
                self._absorb(s, nxt)
            elif s.need is not None:
                e = self._have(s.need)
                if e is None:
                    self._waiting.setdefault(s.need, []).append(pid)
                    return
                s.need = None
                self._absorb(s, e)
            self.steps += 1
            if not is_consistent(s.gcut, s.depend):
                k = next(j for j in range(self.n) if s.gcut[j] < s.depend[j]) + 1
                s.need = EventId(k, s.gcut[k - 1] + 1)
            elif holds(self.spec, s.states):
                cut = tuple(s.gcut)
                for eid in range(s.origin, cut[pid - 1] + 1):
                    self.jb[EventId(pid, eid)] = cut
                if cut not in self._emitted:
                    self._emitted.add(cut)
                    self.outputs.append((pid, s.origin, cut))
                self.determined[pid - 1] = cut[pid - 1] + 1
                s.origin = None
            else:
                k = forbidden_process(self.spec, s.states, pid)
                s.need = EventId(k, s.gcut[k - 1] + 1)

    def result(self, bottom_satisfies: bool) -> Slice:
        return Slice(self.n, dict(self.jb), bottom_satisfies)


def centralized_online_slice(events: Iterable[Event], spec: PredicateSpec, trace: Trace) -> Slice:
    """Feed ``events`` (any order respecting each process's order) to one slicer."""
    slicer = CentralSlicer(trace.n, spec, trace.initial_states)
    for e in events:
        slicer.on_event(e)
    return slicer.result(holds(spec, trace.initial_states))
