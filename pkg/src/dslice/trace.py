"""Finite traces: construction, validation, cut lattice primitives and file I/O.

File format, one record per line::

    n=2
    1 1 internal vc=[1,0] vars{x1=1}
    1 2 send vc=[2,0] vars{x1=2} send->2#1
    2 1 recv vc=[2,1] vars{} recv<-1#1

Blank lines and lines starting with ``#`` are ignored.  Events of one
process must appear in eid order; a receive must come after its send.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

from .core import (
    ConfigurationError,
    Cut,
    Event,
    EventId,
    Kind,
    LocalState,
    MessageRef,
    vmax,
    vmin,
)


class TraceError(ValueError):
    """Malformed or causally invalid trace."""

    def __init__(self, msg: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class TraceBuilder:
    """Append events process by process; clocks and channel counters are derived.

    >>> b = TraceBuilder(2)
    >>> s = b.send(1, 2, x1=1)
    >>> r = b.recv(2, 1)
    >>> b.build().events[1][0].vc
    (1, 1)
    """

    def __init__(self, n: int):
        if n < 1:
            raise ConfigurationError("need at least one process")
        self.n = n
        self._events: list[list[Event]] = [[] for _ in range(n)]
        self._vars: list[dict[str, int]] = [{} for _ in range(n)]
        self._sent = [[0] * n for _ in range(n)]
        self._recvd = [[0] * n for _ in range(n)]
        # (src, dst) -> queue of send events not yet received
        self._in_transit: dict[tuple[int, int], list[Event]] = defaultdict(list)

    def _clock(self, pid: int) -> list[int]:
        evs = self._events[pid - 1]
        return list(evs[-1].vc) if evs else [0] * self.n

    def _state(self, pid: int, updates: dict[str, int]) -> LocalState:
        self._vars[pid - 1].update(updates)
        return LocalState(
            dict(self._vars[pid - 1]),
            tuple(self._sent[pid - 1]),
            tuple(self._recvd[pid - 1]),
        )

    def _check_pid(self, pid: int) -> None:
        if not 1 <= pid <= self.n:
            raise ConfigurationError(f"pid {pid} outside 1..{self.n}")

    def internal(self, pid: int, **updates: int) -> Event:
        self._check_pid(pid)
        vc = self._clock(pid)
        vc[pid - 1] += 1
        return self._append(pid, tuple(vc), Kind.INTERNAL, updates, None)

    def send(self, pid: int, dst: int, **updates: int) -> Event:
        self._check_pid(pid)
        self._check_pid(dst)
        if dst == pid:
            raise ConfigurationError("a process cannot message itself")
        vc = self._clock(pid)
        vc[pid - 1] += 1
        self._sent[pid - 1][dst - 1] += 1
        ref = MessageRef(dst, self._sent[pid - 1][dst - 1])
        e = self._append(pid, tuple(vc), Kind.MSGSEND, updates, ref)
        self._in_transit[(pid, dst)].append(e)
        return e

    def recv(self, pid: int, src: int, **updates: int) -> Event:
        self._check_pid(pid)
        queue = self._in_transit.get((src, pid))
        if not queue:
            raise TraceError(f"P{pid} receives from P{src} with no message in transit")
        snd = queue.pop(0)
        vc = list(vmax(self._clock(pid), snd.vc))
        vc[pid - 1] = self._clock(pid)[pid - 1] + 1
        self._recvd[pid - 1][src - 1] += 1
        ref = MessageRef(src, snd.msg.seq, snd.id)
        return self._append(pid, tuple(vc), Kind.MSGRECV, updates, ref)

    def pending(self, src: int, dst: int) -> int:
        return len(self._in_transit.get((src, dst), ()))

    def count(self, pid: int) -> int:
        return len(self._events[pid - 1])

    def _append(self, pid, vc, kind, updates, ref) -> Event:
        eid = EventId(pid, len(self._events[pid - 1]) + 1)
        e = Event(eid, vc, kind, self._state(pid, updates), ref)
        self._events[pid - 1].append(e)
        return e

    def build(self, names: Optional[dict[str, EventId]] = None) -> "Trace":
        var_names = [sorted(v) for v in self._vars]
        events = []
        for names_i, evs in zip(var_names, self._events):
            filled = []
            for e in evs:
                if len(e.state.vars) < len(names_i):
                    vars_ = {k: e.state.vars.get(k, 0) for k in names_i}
                    e = replace(e, state=replace(e.state, vars=vars_))
                filled.append(e)
            events.append(filled)
        return Trace(self.n, events, var_names, names or {})


class Trace:
    """A finite computation ``(E, ->)`` of ``n`` processes.

    ``events[i]`` holds the events of process ``i + 1`` in local order.
    ``names`` optionally maps display labels (``"a"``) to event ids.
    """

    def __init__(
        self,
        n: int,
        events: list[list[Event]],
        var_names: Optional[list[list[str]]] = None,
        names: Optional[dict[str, EventId]] = None,
    ):
        if len(events) != n:
            raise ConfigurationError("one event list per process required")
        self.n = n
        self.events = events
        if var_names is None:
            var_names = [sorted({k for e in evs for k in e.state.vars}) for evs in events]
        self.var_names = var_names
        self.initial_states = tuple(LocalState.initial(n, var_names[i]) for i in range(n))
        self.names: dict[str, EventId] = dict(names or {})
        self._labels = {v: k for k, v in self.names.items()}

    # -- basic access ----------------------------------------------------
    def __len__(self) -> int:
        return sum(len(evs) for evs in self.events)

    def __iter__(self) -> Iterator[Event]:
        for evs in self.events:
            yield from evs

    def __eq__(self, other) -> bool:
        return isinstance(other, Trace) and self.n == other.n and self.events == other.events

    def event(self, eid) -> Event:
        if isinstance(eid, str):
            eid = self.names[eid]
        pid, k = eid
        if not (1 <= pid <= self.n and 1 <= k <= len(self.events[pid - 1])):
            raise KeyError(eid)
        return self.events[pid - 1][k - 1]

    def label(self, eid: EventId) -> str:
        return self._labels.get(eid, str(eid))

    @property
    def final_frontier(self) -> tuple[int, ...]:
        return tuple(len(evs) for evs in self.events)

    def messages(self) -> list[tuple[Event, Event]]:
        pairs = []
        for e in self:
            if e.kind is Kind.MSGRECV:
                pairs.append((self.event(e.sender), e))
        return pairs

    def unmatched_sends(self) -> list[Event]:
        received = {snd.id for snd, _ in self.messages()}
        return [e for e in self if e.kind is Kind.MSGSEND and e.id not in received]

    # -- cuts --------------------------------------------------------------
    def state(self, pid: int, eid: int) -> LocalState:
        if eid == 0:
            return self.initial_states[pid - 1]
        return self.events[pid - 1][eid - 1].state

    def cut(self, frontier: Sequence[int]) -> Cut:
        frontier = tuple(frontier)
        if len(frontier) != self.n:
            raise ConfigurationError(f"frontier {frontier} has wrong length for n={self.n}")
        clock = (0,) * self.n
        states = []
        for i, k in enumerate(frontier):
            if not 0 <= k <= len(self.events[i]):
                raise ConfigurationError(f"frontier {frontier} beyond trace on P{i + 1}")
            if k:
                clock = vmax(clock, self.events[i][k - 1].vc)
            states.append(self.state(i + 1, k))
        return Cut(frontier, clock, tuple(states))

    def cut_of(self, labels: Iterable) -> Cut:
        """Cut whose frontier is the latest of the given events on each process."""
        frontier = [0] * self.n
        for lab in labels:
            e = self.event(lab)
            frontier[e.pid - 1] = max(frontier[e.pid - 1], e.eid)
        return self.cut(frontier)

    def join(self, c1: Cut, c2: Cut) -> Cut:
        return self.cut(vmax(c1.frontier, c2.frontier))

    def meet(self, c1: Cut, c2: Cut) -> Cut:
        return self.cut(vmin(c1.frontier, c2.frontier))

    def causal_closure(self, e: Event) -> Cut:
        """Least consistent cut containing ``e``."""
        return self.cut(e.vc)

    def format_cut(self, cut: Cut) -> str:
        """Shortened ``[b,e]`` notation using event labels."""
        parts = [
            self.label(EventId(i + 1, k)) for i, k in enumerate(cut.frontier) if k
        ]
        return "[" + ",".join(parts) + "]"

    # -- validation ----------------------------------------------------------
    def validate(self) -> None:
        """Recompute clocks and channel counters and compare with the stored ones."""
        rebuilt = rebuild(self, [(e.pid, e.kind, e.msg, dict(e.state.vars), None) for e in self.linearize()])
        for evs, ref in zip(self.events, rebuilt.events):
            for e, r in zip(evs, ref):
                if e.vc != r.vc:
                    raise TraceError(f"clock mismatch at {e.id}: {list(e.vc)} != {list(r.vc)}")
                if e.state.sent != r.state.sent or e.state.recvd != r.state.recvd:
                    raise TraceError(f"channel counters inconsistent at {e.id}")

    def linearize(self) -> list[Event]:
        """A total order of the events respecting happened-before."""
        order = []
        pos = [0] * self.n
        done = set()
        remaining = len(self)
        while remaining:
            progressed = False
            for i in range(self.n):
                while pos[i] < len(self.events[i]):
                    e = self.events[i][pos[i]]
                    if e.kind is Kind.MSGRECV and e.sender not in done:
                        break
                    order.append(e)
                    done.add(e.id)
                    pos[i] += 1
                    remaining -= 1
                    progressed = True
            if not progressed:
                raise TraceError("receive events form a causal cycle")
        return order


def rebuild(trace_like, records) -> Trace:
    """Replay ``(pid, kind, msg, vars, line)`` records through a builder.

    Used by the loader and by ``Trace.validate``; enforces FIFO pairing.
    """
    b = TraceBuilder(trace_like.n if hasattr(trace_like, "n") else trace_like)
    for pid, kind, msg, vars_, line in records:
        try:
            if kind is Kind.INTERNAL:
                b.internal(pid, **vars_)
            elif kind is Kind.MSGSEND:
                e = b.send(pid, msg.peer, **vars_)
                if e.msg.seq != msg.seq:
                    raise TraceError(f"send sequence {msg.seq} out of order, expected {e.msg.seq}")
            else:
                if b.pending(msg.peer, pid) == 0:
                    raise TraceError(f"receive of P{msg.peer}#{msg.seq} before its send")
                e = b.recv(pid, msg.peer, **vars_)
                if e.msg.seq != msg.seq:
                    raise TraceError(f"FIFO violation: received #{msg.seq}, expected #{e.msg.seq}")
        except (TraceError, ConfigurationError) as err:
            if isinstance(err, TraceError) and err.line is not None:
                raise
            raise TraceError(err.args[0] if not isinstance(err, TraceError) else str(err), line) from None
    return b.build()


# -- file I/O ------------------------------------------------------------------

_LINE = re.compile(
    r"^(?P<pid>\d+)\s+(?P<eid>\d+)\s+(?P<kind>internal|send|recv)\s+"
    r"vc=\[(?P<vc>[\d,\s]*)\]\s+vars\{(?P<vars>[^}]*)\}"
    r"(?:\s+(?:send->(?P<dst>\d+)#(?P<sseq>\d+)|recv<-(?P<src>\d+)#(?P<rseq>\d+)))?"
    r"(?:\s+@(?P<label>\S+))?\s*$"
)


def format_event(e: Event, label: Optional[str] = None) -> str:
    vars_ = ",".join(f"{k}={v}" for k, v in sorted(e.state.vars.items()))
    line = f"{e.pid} {e.eid} {e.kind.value} vc=[{','.join(map(str, e.vc))}] vars{{{vars_}}}"
    if e.kind is Kind.MSGSEND:
        line += f" send->{e.msg.peer}#{e.msg.seq}"
    elif e.kind is Kind.MSGRECV:
        line += f" recv<-{e.msg.peer}#{e.msg.seq}"
    if label:
        line += f" @{label}"
    return line


def dumps(trace: Trace) -> str:
    lines = [f"n={trace.n}"]
    for e in trace.linearize():
        lines.append(format_event(e, trace._labels.get(e.id)))
    return "\n".join(lines) + "\n"


def save_trace(trace: Trace, path) -> None:
    Path(path).write_text(dumps(trace))


def loads(text: str) -> Trace:
    n = None
    records = []
    stored = []
    labels = {}
    seen = defaultdict(int)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            m = re.fullmatch(r"n\s*=\s*(\d+)", line)
            if not m or int(m.group(1)) < 1:
                raise TraceError("expected header 'n=<count>'", lineno)
            n = int(m.group(1))
            continue
        m = _LINE.match(line)
        if not m:
            raise TraceError(f"malformed record {line!r}", lineno)
        pid, eid = int(m["pid"]), int(m["eid"])
        if not 1 <= pid <= n:
            raise TraceError(f"pid {pid} outside 1..{n}", lineno)
        if eid != seen[pid] + 1:
            raise TraceError(f"P{pid} event {eid} out of order, expected {seen[pid] + 1}", lineno)
        seen[pid] = eid
        kind = Kind(m["kind"])
        vc = tuple(int(x) for x in m["vc"].replace(" ", "").split(",") if x != "")
        if len(vc) != n:
            raise TraceError(f"clock has {len(vc)} components, expected {n}", lineno)
        vars_ = {}
        for item in filter(None, (s.strip() for s in m["vars"].split(","))):
            k, _, v = item.partition("=")
            try:
                vars_[k.strip()] = int(v)
            except ValueError:
                raise TraceError(f"bad variable assignment {item!r}", lineno) from None
        msg = None
        if kind is Kind.MSGSEND:
            if m["dst"] is None:
                raise TraceError("send without destination", lineno)
            msg = MessageRef(int(m["dst"]), int(m["sseq"]))
        elif kind is Kind.MSGRECV:
            if m["src"] is None:
                raise TraceError("receive without source", lineno)
            msg = MessageRef(int(m["src"]), int(m["rseq"]))
        elif m["dst"] or m["src"]:
            raise TraceError("internal event with message linkage", lineno)
        records.append((pid, kind, msg, vars_, lineno))
        stored.append((EventId(pid, eid), vc, lineno))
        if m["label"]:
            labels[m["label"]] = EventId(pid, eid)
    if n is None:
        raise TraceError("empty trace file: missing header")
    trace = rebuild(n, records)
    for eid, vc, lineno in stored:
        if trace.event(eid).vc != vc:
            raise TraceError(
                f"clock mismatch at {eid}: stored {list(vc)}, recomputed {list(trace.event(eid).vc)}",
                lineno,
            )
    return Trace(trace.n, trace.events, trace.var_names, labels)


def load_trace(path) -> Trace:
    return loads(Path(path).read_text())
