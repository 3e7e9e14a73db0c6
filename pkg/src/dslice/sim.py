"""Deterministic message-passing simulator driving the slicers.

Each application process ``P_i`` is modelled by a channel preloaded with
its event reports followed by a done signal.  At every step the scheduler
picks one nonempty FIFO channel uniformly at random (seeded) and delivers
its head message.
"""

from __future__ import annotations

import enum
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import EventId
from .oracle import CentralSlicer, Slice
from .optimized import OptimizedSlicer, StallPolicy
from .predicates import PredicateSpec, holds
from .slicer import MsgKind, SliceRecord, Slicer, Token
from .trace import Trace


class Algorithm(enum.Enum):
    CENTRAL = "central"
    DIST = "dist"
    DIST_OPT = "dist-opt"


class LivenessFailure(RuntimeError):
    """The run did not quiesce within its step budget."""


@dataclass
class SimMessage:
    kind: MsgKind
    src: int
    dst: int
    payload: object = None


def app_channel(pid: int) -> int:
    """Source id of application process ``pid``; slicers use 1..n, central uses 0."""
    return -pid


class Network:
    def __init__(self, rng: random.Random, log: Optional[list] = None):
        self.rng = rng
        self.channels: dict[tuple[int, int], deque[SimMessage]] = {}
        self.log = log
        self.in_flight = Counter()

    def send(self, src: int, dst: int, kind: MsgKind, payload=None) -> None:
        self.channels.setdefault((src, dst), deque()).append(SimMessage(kind, src, dst, payload))
        self.in_flight[kind] += 1

    def pending(self) -> bool:
        return any(self.channels.values())

    def next(self) -> SimMessage:
        live = [k for k, q in self.channels.items() if q]
        key = live[self.rng.randrange(len(live))] if len(live) > 1 else live[0]
        msg = self.channels[key].popleft()
        self.in_flight[msg.kind] -= 1
        if self.log is not None:
            self.log.append((msg.src, msg.dst, msg.kind.value))
        return msg


@dataclass
class SlicerMetrics:
    received: dict[str, int]
    peak_units: int
    outputs: int

    @property
    def messages(self) -> int:
        return sum(self.received.values())


@dataclass
class RunMetrics:
    per_slicer: dict[int, SlicerMetrics]
    steps: int
    stall_recoveries: int = 0
    borrowed: int = 0

    @property
    def total_messages(self) -> int:
        return sum(m.messages for m in self.per_slicer.values())

    @property
    def token_messages(self) -> int:
        return sum(m.received.get(MsgKind.TOKEN.value, 0) for m in self.per_slicer.values())

    @property
    def max_messages(self) -> int:
        return max((m.messages for m in self.per_slicer.values()), default=0)

    @property
    def max_peak_units(self) -> int:
        return max((m.peak_units for m in self.per_slicer.values()), default=0)

    @property
    def outputs(self) -> int:
        return sum(m.outputs for m in self.per_slicer.values())

    def as_dict(self) -> dict[str, int]:
        out = {
            "steps": self.steps,
            "total_messages": self.total_messages,
            "token_messages": self.token_messages,
            "max_messages_per_slicer": self.max_messages,
            "max_peak_units": self.max_peak_units,
            "outputs": self.outputs,
            "stall_recoveries": self.stall_recoveries,
            "borrowed": self.borrowed,
        }
        for pid, m in sorted(self.per_slicer.items()):
            out[f"s{pid}.messages"] = m.messages
            out[f"s{pid}.peak_units"] = m.peak_units
            out[f"s{pid}.outputs"] = m.outputs
        return out


@dataclass
class RunResult:
    outputs: list[SliceRecord]
    slice: Slice
    metrics: RunMetrics
    missing: set[EventId] = field(default_factory=set)
    nodes: dict[int, Slicer] = field(default_factory=dict, repr=False)

    @property
    def cuts(self) -> set[tuple[int, ...]]:
        return {r.cut for r in self.outputs}

    def duplicates(self) -> list[tuple[int, ...]]:
        seen, dup = set(), []
        for r in self.outputs:
            if r.cut in seen:
                dup.append(r.cut)
            seen.add(r.cut)
        return dup


def step_budget(trace: Trace) -> int:
    return 10 * trace.n ** 2 * max(len(trace), 1)


def _stall_blocker(slicers: dict[int, Slicer], t: Token) -> Optional[Token]:
    """Token that ``t`` is waiting on, or None if that wait is already over."""
    on = t.stalled_on
    host = slicers[on.pid]
    if on.eid < host.determined:
        return None
    return host.own


def find_stall_fault(slicers: dict[int, Slicer]) -> Optional[str]:
    """At quiescence: a stalled token whose release was missed, or a waits-for cycle."""
    stalled = [t for s in slicers.values() for t in s.held.values() if t.stalled]
    for t in stalled:
        seen = {t.owner}
        cur = t
        while cur.stalled:
            blocker = _stall_blocker(slicers, cur)
            if blocker is None:
                return f"T{cur.owner} still stalled on settled {cur.stalled_on}"
            if blocker.owner in seen:
                return f"waits-for cycle through T{blocker.owner}"
            seen.add(blocker.owner)
            cur = blocker
    return None


def run_simulation(
    trace: Trace,
    spec: PredicateSpec,
    algorithm: Algorithm | str = Algorithm.DIST,
    seed: int = 0,
    *,
    observer: Optional[Callable[[Slicer, Token], None]] = None,
    policy: str = StallPolicy.LINEAR,
    log: Optional[list] = None,
    budget: Optional[int] = None,
) -> RunResult:
    algorithm = Algorithm(algorithm)
    rng = random.Random(seed)
    net = Network(rng, log)
    n = trace.n
    budget = step_budget(trace) if budget is None else budget
    bottom = holds(spec, trace.initial_states)

    if algorithm is Algorithm.CENTRAL:
        return _run_central(trace, spec, net, budget, bottom)

    cls = OptimizedSlicer if algorithm is Algorithm.DIST_OPT else Slicer
    extra = {"policy": policy} if algorithm is Algorithm.DIST_OPT else {}
    slicers = {
        pid: cls(pid, n, spec, trace.initial_states, net, observer=observer, **extra)
        for pid in range(1, n + 1)
    }
    recoveries = 0

    def quiescent_hook() -> bool:
        nonlocal recoveries
        if algorithm is not Algorithm.DIST_OPT:
            return False
        if find_stall_fault(slicers) is None:
            return False
        recoveries += 1
        for s in slicers.values():
            s.release_all()
        return True

    slicers[1].on_quiescent = quiescent_hook
    for pid in range(1, n + 1):
        for e in trace.events[pid - 1]:
            net.send(app_channel(pid), pid, MsgKind.EVENT_REPORT, e)
        net.send(app_channel(pid), pid, MsgKind.DONE_SIGNAL)

    steps = 0
    while net.pending():
        if steps >= budget:
            raise LivenessFailure(f"no quiescence after {steps} steps (budget {budget})")
        msg = net.next()
        slicers[msg.dst].handle(msg.kind, msg.src, msg.payload)
        steps += 1

    outputs = [r for pid in sorted(slicers) for r in slicers[pid].outputs]
    result = Slice(n, bottom_satisfies=bottom)
    missing = set()
    for pid, s in slicers.items():
        for eid, cut in s.jb.items():
            result.jb[EventId(pid, eid)] = cut
        missing.update(EventId(pid, eid) for eid in s.missing)
    metrics = RunMetrics(
        {
            pid: SlicerMetrics({k.value: v for k, v in s.received.items()}, s.peak_units, len(s.outputs))
            for pid, s in slicers.items()
        },
        steps,
        recoveries,
        sum(getattr(s, "borrowed", 0) for s in slicers.values()),
    )
    return RunResult(outputs, result, metrics, missing, slicers)


def _run_central(trace, spec, net, budget, bottom) -> RunResult:
    n = trace.n
    central = CentralSlicer(n, spec, trace.initial_states)
    received = Counter()
    peak = 0
    for pid in range(1, n + 1):
        for e in trace.events[pid - 1]:
            net.send(app_channel(pid), 0, MsgKind.EVENT_REPORT, e)
    steps = 0
    while net.pending():
        if steps >= budget:
            raise LivenessFailure(f"no quiescence after {steps} steps (budget {budget})")
        msg = net.next()
        received[msg.kind.value] += 1
        central.on_event(msg.payload)
        peak = max(peak, central.stored_units)
        steps += 1
    sl = central.result(bottom)
    outputs = [SliceRecord(pid, EventId(pid, eid), cut, ()) for pid, eid, cut in central.outputs]
    metrics = RunMetrics({0: SlicerMetrics(dict(received), peak, len(outputs))}, steps)
    missing = {e.id for e in trace if e.id not in sl.jb}
    return RunResult(outputs, sl, metrics, missing)
