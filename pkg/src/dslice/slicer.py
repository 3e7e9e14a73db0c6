"""Token-passing distributed slicer.

Slicer ``S_i`` sits next to application process ``P_i`` and owns token
``T_i``, which computes, one local event at a time, the least satisfying
consistent cut containing that event.  A token travels to whichever slicer
holds the event it needs next; when its cut is consistent and satisfies
the predicate it returns home and the cut is output.

Termination uses a counting probe in the style of Safra: the probe circles
the ring accumulating each slicer's (sent - received) balance of protocol
messages and a taint colour.  Once a clean round shows a zero balance,
``S_1`` broadcasts stop and every slicer recalls the foreign tokens it
holds.
"""

from __future__ import annotations

import enum
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from .core import Event, EventId, LocalState, is_consistent
from .predicates import PredicateSpec, forbidden_process, holds


class MsgKind(enum.Enum):
    EVENT_REPORT = "event"
    TOKEN = "token"
    CUT_NOTICE = "notice"
    STOP_TOKEN = "stop-token"
    STOP_BROADCAST = "stop"
    DONE_SIGNAL = "done"


# Reports and the done signal come from the co-located application process.
LOCAL_KINDS = frozenset({MsgKind.EVENT_REPORT, MsgKind.DONE_SIGNAL})
# Messages that make a slicer active again; tracked by the termination probe.
BASIC_KINDS = frozenset({MsgKind.TOKEN, MsgKind.CUT_NOTICE})


class ProtocolViolation(RuntimeError):
    pass


class Net(Protocol):
    def send(self, src: int, dst: int, kind: MsgKind, payload) -> None: ...


@dataclass
class Token:
    owner: int
    gcut: list[int]
    depend: list[int]
    gstate: list[LocalState]
    target: EventId
    event: Optional[Event] = None
    eval: bool = False
    waiting: bool = True
    stalled: bool = False
    stalled_on: Optional[EventId] = None
    busy: bool = False
    recalled: bool = False
    adopted: bool = False

    @classmethod
    def fresh(cls, owner: int, initial_states) -> "Token":
        n = len(initial_states)
        return cls(owner, [0] * n, [0] * n, list(initial_states), EventId(owner, 1))

    @property
    def n(self) -> int:
        return len(self.gcut)

    @property
    def units(self) -> int:
        return 3 * self.n + sum(s.size for s in self.gstate)

    def consistent(self) -> bool:
        return is_consistent(self.gcut, self.depend)


@dataclass(frozen=True)
class SliceRecord:
    owner: int
    event: EventId
    cut: tuple[int, ...]
    states: tuple[LocalState, ...] = field(compare=False, repr=False)

    def __str__(self):
        return f"owner={self.owner} event=<{self.event.pid},{self.event.eid}> cut=[{','.join(map(str, self.cut))}]"


Observer = Callable[["Slicer", Token], None]


class Slicer:
    """Slicer for one process.  ``handle`` consumes one message at a time."""

    def __init__(self, pid: int, n: int, spec: PredicateSpec, initial_states, net: Net,
                 observer: Optional[Observer] = None):
        self.pid = pid
        self.n = n
        self.spec = spec
        self.net = net
        self.observer = observer
        self.events: list[Event] = []
        self.own = Token.fresh(pid, initial_states)
        self.held: dict[int, Token] = {pid: self.own}
        self.determined = 1
        self.jb: dict[int, tuple[int, ...]] = {}
        self.missing: set[int] = set()
        self.outputs: list[SliceRecord] = []
        self.done = False
        self.stopped = False
        self.received: Counter = Counter()
        self.sent: Counter = Counter()
        self.peak_units = 0
        self._event_units = 0
        self._ready: deque[Token] = deque()
        # termination probe bookkeeping
        self.balance = 0
        self.tainted = False
        self._probe: Optional[tuple[int, bool]] = None
        self.rounds = 0
        self.on_quiescent: Optional[Callable[[], bool]] = None

    # -- storage accounting ---------------------------------------------------
    def stored_units(self) -> int:
        return self._event_units + sum(t.units for t in self.held.values())

    def _note_storage(self) -> None:
        u = self.stored_units()
        if u > self.peak_units:
            self.peak_units = u

    # -- message entry point ----------------------------------------------------
    def handle(self, kind: MsgKind, src: int, payload) -> None:
        if kind not in LOCAL_KINDS:
            self.received[kind] += 1
        if kind in BASIC_KINDS and src != self.pid:
            self.balance -= 1
            self.tainted = True
        if kind is MsgKind.EVENT_REPORT:
            self.on_event(payload)
        elif kind is MsgKind.TOKEN:
            self.on_token(payload)
        elif kind is MsgKind.CUT_NOTICE:
            self.on_notice(payload)
        elif kind is MsgKind.DONE_SIGNAL:
            self.done = True
            if self.pid == 1:
                self._start_round()
            elif self._probe is not None:
                self._forward_probe()
        elif kind is MsgKind.STOP_TOKEN:
            self.on_probe(payload)
        elif kind is MsgKind.STOP_BROADCAST:
            self.on_stop()
        else:
            raise ProtocolViolation(f"unknown message kind {kind}")
        self._drain()
        self._note_storage()

    def _send(self, dst: int, kind: MsgKind, payload) -> None:
        self.sent[kind] += 1
        if kind in BASIC_KINDS:
            self.balance += 1
        self.net.send(self.pid, dst, kind, payload)

    def _drain(self) -> None:
        while self._ready:
            t = self._ready.popleft()
            if self.held.get(t.owner) is t:
                self._run(t)

    def _schedule(self, t: Token) -> None:
        self._ready.append(t)

    # -- events and tokens --------------------------------------------------------
    def on_event(self, e: Event) -> None:
        if e.pid != self.pid or e.eid != len(self.events) + 1:
            raise ProtocolViolation(f"S{self.pid} got {e.id} out of order")
        self.events.append(e)
        self._event_units += self.n + e.state.size
        for t in self._tokens_by_priority():
            if t.waiting and t.target == e.id:
                t.waiting = False
                self._schedule(t)

    def _tokens_by_priority(self) -> list[Token]:
        # own token first so a fresh local computation is under way before
        # foreign tokens look at it
        return sorted(self.held.values(), key=lambda t: (t.owner != self.pid, t.owner))

    def on_token(self, t: Token) -> None:
        if t.owner in self.held:
            raise ProtocolViolation(f"S{self.pid} already holds T{t.owner}")
        self.held[t.owner] = t
        if t.recalled:
            if t.owner != self.pid:
                raise ProtocolViolation(f"recalled T{t.owner} delivered to S{self.pid}")
            self._give_up(t)
            return
        if t.target.pid != self.pid and not t.eval and t.owner != self.pid:
            raise ProtocolViolation(f"T{t.owner} routed to S{self.pid} for {t.target}")
        t.waiting = False
        self._schedule(t)

    def on_notice(self, payload) -> None:
        raise ProtocolViolation("cut notices are not part of the base protocol")

    def _local(self, eid: int) -> Optional[Event]:
        return self.events[eid - 1] if eid <= len(self.events) else None

    def _absorb(self, t: Token, e: Event) -> None:
        k = e.pid - 1
        t.gstate[k] = e.state
        t.gcut[k] = e.eid
        t.depend = [a if a >= b else b for a, b in zip(t.depend, e.vc)]
        t.eval = False
        if t.owner == self.pid and e.pid == self.pid and not t.busy:
            t.event = e
            t.busy = True
        if self.observer is not None:
            self.observer(self, t)

    def _run(self, t: Token) -> None:
        while True:
            if t.eval:
                if t.owner != self.pid:
                    self._dispatch(t, t.owner)
                    return
                self._complete(t)
            tgt = t.target
            if tgt.pid != self.pid:
                self._dispatch(t, tgt.pid)
                return
            e = self._local(tgt.eid)
            if e is None:
                t.waiting = True
                return
            self._absorb(t, e)
            self._decide(t)

    def _violating(self, t: Token) -> int:
        return next(j for j in range(self.n) if t.gcut[j] < t.depend[j]) + 1

    def _decide(self, t: Token) -> None:
        """Pick the next event ``t`` needs, or mark it satisfied."""
        if not t.consistent():
            k = self._violating(t)
            t.target = EventId(k, t.gcut[k - 1] + 1)
        elif holds(self.spec, t.gstate):
            t.eval = True
        else:
            k = forbidden_process(self.spec, t.gstate, self.pid)
            t.target = EventId(k, t.gcut[k - 1] + 1)

    def _dispatch(self, t: Token, dst: int) -> None:
        del self.held[t.owner]
        self._send(dst, MsgKind.TOKEN, t)

    def _record(self, t: Token, emit: bool) -> tuple[int, int]:
        """Store the finished cut for every own event it settles."""
        cut = tuple(t.gcut)
        first, last = self.determined, cut[self.pid - 1]
        for eid in range(first, last + 1):
            self.jb[eid] = cut
        if emit:
            self.outputs.append(SliceRecord(self.pid, t.event.id, cut, tuple(t.gstate)))
        self.determined = last + 1
        t.busy = False
        t.eval = False
        t.adopted = False
        t.target = EventId(self.pid, last + 1)
        return first, last

    def _complete(self, t: Token) -> None:
        self._record(t, emit=True)

    def _give_up(self, t: Token) -> None:
        """Own token back after stop: whatever it was computing has no cut."""
        t.recalled = False
        t.stalled = False
        t.waiting = True
        if t.busy or self.determined <= len(self.events):
            self.missing.update(range(self.determined, len(self.events) + 1))
        t.busy = False

    # -- termination ---------------------------------------------------------------
    def _ring_next(self) -> int:
        return self.pid % self.n + 1

    def _start_round(self) -> None:
        self.rounds += 1
        self.tainted = False
        self._send(self._ring_next(), MsgKind.STOP_TOKEN, (0, False))

    def on_probe(self, probe: tuple[int, bool]) -> None:
        if self.stopped:
            return
        self._probe = probe
        if self.pid == 1:
            q, dirty = probe
            self._probe = None
            if not dirty and not self.tainted and q + self.balance == 0:
                if self.on_quiescent is not None and self.on_quiescent():
                    self._start_round()
                    return
                for j in range(1, self.n + 1):
                    if j == self.pid:
                        continue
                    self._send(j, MsgKind.STOP_BROADCAST, None)
                self.on_stop()
            else:
                self._start_round()
        elif self.done:
            self._forward_probe()

    def _forward_probe(self) -> None:
        q, dirty = self._probe
        self._probe = None
        nxt = self._ring_next()
        probe = (q + self.balance, dirty or self.tainted)
        self.tainted = False
        self._send(nxt, MsgKind.STOP_TOKEN, probe)

    def on_stop(self) -> None:
        self.stopped = True
        for owner, t in sorted(self.held.items()):
            if owner == self.pid:
                continue
            t.stalled = False
            t.stalled_on = None
            t.waiting = False
            t.recalled = True
            self._dispatch(t, owner)
        if self.pid in self.held:
            self._give_up(self.own)
