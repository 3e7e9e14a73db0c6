"""Distributed slicer with duplicate suppression and local borrowing.

Additions over the base protocol:

* every slicer caches the finished cut of each of its own events, and a
  foreign token asking for an already settled event joins that cut in one
  step; if the cached cut already contains the token's event the two cuts
  are equal and the token adopts it without a second output;
* a foreign token that asks for an event at or beyond the one the host's
  own token is working on may be parked ("stalled") until that
  computation finishes, so two tokens never produce the same cut;
* a token whose event is a receive waits at home for a notice carrying the
  finished cut of the matching send instead of recomputing it;
* a token that needs the event another co-located token is computing
  copies it locally instead of travelling.

Which of two tokens gives way is decided by ``StallPolicy``.  The default
orders events by (clock sum, pid), a linear extension of happened-before,
so the waits-for relation can never cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import Event, EventId, Kind, LocalState, happened_before
from .slicer import MsgKind, ProtocolViolation, Slicer, Token


@dataclass(frozen=True)
class CutNotice:
    event: EventId
    cut: tuple[int, ...]
    states: tuple[LocalState, ...]


def _key(e: Event) -> tuple[int, int]:
    return (sum(e.vc), e.pid)


class StallPolicy:
    LINEAR = "linear"
    PID_ORDER = "pid-order"


def yields_to(policy: str, host_event: Event, token_event: Event, host: int, owner: int) -> bool:
    """Whether a token working on ``token_event`` waits for the host's ``host_event``."""
    if policy == StallPolicy.LINEAR:
        return _key(host_event) < _key(token_event)
    if policy == StallPolicy.PID_ORDER:
        return not happened_before(token_event, host_event) and host > owner
    raise ValueError(f"unknown stall policy {policy!r}")


class OptimizedSlicer(Slicer):
    def __init__(self, *args, policy: str = StallPolicy.LINEAR, **kwargs):
        super().__init__(*args, **kwargs)
        self.policy = policy
        self.cache: dict[int, tuple[tuple[int, ...], tuple[LocalState, ...]]] = {}
        self.notices: dict[EventId, CutNotice] = {}
        self.current: Optional[int] = None
        self.borrowed = 0
        self.stall_disabled = False
        self._cache_units = 0
        self._notice_units = 0

    def stored_units(self) -> int:
        return super().stored_units() + self._cache_units + self._notice_units

    # -- protocol hooks -----------------------------------------------------------
    def _absorb(self, t: Token, e: Event) -> None:
        super()._absorb(t, e)
        if t is self.own and t.busy and self.current is None:
            self.current = t.event.eid

    def _run(self, t: Token) -> None:
        while True:
            if t.stalled:
                return
            if t.eval or t.adopted:
                if t.owner != self.pid:
                    self._dispatch(t, t.owner)
                    return
                self._complete(t)
            tgt = t.target
            if tgt.pid != self.pid:
                if self._borrow(t, tgt):
                    continue
                self._dispatch(t, tgt.pid)
                return
            if t.owner != self.pid:
                if tgt.eid < self.determined:
                    self._join(t, *self.cache[tgt.eid])
                    continue
                if self._must_stall(t, tgt):
                    t.stalled = True
                    t.stalled_on = EventId(self.pid, self.current)
                    return
            e = self._local(tgt.eid)
            if e is None:
                t.waiting = True
                return
            self._absorb(t, e)
            self._decide(t)

    def _must_stall(self, t: Token, tgt: EventId) -> bool:
        if self.stall_disabled or self.current is None or tgt.eid < self.current:
            return False
        host_event = self.events[self.current - 1]
        return yields_to(self.policy, host_event, t.event, self.pid, t.owner)

    def _decide(self, t: Token) -> None:
        if not t.consistent():
            e = t.event
            if (t.owner == self.pid and e.kind is Kind.MSGRECV and not self.stall_disabled
                    and t.gcut[e.sender.pid - 1] < e.sender.eid):
                notice = self.notices.get(e.sender)
                if notice is None:
                    t.stalled = True
                    t.stalled_on = e.sender
                    return
                self._join(t, notice.cut, notice.states)
                return
            k = self._violating(t)
            t.target = EventId(k, t.depend[k - 1])
            return
        super()._decide(t)

    def _join(self, t: Token, cut, states) -> None:
        """Merge a finished cut that ``t``'s result must contain."""
        for j, c in enumerate(cut):
            if c > t.gcut[j]:
                t.gcut[j] = c
                t.gstate[j] = states[j]
            if c > t.depend[j]:
                t.depend[j] = c
        t.eval = False
        if self.observer is not None:
            self.observer(self, t)
        e = t.event
        if cut[e.pid - 1] >= e.eid:
            if tuple(t.gcut) != tuple(cut):
                raise ProtocolViolation(f"T{t.owner} passed a cut it should equal")
            t.adopted = True
        else:
            self._decide(t)

    def _borrow(self, t: Token, tgt: EventId) -> bool:
        other = self.held.get(tgt.pid)
        if other is None or other is t or not other.busy or other.event.id != tgt:
            return False
        if yields_to(self.policy, other.event, t.event, tgt.pid, t.owner):
            return False
        self.borrowed += 1
        Slicer._absorb(self, t, other.event)
        self._decide(t)
        return True

    def _complete(self, t: Token) -> None:
        emit = not t.adopted
        cut, states = tuple(t.gcut), tuple(t.gstate)
        first, last = self._record(t, emit=emit)
        self.current = None
        if first > last:
            return
        self._cache_units += self.n + sum(s.size for s in states)
        for eid in range(first, last + 1):
            self.cache[eid] = (cut, states)
            e = self.events[eid - 1]
            if e.kind is Kind.MSGSEND:
                self._send(e.msg.peer, MsgKind.CUT_NOTICE, CutNotice(e.id, cut, states))
        for other in self._tokens_by_priority():
            if other.stalled and other.stalled_on is not None and other.stalled_on.pid == self.pid \
                    and other.owner != self.pid:
                other.stalled = False
                other.stalled_on = None
                self._schedule(other)

    def on_notice(self, notice: CutNotice) -> None:
        if notice.event in self.notices:
            return
        self.notices[notice.event] = notice
        self._notice_units += self.n + sum(s.size for s in notice.states)
        t = self.held.get(self.pid)
        if t is not None and t.stalled and t.stalled_on == notice.event:
            t.stalled = False
            t.stalled_on = None
            self._join(t, notice.cut, notice.states)
            self._schedule(t)

    def release_all(self) -> int:
        """Unstall every held token; used only by the deadlock fallback."""
        self.stall_disabled = True
        count = 0
        for t in self._tokens_by_priority():
            if t.stalled:
                t.stalled = False
                t.stalled_on = None
                count += 1
                if t.owner == self.pid and not t.consistent():
                    k = self._violating(t)
                    t.target = EventId(k, t.gcut[k - 1] + 1)
                self._schedule(t)
        self._drain()
        return count
