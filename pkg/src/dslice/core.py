"""Events, vector clocks and consistent cuts of a finite distributed computation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence


class ConfigurationError(ValueError):
    """Vectors or processes that do not belong to the same computation."""


class Kind(enum.Enum):
    INTERNAL = "internal"
    MSGSEND = "send"
    MSGRECV = "recv"


class EventId(NamedTuple):
    pid: int
    eid: int

    def __str__(self):
        return f"<{self.pid},{self.eid}>"


@dataclass(frozen=True)
class LocalState:
    """Process variables plus cumulative per-peer send/receive counts.

    ``sent[j]`` counts messages sent to process ``j + 1`` and ``recvd[j]``
    messages received from it.
    """

    vars: Mapping[str, int] = field(default_factory=dict)
    sent: tuple[int, ...] = ()
    recvd: tuple[int, ...] = ()

    @classmethod
    def initial(cls, n: int, names: Iterable[str] = ()) -> "LocalState":
        return cls({name: 0 for name in names}, (0,) * n, (0,) * n)

    @property
    def size(self) -> int:
        return len(self.vars) + len(self.sent) + len(self.recvd)


@dataclass(frozen=True)
class MessageRef:
    """Send side: ``peer`` is the destination; receive side: the source.

    ``seq`` is the 1-based sequence number on the (sender, receiver) channel.
    ``sender`` is set on receive events only.
    """

    peer: int
    seq: int
    sender: Optional[EventId] = None


@dataclass(frozen=True)
class Event:
    id: EventId
    vc: tuple[int, ...]
    kind: Kind = Kind.INTERNAL
    state: LocalState = field(default_factory=LocalState)
    msg: Optional[MessageRef] = None

    @property
    def pid(self) -> int:
        return self.id.pid

    @property
    def eid(self) -> int:
        return self.id.eid

    @property
    def sender(self) -> Optional[EventId]:
        return self.msg.sender if self.msg is not None else None


def _check_lengths(a: Sequence[int], b: Sequence[int]) -> None:
    if len(a) != len(b):
        raise ConfigurationError(f"vector length mismatch: {len(a)} != {len(b)}")


def vc_less(a: Sequence[int], b: Sequence[int]) -> bool:
    _check_lengths(a, b)
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def happened_before(e: Event, f: Event) -> bool:
    return vc_less(e.vc, f.vc)


def concurrent(e: Event, f: Event) -> bool:
    return not happened_before(e, f) and not happened_before(f, e) and e.vc != f.vc


def vmax(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    _check_lengths(a, b)
    return tuple(x if x >= y else y for x, y in zip(a, b))


def vmin(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    _check_lengths(a, b)
    return tuple(x if x <= y else y for x, y in zip(a, b))


def cut_clock(events: Iterable[Event], n: int) -> tuple[int, ...]:
    clock = (0,) * n
    for e in events:
        clock = vmax(clock, e.vc)
    return clock


def is_consistent(gcut: Sequence[int], depend: Sequence[int]) -> bool:
    _check_lengths(gcut, depend)
    return all(d <= g for g, d in zip(gcut, depend))


def leq(a: Sequence[int], b: Sequence[int]) -> bool:
    _check_lengths(a, b)
    return all(x <= y for x, y in zip(a, b))


def contains(frontier: Sequence[int], eid: EventId) -> bool:
    return frontier[eid.pid - 1] >= eid.eid


@dataclass(frozen=True)
class Cut:
    """A global state named by its frontier (latest eid per process, 0 = none).

    Equality and hashing use the frontier only.
    """

    frontier: tuple[int, ...]
    clock: tuple[int, ...] = field(compare=False)
    states: tuple[LocalState, ...] = field(compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.frontier)

    @property
    def consistent(self) -> bool:
        return self.clock == self.frontier

    def __str__(self):
        return "[" + ",".join(map(str, self.frontier)) + "]"
