"""Small hand-built computations shipped with the package."""

from __future__ import annotations

from importlib import resources

from .core import EventId
from .trace import Trace, TraceBuilder, loads


def two_process_example() -> Trace:
    """Two processes, one message from the second event of P1 to P2."""
    b = TraceBuilder(2)
    b.internal(1)
    b.send(1, 2)
    b.internal(1)
    b.internal(2)
    b.recv(2, 1)
    b.internal(2)
    labels = dict(zip("abc", (EventId(1, k) for k in (1, 2, 3))))
    labels.update(zip("efg", (EventId(2, k) for k in (1, 2, 3))))
    return b.build(labels)


def three_process_example() -> Trace:
    """Three processes with one integer variable each and three messages."""
    b = TraceBuilder(3)
    b.internal(1, x1=1)
    b.internal(1, x1=2)
    b.send(1, 2, x1=-1)
    b.internal(1, x1=0)
    b.internal(2, x2=0)
    b.send(2, 3, x2=2)
    b.internal(3, x3=4)
    b.recv(3, 2, x3=1)
    b.send(3, 2, x3=2)
    b.internal(3, x3=4)
    b.recv(2, 3, x2=1)
    b.recv(2, 1, x2=3)
    labels = {}
    for pid, names in ((1, "abcd"), (2, "efgh"), (3, "uvwx")):
        labels.update({c: EventId(pid, k) for k, c in enumerate(names, 1)})
    return b.build(labels)


def load_fixture(name: str) -> Trace:
    """``fig1`` or ``fig2``, read from the packaged trace files."""
    text = resources.files("dslice.data").joinpath(f"{name}.trace").read_text()
    return loads(text)
