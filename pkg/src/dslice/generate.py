"""Seeded random computations.

Every process repeats a local step (an internal event that assigns its
variable ``x<pid>`` a fresh value) until its event count reaches ``bound``.
Right after each local step it sends, with probability ``p_send``, a
message to a uniformly chosen other process.  Each message becomes
receivable after 0-3 further local steps of the receiver; receives are
events of the receiver and count toward its bound.  Messages still in
transit once a process has used up its bound are received anyway, so no
message is left unreceived.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from .trace import Trace, TraceBuilder


@dataclass(frozen=True)
class GenParams:
    n: int
    bound: int = 100
    p_send: float = 0.8
    seed: int = 0
    var_range: tuple[int, int] = (-2, 5)
    max_delay: int = 3

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.bound < 1:
            raise ValueError("bound must be at least 1")
        if not 0.0 <= self.p_send <= 1.0:
            raise ValueError("p_send must lie in [0, 1]")
        lo, hi = self.var_range
        if lo > hi:
            raise ValueError("empty var_range")

    @classmethod
    def parse(cls, text: str) -> "GenParams":
        """``n=4,bound=10,p=0.8,seed=3`` style."""
        kw = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, _, val = item.partition("=")
            key = key.strip()
            if key == "n":
                kw["n"] = int(val)
            elif key == "bound":
                kw["bound"] = int(val)
            elif key in ("p", "p_send"):
                kw["p_send"] = float(val)
            elif key == "seed":
                kw["seed"] = int(val)
            else:
                raise ValueError(f"unknown generator parameter {key!r}")
        if "n" not in kw:
            raise ValueError("generator parameters need n=")
        return cls(**kw)


def generate_trace(params: GenParams) -> Trace:
    rng = random.Random(params.seed)
    n = params.n
    b = TraceBuilder(n)
    lo, hi = params.var_range
    # per receiver: FIFO per sender of [remaining delay]
    inbox: list[dict[int, deque[list[int]]]] = [{} for _ in range(n)]

    def value() -> int:
        return rng.randint(lo, hi)

    def deliverable(i: int, force: bool):
        heads = [(q[0][0], src) for src, q in sorted(inbox[i].items()) if q]
        if not heads:
            return None
        delay, src = min(heads)
        return src if force or delay <= 0 else None

    def active(i: int) -> bool:
        return b.count(i + 1) < params.bound or any(inbox[i].values())

    while True:
        live = [i for i in range(n) if active(i)]
        if not live:
            break
        i = rng.choice(live)
        pid = i + 1
        exhausted = b.count(pid) >= params.bound
        src = deliverable(i, force=exhausted)
        if src is not None:
            inbox[i][src].popleft()
            b.recv(pid, src, **{f"x{pid}": value()})
            continue
        b.internal(pid, **{f"x{pid}": value()})
        for q in inbox[i].values():
            for m in q:
                m[0] -= 1
        if n > 1 and rng.random() < params.p_send:
            dst = rng.choice([j for j in range(1, n + 1) if j != pid])
            b.send(pid, dst, **{f"x{pid}": value()})
            inbox[dst - 1].setdefault(pid, deque()).append([rng.randint(0, params.max_delay)])
    names = [[f"x{p}"] for p in range(1, n + 1)]
    trace = b.build()
    return Trace(n, trace.events, names)
