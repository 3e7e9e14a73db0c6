"""Graphviz renderings of a computation and of a slice."""

from __future__ import annotations

from typing import Iterable

from .core import Kind, leq
from .trace import Trace


def computation_dot(trace: Trace) -> str:
    lines = ["digraph computation {", "  rankdir=LR;", "  node [shape=circle, fontsize=10];"]
    for pid, evs in enumerate(trace.events, 1):
        lines.append(f"  subgraph p{pid} {{ rank=same;")
        lines.append(f'    P{pid} [shape=plaintext, label="P{pid}"];')
        for e in evs:
            value = ",".join(str(v) for v in e.state.vars.values())
            lines.append(f'    e{pid}_{e.eid} [label="{trace.label(e.id)}\\n{value}"];')
        lines.append("  }")
        chain = [f"P{pid}"] + [f"e{pid}_{e.eid}" for e in evs]
        if len(chain) > 1:
            lines.append("  " + " -> ".join(chain) + " [arrowhead=none];")
    for e in trace:
        if e.kind is Kind.MSGRECV:
            s = e.sender
            lines.append(f"  e{s.pid}_{s.eid} -> e{e.pid}_{e.eid} [style=dashed, constraint=false];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def slice_dot(cuts: Iterable[tuple[int, ...]], trace: Trace | None = None) -> str:
    """Hasse diagram of the given cuts ordered by inclusion."""
    cuts = sorted(set(cuts), key=lambda c: (sum(c), c))

    def name(c):
        return "c" + "_".join(map(str, c))

    def label(c):
        if trace is None:
            return "[" + ",".join(map(str, c)) + "]"
        return trace.format_cut(trace.cut(c)) + "\\n[" + ",".join(map(str, c)) + "]"

    lines = ["digraph slice {", "  node [shape=box, fontsize=10];"]
    for c in cuts:
        lines.append(f'  {name(c)} [label="{label(c)}"];')
    for a in cuts:
        for b in cuts:
            if a == b or not leq(a, b):
                continue
            if any(m not in (a, b) and leq(a, m) and leq(m, b) for m in cuts):
                continue
            lines.append(f"  {name(a)} -> {name(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
