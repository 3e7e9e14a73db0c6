"""Bench sweep comparing the centralized and distributed slicers."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .generate import GenParams, generate_trace
from .predicates import PredicateSpec, conj
from .sim import Algorithm, run_simulation


@dataclass
class BenchRow:
    n: int
    events: int
    space_ratio: float
    central_peak: int
    dist_peak: int
    central_max_msgs: int
    dist_max_msgs: int
    opt_max_msgs: int
    dist_total_msgs: int
    opt_total_msgs: int


def default_predicate(n: int) -> PredicateSpec:
    return conj(*(f"x{i}>=0" for i in range(1, n + 1)))


def bench(ns: Sequence[int], bound: int = 100, p_send: float = 0.8, seeds: Sequence[int] = (0,),
          pred: PredicateSpec | None = None) -> list[BenchRow]:
    """One row per (n, seed); the predicate defaults to ``x_i >= 0`` on every process."""
    rows = []
    for n in ns:
        spec = pred or default_predicate(n)
        for seed in seeds:
            trace = generate_trace(GenParams(n, bound, p_send, seed))
            c = run_simulation(trace, spec, Algorithm.CENTRAL, seed).metrics
            d = run_simulation(trace, spec, Algorithm.DIST, seed).metrics
            o = run_simulation(trace, spec, Algorithm.DIST_OPT, seed).metrics
            rows.append(BenchRow(
                n, len(trace), d.max_peak_units / c.max_peak_units, c.max_peak_units, d.max_peak_units,
                c.max_messages, d.max_messages, o.max_messages, d.total_messages, o.total_messages,
            ))
    return rows


def write_table(rows: Sequence[BenchRow], path, delimiter: str = "\t") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(asdict(rows[0])), delimiter=delimiter)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.4f}" if isinstance(v, float) else v) for k, v in asdict(r).items()})


def plot(rows: Sequence[BenchRow], path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = sorted({r.n for r in rows})

    def mean(attr, n):
        vals = [getattr(r, attr) for r in rows if r.n == n]
        return sum(vals) / len(vals)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(ns, [mean("space_ratio", n) for n in ns], marker="o")
    ax1.set_xlabel("processes")
    ax1.set_ylabel("max distributed / centralized storage")
    ax1.set_ylim(bottom=0)
    for attr, lab in (("central_max_msgs", "centralized"), ("dist_max_msgs", "distributed"),
                      ("opt_max_msgs", "optimized")):
        ax2.plot(ns, [mean(attr, n) for n in ns], marker="o", label=lab)
    ax2.set_xlabel("processes")
    ax2.set_ylabel("max messages received by one slicer")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(rows: Sequence[BenchRow], outdir) -> tuple[Path, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    table, figure = outdir / "bench.tsv", outdir / "bench.png"
    write_table(rows, table)
    plot(rows, figure)
    return table, figure
