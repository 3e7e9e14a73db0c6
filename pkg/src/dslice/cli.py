"""Command line: ``dslice {slice,generate,compare,bench}``.

Predicate text grammar::

    conj x1>=1 x3<=3        local clauses, all of which must hold
    channels-empty          no message in transit on any channel
    in-transit 1 2 <=0      at most k messages in transit from P1 to P2
    A ; B                   conjunction of the above
    true | false

``--trace`` accepts a trace file path or one of the bundled names
``fig1``/``fig2``.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

from .dot import computation_dot, slice_dot
from .fixtures import load_fixture
from .generate import GenParams, generate_trace
from .oracle import LatticeBudgetExceeded, slice_bruteforce
from .predicates import SpecificationError, parse
from .report import bench, write_report
from .sim import Algorithm, LivenessFailure, RunResult, run_simulation
from .slicer import SliceRecord
from .trace import Trace, TraceError, dumps, load_trace

ALGOS = ("oracle", "central", "dist", "dist-opt")


class UsageError(Exception):
    pass


def _fmt(cut) -> str:
    return "[" + ",".join(map(str, cut)) + "]"


def _seeds(text: str) -> list[int]:
    out = []
    for part in filter(None, text.split(",")):
        m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", part)
        if m:
            lo, hi = m.groups()
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError("empty seed list")
    return out


def _ns(text: str) -> list[int]:
    return _seeds(text)


def _load(args) -> Trace:
    if bool(args.trace) == bool(args.gen):
        raise UsageError("give exactly one of --trace or --gen")
    if args.gen:
        return generate_trace(GenParams.parse(args.gen))
    if args.trace in ("fig1", "fig2") and not Path(args.trace).exists():
        return load_fixture(args.trace)
    return load_trace(args.trace)


def _oracle_records(trace: Trace, spec) -> tuple[list[SliceRecord], RunResult | None]:
    sl = slice_bruteforce(trace, spec)
    recs = [SliceRecord(e.pid, e, cut, ()) for e, cut in sorted(sl.jb.items())]
    return recs, None


def _run(trace: Trace, spec, algo: str, seed: int):
    if algo == "oracle":
        return _oracle_records(trace, spec)
    res = run_simulation(trace, spec, Algorithm(algo), seed)
    return res.outputs, res


def _write_metrics(path, rows: dict[str, dict[str, int]]) -> None:
    lines = []
    for label, metrics in rows.items():
        for k, v in metrics.items():
            lines.append(f"{label}.{k}={v}" if label else f"{k}={v}")
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_slice(args) -> int:
    trace = _load(args)
    spec = parse(args.pred)
    seed = _seeds(args.seeds)[0]
    records, res = _run(trace, spec, args.algo, seed)
    seen = set()
    for r in records:
        if args.dedupe and r.cut in seen:
            continue
        seen.add(r.cut)
        print(r)
    unique = sorted({r.cut for r in records}, key=lambda c: (sum(c), c))
    print(f"# unique cuts: {len(unique)}")
    for c in unique:
        print(f"cut={_fmt(c)}")
    if args.dot:
        outdir = Path(args.dot)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "computation.dot").write_text(computation_dot(trace))
        (outdir / "slice.dot").write_text(slice_dot(unique, trace))
    if args.metrics and res is not None:
        _write_metrics(args.metrics, {"": res.metrics.as_dict()})
    return 0


def cmd_generate(args) -> int:
    trace = generate_trace(GenParams.parse(args.gen))
    text = dumps(trace)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _read_cuts(path) -> set[tuple[int, ...]]:
    cuts = set()
    for line in Path(path).read_text().splitlines():
        m = re.search(r"\[([\d,\s]*)\]", line)
        if m and not line.lstrip().startswith("#"):
            cuts.add(tuple(int(x) for x in m.group(1).split(",") if x.strip()))
    return cuts


def cmd_compare(args) -> int:
    trace = _load(args)
    spec = parse(args.pred)
    algos = args.algos.split(",")
    for a in algos:
        if a not in ALGOS:
            raise UsageError(f"unknown algorithm {a!r}")
    if len(algos) + bool(args.expect) < 2:
        raise UsageError("compare needs at least two algorithms (or --expect)")
    reference = _read_cuts(args.expect) if args.expect else None
    ref_name = "expected" if args.expect else None
    table = {}
    status = 0
    print(f"{'algo':<10} {'seed':>5} {'cuts':>5} {'outputs':>8} {'messages':>9} {'peak':>7}")
    for seed in _seeds(args.seeds):
        for a in algos:
            if a == "oracle" and seed != _seeds(args.seeds)[0]:
                continue
            records, res = _run(trace, spec, a, seed)
            cuts = {r.cut for r in records}
            m = res.metrics if res else None
            print(f"{a:<10} {seed:>5} {len(cuts):>5} {len(records):>8} "
                  f"{m.total_messages if m else '-':>9} {m.max_peak_units if m else '-':>7}")
            if m:
                table[f"{a}.seed{seed}"] = m.as_dict()
            if reference is None:
                reference, ref_name = cuts, f"{a}(seed {seed})"
            elif cuts != reference and status == 0:
                diff = sorted(cuts ^ reference, key=lambda c: (sum(c), c))[0]
                side = a if diff in cuts else ref_name
                print(f"MISMATCH: {_fmt(diff)} only in {side}")
                status = 1
    if args.metrics:
        _write_metrics(args.metrics, table)
    print("identical" if status == 0 else "different")
    return status


def cmd_bench(args) -> int:
    rows = bench(_ns(args.n), args.bound, args.p, _seeds(args.seeds))
    cols = ["n", "events", "space_ratio", "central_max_msgs", "dist_max_msgs", "opt_max_msgs"]
    print("\t".join(cols))
    for r in rows:
        print("\t".join(f"{getattr(r, c):.4f}" if isinstance(getattr(r, c), float) else str(getattr(r, c))
                        for c in cols))
    if args.out:
        table, fig = write_report(rows, args.out)
        print(f"# wrote {table} and {fig}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dslice", description="Online slicing of distributed computations.")
    sub = p.add_subparsers(dest="command", required=True)

    def source(sp):
        sp.add_argument("--trace", help="trace file, or fig1/fig2")
        sp.add_argument("--gen", help="generate instead: n=..,bound=..,p=..,seed=..")
        sp.add_argument("--pred", required=True, help="predicate text")
        sp.add_argument("--seeds", default="0", help="scheduler seeds, e.g. 0,1,5-9")
        sp.add_argument("--metrics", help="write key=value metrics here")

    s = sub.add_parser("slice", help="compute the slice of one trace")
    source(s)
    s.add_argument("--algo", choices=ALGOS, default="dist-opt")
    s.add_argument("--dedupe", action="store_true", help="print each cut once")
    s.add_argument("--dot", help="directory for computation.dot and slice.dot")
    s.set_defaults(func=cmd_slice)

    g = sub.add_parser("generate", help="write a random trace")
    g.add_argument("--gen", required=True)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("compare", help="check that algorithms agree")
    source(c)
    c.add_argument("--algos", default=",".join(ALGOS))
    c.add_argument("--expect", help="file of expected cuts, one [..] per line")
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("bench", help="storage and message sweep over process counts")
    b.add_argument("--n", default="2-10")
    b.add_argument("--bound", type=int, default=100)
    b.add_argument("--p", type=float, default=0.8)
    b.add_argument("--seeds", default="0")
    b.add_argument("--out", help="directory for bench.tsv and bench.png")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SpecificationError, TraceError, LatticeBudgetExceeded, LivenessFailure,
            ValueError, OSError) as err:
        print(f"dslice: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
