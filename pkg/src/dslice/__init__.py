"""Online slicing of distributed computations for regular predicates."""

from .core import Cut, Event, EventId, Kind, LocalState, concurrent, cut_clock, happened_before, is_consistent
from .generate import GenParams, generate_trace
from .oracle import (
    CentralSlicer,
    CutLattice,
    LatticeBudgetExceeded,
    Slice,
    centralized_online_slice,
    enumerate_lattice,
    jb_of_event,
    satisfying_cuts_from_slice,
    slice_bruteforce,
)
from .predicates import PredicateSpec, evaluate, forbidden_process, is_regular_witness, parse
from .sim import Algorithm, LivenessFailure, RunResult, run_simulation
from .trace import Trace, TraceBuilder, load_trace, save_trace

__all__ = [
    "Algorithm", "CentralSlicer", "Cut", "CutLattice", "Event", "EventId", "GenParams", "Kind",
    "LatticeBudgetExceeded", "LivenessFailure", "LocalState", "PredicateSpec", "RunResult", "Slice",
    "Trace", "TraceBuilder", "centralized_online_slice", "concurrent", "cut_clock", "enumerate_lattice",
    "evaluate", "forbidden_process", "generate_trace", "happened_before", "is_consistent",
    "is_regular_witness", "jb_of_event", "load_trace", "parse", "run_simulation",
    "satisfying_cuts_from_slice", "save_trace", "slice_bruteforce",
]
