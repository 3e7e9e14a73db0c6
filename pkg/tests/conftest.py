import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dslice.fixtures import load_fixture
from dslice.generate import GenParams, generate_trace

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def fig1():
    return load_fixture("fig1")


@pytest.fixture(scope="session")
def fig2():
    return load_fixture("fig2")


@st.composite
def small_traces(draw, max_n=4, max_bound=5):
    n = draw(st.integers(1, max_n))
    bound = draw(st.integers(1, max_bound))
    p = draw(st.sampled_from([0.0, 0.3, 0.8, 1.0]))
    seed = draw(st.integers(0, 2**32))
    return generate_trace(GenParams(n, bound, p, seed))


@st.composite
def regular_specs(draw, n):
    from dslice.predicates import CHANNELS_EMPTY, PredicateSpec, PredKind, conj, parse

    kind = draw(st.sampled_from(["conj", "channels", "transit", "both"]))
    if kind == "conj":
        pids = draw(st.lists(st.integers(1, n), min_size=1, max_size=n, unique=True))
        ops = [draw(st.sampled_from(["<=", ">=", "<", ">", "="])) for _ in pids]
        consts = [draw(st.integers(-2, 5)) for _ in pids]
        return conj(*(f"x{p}{o}{c}" for p, o, c in zip(pids, ops, consts)))
    if kind == "channels" or n < 2:
        return CHANNELS_EMPTY
    i, j = draw(st.permutations(range(1, n + 1)))[:2]
    transit = parse(f"in-transit {i} {j} <={draw(st.integers(0, 2))}")
    if kind == "transit":
        return transit
    p = draw(st.integers(1, n))
    return PredicateSpec(PredKind.CONJUNCTION_OF_THESE, members=(transit, conj(f"x{p}>=0")))


_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_VERDICTS, {})

    def record(key: str, ok: bool, detail: str) -> None:
        lines[key] = f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}"
        print(lines[key])

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines, key=lambda k: (int(k.rstrip("ab")), k)):
            terminalreporter.write_line(lines[key])
