import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from fiberstrat.dag import build_dag
from fiberstrat.network import WeightVector
from fiberstrat.ranklist import IntervalMultiset, NetworkShape, RankList, ranks_of

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# 5x6x4 figure: (rk W2, rk W1) -> (dim, dof, rdof), rk W = 1
FIGURE_564 = {
    (5, 1): (31, 34, 3), (5, 2): (34, 34, 0),
    (4, 1): (29, 37, 8), (4, 2): (33, 36, 3), (4, 3): (35, 35, 0),
    (3, 1): (25, 40, 15), (3, 2): (30, 38, 8), (3, 3): (33, 36, 3), (3, 4): (34, 34, 0),
    (2, 1): (19, 43, 24), (2, 2): (25, 40, 15), (2, 3): (29, 37, 8), (2, 4): (31, 34, 3),
    (1, 1): (11, 46, 35), (1, 2): (18, 42, 24), (1, 3): (23, 38, 15), (1, 4): (26, 34, 8),
}

SHAPE_564 = NetworkShape((4, 6, 5))


def stratum_564(a: int, b: int) -> RankList:
    """The 5x6x4, rk W = 1 stratum with rk W2 = a and rk W1 = b."""
    return RankList.from_entries(SHAPE_564, {(2, 1): a, (1, 0): b, (2, 0): 1})


def scalar_ranklist(*factors_output_first) -> RankList:
    """Rank list of a chain of 1x1 factors given as (W_L, ..., W_1) in {0, 1}."""
    from fiberstrat.network import ranklist_of
    return ranklist_of(WeightVector.from_output_first(*[[[x]] for x in factors_output_first]))


@st.composite
def multisets(draw, max_L=4, max_mult=2):
    L = draw(st.integers(1, max_L))
    w = [[draw(st.integers(0, max_mult)) for _ in range(k + 1)] for k in range(L + 1)]
    for j in range(L + 1):
        # every layer needs at least one interval through it
        if not any(w[t][s] for t in range(j, L + 1) for s in range(j + 1)):
            w[j][j] = 1
    d = [sum(sum(w[t][:j + 1]) for t in range(j, L + 1)) for j in range(L + 1)]
    return IntervalMultiset(NetworkShape(tuple(d)), w)


@st.composite
def valid_ranklists(draw, max_L=4, max_mult=2):
    return ranks_of(draw(multisets(max_L, max_mult)))


@st.composite
def comparable_pairs(draw, max_L=3, max_d=3):
    L = draw(st.integers(1, max_L))
    d = tuple(draw(st.integers(1, max_d)) for _ in range(L + 1))
    shape = NetworkShape(d)
    R = draw(st.integers(0, min(d)))
    g = build_dag(shape, R)
    a = draw(st.integers(0, len(g.vertices) - 1))
    b = draw(st.integers(0, len(g.vertices) - 1))
    return g.vertices[a].ranklist, g.vertices[b].ranklist


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
