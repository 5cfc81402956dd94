import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import stratum_564
from fiberstrat.flow import build_flow_prebases, canonical_weight_vector
from fiberstrat.moves import two_matrix_tangent
from fiberstrat.network import WeightVector, dmu_matrix, dmu_rank, mu
from fiberstrat.ranklist import IntervalMultiset, NetworkShape, dimension_ledger, ranks_of
from fiberstrat.sampling import random_case
from fiberstrat.subspace import Tolerances
from fiberstrat.tangent import (PHI, PSI, TAU, FamilyIndex, canonical_index, classify_index, generators,
                                index_set_count, normal_space, phi_indices, prebasis_indices, tangent_space,
                                tau_matrices, verify_geometry)


def names(L, prebasis):
    return {fi.name() for fi in prebasis_indices(prebasis, L)}


def test_classify_examples():
    # at L = 4 phi22100 is a yellow block: on the fiber and on the stratum closure
    tags = classify_index(FamilyIndex(PHI, (2, 2, 1, 0, 0)), 4)
    assert {"fiber", "stratum"} <= tags and not {"L0", "comb"} & tags
    # with L = 2 the same index has l = L and h = 0
    assert "L0" in classify_index(FamilyIndex(PHI, (2, 2, 1, 0, 0)), 2)
    tags = classify_index(FamilyIndex(PHI, (2, 1, 1, 1, 0)), 2)
    assert {"swap", "comb", "L0"} <= tags and "fiber" not in tags
    tags = classify_index(FamilyIndex(TAU, (2, 1, 1, 1, 0)), 2)
    assert {"comb", "L0", "stratum", "fiber", "free"} <= tags
    with pytest.raises(ValueError):
        classify_index(FamilyIndex(PHI, (0, 1, 1, 0, 0)), 2)


def test_two_layer_prebasis_lists():
    fiber = {"phi10100", "phi10110", "phi11100", "phi11110", "phi12100", "phi12110",
             "phi21201", "phi21211", "phi21221", "phi22201", "phi22211", "phi22221",
             "tau21100", "tau21110", "tau22100", "tau22110"}
    assert names(2, "free") == names(2, "fiber") == fiber
    assert names(2, "stratum") == fiber - {"phi10110", "phi21221"}
    L0 = {fi.name() for fi in phi_indices(2) if "L0" in classify_index(fi, 2)}
    assert L0 == {"phi20100", "phi20110", "phi21100", "phi21110", "phi22100", "phi22110",
                  "phi21200", "phi21210", "phi21220", "phi22200", "phi22210", "phi22220"}
    comb = {fi.name() for fi in phi_indices(2) if "comb" in classify_index(fi, 2)}
    assert comb == {"phi10110", "phi20110", "phi21110", "phi21210", "phi21220", "phi21221"}


def test_canonical_index():
    assert canonical_index(TAU, (2, 1, 1, 1, 1)) == FamilyIndex(PHI, (2, 1, 1, 1, 1))
    assert canonical_index(TAU, (1, 1, 1, 1, 0)) == FamilyIndex(PHI, (1, 1, 2, 1, 0))
    assert canonical_index(PHI, (2, 1, 1, 1, 0)).family == PHI
    with pytest.raises(ValueError):
        canonical_index(TAU, (1, 1, 1, 1, 1))


def test_minimal_564_counts():
    r = stratum_564(1, 1)
    assert index_set_count(r, "L0", PHI) == 9
    assert index_set_count(r, "L0", TAU) == 1
    assert dimension_ledger(r).D_free == 46
    fs = build_flow_prebases(canonical_weight_vector(r))
    assert normal_space(fs).dim == 43
    assert tangent_space(fs).dim == 11


def test_tangent_and_normal_at_s32(rng):
    r = stratum_564(3, 2)
    fs = build_flow_prebases(canonical_weight_vector(r))
    T, N = tangent_space(fs), normal_space(fs)
    assert (T.dim, N.dim) == (30, 24)
    assert np.abs(T.basis.T @ N.basis).max() <= 1e-10


def test_single_layer_is_degenerate():
    theta = WeightVector.from_factors([np.arange(6.0).reshape(2, 3) + np.eye(2, 3)])
    fs = build_flow_prebases(theta)
    assert tangent_space(fs).dim == 0
    assert normal_space(fs).dim == theta.shape.d_theta
    assert verify_geometry(fs).passed


def test_one_matrix_families_are_axis_aligned_at_canonical_points():
    w = [[1] * (k + 1) for k in range(5)]
    w[2][0] = 2
    d = tuple(sum(sum(w[t][:j + 1]) for t in range(j, 5)) for j in range(5))
    canon = canonical_weight_vector(ranks_of(IntervalMultiset(NetworkShape(d), w)))
    fs = build_flow_prebases(canon)
    fam = FamilyIndex(PHI, (2, 2, 1, 0, 0))
    gens = generators(fs, fam)
    assert len(gens) == 4  # the 2x2 block of interval [0, 2]
    for fi in phi_indices(4):
        for g in generators(fs, fi):
            assert np.count_nonzero(np.abs(g) > 1e-12) == 1
    # a yellow move keeps the product
    J = dmu_matrix(canon)
    assert all(np.abs(J @ g).max() == 0 for g in gens)


def test_geometry_passes_on_canonical_points():
    for ab in ((1, 1), (3, 2), (5, 2), (3, 4)):
        rep = verify_geometry(canonical_weight_vector(stratum_564(*ab)))
        assert rep.passed, rep.lines()


def test_mismatched_tolerance_is_flagged():
    # one singular value sits at 2e-3 of the largest; a 5e-3 cutoff erases it
    rng = np.random.default_rng(0)
    U = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    V = np.linalg.qr(rng.standard_normal((4, 4)))[0]
    theta = WeightVector.from_factors([U @ np.diag([1, 1, 1, 2e-3]) @ V, rng.standard_normal((3, 4))])
    assert verify_geometry(theta).passed
    rep = verify_geometry(theta, Tolerances(rank_rel=5e-3))
    assert not rep.passed and rep.failures()


def test_tau_generators_match_path_tangent(rng):
    theta = canonical_weight_vector(stratum_564(2, 2))
    fs = build_flow_prebases(theta)
    for fi in prebasis_indices("stratum", 2):
        if fi.family != TAU:
            continue
        for H, g in zip(tau_matrices(fs, fi), generators(fs, fi)):
            assert np.allclose(two_matrix_tangent(theta, fi.idx[2], H).to_vector(), g)


def test_normal_indices_need_k_plus_one_at_least_i():
    assert classify_index(FamilyIndex(PSI, (2, 1, 1, 0)), 2) == {"psi_free", "psi_stratum"}
    assert classify_index(FamilyIndex(PSI, (2, 0, 2, 0)), 2) == frozenset()
    with pytest.raises(ValueError):
        classify_index(FamilyIndex(PSI, (1, 1, 1, 1)), 2)


@settings(max_examples=25)
@given(st.integers(0, 300))
def test_geometry_at_sampled_points(seed):
    c = random_case(seed)
    rep = verify_geometry(c.theta)
    assert rep.passed, rep.lines()
    led = dimension_ledger(c.ranklist)
    assert rep.dims["stratum"] == led.D_stratum
    assert dmu_rank(c.theta) == rep.dims["psi_free"]
    assert np.allclose(mu(c.theta), c.W, atol=1e-8 * max(1.0, np.linalg.norm(c.W)))
