import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import SHAPE_564, stratum_564
from fiberstrat.flow import canonical_weight_vector
from fiberstrat.network import (WeightVector, dmu_apply, dmu_matrix, dmu_rank, dmu_rank_formula,
                                dmu_transpose_apply, eta_apply, load_weights, mu, mu_sub, random_gauge,
                                random_rank_matrix, ranklist_of, sample_on_stratum, weights_from_json,
                                weights_to_json)
from fiberstrat.ranklist import NetworkShape, dimension_ledger, minimal_ranklist
from fiberstrat.sampling import random_case
from fiberstrat.subspace import equal, fundamental_subspaces, span

# the two-layer example with d = (1,2,1): W1 = [[1],[0]], W2 = [1, 0]
SMALL = WeightVector.from_output_first([[1.0, 0.0]], [[1.0], [0.0]])


def random_theta(rng, d, ranks=None):
    mats = []
    for j in range(1, len(d)):
        r = min(d[j], d[j - 1]) if ranks is None else ranks[j - 1]
        mats.append(random_rank_matrix(d[j], d[j - 1], r, rng))
    return WeightVector.from_factors(mats)


def test_weight_vector_validation():
    with pytest.raises(ValueError):
        WeightVector(NetworkShape((1, 1)), (np.array([[np.inf]]),))
    with pytest.raises(ValueError):
        WeightVector(NetworkShape((1, 1, 1)), (np.ones((1, 1)),))


def test_mu_sub_examples(rng):
    theta = WeightVector.from_output_first([[2.0]], [[3.0]])
    assert mu_sub(theta, 2, 0)[0, 0] == 6.0
    assert np.array_equal(mu_sub(theta, 1, 1), np.eye(1))
    with pytest.raises(ValueError):
        mu_sub(theta, 0, 1)
    t = random_theta(rng, (3, 4, 2, 5, 3))
    scale = np.prod([np.linalg.norm(M) for M in t.W])
    for y, z, x in ((4, 2, 0), (3, 1, 0), (4, 3, 1)):
        err = np.linalg.norm(mu_sub(t, y, x) - mu_sub(t, y, z) @ mu_sub(t, z, x))
        assert err <= 1e-10 * scale


def test_ranklist_of_examples():
    r = ranklist_of(SMALL)
    assert (r(1, 0), r(2, 1), r(2, 0)) == (1, 1, 1)
    zero = WeightVector(SHAPE_564, tuple(np.zeros((SHAPE_564.d[j + 1], SHAPE_564.d[j])) for j in range(2)))
    assert ranklist_of(zero) == minimal_ranklist(SHAPE_564, 0)
    assert ranklist_of(canonical_weight_vector(stratum_564(3, 2))) == stratum_564(3, 2)


def test_dmu_matrix_examples():
    J = dmu_matrix(SMALL)
    assert J.shape == (1, 4)
    assert np.array_equal(J, [[1.0, 0.0, 1.0, 0.0]])
    assert J.shape[1] - dmu_rank(SMALL) == 3 == dimension_ledger(ranklist_of(SMALL)).D_free
    z = WeightVector(SMALL.shape, tuple(np.zeros_like(M) for M in SMALL.W))
    assert not np.any(dmu_matrix(z)) and dmu_rank(z) == 0


def test_dmu_matrix_matches_direct_sum(rng):
    theta = random_theta(rng, (3, 4, 2, 5))
    J = dmu_matrix(theta)
    scale = np.prod([np.linalg.norm(M) for M in theta.W])
    for _ in range(50):
        delta = WeightVector.from_vector(theta.shape, rng.standard_normal(theta.shape.d_theta))
        direct = dmu_apply(theta, delta)
        assert np.linalg.norm(J @ delta.to_vector() - direct.reshape(-1, order="F")) <= 1e-10 * scale * delta.norm()


def test_transpose_examples(rng):
    out = dmu_transpose_apply(SMALL, np.array([[2.5]]))
    assert np.allclose(out.layer(2), [[2.5, 0.0]]) and np.allclose(out.layer(1), [[2.5], [0.0]])
    assert out.norm() > 0 and dmu_transpose_apply(SMALL, np.zeros((1, 1))).norm() == 0
    with pytest.raises(ValueError):
        dmu_transpose_apply(SMALL, np.zeros((2, 1)))
    theta = random_theta(rng, (3, 4, 2, 5))
    M = rng.standard_normal((5, 3))
    assert np.allclose(dmu_transpose_apply(theta, M).to_vector(), dmu_matrix(theta).T @ M.reshape(-1, order="F"))
    delta = WeightVector.from_vector(theta.shape, rng.standard_normal(theta.shape.d_theta))
    lhs = np.sum(dmu_apply(theta, delta) * M)
    rhs = delta.to_vector() @ dmu_transpose_apply(theta, M).to_vector()
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_single_layer():
    theta = WeightVector.from_factors([np.arange(6.0).reshape(2, 3)])
    J = dmu_matrix(theta)
    assert np.array_equal(J, np.eye(6))
    assert dimension_ledger(ranklist_of(theta)).D_stratum == 0


def test_eta_examples(rng):
    theta = random_theta(rng, (3, 4, 2))
    ident = [np.eye(n) for n in theta.shape.d]
    assert all(np.array_equal(a, b) for a, b in zip(eta_apply(theta, ident).W, theta.W))
    J = [random_gauge(n, rng) for n in theta.shape.d]
    back = eta_apply(eta_apply(theta, J), J, inverse=True)
    assert all(np.allclose(a, b, atol=1e-10) for a, b in zip(back.W, theta.W))
    moved = eta_apply(theta, J)
    assert ranklist_of(moved) == ranklist_of(theta)
    assert np.allclose(mu(moved), J[-1] @ mu(theta) @ np.linalg.inv(J[0]))
    with pytest.raises(np.linalg.LinAlgError):
        eta_apply(theta, [np.zeros((n, n)) for n in theta.shape.d])


def test_eta_maps_null_dmu(rng):
    # use a point with rank drops so null dmu is not generic
    theta = random_theta(rng, (3, 4, 3), ranks=(2, 2))
    J = [random_gauge(n, rng) for n in theta.shape.d]
    J[0], J[-1] = np.eye(3), np.eye(3)
    moved = eta_apply(theta, J)
    null_before = fundamental_subspaces(dmu_matrix(theta)).null
    null_after = fundamental_subspaces(dmu_matrix(moved)).null
    # a displacement transforms the same way as the weights
    images = []
    for c in range(null_before.dim):
        dv = WeightVector.from_vector(theta.shape, null_before.basis[:, c])
        images.append(eta_apply(dv, J).to_vector())
    assert equal(span(np.column_stack(images)), null_after)


def test_sample_on_stratum_examples(rng):
    W = random_rank_matrix(5, 4, 1, rng)
    theta = sample_on_stratum(W, stratum_564(3, 2), seed=3)
    assert np.linalg.matrix_rank(theta.layer(2)) == 3 and np.linalg.matrix_rank(theta.layer(1)) == 2
    assert np.linalg.norm(mu(theta) - W) <= 1e-8 * np.linalg.norm(W)
    with pytest.raises(ValueError):
        sample_on_stratum(random_rank_matrix(5, 4, 2, rng), stratum_564(3, 2))


def test_sample_identity_gauges_collapse():
    r = stratum_564(2, 2)
    canon = canonical_weight_vector(r)
    W = mu(canon)
    theta = sample_on_stratum(W, r, gauges=False)
    U, s, Vt = np.linalg.svd(W)
    dp = np.ones(4)
    dp[:1] = s[:1]
    assert np.allclose(theta.layer(2), U @ canon.layer(2))
    assert np.allclose(theta.layer(1), canon.layer(1) @ np.diag(dp) @ Vt)


@given(st.integers(0, 400))
def test_rank_formula_and_seed_independence(seed):
    c = random_case(seed)
    assert dmu_rank(c.theta) == dmu_rank_formula(c.theta)
    other = sample_on_stratum(c.W, c.ranklist, seed=seed + 1)
    assert ranklist_of(other) == ranklist_of(c.theta) == c.ranklist
    assert dimension_ledger(ranklist_of(other)) == dimension_ledger(c.ranklist)


@given(st.integers(0, 400))
def test_column_space_of_dmu(seed):
    c = random_case(seed)
    theta, L = c.theta, c.shape.L
    J = dmu_matrix(theta)
    pieces = []
    for j in range(1, L + 1):
        left = fundamental_subspaces(mu_sub(theta, L, j)).col.basis
        right = fundamental_subspaces(mu_sub(theta, j - 1, 0)).row.basis
        pieces.append(np.kron(right, left))
    target = span(np.hstack(pieces)) if pieces else None
    rng = np.random.default_rng(seed)
    for _ in range(3):
        img = J @ rng.standard_normal(J.shape[1])
        if np.linalg.norm(img) > 0:
            assert np.linalg.norm(img - target.project(img)) <= 1e-8 * np.linalg.norm(img)


def test_weights_json_round_trip(tmp_path):
    obj = weights_to_json(SMALL)
    assert obj == {"d": [1, 2, 1], "W": [[[1.0], [0.0]], [[1.0, 0.0]]]}
    path = tmp_path / "w.json"
    import json
    path.write_text(json.dumps(obj))
    back = load_weights(path)
    assert all(np.array_equal(a, b) for a, b in zip(back.W, SMALL.W))
    with pytest.raises(ValueError):
        weights_from_json({**obj, "bias": []})
