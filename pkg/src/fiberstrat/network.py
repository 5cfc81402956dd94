"""Weight vectors of a linear network, their subsequence products, the
differential of the multiplication map, gauge transforms, and sampling
points with a prescribed rank list on a given fiber."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .ranklist import NetworkShape, RankList, validate_ranklist
from .subspace import DEFAULT_TOL, Tolerances, numerical_rank


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Factors W_1..W_L; W[j-1] holds W_j with shape (d_j, d_{j-1})."""

    shape: NetworkShape
    W: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(np.array(M, dtype=float).reshape(self.shape.d[j + 1], self.shape.d[j])
                     for j, M in enumerate(self.W))
        if len(mats) != self.shape.L:
            raise ValueError(f"expected {self.shape.L} factors, got {len(mats)}")
        for M in mats:
            if not np.all(np.isfinite(M)):
                raise ValueError("weights must be finite")
        object.__setattr__(self, "W", mats)

    @property
    def L(self) -> int:
        return self.shape.L

    def layer(self, j: int) -> np.ndarray:
        return self.W[j - 1]

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(M * M) for M in self.W)))

    def replace(self, j: int, M: np.ndarray) -> "WeightVector":
        mats = list(self.W)
        mats[j - 1] = M
        return WeightVector(self.shape, tuple(mats))

    def to_vector(self) -> np.ndarray:
        """Column-major blocks, j = 1..L ascending."""
        return np.concatenate([M.reshape(-1, order="F") for M in self.W])

    @classmethod
    def from_vector(cls, shape: NetworkShape, v: np.ndarray) -> "WeightVector":
        return cls(shape, tuple(split_blocks(shape, v)))

    @classmethod
    def from_output_first(cls, *mats) -> "WeightVector":
        """Build from (W_L, ..., W_1), the order a product is written in."""
        return cls.from_factors(list(reversed(mats)))

    @classmethod
    def from_factors(cls, mats) -> "WeightVector":
        """Build from (W_1, ..., W_L) and infer the shape."""
        mats = [np.atleast_2d(np.asarray(M, dtype=float)) for M in mats]
        d = [mats[0].shape[1]] + [M.shape[0] for M in mats]
        return cls(NetworkShape(tuple(d)), tuple(mats))

    def __add__(self, other: "WeightVector") -> "WeightVector":
        return WeightVector(self.shape, tuple(a + b for a, b in zip(self.W, other.W)))


def split_blocks(shape: NetworkShape, v: np.ndarray) -> list[np.ndarray]:
    out, pos = [], 0
    for j in range(1, shape.L + 1):
        p, q = shape.d[j], shape.d[j - 1]
        out.append(np.asarray(v[pos:pos + p * q]).reshape((p, q), order="F"))
        pos += p * q
    return out


def join_blocks(blocks) -> np.ndarray:
    return np.concatenate([np.asarray(B).reshape(-1, order="F") for B in blocks])


def mu_sub(theta: WeightVector, y: int, x: int) -> np.ndarray:
    """W_y W_{y-1} ... W_{x+1}; the identity when y == x."""
    if not (theta.L >= y >= x >= 0):
        raise ValueError(f"need L >= y >= x >= 0, got ({y},{x})")
    P = np.eye(theta.shape.d[x])
    for j in range(x + 1, y + 1):
        P = theta.layer(j) @ P
    return P


def mu(theta: WeightVector) -> np.ndarray:
    return mu_sub(theta, theta.L, 0)


def product_scale(theta: WeightVector, y: int, x: int) -> float:
    """Product of the spectral norms of W_{x+1}..W_y, the reference size for
    rank decisions on W_{y~x}."""
    return float(np.prod([np.linalg.norm(theta.layer(j), 2) for j in range(x + 1, y + 1)]))


def ranklist_of(theta: WeightVector, tol: Tolerances = DEFAULT_TOL) -> RankList:
    entries = {}
    for x in range(theta.L):
        P = np.eye(theta.shape.d[x])
        for y in range(x + 1, theta.L + 1):
            P = theta.layer(y) @ P
            entries[(y, x)] = numerical_rank(P, tol, product_scale(theta, y, x))
    return RankList.from_entries(theta.shape, entries)


def _prefix_suffix(theta: WeightVector):
    L = theta.L
    left = [mu_sub(theta, L, j) for j in range(L + 1)]   # W_{L~j}
    right = [mu_sub(theta, j, 0) for j in range(L + 1)]  # W_{j~0}
    return left, right


def dmu_apply(theta: WeightVector, delta: WeightVector) -> np.ndarray:
    left, right = _prefix_suffix(theta)
    return sum(left[j] @ delta.layer(j) @ right[j - 1] for j in range(1, theta.L + 1))


def dmu_matrix(theta: WeightVector) -> np.ndarray:
    """(d_L d_0) x d_theta matrix of the differential, column-major both sides."""
    left, right = _prefix_suffix(theta)
    blocks = [np.kron(right[j - 1].T, left[j]) for j in range(1, theta.L + 1)]
    return np.hstack(blocks)


def dmu_scale(theta: WeightVector) -> float:
    """Reference size for rank decisions on the differential: the largest
    product of factor norms that multiplies any one block."""
    norms = [np.linalg.norm(M, 2) for M in theta.W]
    return float(max(np.prod(norms[:j] + norms[j + 1:]) for j in range(theta.L)))


def dmu_rank(theta: WeightVector, tol: Tolerances = DEFAULT_TOL) -> int:
    return numerical_rank(dmu_matrix(theta), tol, dmu_scale(theta))


def dmu_transpose_apply(theta: WeightVector, M: np.ndarray) -> WeightVector:
    M = np.asarray(M, dtype=float)
    if M.shape != (theta.shape.d[-1], theta.shape.d[0]):
        raise ValueError(f"expected a {theta.shape.d[-1]}x{theta.shape.d[0]} matrix")
    left, right = _prefix_suffix(theta)
    return WeightVector(theta.shape, tuple(left[j].T @ M @ right[j - 1].T
                                           for j in range(1, theta.L + 1)))


def dmu_rank_formula(theta: WeightVector, tol: Tolerances = DEFAULT_TOL) -> int:
    """rk dmu = sum_j rk W_{L~j} rk W_{j-1~0} - sum_{0<j<L} rk W_{L~j} rk W_{j~0}."""
    r = ranklist_of(theta, tol)
    L = theta.L
    return (sum(r(L, j) * r(j - 1, 0) for j in range(1, L + 1))
            - sum(r(L, j) * r(j, 0) for j in range(1, L)))


def _check_invertible(J: np.ndarray, max_cond: float = 1e12):
    J = np.asarray(J, dtype=float)
    if J.shape[0] != J.shape[1] or np.linalg.cond(J) > max_cond:
        raise np.linalg.LinAlgError("gauge matrix is singular or badly conditioned")


def eta_apply(theta: WeightVector, J, inverse: bool = False) -> WeightVector:
    """M_j -> J_j M_j J_{j-1}^{-1}, or its inverse map."""
    J = [np.asarray(Jj, dtype=float) for Jj in J]
    if len(J) != theta.L + 1:
        raise ValueError("need L+1 gauge matrices J_0..J_L")
    for Jj in J:
        _check_invertible(Jj)
    mats = []
    for j in range(1, theta.L + 1):
        M = theta.layer(j)
        if inverse:
            mats.append(np.linalg.solve(J[j], M) @ J[j - 1])
        else:
            mats.append(J[j] @ np.linalg.solve(J[j - 1].T, M.T).T)
    return WeightVector(theta.shape, tuple(mats))


def random_gauge(n: int, rng: np.random.Generator, max_cond: float = 1e4) -> np.ndarray:
    while True:
        M = rng.standard_normal((n, n))
        if np.linalg.cond(M) < max_cond:
            return M


def sample_on_stratum(W: np.ndarray, r: RankList, seed: int = 0,
                      tol: Tolerances = DEFAULT_TOL, gauges: bool = True) -> WeightVector:
    """A point of the fiber over W whose rank list is r.

    Built from the SVD of W and the canonical weight vector of r, then
    scrambled by random invertible gauges between consecutive factors.
    """
    from .flow import canonical_weight_vector

    W = np.asarray(W, dtype=float)
    shape = r.shape
    v = validate_ranklist(r)
    if not v:
        raise ValueError("invalid rank list: " + "; ".join(v.reasons))
    if W.shape != (shape.d[-1], shape.d[0]):
        raise ValueError(f"W must be {shape.d[-1]}x{shape.d[0]}")
    R = numerical_rank(W, tol)
    if R != r.rank_W:
        raise ValueError(f"rank of W is {R} but the rank list needs {r.rank_W}")
    L = shape.L
    U, s, Vt = np.linalg.svd(W)
    dprime = np.ones(shape.d[0])
    dprime[:R] = s[:R]
    right = np.diag(dprime) @ Vt
    canon = canonical_weight_vector(r)
    mats = [canon.layer(j).copy() for j in range(1, L + 1)]
    mats[L - 1] = U @ mats[L - 1]
    mats[0] = mats[0] @ right
    if gauges and L > 1:
        rng = np.random.default_rng(seed)
        G = [np.eye(shape.d[0])] + [random_gauge(shape.d[j], rng) for j in range(1, L)] + [np.eye(shape.d[L])]
        mats = [G[j] @ mats[j - 1] @ np.linalg.inv(G[j - 1]) for j in range(1, L + 1)]
    return WeightVector(shape, tuple(mats))


def random_rank_matrix(p: int, q: int, R: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((p, R)) @ rng.standard_normal((R, q))


# ---------------------------------------------------------------- io


def weights_to_json(theta: WeightVector) -> dict:
    return {"d": list(theta.shape.d), "W": [M.tolist() for M in theta.W]}


def weights_from_json(obj: dict) -> WeightVector:
    extra = set(obj) - {"d", "W"}
    if extra:
        raise ValueError(f"unknown keys in weights: {sorted(extra)}")
    return WeightVector(NetworkShape(tuple(obj["d"])), tuple(np.array(M, dtype=float) for M in obj["W"]))


def load_weights(path) -> WeightVector:
    with open(path) as fh:
        return weights_from_json(json.load(fh))


def load_csv_matrix(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    return np.atleast_2d(np.array(rows, dtype=float))
