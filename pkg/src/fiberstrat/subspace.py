"""Orthonormal-basis subspaces and the handful of operations the rest of the
package needs: fundamental subspaces, intersection, sum, complement,
images under a matrix, and comparison by principal angles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every rank or angle decision.

    rank_rel: singular values at or below rank_rel * sigma_max * max(p, q)
    count as zero.
    angle: principal-angle cosines at or above 1 - angle count as aligned.
    """

    rank_rel: float = 1e-10
    angle: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rel", "angle"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-2):
                raise ValueError(f"{name} must lie in (0, 1e-2), got {value}")


DEFAULT_TOL = Tolerances()


# multiples of machine epsilon treated as roundoff when a matrix is a product
ROUNDOFF_GUARD = 1e3 * np.finfo(float).eps


def _cutoff(s: np.ndarray, shape: tuple[int, int], tol: Tolerances, scale: float = 0.0) -> float:
    # scale is the size of the factors a product was formed from; a product
    # that is zero in exact arithmetic has a roundoff-sized sigma_max, which
    # the relative rule alone would count as rank one
    if s.size == 0:
        return np.inf
    return max(tol.rank_rel * s[0], ROUNDOFF_GUARD * scale) * max(shape)


def numerical_rank(M: np.ndarray, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > _cutoff(s, M.shape, tol, scale)))


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of R^ambient held as an ambient x dim orthonormal basis."""

    ambient: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float).reshape(self.ambient, -1)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def trivial(cls, n: int) -> "Subspace":
        return cls(n, np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n))

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def project(self, v: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ v)

    def __repr__(self):
        return f"Subspace(ambient={self.ambient}, dim={self.dim})"


def span(M: np.ndarray, tol: Tolerances = DEFAULT_TOL, ambient: int | None = None) -> Subspace:
    """Orthonormal basis of the column space of M."""
    M = np.asarray(M, dtype=float)
    if ambient is None:
        ambient = M.shape[0]
    M = M.reshape(ambient, -1)
    if M.shape[1] == 0 or not np.any(M):
        return Subspace.trivial(ambient)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > _cutoff(s, M.shape, tol)))
    return Subspace(ambient, U[:, :r])


@dataclass(frozen=True)
class FundamentalSubspaces:
    row: Subspace
    col: Subspace
    null: Subspace
    left_null: Subspace
    rank: int


def fundamental_subspaces(M: np.ndarray, tol: Tolerances = DEFAULT_TOL,
                          scale: float = 0.0) -> FundamentalSubspaces:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    p, q = M.shape
    if M.size == 0:
        return FundamentalSubspaces(Subspace.trivial(q), Subspace.trivial(p),
                                    Subspace.full(q), Subspace.full(p), 0)
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = 0 if s[0] == 0.0 else int(np.sum(s > _cutoff(s, M.shape, tol, scale)))
    V = Vt.T
    return FundamentalSubspaces(
        row=Subspace(q, V[:, :r]),
        col=Subspace(p, U[:, :r]),
        null=Subspace(q, V[:, r:]),
        left_null=Subspace(p, U[:, r:]),
        rank=r,
    )


def _check_ambient(*spaces: Subspace):
    n = spaces[0].ambient
    for S in spaces[1:]:
        if S.ambient != n:
            raise ValueError(f"ambient mismatch: {n} vs {S.ambient}")


def principal_cosines(S1: Subspace, S2: Subspace) -> np.ndarray:
    _check_ambient(S1, S2)
    if S1.dim == 0 or S2.dim == 0:
        return np.zeros(0)
    return np.clip(np.linalg.svd(S1.basis.T @ S2.basis, compute_uv=False), 0.0, 1.0)


def intersect(S1: Subspace, S2: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Directions shared by S1 and S2, found from the principal angles."""
    _check_ambient(S1, S2)
    if S1.dim == 0 or S2.dim == 0:
        return Subspace.trivial(S1.ambient)
    U, s, _ = np.linalg.svd(S1.basis.T @ S2.basis, full_matrices=False)
    keep = s >= 1.0 - tol.angle
    X = S1.basis @ U[:, keep]
    # re-orthonormalize; the rotation keeps us inside S1
    if X.shape[1]:
        X, _ = np.linalg.qr(X)
    return Subspace(S1.ambient, X)


def intersect_all(spaces, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    spaces = list(spaces)
    out = spaces[0]
    for S in spaces[1:]:
        out = intersect(out, S, tol)
    return out


def sum_(S1: Subspace, S2: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    _check_ambient(S1, S2)
    return span(np.hstack([S1.basis, S2.basis]), tol, S1.ambient)


def sum_all(spaces, ambient: int, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    blocks = [S.basis for S in spaces]
    if not blocks:
        return Subspace.trivial(ambient)
    return span(np.hstack(blocks), tol, ambient)


def complement(S: Subspace) -> Subspace:
    """Orthogonal complement, completed from a full QR of the basis."""
    n, m = S.ambient, S.dim
    if m == 0:
        return Subspace.full(n)
    Q, _ = np.linalg.qr(S.basis, mode="complete")
    return Subspace(n, Q[:, m:])


def contains_subspace(Z: Subspace, Y: Subspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    if Y.dim == 0:
        return True
    if Y.dim > Z.dim:
        return False
    c = principal_cosines(Y, Z)
    return bool(np.all(c >= 1.0 - tol.angle))


def standard_complement_within(Z: Subspace, Y: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """The element Z ∩ Y^⊥ of the family of complements of Y inside Z."""
    _check_ambient(Z, Y)
    if not contains_subspace(Z, Y, tol):
        raise ValueError("Y is not contained in Z")
    if Y.dim == 0:
        return Z
    # project Z's basis off Y and keep the dim Z - dim Y strongest directions
    R = Z.basis - Y.basis @ (Y.basis.T @ Z.basis)
    want = Z.dim - Y.dim
    if want == 0:
        return Subspace.trivial(Z.ambient)
    U, _, _ = np.linalg.svd(R, full_matrices=False)
    return Subspace(Z.ambient, U[:, :want])


def map_subspace(M: np.ndarray, S: Subspace, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    M = np.asarray(M, dtype=float)
    if M.shape[1] != S.ambient:
        raise ValueError(f"matrix has {M.shape[1]} columns, subspace ambient is {S.ambient}")
    return span(M @ S.basis, tol, M.shape[0])


def equal(S1: Subspace, S2: Subspace, tol: Tolerances = DEFAULT_TOL) -> bool:
    if S1.ambient != S2.ambient or S1.dim != S2.dim:
        return False
    return bool(np.all(principal_cosines(S1, S2) >= 1.0 - tol.angle))


def subspace_residual(S1: Subspace, S2: Subspace) -> float:
    """Largest distance from a unit vector of one space to the other.

    Zero means equal. Infinite when dimensions differ.
    """
    if S1.ambient != S2.ambient or S1.dim != S2.dim:
        return np.inf
    if S1.dim == 0:
        return 0.0
    return float(np.linalg.norm(S1.basis - S2.project(S1.basis), 2))


def contains(S: Subspace, v: np.ndarray, tol: float = 1e-8) -> bool:
    v = np.asarray(v, dtype=float).reshape(-1)
    nv = np.linalg.norm(v)
    if nv == 0:
        return True
    return bool(np.linalg.norm(v - S.project(v)) <= tol * nv)
