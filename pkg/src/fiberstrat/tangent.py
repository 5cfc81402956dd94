"""Indexed weight-space subspaces built from a flow system, the prebases
they form, and numerical checks of tangent and normal geometry.

Families:
  phi (l,k,j,i,h)  one-matrix, block j only, u v^T with u in a_{lji}, v in b_{k,j-1,h}
  tau (l,k,j,i,h)  two-matrix, blocks (j+1, j) = (W_{j+1} H, -H W_j), H = u v^T,
                   u in a_{lji}, v in b_{kjh}
  psi (l,k,i,h)    normal, X_j = W_{l~j}^T M W_{j-1~h}^T, M = p q^T,
                   p in b_{lli}, q in a_{khh}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from . import subspace as sp
from .flow import FlowError, FlowSystem, Report, build_flow_prebases
from .network import dmu_matrix, dmu_scale, join_blocks, mu_sub, product_scale
from .ranklist import DimensionLedger, IntervalMultiset, RankList, dimension_ledger, omega_of
from .subspace import DEFAULT_TOL, Subspace, Tolerances

PHI, TAU, PSI = "phi", "tau", "psi"


@dataclass(frozen=True, order=True)
class FamilyIndex:
    family: str
    idx: tuple[int, ...]

    def name(self) -> str:
        return self.family + "".join(str(x) for x in self.idx)

    def dim(self, m: IntervalMultiset) -> int:
        if self.family == PSI:
            l, k, i, h = self.idx
            return m.get(l, i) * m.get(k, h) if k + 1 >= i else 0
        l, k, j, i, h = self.idx
        return m.get(l, i) * m.get(k, h)


def phi_indices(L: int) -> Iterator[FamilyIndex]:
    for j in range(1, L + 1):
        for l in range(j, L + 1):
            for k in range(j - 1, L + 1):
                for i in range(j + 1):
                    for h in range(j):
                        yield FamilyIndex(PHI, (l, k, j, i, h))


def tau_indices(L: int) -> Iterator[FamilyIndex]:
    """Two-matrix indices with l > j > h; the others coincide with a phi."""
    for j in range(1, L):
        for l in range(j + 1, L + 1):
            for k in range(j, L + 1):
                for i in range(j + 1):
                    for h in range(j):
                        yield FamilyIndex(TAU, (l, k, j, i, h))


def psi_indices(L: int) -> Iterator[FamilyIndex]:
    for l in range(L + 1):
        for k in range(L + 1):
            for i in range(l + 1):
                for h in range(min(k, l - 1) + 1):
                    yield FamilyIndex(PSI, (l, k, i, h))


def canonical_index(family: str, idx: tuple[int, ...]) -> FamilyIndex:
    """Two-matrix indices with l == j or j == h name a one-matrix family."""
    if family == TAU:
        l, k, j, i, h = idx
        if l == j and j == h:
            raise ValueError("two-matrix index with l == j == h is trivial")
        if l == j:
            return FamilyIndex(PHI, (l, k, j + 1, i, h))
        if j == h:
            return FamilyIndex(PHI, (l, k, j, i, h))
    return FamilyIndex(family, tuple(idx))


def classify_index(fi: FamilyIndex, L: int) -> frozenset[str]:
    tags = set()
    if fi.family == PSI:
        l, k, i, h = fi.idx
        if not (L >= l >= i >= 0 and L >= k >= h >= 0 and l > h):
            raise ValueError(f"illegal normal index {fi.idx}")
        if l == L and h == 0 and k + 1 >= i:
            tags.add("psi_free")
            tags.add("psi_stratum")
        if l >= k + 1 >= i > h:
            tags.add("psi_stratum")
        return frozenset(tags)
    l, k, j, i, h = fi.idx
    L0 = l == L and h == 0
    comb = l > k and i > h
    if fi.family == PHI:
        if not (L >= l >= j >= i >= 0 and L >= k >= j - 1 >= h >= 0):
            raise ValueError(f"illegal one-matrix index {fi.idx}")
        if L0:
            tags.add("L0")
        else:
            tags.update({"O_fiber", "free"})
        if comb:
            tags.add("comb")
        if k + 1 == j == i > h:
            tags.add("conn")
        if l > k >= i > h:
            tags.add("swap")
        if not L0 and not comb:
            tags.add("stratum")
            tags.add("fiber")
        if not L0 and comb and j == k + 1:
            tags.add("fiber")
    else:
        if not (L > j > 0 and l > j > h and l >= j >= i and k >= j >= h and L >= l and L >= k):
            raise ValueError(f"illegal two-matrix index {fi.idx}")
        if L0:
            tags.update({"L0", "free"})
        if comb:
            tags.add("comb")
        if L0 or comb:
            tags.update({"stratum", "fiber"})
    return frozenset(tags)


PREBASES = {
    "free": ("free",),
    "stratum": ("stratum",),
    "fiber": ("fiber",),
    "psi_free": ("psi_free",),
    "psi_stratum": ("psi_stratum",),
}


def prebasis_indices(name: str, L: int) -> list[FamilyIndex]:
    tag = PREBASES[name][0]
    pool = list(psi_indices(L)) if name.startswith("psi") else list(phi_indices(L)) + list(tau_indices(L))
    return [fi for fi in pool if tag in classify_index(fi, L)]


def index_set_count(r: RankList, tag: str, family: str | None = None) -> int:
    """Sum of family dimensions over indices carrying a tag; an independent
    route to the ledger counts."""
    m = omega_of(r)
    L = r.L
    pool: Iterable[FamilyIndex]
    if family == PSI:
        pool = psi_indices(L)
    elif family == PHI:
        pool = phi_indices(L)
    elif family == TAU:
        pool = tau_indices(L)
    else:
        pool = list(phi_indices(L)) + list(tau_indices(L))
    return sum(fi.dim(m) for fi in pool if tag == "*" or tag in classify_index(fi, L))


# ---------------------------------------------------------------- generators


def generators(fs: FlowSystem, fi: FamilyIndex) -> list[np.ndarray]:
    """d_theta-vectors spanning the family, in the network's vectorization."""
    theta = fs.theta
    L, d = theta.L, theta.shape.d
    out = []
    if fi.family == PHI:
        l, k, j, i, h = fi.idx
        U, V = fs.Jgen[(l, j, i)], fs.Kgen[(k, j - 1, h)]
        for a in range(U.shape[1]):
            for b in range(V.shape[1]):
                blocks = [np.zeros((d[t], d[t - 1])) for t in range(1, L + 1)]
                blocks[j - 1] = np.outer(U[:, a], V[:, b])
                out.append(join_blocks(blocks))
    elif fi.family == TAU:
        l, k, j, i, h = fi.idx
        U, V = fs.Jgen[(l, j, i)], fs.Kgen[(k, j, h)]
        for a in range(U.shape[1]):
            for b in range(V.shape[1]):
                H = np.outer(U[:, a], V[:, b])
                blocks = [np.zeros((d[t], d[t - 1])) for t in range(1, L + 1)]
                blocks[j] = theta.layer(j + 1) @ H
                blocks[j - 1] = -H @ theta.layer(j)
                out.append(join_blocks(blocks))
    else:
        l, k, i, h = fi.idx
        if k + 1 < i:
            return []
        P, Q = fs.Kgen[(l, l, i)], fs.Jgen[(k, h, h)]
        lo, hi = max(i, h + 1), min(k + 1, l)
        for a in range(P.shape[1]):
            for b in range(Q.shape[1]):
                M = np.outer(P[:, a], Q[:, b])
                blocks = [np.zeros((d[t], d[t - 1])) for t in range(1, L + 1)]
                for j in range(lo, hi + 1):
                    blocks[j - 1] = mu_sub(theta, l, j).T @ M @ mu_sub(theta, j - 1, h).T
                out.append(join_blocks(blocks))
    return out


def tau_matrices(fs: FlowSystem, fi: FamilyIndex) -> list[np.ndarray]:
    """The H matrices behind a two-matrix family."""
    l, k, j, i, h = fi.idx
    U, V = fs.Jgen[(l, j, i)], fs.Kgen[(k, j, h)]
    return [np.outer(U[:, a], V[:, b]) for a in range(U.shape[1]) for b in range(V.shape[1])]


def generator_matrix(fs: FlowSystem, indices: Iterable[FamilyIndex], normalize: bool = True) -> np.ndarray:
    cols = [g for fi in indices for g in generators(fs, fi)]
    if not cols:
        return np.zeros((fs.theta.shape.d_theta, 0))
    G = np.column_stack(cols)
    if normalize:
        n = np.linalg.norm(G, axis=0)
        G = G / np.where(n > 0, n, 1.0)
    return G


def materialize_span(fs: FlowSystem, indices: Iterable[FamilyIndex]) -> Subspace:
    return sp.span(generator_matrix(fs, indices), fs.tol, fs.theta.shape.d_theta)


def tangent_space(fs: FlowSystem) -> Subspace:
    return materialize_span(fs, prebasis_indices("stratum", fs.L))


def normal_space(fs: FlowSystem) -> Subspace:
    return materialize_span(fs, prebasis_indices("psi_stratum", fs.L))


def rowspace_dmu(fs: FlowSystem) -> Subspace:
    return materialize_span(fs, prebasis_indices("psi_free", fs.L))


def nullspace_dmu(fs: FlowSystem) -> Subspace:
    return materialize_span(fs, prebasis_indices("free", fs.L))


def normal_space_direct(theta, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """row dmu plus, for every y > x, the images X^{yx}(M) of matrices M
    whose columns are in null W_{y~x}^T and rows in null W_{y~x}."""
    L, d = theta.L, theta.shape.d
    J = dmu_matrix(theta)
    cols = [sp.fundamental_subspaces(J, tol, dmu_scale(theta)).row.basis]
    for y in range(1, L + 1):
        for x in range(y):
            f = sp.fundamental_subspaces(mu_sub(theta, y, x), tol, product_scale(theta, y, x))
            P, Q = f.left_null.basis, f.null.basis
            for a in range(P.shape[1]):
                for b in range(Q.shape[1]):
                    M = np.outer(P[:, a], Q[:, b])
                    blocks = [np.zeros((d[t], d[t - 1])) for t in range(1, L + 1)]
                    for j in range(x + 1, y + 1):
                        blocks[j - 1] = mu_sub(theta, y, j).T @ M @ mu_sub(theta, j - 1, x).T
                    cols.append(join_blocks(blocks)[:, None])
    return sp.span(np.hstack(cols), tol, theta.shape.d_theta)


# ---------------------------------------------------------------- verification


@dataclass
class GeometryReport(Report):
    dims: dict = field(default_factory=dict)
    ledger: DimensionLedger | None = None


def verify_geometry(theta_or_flow, tol: Tolerances = DEFAULT_TOL, check_tol: float = 1e-8) -> GeometryReport:
    rep = GeometryReport()
    if isinstance(theta_or_flow, FlowSystem):
        fs = theta_or_flow
    else:
        try:
            fs = build_flow_prebases(theta_or_flow, tol)
        except (ValueError, FlowError, np.linalg.LinAlgError) as exc:
            # tolerances that disagree with the point's ranks break the seeding
            rep.add("flow_bases", False, np.inf, str(exc))
            return rep
    theta = fs.theta
    L, n = theta.L, theta.shape.d_theta
    r = fs.ranks
    try:
        led = dimension_ledger(r)
    except ValueError as exc:
        rep.add("ledger", False, np.inf, str(exc))
        return rep
    rep.ledger = led
    m = fs.omega
    expect = {
        "free": led.D_free,
        "stratum": led.D_stratum,
        "fiber": led.D_fiber,
        "psi_free": led.rank_dmu,
        "psi_stratum": n - led.D_stratum,
    }
    spans = {}
    for name, want in expect.items():
        idx = prebasis_indices(name, L)
        S = materialize_span(fs, idx)
        spans[name] = S
        total = sum(fi.dim(m) for fi in idx)
        rep.dims[name] = S.dim
        rep.add(f"dim_{name}", S.dim == want, 0.0, f"measured {S.dim} expected {want}")
        rep.add(f"independent_{name}", S.dim == total, 0.0, f"span {S.dim} family sum {total}")

    J = dmu_matrix(theta)
    f = sp.fundamental_subspaces(J, tol, dmu_scale(theta))
    res = sp.subspace_residual(spans["free"], f.null)
    rep.add("free_equals_null_dmu", res <= check_tol, res)
    res = sp.subspace_residual(spans["fiber"], f.null)
    rep.add("fiber_equals_null_dmu", res <= check_tol, res)
    res = sp.subspace_residual(spans["psi_free"], f.row)
    rep.add("psi_free_equals_row_dmu", res <= check_tol, res)
    res = sp.subspace_residual(spans["psi_stratum"], normal_space_direct(theta, tol))
    rep.add("normal_direct_formula", res <= check_tol, res)

    T = generator_matrix(fs, prebasis_indices("stratum", L))
    N = generator_matrix(fs, prebasis_indices("psi_stratum", L))
    ortho = float(np.max(np.abs(T.T @ N), initial=0.0))
    rep.add("tangent_normal_orthogonal", ortho <= check_tol, ortho)
    res = float(np.linalg.norm(T - f.null.project(T), axis=0).max(initial=0.0))
    rep.add("tangent_in_null_dmu", res <= check_tol, res)

    # one-matrix generators off L0 keep the product; L0 generators move it.
    # An image counts as zero below check_tol * |dmu|, or below roundoff when
    # dmu itself vanishes.
    zero = max(check_tol * np.linalg.norm(J, 2), sp.ROUNDOFF_GUARD * dmu_scale(theta))
    keep, move = 0.0, np.inf
    for fi in phi_indices(L):
        if fi.dim(m) == 0:
            continue
        img = np.linalg.norm(J @ generator_matrix(fs, [fi]), axis=0)
        if "L0" in classify_index(fi, L):
            move = min(move, float(img.min()))
        else:
            keep = max(keep, float(img.max()))
    rep.add("fiber_generators_keep_mu", keep <= zero, keep, f"zero level {zero:.1e}")
    rep.add("L0_generators_move_mu", move > zero, 0.0 if move == np.inf else move, f"zero level {zero:.1e}")
    G = generator_matrix(fs, list(tau_indices(L)))
    tres = float(np.linalg.norm(J @ G, axis=0).max(initial=0.0))
    rep.add("tau_in_null_dmu", tres <= zero, tres, f"zero level {zero:.1e}")
    return rep
