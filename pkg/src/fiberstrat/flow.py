"""Flow subspaces, flow bases, the canonical weight vector and the
canonical factorization W = J_L Ĩ_L ... Ĩ_1 J_0^{-1}.

Index conventions: A[k, j, i] lives in R^{d_j} and is
null W_{k+1~j} ∩ col W_{j~i}; B[k, j, i] is row W_{k~j} ∩ null W_{j~i-1}^T.
Generators a_{kji} and b_{kji} each have ω_{ki} columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import subspace as sp
from .network import WeightVector, mu_sub, product_scale, ranklist_of
from .ranklist import (IntervalMultiset, RankList, omega_of, ranks_of,
                       validate_multiset, validate_ranklist)
from .subspace import DEFAULT_TOL, Subspace, Tolerances


class FlowError(RuntimeError):
    pass


def layer_layout(L: int, j: int) -> list[tuple[int, int]]:
    """Intervals [i, k] containing layer j, by decreasing k then increasing i."""
    return [(k, i) for k in range(L, j - 1, -1) for i in range(j + 1)]


def layer_slices(m: IntervalMultiset, j: int) -> dict[tuple[int, int], slice]:
    out, pos = {}, 0
    for k, i in layer_layout(m.L, j):
        n = m.get(k, i)
        out[(k, i)] = slice(pos, pos + n)
        pos += n
    return out


def canonical_weight_vector(r: RankList) -> WeightVector:
    """The almost-identity factorization realizing r."""
    v = validate_ranklist(r)
    if not v:
        raise ValueError("invalid rank list: " + "; ".join(v.reasons))
    m = omega_of(r)
    L, d = r.L, r.shape.d
    mats = []
    for j in range(1, L + 1):
        M = np.zeros((d[j], d[j - 1]))
        rows, cols = layer_slices(m, j), layer_slices(m, j - 1)
        for (k, i), cs in cols.items():
            if k >= j:
                rs = rows[(k, i)]
                M[rs, cs] = np.eye(rs.stop - rs.start)
        mats.append(M)
    return WeightVector(r.shape, tuple(mats))


@dataclass(eq=False)
class FlowSystem:
    theta: WeightVector
    tol: Tolerances = DEFAULT_TOL
    _A: dict = field(default_factory=dict, repr=False)
    _B: dict = field(default_factory=dict, repr=False)
    Jgen: dict = field(default_factory=dict, repr=False)
    Kgen: dict = field(default_factory=dict, repr=False)
    Jfull: list = field(default_factory=list, repr=False)
    Kfull: list = field(default_factory=list, repr=False)
    Itilde: list = field(default_factory=list, repr=False)
    omega: IntervalMultiset | None = None

    @property
    def L(self) -> int:
        return self.theta.L

    @property
    def d(self) -> tuple[int, ...]:
        return self.theta.shape.d

    @cached_property
    def ranks(self) -> RankList:
        return ranklist_of(self.theta, self.tol)

    @cached_property
    def _fund(self) -> dict:
        out = {}
        for y in range(self.L + 1):
            for x in range(y):
                out[(y, x)] = sp.fundamental_subspaces(mu_sub(self.theta, y, x), self.tol,
                                                       product_scale(self.theta, y, x))
        return out

    def _null(self, y, x) -> Subspace:
        # null W_{y~x} in R^{d_x}; W_{L+1} is zero
        if y == self.L + 1:
            return Subspace.full(self.d[x])
        if y == x:
            return Subspace.trivial(self.d[x])
        return self._fund[(y, x)].null

    def _col(self, y, x) -> Subspace:
        return Subspace.full(self.d[y]) if y == x else self._fund[(y, x)].col

    def _row(self, y, x) -> Subspace:
        if y == self.L + 1:
            return Subspace.trivial(self.d[x])
        return Subspace.full(self.d[x]) if y == x else self._fund[(y, x)].row

    def _left_null(self, y, x) -> Subspace:
        # null W_{y~x}^T in R^{d_y}; W_{y~-1} is zero
        if x < 0:
            return Subspace.full(self.d[y])
        if y == x:
            return Subspace.trivial(self.d[y])
        return self._fund[(y, x)].left_null

    def A(self, k: int, j: int, i: int) -> Subspace:
        key = (k, j, i)
        if key not in self._A:
            if i < 0 or k < j or i > j:
                S = Subspace.trivial(self.d[j])
            else:
                S = sp.intersect(self._null(k + 1, j), self._col(j, i), self.tol)
            self._A[key] = S
        return self._A[key]

    def B(self, k: int, j: int, i: int) -> Subspace:
        key = (k, j, i)
        if key not in self._B:
            if k > self.L or i > j or k < j:
                S = Subspace.trivial(self.d[j])
            else:
                S = sp.intersect(self._row(k, j), self._left_null(j, i - 1), self.tol)
            self._B[key] = S
        return self._B[key]

    def a(self, k, j, i) -> Subspace:
        return sp.span(self.Jgen[(k, j, i)], self.tol, self.d[j])

    def b(self, k, j, i) -> Subspace:
        return sp.span(self.Kgen[(k, j, i)], self.tol, self.d[j])

    def layout(self, j: int) -> dict[tuple[int, int], slice]:
        return layer_slices(self.omega, j)


def compute_flow_subspaces(theta: WeightVector, tol: Tolerances = DEFAULT_TOL) -> FlowSystem:
    fs = FlowSystem(theta, tol)
    L = theta.L
    for j in range(L + 1):
        for k in range(j, L + 1):
            for i in range(j + 1):
                fs.A(k, j, i)
                fs.B(k, j, i)
    return fs


def build_flow_prebases(theta: WeightVector, tol: Tolerances = DEFAULT_TOL) -> FlowSystem:
    fs = compute_flow_subspaces(theta, tol)
    L, d = theta.L, theta.shape.d
    widths = [[0] * (k + 1) for k in range(L + 1)]
    for i in range(L + 1):
        for k in range(i, L + 1):
            Z = fs.A(k, i, i)
            Y = sp.sum_(fs.A(k, i, i - 1), fs.A(k - 1, i, i) if k > i else Subspace.trivial(d[i]), tol)
            seed = sp.standard_complement_within(Z, Y, tol).basis
            widths[k][i] = seed.shape[1]
            for j in range(i, k + 1):
                fs.Jgen[(k, j, i)] = mu_sub(theta, j, i) @ seed
    fs.omega = IntervalMultiset(theta.shape, widths)
    for j in range(L + 1):
        cols = [fs.Jgen[(k, j, i)] for k, i in layer_layout(L, j)]
        Jf = np.hstack(cols)
        if Jf.shape != (d[j], d[j]) or sp.numerical_rank(Jf, tol) < d[j]:
            raise FlowError(f"flow basis at layer {j} is not square and invertible "
                            f"(shape {Jf.shape}); rank decisions are inconsistent")
        fs.Jfull.append(Jf)
        Kf = np.linalg.inv(Jf).T
        fs.Kfull.append(Kf)
        for key, sl in fs.layout(j).items():
            fs.Kgen[(key[0], j, key[1])] = Kf[:, sl]
    for j in range(1, L + 1):
        fs.Itilde.append(np.linalg.solve(fs.Jfull[j], theta.layer(j) @ fs.Jfull[j - 1]))
    return fs


def canonical_factorization(theta: WeightVector, tol: Tolerances = DEFAULT_TOL):
    fs = build_flow_prebases(theta, tol)
    return fs.Jfull, fs.Itilde


def threshold_itilde(fs: FlowSystem) -> list[np.ndarray]:
    cut = 1e-7 * (1.0 + fs.theta.norm())
    return [np.where(np.abs(M) < cut, 0.0, M) for M in fs.Itilde]


# ---------------------------------------------------------------- verification


@dataclass
class Check:
    name: str
    passed: bool
    residual: float = 0.0
    detail: str = ""


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, residual=0.0, detail=""):
        self.checks.append(Check(name, bool(passed), float(residual), detail))

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<28s} residual={c.residual:.2e} {c.detail}".rstrip()
                for c in self.checks]


def _rel(num, den):
    return float(num) / max(float(den), 1e-300)


def verify_fundamental_theorem(theta: WeightVector, tol: Tolerances = DEFAULT_TOL,
                               expected: RankList | None = None,
                               check_tol: float = 1e-8) -> Report:
    rep = Report()
    try:
        fs = build_flow_prebases(theta, tol)
    except (FlowError, ValueError) as exc:
        rep.add("flow_bases", False, np.inf, str(exc))
        return rep
    L, d = theta.L, theta.shape.d
    measured = fs.ranks
    m = fs.omega

    # multiplicities from generator widths must match the rank list
    v = validate_multiset(m)
    rep.add("layer_sizes", v.ok, 0.0, "; ".join(v.reasons))
    same = v.ok and ranks_of(m) == measured
    rep.add("rank_sums", same, 0.0, "" if same else "ranks from multiplicities differ from measured ranks")
    if expected is not None:
        ok = measured == expected
        rep.add("expected_ranks", ok, 0.0, "" if ok else f"measured {measured.label()} expected {expected.label()}")

    # flow conditions
    worst_f = worst_t = 0.0
    for j in range(1, L + 1):
        Wj = theta.layer(j)
        scale = np.linalg.norm(Wj) + 1.0
        for (k, i), _ in fs.layout(j - 1).items():
            src = fs.Jgen[(k, j - 1, i)]
            img = Wj @ src
            tgt = fs.Jgen[(k, j, i)] if k >= j else np.zeros_like(img)
            worst_f = max(worst_f, _rel(np.linalg.norm(img - tgt), scale * (np.linalg.norm(src) + 1.0)))
        for (k, i), _ in fs.layout(j).items():
            src = fs.Kgen[(k, j, i)]
            img = Wj.T @ src
            tgt = fs.Kgen[(k, j - 1, i)] if i <= j - 1 else np.zeros_like(img)
            worst_t = max(worst_t, _rel(np.linalg.norm(img - tgt), scale * (np.linalg.norm(src) + 1.0)))
    rep.add("forward_flow", worst_f <= check_tol, worst_f)
    rep.add("transpose_flow", worst_t <= check_tol, worst_t)

    # decompositions of A and B, and complementarity
    worst_a = worst_b = worst_c = worst_id = 0.0
    for j in range(L + 1):
        E = fs.Jfull[j].T @ fs.Kfull[j]
        worst_id = max(worst_id, float(np.max(np.abs(E - np.eye(d[j])))))
        lay = list(fs.layout(j))
        for k in range(j, L + 1):
            for i in range(j + 1):
                parts = [fs.Jgen[(kk, j, ii)] for kk, ii in lay if kk <= k and ii <= i]
                S = sp.span(np.hstack(parts), tol, d[j])
                worst_a = max(worst_a, sp.subspace_residual(S, fs.A(k, j, i)))
                parts = [fs.Kgen[(kk, j, ii)] for kk, ii in lay if kk >= k and ii >= i]
                S = sp.span(np.hstack(parts), tol, d[j])
                worst_b = max(worst_b, sp.subspace_residual(S, fs.B(k, j, i)))
        for key in lay:
            if m.get(*key) == 0:
                continue
            others = [fs.Jgen[(kk, j, ii)] for kk, ii in lay if (kk, ii) != key]
            comp = sp.complement(sp.span(np.hstack(others) if others else np.zeros((d[j], 0)), tol, d[j]))
            worst_c = max(worst_c, sp.subspace_residual(fs.b(key[0], j, key[1]), comp))
    rep.add("A_decomposition", worst_a <= check_tol, worst_a)
    rep.add("B_decomposition", worst_b <= check_tol, worst_b)
    rep.add("dual_bases", worst_id <= check_tol * 10, worst_id)
    rep.add("complementarity", worst_c <= check_tol, worst_c)

    # the thresholded canonical factors must be the canonical weight vector
    if v.ok:
        canon = canonical_weight_vector(measured) if validate_ranklist(measured) else None
        got = threshold_itilde(fs)
        if canon is None:
            rep.add("canonical_factors", False, np.inf, "measured rank list is invalid")
        else:
            diff = max(float(np.max(np.abs(g - c), initial=0.0)) for g, c in zip(got, canon.W))
            rep.add("canonical_factors", diff <= 1e-6, diff)
        recon = max(_rel(np.linalg.norm(fs.Jfull[j] @ fs.Itilde[j - 1] - theta.layer(j) @ fs.Jfull[j - 1]),
                         np.linalg.norm(theta.layer(j) @ fs.Jfull[j - 1]) + 1.0)
                    for j in range(1, L + 1))
        rep.add("factorization", recon <= check_tol, recon)
    return rep
