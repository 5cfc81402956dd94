"""Seeded sweeps shared by the acceptance tests and the scripts.

Each sweep returns a SweepResult with the number of cases, a list of
failure descriptions and the wall time.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .dag import build_dag, build_dag_bfs, reachability_closure
from .flow import FlowError, build_flow_prebases, canonical_weight_vector, verify_fundamental_theorem
from .moves import (apply_abstract_move, enumerate_abstract_moves, find_all_moves, one_matrix_basis,
                    one_matrix_move, two_matrix_path_point, two_matrix_tangent)
from .network import (dmu_matrix, dmu_rank, dmu_rank_formula, mu, product_scale, random_rank_matrix,
                      ranklist_of, sample_on_stratum)
from .ranklist import (IntervalMultiset, NetworkShape, RankList, dimension_ledger, leq, omega_of,
                       ranks_of, validate_ranklist)
from .sampling import CaseConfig, random_case
from .subspace import ROUNDOFF_GUARD
from .tangent import tau_indices, tau_matrices, verify_geometry


@dataclass
class SweepResult:
    name: str
    cases: int = 0
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, msg: str):
        self.failures.append(msg)


def small_shapes(max_L: int = 3, max_d: int = 3):
    for L in range(1, max_L + 1):
        for d in itertools.product(range(1, max_d + 1), repeat=L + 1):
            yield NetworkShape(d)


def brute_force_vertices(shape: NetworkShape, R: int) -> set:
    """Every triangle with r_{L0} = R that passes validation, by exhaustion."""
    d, L = shape.d, shape.L
    free = [p for p in shape.pairs() if p != (L, 0)]
    found = set()
    for vals in itertools.product(*[range(min(d[i:k + 1]) + 1) for k, i in free]):
        entries = dict(zip(free, vals))
        entries[(L, 0)] = R
        r = RankList.from_entries(shape, entries)
        if validate_ranklist(r):
            found.add(r.r)
    return found


def combinatorics_sweep(max_L: int = 3, max_d: int = 3) -> SweepResult:
    out = SweepResult("combinatorial equivalence")
    t0 = time.perf_counter()
    for shape in small_shapes(max_L, max_d):
        for R in range(min(shape.d) + 1):
            g = build_dag(shape, R)
            out.cases += 1
            if brute_force_vertices(shape, R) != g.ranklists():
                out.fail(f"vertex set differs for d={shape.d} R={R}")
            closure = reachability_closure(g)
            V = [v.ranklist for v in g.vertices]
            for a, ra in enumerate(V):
                for b, rb in enumerate(V):
                    le = leq(ra, rb)
                    if (b in closure[a]) != le:
                        out.fail(f"reachability vs leq at d={shape.d} R={R}: {ra.label()} {rb.label()}")
                    if not le:
                        try:
                            find_all_moves(ra, rb)
                        except ValueError:
                            continue
                        out.fail(f"planner accepted {ra.label()} -> {rb.label()} without leq")
                        continue
                    t = ra
                    for step, m in find_all_moves(ra, rb):
                        t = apply_abstract_move(t, m)
                        if t != step or not validate_ranklist(t):
                            out.fail(f"bad replay {ra.label()} -> {rb.label()} at {m.label}")
                            break
                    if t != rb:
                        out.fail(f"chain from {ra.label()} ends at {t.label()}, not {rb.label()}")
    out.seconds = time.perf_counter() - t0
    return out


def random_multisets(n: int, seed: int = 0, max_L: int = 5, max_d: int = 8) -> list[IntervalMultiset]:
    """n nonnegative multiplicity triangles with layer sums in [1, max_d].

    Multiplicities 0, 1, 2 are drawn with odds 6 : 3 : 1 for a uniformly
    chosen depth, and triangles whose layer sums fall outside the range are
    redrawn in batches.
    """
    rng = np.random.default_rng(seed)
    depths = rng.integers(1, max_L + 1, size=n)
    out = []
    for L in range(1, max_L + 1):
        want = int(np.sum(depths == L))
        ks, ii = np.tril_indices(L + 1)
        # cover[j, c] = 1 when interval c = [ii[c], ks[c]] contains layer j
        cover = np.array([(ii <= j) & (j <= ks) for j in range(L + 1)], dtype=np.int64)
        got, dims = [], []
        while len(got) < want:
            w = rng.choice(3, size=(4 * want + 16, len(ks)), p=(0.6, 0.3, 0.1))
            sums = w @ cover.T
            ok = np.all((sums >= 1) & (sums <= max_d), axis=1)
            got.extend(w[ok][: want - len(got)].tolist())
            dims.extend(sums[ok][: want - len(dims)].tolist())
        cuts = [(k * (k + 1) // 2, (k + 1) * (k + 2) // 2) for k in range(L + 1)]
        for row, d in zip(got, dims):
            out.append(IntervalMultiset(NetworkShape(tuple(d)), [row[a:b] for a, b in cuts]))
    order = rng.permutation(n)
    return [out[i] for i in order]


def bijection_sweep(n: int = 100_000, seed: int = 0) -> SweepResult:
    out = SweepResult("round-trip bijection")
    t0 = time.perf_counter()
    for m in random_multisets(n, seed):
        r = ranks_of(m)
        out.cases += 1
        w = omega_of(r)
        if w != m:
            out.fail(f"omega_of(ranks_of(m)) != m for {m.w}")
        if ranks_of(w) != r:
            out.fail(f"ranks_of(omega_of(r)) != r for {r.r}")
    out.seconds = time.perf_counter() - t0
    return out


def canonical_sweep(max_L: int = 3, max_d: int = 3) -> SweepResult:
    out = SweepResult("canonical realization")
    t0 = time.perf_counter()
    for shape in small_shapes(max_L, max_d):
        for R in range(min(shape.d) + 1):
            for v in build_dag(shape, R).vertices:
                out.cases += 1
                got = ranklist_of(canonical_weight_vector(v.ranklist))
                if got != v.ranklist:
                    out.fail(f"canonical point of {v.ranklist.label()} has ranks {got.label()}")
    out.seconds = time.perf_counter() - t0
    return out


def nullity_sweep(seeds=range(100), cfg: CaseConfig = CaseConfig()) -> SweepResult:
    out = SweepResult("differential nullity")
    t0 = time.perf_counter()
    for s in seeds:
        c = random_case(s, cfg)
        out.cases += 1
        led = dimension_ledger(c.ranklist)
        rk = dmu_rank(c.theta)
        n = dmu_matrix(c.theta).shape[1]
        if ranklist_of(c.theta) != c.ranklist:
            out.fail(f"seed {s}: sampled point left its stratum")
        if n - rk != led.D_free:
            out.fail(f"seed {s}: nullity {n - rk} != D_free {led.D_free}")
        if rk != dmu_rank_formula(c.theta):
            out.fail(f"seed {s}: rank {rk} != formula {dmu_rank_formula(c.theta)}")
    out.seconds = time.perf_counter() - t0
    return out


def geometry_sweep(seeds=range(100), cfg: CaseConfig = CaseConfig()) -> SweepResult:
    out = SweepResult("geometry")
    t0 = time.perf_counter()
    for s in seeds:
        c = random_case(s, cfg)
        out.cases += 1
        ft = verify_fundamental_theorem(c.theta, expected=c.ranklist)
        try:
            geo = verify_geometry(c.theta)
        except FlowError as exc:
            out.fail(f"seed {s}: {exc}")
            continue
        bad = [x.name for x in ft.failures() + geo.failures()]
        if bad:
            out.fail(f"seed {s} d={c.shape.d} {c.ranklist.label()}: {', '.join(bad)}")
    out.seconds = time.perf_counter() - t0
    return out


def move_sweep(seeds=range(100), cfg: CaseConfig = CaseConfig(), eps: float = 1e-3,
               fd_step: float = 1e-4) -> SweepResult:
    """One-matrix moves along every available rank-1 index, then two-matrix paths.

    Product drift on a two-matrix path is measured against the larger of |W|
    and the product of factor norms, so points with W = 0 are judged on the
    same footing as the rest.
    """
    out = SweepResult("move semantics")
    t0 = time.perf_counter()
    for s in seeds:
        c = random_case(s, cfg)
        theta, L = c.theta, c.shape.L
        fs = build_flow_prebases(theta)
        for mv in enumerate_abstract_moves(c.ranklist):
            for j in range(mv.i, mv.k + 2):
                idx = (mv.l, mv.k, j, mv.i, mv.h)
                D = one_matrix_basis(fs, idx)[:, 0].reshape(c.shape.d[j], c.shape.d[j - 1], order="F")
                res = one_matrix_move(theta, idx, D / np.linalg.norm(D), eps=eps, flow=fs)
                out.cases += 1
                if not res.matches_prediction or res.eps != eps:
                    out.fail(f"seed {s} move {idx}: changed {res.changed} eps {res.eps}")
                if res.mu_changed != (mv.l == L and mv.h == 0):
                    out.fail(f"seed {s} move {idx}: product changed = {res.mu_changed}")
        W = mu(theta)
        scale = max(np.linalg.norm(W), product_scale(theta, L, 0), np.finfo(float).tiny)
        for fi in tau_indices(L):
            if fi.dim(fs.omega) == 0:
                continue
            j = fi.idx[2]
            H = tau_matrices(fs, fi)[0]
            H = H / np.linalg.norm(H)
            out.cases += 1
            p = two_matrix_path_point(theta, j, H, eps)
            drift = np.linalg.norm(mu(p) - W) / scale
            if drift > 1e-8:
                out.fail(f"seed {s} {fi.name()}: product drift {drift:.2e}")
            if ranklist_of(p) != c.ranklist:
                out.fail(f"seed {s} {fi.name()}: rank list changed")
            fd = (two_matrix_path_point(theta, j, H, fd_step).to_vector()
                  - two_matrix_path_point(theta, j, H, -fd_step).to_vector()) / (2 * fd_step)
            tv = two_matrix_tangent(theta, j, H).to_vector()
            err = np.linalg.norm(fd - tv) / np.linalg.norm(tv)
            if err > 1e-5:
                out.fail(f"seed {s} {fi.name()}: finite difference error {err:.2e}")
    out.seconds = time.perf_counter() - t0
    return out


def stratum_point_sweep(n: int = 50, seed: int = 1000, cfg: CaseConfig = CaseConfig(max_L=4, max_d=6)) -> SweepResult:
    out = SweepResult("stratum-point construction")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    for case in range(n):
        L = int(rng.integers(cfg.min_L, cfg.max_L + 1))
        shape = NetworkShape(tuple(int(x) for x in rng.integers(1, cfg.max_d + 1, size=L + 1)))
        R = int(rng.integers(0, min(shape.d) + 1))
        verts = build_dag_bfs(shape, R).vertices
        r = verts[int(rng.integers(len(verts)))].ranklist
        W = random_rank_matrix(shape.d[-1], shape.d[0], R, rng)
        theta = sample_on_stratum(W, r, seed=case)
        out.cases += 1
        err = np.linalg.norm(mu(theta) - W)
        # W = 0 leaves only roundoff, judged against the factor sizes
        ref = np.linalg.norm(W) if R else ROUNDOFF_GUARD * product_scale(theta, L, 0) / 1e-8
        if err > 1e-8 * ref:
            out.fail(f"case {case} d={shape.d}: |mu - W| = {err:.2e}")
        if ranklist_of(theta) != r:
            out.fail(f"case {case} d={shape.d}: rank list {ranklist_of(theta).label()} != {r.label()}")
    out.seconds = time.perf_counter() - t0
    return out
