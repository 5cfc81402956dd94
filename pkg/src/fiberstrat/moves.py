"""Abstract rank-raising moves on rank lists, the backward planner that
finds a chain of rank-one moves between comparable rank lists, and the
concrete one-matrix and two-matrix moves on weight vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import subspace as sp
from .flow import FlowSystem, build_flow_prebases
from .network import WeightVector, mu, ranklist_of
from .ranklist import RankList, leq, omega_of, validate_ranklist
from .subspace import DEFAULT_TOL, Tolerances


class InvalidMove(ValueError):
    pass


class RankDropError(RuntimeError):
    """The step size was too large: some rank went down."""


@dataclass(frozen=True, order=True)
class AbstractMove:
    l: int
    k: int
    i: int
    h: int
    c: int = 1

    def __post_init__(self):
        if not (self.l >= self.k + 1 >= self.i > self.h >= 0):
            raise InvalidMove(f"need l >= k+1 >= i > h >= 0, got {self.label}")
        if self.c < 1:
            raise InvalidMove("move rank c must be at least 1")

    @property
    def label(self) -> tuple[int, int, int, int]:
        return (self.l, self.k, self.i, self.h)

    @property
    def kind(self) -> str:
        return "connecting" if self.k + 1 == self.i else "swapping"

    def rectangle(self) -> list[tuple[int, int]]:
        return [(y, x) for y in range(self.k + 1, self.l + 1) for x in range(self.h, self.i)]


@dataclass(frozen=True)
class MoveEffect:
    rank_increased: frozenset
    delta: int
    omega_changes: dict


def predict_move_effects(m: AbstractMove) -> MoveEffect:
    c = m.c
    changes = {(m.l, m.i): -c, (m.k, m.h): -c, (m.l, m.h): c}
    if m.k >= m.i:
        changes[(m.k, m.i)] = c
    return MoveEffect(frozenset(m.rectangle()), c, changes)


def _check_move(r: RankList, m: AbstractMove):
    if m.l > r.L:
        raise InvalidMove(f"move {m.label} exceeds L = {r.L}")
    w = omega_of(r)
    if w.get(m.l, m.i) < m.c or w.get(m.k, m.h) < m.c:
        raise InvalidMove(f"move {m.label} with c={m.c} needs omega[{m.l}][{m.i}] and "
                          f"omega[{m.k}][{m.h}] at least {m.c}")


def apply_abstract_move(r: RankList, m: AbstractMove) -> RankList:
    _check_move(r, m)
    tri = [list(row) for row in r.r]
    for y, x in m.rectangle():
        tri[y][x] += m.c
    return RankList(r.shape, tri)


def enumerate_abstract_moves(r: RankList, on_fiber: bool = False) -> list[AbstractMove]:
    """All rank-one moves available from r.

    With on_fiber, moves with l = L and h = 0 are skipped; they raise
    rk W and so leave the fiber.
    """
    v = validate_ranklist(r)
    if not v:
        raise ValueError("invalid rank list: " + "; ".join(v.reasons))
    w = omega_of(r)
    L = r.L
    out = []
    for l in range(1, L + 1):
        for k in range(l):
            for i in range(1, k + 2):
                if w.get(l, i) == 0:
                    continue
                for h in range(i):
                    if on_fiber and l == L and h == 0:
                        continue
                    if w.get(k, h) > 0:
                        out.append(AbstractMove(l, k, i, h))
    return out


# ---------------------------------------------------------------- planner


def find_last_move(r: RankList, s: RankList) -> tuple[RankList, AbstractMove]:
    """A rank list t with r <= t < s and a rank-one move taking t to s."""
    if r.shape != s.shape:
        raise ValueError("rank lists have different shapes")
    if not (validate_ranklist(r) and validate_ranklist(s)):
        raise ValueError("both rank lists must be valid")
    if not leq(r, s) or r == s:
        raise ValueError("need r <= s and r != s")
    L = r.L
    wr, ws = omega_of(r), omega_of(s)

    def dw(k, i):
        return ws.get(k, i) - wr.get(k, i)

    def dr(y, x):
        return s.get(y, x) - r.get(y, x)

    # longest interval [h, l] whose rank went up; ties go to the smallest h
    best = None
    for span in range(L, 0, -1):
        for h in range(0, L - span + 1):
            if dr(h + span, h) > 0:
                best = (h, h + span)
                break
        if best:
            break
    h, l = best
    ip = next(x for x in range(h + 1, l + 1) if x == l or dw(l - 1, x) > 0 or dr(l, x) == 0)
    if ip == l or dw(l - 1, ip) > 0:
        i, k = ip, l - 1
    else:
        k = max(y for y in range(ip - 1, l - 1)
                if y == ip - 1 or any(dw(y, x) > 0 for x in range(h + 1, ip + 1)))
        i = min(x for x in range(h + 1, ip + 1) if k == x - 1 or dw(k, x) > 0)
    move = AbstractMove(l, k, i, h)
    tri = [list(row) for row in s.r]
    for y, x in move.rectangle():
        tri[y][x] -= 1
    return RankList(s.shape, tri), move


def find_all_moves(r: RankList, s: RankList) -> list[tuple[RankList, AbstractMove]]:
    """Chain of (resulting rank list, move) pairs from r up to s."""
    if not leq(r, s):
        raise ValueError("no move sequence: r is not below s")
    out = []
    t = s
    while t != r:
        prev, move = find_last_move(r, t)
        out.append((t, move))
        t = prev
    out.reverse()
    return out


def moves_to_json(seq) -> list[dict]:
    from .ranklist import ranklist_to_json
    return [{"l": m.l, "k": m.k, "i": m.i, "h": m.h, "c": m.c, "kind": m.kind,
             "result_ranks": ranklist_to_json(t)} for t, m in seq]


# ---------------------------------------------------------------- concrete moves


def one_matrix_basis(fs: FlowSystem, idx: tuple[int, int, int, int, int]) -> np.ndarray:
    """Columns are vec(u v^T) for u in a_{lji}, v in b_{k,j-1,h}."""
    l, k, j, i, h = idx
    U, V = fs.Jgen[(l, j, i)], fs.Kgen[(k, j - 1, h)]
    cols = [np.outer(U[:, a], V[:, b]).reshape(-1, order="F") for a in range(U.shape[1]) for b in range(V.shape[1])]
    return np.column_stack(cols) if cols else np.zeros((U.shape[0] * V.shape[0], 0))


@dataclass
class OneMatrixMoveResult:
    theta: WeightVector
    eps: float
    before: RankList
    after: RankList
    changed: dict
    predicted: frozenset
    mu_changed: bool

    @property
    def matches_prediction(self) -> bool:
        return set(self.changed) == set(self.predicted) and all(v == 1 for v in self.changed.values())


def one_matrix_move(theta: WeightVector, idx: tuple[int, int, int, int, int], direction: np.ndarray,
                    eps: float | None = None, tol: Tolerances = DEFAULT_TOL,
                    flow: FlowSystem | None = None, member_tol: float = 1e-8,
                    max_halvings: int = 20) -> OneMatrixMoveResult:
    l, k, j, i, h = idx
    fs = flow or build_flow_prebases(theta, tol)
    D = np.asarray(direction, dtype=float).reshape(theta.shape.d[j], theta.shape.d[j - 1])
    B = sp.span(one_matrix_basis(fs, idx), tol, D.size)
    if not sp.contains(B, D.reshape(-1, order="F"), member_tol):
        raise InvalidMove(f"direction is not in the one-matrix subspace {idx}")
    before = fs.ranks
    Wj = theta.layer(j)
    step = 1e-3 * (np.linalg.norm(Wj) + 1.0) if eps is None else float(eps)
    predicted = frozenset()
    if l > k and i > h and np.any(D):
        predicted = frozenset(AbstractMove(l, k, i, h).rectangle())
    for _ in range(max_halvings + 1):
        new = theta.replace(j, Wj + step * D)
        after = ranklist_of(new, tol)
        diff = {(y, x): after(y, x) - before(y, x) for y, x in before.shape.pairs()
                if after(y, x) != before(y, x)}
        if all(v > 0 for v in diff.values()):
            scale = np.linalg.norm(mu(theta)) + 1.0
            moved = np.linalg.norm(mu(new) - mu(theta)) > 1e-10 * scale
            return OneMatrixMoveResult(new, step, before, after, diff, predicted, bool(moved))
        step /= 2
    raise RankDropError("rank dropped for every tried step size")


def two_matrix_path_point(theta: WeightVector, j: int, H: np.ndarray, eps: float,
                          max_cond: float = 1e8) -> WeightVector:
    """(W_{j+1}(I + eps H), (I + eps H)^{-1} W_j), other factors unchanged."""
    if not (1 <= j <= theta.L - 1):
        raise ValueError(f"need 1 <= j <= L-1, got {j}")
    n = theta.shape.d[j]
    G = np.eye(n) + eps * np.asarray(H, dtype=float)
    if np.linalg.cond(G) > max_cond:
        raise np.linalg.LinAlgError("I + eps H is singular or badly conditioned")
    out = theta.replace(j + 1, theta.layer(j + 1) @ G)
    return out.replace(j, np.linalg.solve(G, theta.layer(j)))


def two_matrix_tangent(theta: WeightVector, j: int, H: np.ndarray) -> WeightVector:
    zero = WeightVector(theta.shape, tuple(np.zeros_like(M) for M in theta.W))
    return zero.replace(j + 1, theta.layer(j + 1) @ H).replace(j, -H @ theta.layer(j))
