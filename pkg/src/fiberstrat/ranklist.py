"""Exact integer algebra on rank lists and interval multiplicities.

A rank list for a network with layer sizes d_0..d_L stores r[k][i] for
L >= k >= i >= 0, the rank of W_k ... W_{i+1}, with r[j][j] = d_j.
An interval multiset stores w[k][i], the number of independent channels
that enter at layer i and survive through layer k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class NetworkShape:
    d: tuple[int, ...]

    def __post_init__(self):
        d = tuple(int(x) for x in self.d)
        object.__setattr__(self, "d", d)
        if len(d) < 2:
            raise ValueError("need at least one layer of weights (L >= 1)")
        if any(x < 1 for x in d):
            raise ValueError(f"layer sizes must be positive, got {d}")
        if self.d_theta > INT64_MAX:
            raise OverflowError("parameter count exceeds 64-bit range")

    @property
    def L(self) -> int:
        return len(self.d) - 1

    @property
    def d_theta(self) -> int:
        return sum(self.d[j] * self.d[j - 1] for j in range(1, len(self.d)))

    def pairs(self) -> Iterator[tuple[int, int]]:
        """All (k, i) with L >= k > i >= 0, ordered by k then i."""
        for k in range(self.L + 1):
            for i in range(k):
                yield k, i


def _triangle(L: int, fill: int = 0) -> list[list[int]]:
    return [[fill] * (k + 1) for k in range(L + 1)]


def _freeze(tri) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(map(int, row)) for row in tri)


@dataclass(frozen=True)
class RankList:
    shape: NetworkShape
    r: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        r = _freeze(self.r)
        object.__setattr__(self, "r", r)
        L = self.shape.L
        if len(r) != L + 1 or any(len(r[k]) != k + 1 for k in range(L + 1)):
            raise ValueError("rank triangle does not match the shape")
        for j in range(L + 1):
            if r[j][j] != self.shape.d[j]:
                raise ValueError(f"diagonal entry r[{j}][{j}] must equal d_{j}={self.shape.d[j]}")

    @property
    def L(self) -> int:
        return self.shape.L

    def get(self, k: int, i: int) -> int:
        """r_{k~i} with zero outside L >= k >= i >= 0."""
        if i < 0 or k > self.L or k < i:
            return 0
        return self.r[k][i]

    __call__ = get

    @property
    def rank_W(self) -> int:
        return self.r[self.L][0]

    @classmethod
    def from_entries(cls, shape: NetworkShape, entries: dict[tuple[int, int], int]) -> "RankList":
        tri = _triangle(shape.L)
        for j in range(shape.L + 1):
            tri[j][j] = shape.d[j]
        for (k, i), v in entries.items():
            if not (shape.L >= k > i >= 0):
                raise ValueError(f"off-diagonal index ({k},{i}) out of range")
            tri[k][i] = v
        return cls(shape, tri)

    def entries(self) -> dict[tuple[int, int], int]:
        return {(k, i): self.r[k][i] for k, i in self.shape.pairs()}

    def display_order(self) -> list[tuple[int, int]]:
        """Off-diagonal positions grouped by span k - i, each group by
        decreasing k. For L = 2 this is (2,1), (1,0), (2,0)."""
        L = self.L
        return [(i + g, i) for g in range(1, L + 1) for i in range(L - g, -1, -1)]

    def display_tuple(self) -> tuple[int, ...]:
        return tuple(self.r[k][i] for k, i in self.display_order())

    def label(self) -> str:
        return "<" + ",".join(str(v) for v in self.display_tuple()) + ">"

    def with_entry(self, k: int, i: int, value: int) -> "RankList":
        tri = [list(row) for row in self.r]
        tri[k][i] = value
        return RankList(self.shape, tri)


@dataclass(frozen=True)
class IntervalMultiset:
    shape: NetworkShape
    w: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        w = _freeze(self.w)
        object.__setattr__(self, "w", w)
        L = self.shape.L
        if len(w) != L + 1 or any(len(w[k]) != k + 1 for k in range(L + 1)):
            raise ValueError("multiplicity triangle does not match the shape")

    @property
    def L(self) -> int:
        return self.shape.L

    def get(self, k: int, i: int) -> int:
        if i < 0 or k > self.L or k < i:
            return 0
        return self.w[k][i]

    __call__ = get

    def intervals(self) -> Iterator[tuple[int, int, int]]:
        """(k, i, multiplicity) for every interval [i, k] in display order."""
        for k in range(self.L, -1, -1):
            for i in range(k + 1):
                yield k, i, self.w[k][i]


# ---------------------------------------------------------------- bijection


def omega_of(r: RankList) -> IntervalMultiset:
    L = r.L
    # pad with a zero column on the left and a zero row below the top
    pad = [[0] + list(row) + [0] * (L - k) for k, row in enumerate(r.r)] + [[0] * (L + 2)]
    w = [[pad[k][i + 1] - pad[k][i] - pad[k + 1][i + 1] + pad[k + 1][i] for i in range(k + 1)]
         for k in range(L + 1)]
    return IntervalMultiset(r.shape, w)


def ranks_of(m: IntervalMultiset) -> RankList:
    """Accumulate multiplicities over intervals [s, t] with s <= i, t >= k.

    The diagonal comes out as the layer sums, so the shape must already be
    consistent with m; otherwise RankList construction rejects it.
    """
    L, w = m.L, m.w
    # suffix over t, prefix over s; row L + 1 and column -1 are zero
    below = [0] * (L + 2)
    tri = [None] * (L + 1)
    for k in range(L, -1, -1):
        row, left = [], 0
        wk = w[k]
        for i in range(k + 1):
            left = wk[i] + below[i + 1] + left - below[i]
            row.append(left)
        tri[k] = row
        below = [0] + row + [0] * (L + 1 - len(row))
    return RankList(m.shape, tri)


def layer_sums(m: IntervalMultiset) -> list[int]:
    L = m.L
    return [sum(m.get(t, s) for t in range(j, L + 1) for s in range(j + 1)) for j in range(L + 1)]


@dataclass(frozen=True)
class Validation:
    ok: bool
    reasons: tuple[str, ...] = field(default_factory=tuple)

    def __bool__(self):
        return self.ok


def validate_multiset(m: IntervalMultiset) -> Validation:
    reasons = []
    for k, i, v in m.intervals():
        if v < 0:
            reasons.append(f"omega[{k}][{i}] = {v} < 0")
    for j, s in enumerate(layer_sums(m)):
        if s != m.shape.d[j]:
            reasons.append(f"layer {j}: interval sum {s} != d_{j} = {m.shape.d[j]}")
    return Validation(not reasons, tuple(reasons))


def validate_ranklist(r: RankList) -> Validation:
    return validate_multiset(omega_of(r))


def validate_triangle(shape: NetworkShape, entries: dict[tuple[int, int], int]) -> Validation:
    """Validity for raw off-diagonal entries, without constructing first."""
    try:
        r = RankList.from_entries(shape, entries)
    except ValueError as exc:
        return Validation(False, (str(exc),))
    return validate_ranklist(r)


def leq(r: RankList, s: RankList) -> bool:
    if r.shape != s.shape:
        raise ValueError("rank lists have different shapes")
    return all(a <= b for ra, sa in zip(r.r, s.r) for a, b in zip(ra, sa))


def minimal_ranklist(shape: NetworkShape, R: int) -> RankList:
    if R < 0:
        raise ValueError("rank must be nonnegative")
    if R > min(shape.d):
        raise EmptyFiberError("empty fiber: rk W exceeds min layer size")
    return RankList.from_entries(shape, {p: R for p in shape.pairs()})


class EmptyFiberError(ValueError):
    pass


def alpha_beta(m: IntervalMultiset, k: int, j: int, i: int) -> tuple[int, int]:
    """Dimensions of the flow subspaces A_{kji} and B_{kji}."""
    if not (m.L >= k >= j >= i >= 0):
        raise ValueError(f"need L >= k >= j >= i >= 0, got ({k},{j},{i})")
    alpha = sum(m.get(t, s) for t in range(j, k + 1) for s in range(i + 1))
    beta = sum(m.get(t, s) for t in range(k, m.L + 1) for s in range(i, j + 1))
    return alpha, beta


# ---------------------------------------------------------------- ledger


@dataclass(frozen=True)
class DimensionLedger:
    D_O: int
    D_O_L0: int
    D_O_fiber: int
    D_O_comb: int
    D_O_L0_notcomb: int
    D_O_stratum: int
    D_T_L0: int
    D_T_comb: int
    D_T_L0_notcomb: int
    D_free: int
    D_stratum: int
    D_fiber: int
    D_O_conn: int
    D_O_swap: int
    D_O_L0_comb: int
    D_O_fiber_comb: int
    D_O_L0_conn: int
    D_O_fiber_conn: int
    D_T_L0_comb: int
    D_T_fiber_comb: int
    rank_dmu: int

    @property
    def dim(self) -> int:
        return self.D_stratum

    @property
    def dof(self) -> int:
        return self.D_free

    @property
    def rdof(self) -> int:
        return self.D_free - self.D_stratum

    def as_dict(self) -> dict[str, int]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def dimension_ledger(r: RankList) -> DimensionLedger:
    v = validate_ranklist(r)
    if not v:
        raise ValueError("invalid rank list: " + "; ".join(v.reasons))
    m = omega_of(r)
    L, d, g, w = r.L, r.shape.d, r.get, m.get
    R = r.rank_W
    d_theta = r.shape.d_theta

    def beta_up(k, i):  # beta_{k+1,i,i} = sum_{t>k} w_{t,i}
        return g(k + 1, i) - g(k + 1, i - 1)

    def alpha_left(k, i):  # alpha_{k,k,i-1} = sum_{s<i} w_{k,s}
        return g(k, i - 1) - g(k + 1, i - 1)

    D_O = d_theta
    D_O_L0 = sum(g(L, j) * g(j - 1, 0) for j in range(1, L + 1))
    D_O_fiber = D_O - D_O_L0
    pairs_O = [(k, i) for k in range(L) for i in range(1, k + 2)]  # L >= k+1 >= i > 0
    pairs_T = [(k, i) for k in range(L) for i in range(1, k + 1)]  # L > k >= i > 0
    D_O_comb = sum((k - i + 2) * beta_up(k, i) * alpha_left(k, i) for k, i in pairs_O)
    D_O_L0_notcomb = R * sum(g(L, j) + g(j - 1, 0) - R for j in range(1, L + 1))
    D_O_stratum = D_O - D_O_comb - D_O_L0_notcomb
    D_T_L0 = sum(g(L, j) * g(j, 0) for j in range(1, L))
    D_T_comb = sum((k - i + 1) * beta_up(k, i) * alpha_left(k, i) for k, i in pairs_T)
    D_T_L0_notcomb = R * sum(g(L, j) + g(j, 0) - R for j in range(1, L))
    D_free = D_O_fiber + D_T_L0
    D_stratum = (d_theta - R * (d[L] + d[0] - R)
                 - sum(beta_up(k, i) * alpha_left(k, i) for k, i in pairs_O))
    D_O_conn = sum((d[j] - g(j, j - 1)) * (d[j - 1] - g(j, j - 1)) for j in range(1, L + 1))
    D_O_swap = sum((k - i + 2) * beta_up(k, i) * alpha_left(k, i) for k, i in pairs_T)
    D_O_L0_comb = sum((k - i + 2) * w(L, i) * w(k, 0) for k, i in pairs_O)
    D_O_L0_conn = sum(w(L, j) * w(j - 1, 0) for j in range(1, L + 1))
    D_T_L0_comb = sum((k - i + 1) * w(L, i) * w(k, 0) for k, i in pairs_T)
    led = DimensionLedger(
        D_O=D_O,
        D_O_L0=D_O_L0,
        D_O_fiber=D_O_fiber,
        D_O_comb=D_O_comb,
        D_O_L0_notcomb=D_O_L0_notcomb,
        D_O_stratum=D_O_stratum,
        D_T_L0=D_T_L0,
        D_T_comb=D_T_comb,
        D_T_L0_notcomb=D_T_L0_notcomb,
        D_free=D_free,
        D_stratum=D_stratum,
        D_fiber=D_free,
        D_O_conn=D_O_conn,
        D_O_swap=D_O_swap,
        D_O_L0_comb=D_O_L0_comb,
        D_O_fiber_comb=D_O_comb - D_O_L0_comb,
        D_O_L0_conn=D_O_L0_conn,
        D_O_fiber_conn=D_O_conn - D_O_L0_conn,
        D_T_L0_comb=D_T_L0_comb,
        D_T_fiber_comb=D_T_comb - D_T_L0_comb,
        rank_dmu=d_theta - D_free,
    )
    _check_ledger(led, r, m)
    return led


def _check_ledger(led: DimensionLedger, r: RankList, m: IntervalMultiset):
    L = r.L
    omega_form = r.shape.d_theta - sum(
        m.get(L, i) * m.get(k, 0) for k in range(L + 1) for i in range(k + 2) if i <= L
    )
    stratum_alt = (led.D_O - (led.D_O_L0_notcomb - led.D_T_L0_notcomb)
                   - (led.D_O_comb - led.D_T_comb))
    ok = (
        led.D_free == omega_form
        and led.D_stratum == stratum_alt
        and led.D_free >= led.D_stratum
        and m.get(L, 0) == r.rank_W
    )
    if not ok:
        raise AssertionError(f"ledger identities violated for {r.label()}")


# ---------------------------------------------------------------- json io


def ranklist_to_json(r: RankList) -> dict:
    return {
        "L": r.L,
        "d": list(r.shape.d),
        "ranks": [{"k": k, "i": i, "r": v} for (k, i), v in sorted(r.entries().items())],
    }


def ranklist_from_json(obj: dict) -> RankList:
    extra = set(obj) - {"L", "d", "ranks"}
    if extra:
        raise ValueError(f"unknown keys in rank list: {sorted(extra)}")
    shape = NetworkShape(tuple(obj["d"]))
    if "L" in obj and obj["L"] != shape.L:
        raise ValueError(f"L={obj['L']} disagrees with len(d)-1={shape.L}")
    entries = {}
    for item in obj["ranks"]:
        extra = set(item) - {"k", "i", "r"}
        if extra:
            raise ValueError(f"unknown keys in rank entry: {sorted(extra)}")
        key = (int(item["k"]), int(item["i"]))
        if key in entries:
            raise ValueError(f"duplicate rank entry {key}")
        entries[key] = int(item["r"])
    missing = set(shape.pairs()) - set(entries)
    if missing:
        raise ValueError(f"missing rank entries: {sorted(missing)}")
    return RankList.from_entries(shape, entries)


def load_ranklist(path) -> RankList:
    with open(path) as fh:
        return ranklist_from_json(json.load(fh))
