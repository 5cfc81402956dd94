"""The stratum dag: every valid rank list with a given rk W, annotated with
dim/dof/rdof, and an edge for every rank-one abstract move."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .moves import AbstractMove, apply_abstract_move, enumerate_abstract_moves
from .ranklist import (EmptyFiberError, NetworkShape, RankList, dimension_ledger,
                       minimal_ranklist, ranklist_to_json, validate_ranklist)


@dataclass(frozen=True)
class DagVertex:
    ranklist: RankList
    dim: int
    dof: int
    rdof: int


@dataclass(frozen=True, order=True)
class DagEdge:
    origin: int
    dest: int
    label: tuple[int, int, int, int]


@dataclass
class StratumDag:
    shape: NetworkShape
    W_rank: int
    vertices: list[DagVertex] = field(default_factory=list)
    edges: list[DagEdge] = field(default_factory=list)
    index: dict = field(default_factory=dict)

    def add_vertex(self, r: RankList) -> int:
        key = r.r
        if key in self.index:
            return self.index[key]
        led = dimension_ledger(r)
        self.vertices.append(DagVertex(r, led.dim, led.dof, led.rdof))
        self.index[key] = len(self.vertices) - 1
        return self.index[key]

    def vertex_id(self, r: RankList) -> int:
        try:
            return self.index[r.r]
        except KeyError:
            raise KeyError(f"rank list {r.label()} is not a vertex") from None

    def ranklists(self) -> set:
        return {v.ranklist.r for v in self.vertices}

    def edge_set(self) -> set:
        return {(self.vertices[e.origin].ranklist.r, self.vertices[e.dest].ranklist.r, e.label)
                for e in self.edges}

    def successors(self) -> list[list[int]]:
        adj = [[] for _ in self.vertices]
        for e in self.edges:
            adj[e.origin].append(e.dest)
        return adj


def _check_rank(shape: NetworkShape, R: int):
    if R < 0:
        raise ValueError("rank must be nonnegative")
    if R > min(shape.d):
        raise EmptyFiberError("empty fiber: rk W exceeds min layer size")


def enumerate_vertices(shape: NetworkShape, R: int) -> StratumDag:
    """Recursive range enumeration, filling r_{k~i} column by column."""
    _check_rank(shape, R)
    L, d = shape.L, shape.d
    dag = StratumDag(shape, R)
    r = [[0] * (k + 1) for k in range(L + 1)]
    for j in range(L + 1):
        r[j][j] = d[j]
    r[L][0] = R

    def emit():
        rl = RankList(shape, r)
        if not validate_ranklist(rl):
            raise AssertionError(f"enumeration produced invalid rank list {rl.label()}")
        dag.add_vertex(rl)

    if L == 1:
        emit()
        return dag

    def bounds(k, i):
        if i == 0:
            return R, min(r[k - 1][0], d[k])
        return r[k][i - 1], min(r[k - 1][i] + r[k][i - 1] - r[k - 1][i - 1], d[k])

    def recurse(k, i):
        lo, hi = bounds(k, i)
        for v in range(lo, hi + 1):
            r[k][i] = v
            if k < L and (k < L - 1 or i > 0):
                recurse(k + 1, i)
            elif i < L - 1:
                recurse(i + 2, i + 1)
            else:
                emit()
        r[k][i] = 0

    recurse(1, 0)
    r[L][0] = R
    return dag


def enumerate_edges(dag: StratumDag) -> StratumDag:
    dag.edges = []
    for vid, v in enumerate(dag.vertices):
        for m in enumerate_abstract_moves(v.ranklist, on_fiber=True):
            t = apply_abstract_move(v.ranklist, m)
            if t.r not in dag.index:
                raise AssertionError(f"move {m.label} from {v.ranklist.label()} leaves the vertex set")
            dag.edges.append(DagEdge(vid, dag.index[t.r], m.label))
    return dag


def build_dag(shape: NetworkShape, R: int) -> StratumDag:
    return enumerate_edges(enumerate_vertices(shape, R))


def build_dag_bfs(shape: NetworkShape, R: int) -> StratumDag:
    """Discover vertices by applying moves outward from the minimal rank list."""
    _check_rank(shape, R)
    dag = StratumDag(shape, R)
    start = minimal_ranklist(shape, R)
    dag.add_vertex(start)
    queue = deque([start])
    while queue:
        r = queue.popleft()
        vid = dag.index[r.r]
        for m in enumerate_abstract_moves(r, on_fiber=True):
            t = apply_abstract_move(r, m)
            if t.r not in dag.index:
                dag.add_vertex(t)
                queue.append(t)
            dag.edges.append(DagEdge(vid, dag.index[t.r], m.label))
    return dag


def reachable(dag: StratumDag, r: RankList, s: RankList) -> bool:
    a, b = dag.vertex_id(r), dag.vertex_id(s)
    adj = dag.successors()
    seen = {a}
    stack = [a]
    while stack:
        u = stack.pop()
        if u == b:
            return True
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def reachability_closure(dag: StratumDag) -> list[set]:
    """Descendant sets (including self) for every vertex."""
    adj = dag.successors()
    order, seen = [], set()

    def visit(u):
        seen.add(u)
        for v in adj[u]:
            if v not in seen:
                visit(v)
        order.append(u)

    for u in range(len(dag.vertices)):
        if u not in seen:
            visit(u)
    reach = [set() for _ in dag.vertices]
    for u in order:
        reach[u].add(u)
        for v in adj[u]:
            reach[u] |= reach[v]
    return reach


# ---------------------------------------------------------------- export


def _sorted_view(dag: StratumDag):
    order = sorted(range(len(dag.vertices)), key=lambda v: dag.vertices[v].ranklist.display_tuple())
    new_id = {old: new for new, old in enumerate(order)}
    edges = sorted({(new_id[e.origin], new_id[e.dest], e.label) for e in dag.edges},
                   key=lambda e: (e[0], e[2], e[1]))
    return order, new_id, edges


def export_json(dag: StratumDag) -> str:
    order, _, edges = _sorted_view(dag)
    obj = {
        "shape": list(dag.shape.d),
        "W_rank": dag.W_rank,
        "vertices": [
            {"id": n, "ranks": ranklist_to_json(dag.vertices[o].ranklist)["ranks"],
             "dim": dag.vertices[o].dim, "dof": dag.vertices[o].dof, "rdof": dag.vertices[o].rdof}
            for n, o in enumerate(order)
        ],
        "edges": [{"from": a, "to": b, "label": list(lab)} for a, b, lab in edges],
    }
    return json.dumps(obj, indent=1) + "\n"


def import_json(text: str) -> StratumDag:
    obj = json.loads(text)
    shape = NetworkShape(tuple(obj["shape"]))
    dag = StratumDag(shape, int(obj["W_rank"]))
    ids = {}
    for v in obj["vertices"]:
        r = RankList.from_entries(shape, {(e["k"], e["i"]): e["r"] for e in v["ranks"]})
        ids[v["id"]] = dag.add_vertex(r)
        got = dag.vertices[ids[v["id"]]]
        if (got.dim, got.dof, got.rdof) != (v["dim"], v["dof"], v["rdof"]):
            raise ValueError(f"vertex {v['id']} annotations disagree with its rank list")
    for e in obj["edges"]:
        dag.edges.append(DagEdge(ids[e["from"]], ids[e["to"]], tuple(e["label"])))
    return dag


def export_dot(dag: StratumDag) -> str:
    order, _, edges = _sorted_view(dag)
    lines = [f'digraph strata_{"x".join(map(str, dag.shape.d))}_rank{dag.W_rank} {{']
    for n, o in enumerate(order):
        v = dag.vertices[o]
        lines.append(f'  v{n} [label="S{v.ranklist.label()}\\n{v.dim}/{v.dof}/{v.rdof}"];')
    for a, b, lab in edges:
        lines.append(f'  v{a} -> v{b} [label="({",".join(map(str, lab))})"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_table(dag: StratumDag) -> str:
    """Plain-text listing; for two-layer networks, one row per rk W_2."""
    order, _, edges = _sorted_view(dag)
    out = [f"shape {','.join(map(str, dag.shape.d))}  rk W = {dag.W_rank}  "
           f"{len(order)} strata, {len(edges)} edges"]
    if dag.shape.L == 2:
        rows = {}
        for o in order:
            v = dag.vertices[o]
            rows.setdefault(v.ranklist(2, 1), []).append(v)
        for a in sorted(rows, reverse=True):
            cells = "  ".join(f"S{a}{v.ranklist(1, 0)} ({v.dim},{v.dof},{v.rdof})" for v in rows[a])
            out.append(f"rk W2 = {a}:  {cells}")
    else:
        order_names = ",".join(f"r{k}{i}" for k, i in dag.vertices[0].ranklist.display_order())
        out.append(f"ranks ordered as <{order_names}>")
        for o in order:
            v = dag.vertices[o]
            out.append(f"S{v.ranklist.label()}  dim={v.dim} dof={v.dof} rdof={v.rdof}")
    return "\n".join(out) + "\n"
