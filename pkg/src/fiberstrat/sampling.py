"""Seeded random cases: a shape, a stratum of its fiber, and a point on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dag import build_dag_bfs
from .network import WeightVector, random_rank_matrix, sample_on_stratum
from .ranklist import NetworkShape, RankList


@dataclass(frozen=True)
class CaseConfig:
    max_L: int = 4
    max_d: int = 5
    min_L: int = 1


@dataclass(frozen=True, eq=False)
class StratumCase:
    seed: int
    shape: NetworkShape
    ranklist: RankList
    W: np.ndarray
    theta: WeightVector


def random_case(seed: int, cfg: CaseConfig = CaseConfig()) -> StratumCase:
    rng = np.random.default_rng(seed)
    L = int(rng.integers(cfg.min_L, cfg.max_L + 1))
    d = tuple(int(x) for x in rng.integers(1, cfg.max_d + 1, size=L + 1))
    shape = NetworkShape(d)
    R = int(rng.integers(0, min(d) + 1))
    dag = build_dag_bfs(shape, R)
    r = dag.vertices[int(rng.integers(len(dag.vertices)))].ranklist
    W = random_rank_matrix(d[-1], d[0], R, rng)
    theta = sample_on_stratum(W, r, seed=seed)
    return StratumCase(seed, shape, r, W, theta)
