"""Rank stratification of the fibers of linear neural networks."""

from .ranklist import (DimensionLedger, IntervalMultiset, NetworkShape, RankList, alpha_beta,
                       dimension_ledger, leq, minimal_ranklist, omega_of, ranks_of,
                       validate_multiset, validate_ranklist)
from .network import (WeightVector, dmu_matrix, dmu_transpose_apply, eta_apply, mu, mu_sub,
                      ranklist_of, sample_on_stratum)
from .flow import (FlowSystem, build_flow_prebases, canonical_factorization,
                   canonical_weight_vector, compute_flow_subspaces, verify_fundamental_theorem)
from .moves import (AbstractMove, apply_abstract_move, enumerate_abstract_moves, find_all_moves,
                    find_last_move, one_matrix_move, predict_move_effects, two_matrix_path_point)
from .dag import StratumDag, build_dag, build_dag_bfs, enumerate_edges, enumerate_vertices, reachable
from .subspace import Subspace, Tolerances

__version__ = "0.1.0"
