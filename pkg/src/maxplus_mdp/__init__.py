"""Max-plus value-function approximation for deterministic MDPs.

The pipeline: exact value iteration on a deterministic MDP, residuated
lower/upper projections onto dictionaries of basis functions, a reduced
iteration over precompiled pairing matrices, and greedy dictionary growth,
validated on grid benchmarks with closed-form optimal value functions.
"""

__version__ = "0.1.0"

from .core import (CoverageError, Dictionary, NEG_INF, eval_dictionary, maxplus_dot,
                   project_lower, project_upper, residuate, sup_distance,
                   transpose_apply, transpose_residuate)
from .grids import Grid
from .mdp import (ConvergenceError, DeterministicMdp, bellman_apply, bellman_residual,
                  compile_power, greedy_policy, load_mdp, maxplus_matmul,
                  mdp_from_text, mdp_to_text, neighborhood_degree, range_of_rewards,
                  save_mdp, value_iteration)
from .dictionaries import (BregmanAffineAtom, CoverResult, DistanceAtom, IndicatorAtom,
                           Partition, TabulatedAtom, dictionary_from_json,
                           dictionary_to_json, evaluate_atom, k_center_cover,
                           lipschitz_estimate, make_bregman_dictionary,
                           make_distance_dictionary, make_partition_dictionary,
                           partition_from_json, partition_to_json,
                           reduced_mdp_from_partition, single_cell_partition,
                           split_box_cell, uniform_box_partition, voronoi_partition)
from .reduced import (CompiledForms, ReducedState, compile_forms,
                      fixed_point_error_bound, fixed_point_error_bound_power,
                      load_forms, partition_reduced_vi, reduced_step, run_reduced_vi,
                      save_forms)
from .pursuit import (AtomGreedyState, AtomProposal, DistanceAtomParam,
                      GreedyRunState, PartitionGreedyState, SplitExhaustedError,
                      SplitProposal, TabulatedParam, criterion_w, criterion_z,
                      distance_candidate_pool, greedy_step, mm_refine_atom,
                      propose_partition_split, run_matching_pursuit, write_trace)
from .benchmarks import (BenchmarkProblem, ValueSpec, VALUE_SPECS, build_1d, build_2d,
                         build_benchmark, error_metrics, reward_from_value,
                         reward_from_value_1d)
