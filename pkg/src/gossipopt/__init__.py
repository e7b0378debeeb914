"""Desk-scale simulator for decentralized stochastic optimization.

Modules: `gossip` (mixing matrices and accelerated consensus), `problems`
(composite objectives and the shift-invert PCA benchmark), `solvers`
(PMGT-KatyushaX, PMGT-SVRG, centralized SVRG, PG-EXTRA, NIDS), `harness`
(experiment configs, runs, CSV traces), `cli`.
"""

from .gossip import (GossipMatrix, InvariantViolation, build_lazy_ring,
                     build_random_two_neighbor, consensus_error, consensus_stack,
                     contraction_bound, fast_mix, min_rounds_for_rho, row_average,
                     second_eigenvalue)
from .harness import ExperimentConfig, emit_csv, read_csv, run_experiment
from .problems import (DataMatrix, DegenerateEigengap, OracleInstance, ParseError,
                       ProblemInstance, Regularizer, closed_form_minimizer,
                       gen_bernoulli_matrix, load_libsvm, make_quadratic,
                       make_shift_invert_pca, prox, regularize_epsilon,
                       smoothness_constants)
from .solvers import (EpochState, RunTrace, SolverConfig, default_hyperparams,
                      mirror_step, run_centralized_svrg, run_nids, run_pgextra,
                      run_pmgt_katyushax, run_pmgt_svrg, sample_geometric,
                      svrg_inner_epoch, vr_estimator)

__all__ = [name for name in dir() if not name.startswith("_")]
