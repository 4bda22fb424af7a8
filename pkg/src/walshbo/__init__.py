"""Combinatorial Bayesian optimization over binary spaces.

Closed-form diffusion-kernel features on the hypercube feed a Bayesian
linear surrogate; Thompson samples become binary quadratic programs solved
by submodular relaxation over an s-t min-cut core.
"""

__version__ = "0.1.0"

from . import _kernels
from .afo import (BqpProblem, FlowNetwork, RelaxationState,
                  SubmodularQuadratic, bqp_value, brute_force_minimize,
                  build_bqp, graphcut_minimize, local_search_minimize, relax,
                  split_posneg, submodular_relaxation_solve)
from .benchmarks import (IsingSpec, Objective, TabularSpec,
                         encode_categorical, decode_categorical,
                         ising_benchmark, ising_objective, labs_benchmark,
                         labs_objective, load_tabular, make_ising,
                         tabular_benchmark)
from .driver import (RunConfig, RunHistory, batch_diversity, run_batch_bo,
                     run_bo, select_next)
from .features import (FeatureBasis, enumerate_subsets, exact_kernel,
                       feature_matrix, kernel_from_features,
                       laplacian_eigens_oracle, mercer_features)
from .surrogate import (HyperConfig, PosteriorModel, TrainingSet,
                        fit_hyperparameters, fit_posterior,
                        hierarchical_prior_scales, log_evidence,
                        make_training_set, predict, sample_theta)


def kernel_backend():
    """Which kernel lane is active: 'native' (compiled) or 'pure'."""
    return _kernels.backend()
