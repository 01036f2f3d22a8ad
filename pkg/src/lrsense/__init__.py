"""Factored gradient descent for low-rank matrix sensing, without a balancing regularizer."""

__version__ = "0.1.0"

from .alignment import (AlignmentResult, align_gradient, alignment_objective, dist,
                        foc_residual, invertible_align, procrustes_align, procrustes_distance)
from .checks import (CHECKS, CheckReport, check_alignment_lemmas, check_lemma_gradient_dominance,
                     check_lemma_smoothness, check_rip_inner_product)
from .errors import (ConfigError, DimensionError, DivergenceError, SingularAlignmentError,
                     TraceLengthError)
from .harness import ExperimentConfig, load_config, run_comparison, run_experiment
from .model import FactorPair, GroundTruth, balancedness_gap, make_ground_truth, stack
from .sensing import SensingOperator, estimate_rip, exact_operator, gaussian_operator, rip_deviation
from .solvers import (IterateTrace, SolverConfig, contraction_factor, gd_run, pgd_init,
                      spectral_init)

__all__ = [
    "__version__",
    "AlignmentResult",
    "align_gradient",
    "alignment_objective",
    "dist",
    "foc_residual",
    "invertible_align",
    "procrustes_align",
    "procrustes_distance",
    "CHECKS",
    "CheckReport",
    "check_alignment_lemmas",
    "check_lemma_gradient_dominance",
    "check_lemma_smoothness",
    "check_rip_inner_product",
    "ConfigError",
    "DimensionError",
    "DivergenceError",
    "SingularAlignmentError",
    "TraceLengthError",
    "ExperimentConfig",
    "load_config",
    "run_comparison",
    "run_experiment",
    "FactorPair",
    "GroundTruth",
    "balancedness_gap",
    "make_ground_truth",
    "stack",
    "SensingOperator",
    "estimate_rip",
    "exact_operator",
    "gaussian_operator",
    "rip_deviation",
    "IterateTrace",
    "SolverConfig",
    "contraction_factor",
    "gd_run",
    "pgd_init",
    "spectral_init",
]
