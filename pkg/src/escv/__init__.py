"""Estimation-stability regularization selection (ESCV) for the lasso.

Fits lasso solution paths on cross-validation (or bootstrap) pseudo
datasets, measures how stably the pseudo solutions estimate the
regression function along the path, and selects the penalty at a local
stability minimum no larger than the cross-validation choice. Includes
CV and BIC baselines, path-alignment utilities, and a replicated
Gaussian-design benchmark harness.
"""

from .criteria import (CriterionCurve, SelectionResult, cv_curve, es_curve,
                       es_value, pairwise_distance_metric, pseudo_fits,
                       sample_variance_curve, sample_variance_metric,
                       select_bic, select_cv, select_escv)
from .data import Dataset, Standardization, original_scale, prepare_dataset
from .errors import (ConfigError, ConvergenceError, DataError,
                     DegenerateGridError, EscvError, UnsupportedSchemeError)
from .lasso import (CoefficientVector, NullResponseWarning, SolutionPath,
                    coeff_at_lambda, coeff_at_tau, compute_path, fit_lasso,
                    kkt_residual, lambda_zero, objective_value,
                    path_coefficients)
from .resampling import (FoldAssignment, FractionGrid, LambdaGrid,
                         PseudoPathSet, TauGrid, bootstrap_pseudo_paths,
                         common_lambda_grid, common_tau_grid, fraction_grid,
                         make_folds, pseudo_paths)
from .simulation import (AggregateReport, AlignmentReport, DesignSpec,
                         ExperimentConfig, ReplicateMetrics, ScenarioResult,
                         SpreadSummary, alignment_experiment,
                         estimation_error, gen_replicate, gen_sigma,
                         max_l1_spread, paper_presets, prediction_error,
                         run_experiment, selection_metrics)

__version__ = "0.1.0"
