"""Sparse conformal predictors for linear regression.

Exact conformal prediction sets built along l1 regularization paths,
with ridge, elastic-net and fused-penalty smoother variants, selection
rules for the per-step candidate sets, and a Monte Carlo harness for
validity/accuracy/selection studies.
"""

__version__ = "0.1.0"

from .conformal import (
    AffineScore,
    AugmentedProblem,
    ScoreModel,
    affine_scores,
    conformal_set,
    p_value,
    score_interval,
)
from .dataset import Dataset
from .errors import (
    AllUnbounded,
    DataError,
    DegenerateDesign,
    DimensionMismatch,
    EmptyPath,
    InvalidPenalty,
    MissingResponse,
    NonNumericCell,
    NumericalError,
    ParseError,
    SingularGram,
    SparseCPError,
)
from .estimator import SparseConformalRegressor
from .intervals import IntervalSet
from .path import (
    PathStep,
    PenaltyMatrixSpec,
    SolutionPath,
    kkt_residual,
    lars_lasso_path,
    lasso_closed_form,
    penalized_path,
)
from .predictors import (
    FamilyEntry,
    PredictionReport,
    PredictorFamily,
    VariantSpec,
    build_family,
    fixed_lambda_set,
    predict,
    select_early_stopped,
    select_n_previous_neighbors,
    select_smallest,
)
from .simulate import (
    ExampleSpec,
    ExperimentResult,
    example_spec,
    fixed_lambda_experiment,
    generate_example,
    pilot_lambda,
    selection_metrics,
    validity_experiment,
)

__all__ = [
    "AffineScore",
    "AllUnbounded",
    "AugmentedProblem",
    "DataError",
    "Dataset",
    "DegenerateDesign",
    "DimensionMismatch",
    "EmptyPath",
    "ExampleSpec",
    "ExperimentResult",
    "FamilyEntry",
    "IntervalSet",
    "InvalidPenalty",
    "MissingResponse",
    "NonNumericCell",
    "NumericalError",
    "ParseError",
    "PathStep",
    "PenaltyMatrixSpec",
    "PredictionReport",
    "PredictorFamily",
    "ScoreModel",
    "SingularGram",
    "SolutionPath",
    "SparseCPError",
    "SparseConformalRegressor",
    "VariantSpec",
    "affine_scores",
    "build_family",
    "conformal_set",
    "example_spec",
    "fixed_lambda_experiment",
    "fixed_lambda_set",
    "generate_example",
    "kkt_residual",
    "lars_lasso_path",
    "lasso_closed_form",
    "p_value",
    "penalized_path",
    "pilot_lambda",
    "predict",
    "score_interval",
    "select_early_stopped",
    "select_n_previous_neighbors",
    "select_smallest",
    "selection_metrics",
    "validity_experiment",
]
