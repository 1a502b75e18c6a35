"""Profiled transfer learning for high dimensional linear regression.

A small research library implementing the profiled transfer estimator
(source fits, transferred features, profiled responses, sparse contrast),
the lasso and two-step trans-lasso baselines, four synthetic designs, and a
reproducible Monte-Carlo benchmark harness with a CLI.
"""

from .baselines import BaselineFit, fit_lasso_target, fit_translasso
from .data import (
    DataSet,
    FoldAssignment,
    gram_products,
    load_dataset_csv,
    make_folds,
    save_dataset_csv,
    standardize,
)
from .errors import ConfigurationError, SingularDesignError
from .harness import (
    ExperimentResult,
    R2Record,
    ReplicationRecord,
    emit_results,
    mse,
    out_of_sample_r2,
    r2_score,
    read_records_csv,
    read_results_json,
    run_experiment,
)
from .lasso import LassoFit, LassoOptions, cv_lasso, kkt_violation, lambda_path, solve_lasso
from .population import PopulationModel, check_identification, decompose
from .simulate import (
    DEFAULT_WEIGHTS,
    GeneratedProblem,
    SimConfig,
    ar1_covariance,
    banded_toeplitz,
    gen_example1,
    gen_example2,
    gen_example3,
    gen_example4,
    generate_problem,
    sample_dataset,
)
from .transfer import (
    PtlConfig,
    PtlFit,
    SourceBasis,
    fit_contrast,
    fit_ptl,
    fit_sources,
    fit_weights,
    profile_responses,
    resolve_source_kind,
    transfer_features,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineFit",
    "ConfigurationError",
    "DEFAULT_WEIGHTS",
    "DataSet",
    "ExperimentResult",
    "FoldAssignment",
    "GeneratedProblem",
    "LassoFit",
    "LassoOptions",
    "PopulationModel",
    "PtlConfig",
    "PtlFit",
    "R2Record",
    "ReplicationRecord",
    "SimConfig",
    "SingularDesignError",
    "SourceBasis",
    "ar1_covariance",
    "banded_toeplitz",
    "check_identification",
    "cv_lasso",
    "decompose",
    "emit_results",
    "fit_contrast",
    "fit_lasso_target",
    "fit_ptl",
    "fit_sources",
    "fit_translasso",
    "fit_weights",
    "gen_example1",
    "gen_example2",
    "gen_example3",
    "gen_example4",
    "generate_problem",
    "gram_products",
    "kkt_violation",
    "lambda_path",
    "load_dataset_csv",
    "make_folds",
    "mse",
    "out_of_sample_r2",
    "profile_responses",
    "r2_score",
    "read_records_csv",
    "read_results_json",
    "resolve_source_kind",
    "run_experiment",
    "sample_dataset",
    "save_dataset_csv",
    "solve_lasso",
    "standardize",
    "transfer_features",
]
