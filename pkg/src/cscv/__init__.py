"""Compressed sensing recovery with Johnson-Lindenstrauss cross validation.

A few measurement rows are held out from the decoder; because they are
independent of its output, ``||y_psi - Psi x_hat||`` brackets the unknown
error ``||x - x_hat||`` for every candidate at once, selects the best
candidate, and bounds the best k-term approximation error of ``x``.
"""
__version__ = "0.1.0"

from .errors import (
    CSCVError,
    DegenerateInputError,
    IllConditionedSupportError,
    InsufficientCVRowsError,
    InvalidArgumentError,
    InvalidScheduleError,
)
from .signal_core import (
    CompressibilityModel,
    DenseSignal,
    KTermReport,
    best_k_term,
    k_of_m,
    load_signal,
    make_compressible_signal,
    make_spike_signal,
    save_signal,
    sigma_k,
    sparsity,
    trim_to_k,
)
from .sensing import (
    MeasurementEnsemble,
    MeasurementPartition,
    draw_ensemble,
    measure,
    row_prefix,
    split,
)
from .jl_cv import (
    CVScoredSequence,
    ErrorInterval,
    JLBudget,
    absolute_interval,
    accuracy_from_rows,
    cv_scores,
    oracle_bracket,
    relation_holds,
    relation_invert,
    relation_quotient_eps,
    relative_interval,
    required_rows,
    sigma_k_bracket,
    stopping_rule,
)
from .decoders import (
    EstimateSequence,
    HomotopyPath,
    cross_validate_path,
    lasso_homotopy,
    least_squares_on_support,
    omp_decode,
    path_solution_at,
)
from .adaptive import AdaptiveResult, AdaptiveSchedule, adaptive_decode, geometric_schedule
from .experiments import ExperimentConfig, TrialSummary, run_omp_cv_experiment, summarize_figure1
