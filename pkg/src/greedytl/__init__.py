"""Greedy transfer learning: L2-regularized subset selection over features
and source-hypothesis predictions."""

__version__ = "0.1.0"

from .core import (
    DesignMatrix,
    DualState,
    StandardScaler,
    apply_scaler,
    assemble_design,
    candidate_score,
    fit_scaler,
    init_dual_state,
    naive_regularized_score,
    sm_update,
)
from .data import (
    Dataset,
    SourceEnsemble,
    SynthConfig,
    TransferTask,
    apply_sources,
    inject_noise,
    load_dataset_csv,
    load_predictions_csv,
    load_sources_csv,
    make_binary_split,
    save_dataset_csv,
    save_predictions_csv,
    save_sources_csv,
    synth_transfer_task,
)
from .errors import (
    BudgetError,
    DimensionError,
    GreedyTLError,
    MetricError,
    NumericDegeneracyError,
    ParameterError,
    ValidationError,
)
from .metrics import balanced_accuracy
from .oracle import (
    BoundReport,
    SolutionBounds,
    brute_force_rss,
    check_approximation_bound,
    check_solution_bounds,
    dual_accuracy,
    empirical_risk,
    regularized_accuracy,
    regularized_risk,
    ridge_fit_primal,
)
from .selector import (
    SearchStrategy,
    SelectionResult,
    StopReason,
    TargetModel,
    extract_weights,
    fit_model,
    greedy_select,
    predict_raw,
    predict_truncated,
    sample_size,
)
from .baselines import (
    BaselineModel,
    average_kt_predict,
    best_source_select,
    fit_average_kt,
    fit_forward_reg,
    fit_no_transfer,
    fit_rls_src_feat,
)
from .harness import (
    ExperimentConfig,
    run_benchmark,
    strip_volatile,
    timing_profile,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
