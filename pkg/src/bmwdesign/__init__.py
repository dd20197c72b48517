"""Balanced control/treatment group design for small-sample A/B experiments.

Repeated balanced randomization scored by propensity-score matching distance,
with balance diagnostics and post-experiment effect estimation.
"""

from bmwdesign.analysis import (
    ComparisonReport,
    EffectEstimate,
    ate_difference_in_means,
    ate_regression_adjusted,
    compare_designs,
    paired_test,
)
from bmwdesign.dataset import (
    SubjectRecord,
    SubjectTable,
    ValidationReport,
    load_csv,
    validate_for_design,
)
from bmwdesign.design import (
    AssignmentVector,
    DesignOutcome,
    RepetitionRecord,
    SweepResult,
    derive_seed,
    draw_balanced_assignment,
    run_bmw,
    sweep_M,
)
from bmwdesign.diagnostics import (
    BalanceRow,
    BalanceTable,
    KdeCurve,
    balance_table,
    kde,
    post_experiment_balance_check,
)
from bmwdesign.errors import (
    BMWError,
    DegenerateSampleError,
    DesignValidationError,
    NumericFailure,
)
from bmwdesign.matching import MatchPairing, greedy_match, optimal_match_oracle
from bmwdesign.propensity import FitConfig, PropensityFit, fit_logistic, predict_scores
from bmwdesign.scaling import ScalingParams, apply_minmax, fit_minmax

__version__ = "0.1.0"

__all__ = [
    "AssignmentVector",
    "BMWError",
    "BalanceRow",
    "BalanceTable",
    "ComparisonReport",
    "DegenerateSampleError",
    "DesignOutcome",
    "DesignValidationError",
    "EffectEstimate",
    "FitConfig",
    "KdeCurve",
    "MatchPairing",
    "NumericFailure",
    "PropensityFit",
    "RepetitionRecord",
    "ScalingParams",
    "SubjectRecord",
    "SubjectTable",
    "SweepResult",
    "ValidationReport",
    "apply_minmax",
    "ate_difference_in_means",
    "ate_regression_adjusted",
    "balance_table",
    "compare_designs",
    "derive_seed",
    "draw_balanced_assignment",
    "fit_logistic",
    "fit_minmax",
    "greedy_match",
    "kde",
    "load_csv",
    "optimal_match_oracle",
    "paired_test",
    "post_experiment_balance_check",
    "predict_scores",
    "run_bmw",
    "sweep_M",
    "validate_for_design",
]
