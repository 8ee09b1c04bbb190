"""Daily perceived-stress prediction from smartphone app-usage logs.

The pipeline: ingest raw event/screen/EMA logs, categorize apps, extract
an 11-dimensional daily usage vector per user, and train per-user (or
pooled) soft-margin SVM classifiers of the 1-5 stress level, with
cross-validated kernel/parameter selection and tabular reporting. A
deterministic synthetic-cohort generator provides ground truth for
end-to-end verification.
"""

from __future__ import annotations

from .errors import ConfigError, DataError, PipelineError, SchemaError
from .evaluation import (
    EvaluationReport,
    SplitSpec,
    UserResult,
    category_usage_summary,
    compute_metrics,
    evaluate_cohort,
    evaluate_pooled,
    evaluate_user,
    format_report_table,
    split_train_test,
)
from .features import (
    FEATURE_NAMES,
    DailyFeatureVector,
    DailyLabel,
    aggregate_daily_label,
    extract_daily_features,
    join_features_labels,
)
from .ingest import (
    AppEvent,
    EmaResponse,
    ScreenInterval,
    WorkHoursFilter,
    clip_to_screen_on,
    normalize_screen_intervals,
    parse_app_events,
    parse_ema,
    parse_screen_intervals,
)
from .model_selection import (
    FoldSpec,
    Grid,
    SelectionResult,
    cross_validate,
    default_grid,
    grid_search,
    make_folds,
)
from .svm import (
    BinarySvmModel,
    KernelSpec,
    MulticlassModel,
    SvmParams,
    decision_value,
    kernel_eval,
    model_from_json,
    model_to_json,
    predict_multiclass,
    solve_smo,
    train_multiclass,
)
from .synth import Cohort, CohortSpec, brute_force_svm_oracle, generate_cohort
from .taxonomy import AppCategory, Taxonomy, categorize_app, default_taxonomy, load_taxonomy

__version__ = "0.1.0"

__all__ = [
    "AppCategory",
    "AppEvent",
    "BinarySvmModel",
    "Cohort",
    "CohortSpec",
    "ConfigError",
    "DailyFeatureVector",
    "DailyLabel",
    "DataError",
    "EmaResponse",
    "EvaluationReport",
    "FEATURE_NAMES",
    "FoldSpec",
    "Grid",
    "KernelSpec",
    "MulticlassModel",
    "PipelineError",
    "SchemaError",
    "ScreenInterval",
    "SelectionResult",
    "SplitSpec",
    "SvmParams",
    "Taxonomy",
    "UserResult",
    "WorkHoursFilter",
    "aggregate_daily_label",
    "brute_force_svm_oracle",
    "categorize_app",
    "category_usage_summary",
    "clip_to_screen_on",
    "compute_metrics",
    "cross_validate",
    "decision_value",
    "default_grid",
    "default_taxonomy",
    "evaluate_cohort",
    "evaluate_pooled",
    "evaluate_user",
    "extract_daily_features",
    "format_report_table",
    "generate_cohort",
    "grid_search",
    "join_features_labels",
    "kernel_eval",
    "load_taxonomy",
    "make_folds",
    "model_from_json",
    "model_to_json",
    "normalize_screen_intervals",
    "parse_app_events",
    "parse_ema",
    "parse_screen_intervals",
    "predict_multiclass",
    "solve_smo",
    "split_train_test",
    "train_multiclass",
]
