"""Splits, metrics, per-user/pooled evaluation, and report rendering."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from appstress import synth
from appstress.errors import ConfigError, DataError, PipelineError
from appstress.evaluation import (
    MIN_LABELED_DAYS,
    EvaluationReport,
    SplitSpec,
    UserResult,
    category_usage_summary,
    compute_metrics,
    evaluate_cohort,
    evaluate_pooled,
    evaluate_user,
    format_report_table,
    report_csv_text,
    split_train_test,
    usage_svg_text,
)
from appstress.features import (
    aggregate_daily_label,
    extract_daily_features,
    join_features_labels,
)
from appstress.ingest import AppEvent, clip_to_screen_on, normalize_screen_intervals, parse_timestamp
from appstress.model_selection import FoldSpec, Grid, cross_validate
from appstress.svm import KernelSpec, SvmParams
from appstress.taxonomy import AppCategory, default_taxonomy
from oracles import confusion_metrics

SMALL_GRID = Grid(
    kernels=(KernelSpec("linear"), KernelSpec("rbf", gamma=0.1)),
    c_values=(0.1, 1.0),
)


def _user_pairs(n_days, labels, seed=0, scale=2.0, noise=0.15):
    """Daily (vector, label) pairs whose first coordinate tracks the label."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n_days):
        label = labels[i % len(labels)]
        vec = np.array([scale * label + rng.normal(0, noise), rng.normal(0, noise)])
        pairs.append((vec, label))
    return pairs


# -- splitting --------------------------------------------------------------------


def test_chronological_split_10_days():
    pairs = _user_pairs(10, [1, 2])
    train, test = split_train_test(pairs, SplitSpec())
    assert len(train) == 7 and len(test) == 3
    assert train == pairs[:7] and test == pairs[7:]


def test_chronological_split_4_days():
    pairs = _user_pairs(4, [1, 2])
    train, test = split_train_test(pairs, SplitSpec())
    assert len(train) == 3 and len(test) == 1


def test_split_never_leaves_test_empty():
    pairs = _user_pairs(2, [1, 2])
    train, test = split_train_test(pairs, SplitSpec(train_fraction=0.9))
    assert len(train) == 1 and len(test) == 1
    with pytest.raises(DataError):
        split_train_test(pairs[:1], SplitSpec())


def test_random_stratified_split_deterministic_and_seed_sensitive():
    pairs = _user_pairs(30, [1, 2, 3])
    spec_a = SplitSpec(mode="random_stratified", seed=1)
    spec_b = SplitSpec(mode="random_stratified", seed=2)
    train_a1, test_a1 = split_train_test(pairs, spec_a)
    train_a2, test_a2 = split_train_test(pairs, spec_a)
    train_b, test_b = split_train_test(pairs, spec_b)
    key = lambda pr: (pr[0].tolist(), pr[1])
    assert list(map(key, train_a1)) == list(map(key, train_a2))
    assert list(map(key, test_a1)) == list(map(key, test_a2))
    assert list(map(key, train_a1)) != list(map(key, train_b))
    # Partition: train and test together are exactly the input.
    assert sorted(map(key, train_a1 + test_a1)) == sorted(map(key, pairs))
    # Stratified: 70% of each class's 10 days, ceiling -> 7 per class.
    from collections import Counter

    counts = Counter(label for _, label in train_a1)
    assert counts == {1: 7, 2: 7, 3: 7}


def test_split_spec_validation():
    with pytest.raises(ConfigError):
        SplitSpec(train_fraction=0.0)
    with pytest.raises(ConfigError):
        SplitSpec(train_fraction=1.0)
    with pytest.raises(ConfigError):
        SplitSpec(mode="bootstrap")
    with pytest.raises(ConfigError):
        SplitSpec(seed=-1)


# -- metrics ---------------------------------------------------------------------


def test_perfect_prediction_scores_ones():
    assert compute_metrics([1, 3, 5], [1, 3, 5]) == (1.0, 1.0, 1.0)


def test_hand_computed_confusion_matrix():
    accuracy, precision, recall = compute_metrics([1, 1, 2, 2], [1, 2, 2, 2])
    assert accuracy == 0.75
    assert math.isclose(precision, 5.0 / 6.0, abs_tol=1e-12)
    assert recall == 0.75


def test_total_miss_scores_zero():
    assert compute_metrics([1, 2], [2, 1]) == (0.0, 0.0, 0.0)


def test_never_predicted_class_has_zero_precision():
    # Class 2 never predicted: P2=0; macro precision averages over truth classes.
    accuracy, precision, recall = compute_metrics([1, 2], [1, 1])
    assert accuracy == 0.5
    assert precision == 0.25  # (P1=0.5, P2=0) / 2
    assert recall == 0.5  # (R1=1, R2=0) / 2


def test_metrics_validation():
    with pytest.raises(PipelineError):
        compute_metrics([1, 2], [1])
    with pytest.raises(PipelineError):
        compute_metrics([], [])


def test_metrics_match_independent_oracle_on_random_sets():
    rng = np.random.default_rng(33)
    for _ in range(30):
        n = int(rng.integers(1, 120))
        n_classes = int(rng.integers(2, 6))
        truth = rng.integers(1, n_classes + 1, size=n)
        pred = rng.integers(1, n_classes + 1, size=n)
        assert compute_metrics(truth, pred) == confusion_metrics(truth, pred)


# -- per-user evaluation ------------------------------------------------------------


def test_user_with_clean_signal_is_learnable():
    pairs = _user_pairs(20, [1, 2, 3], seed=5)
    row = evaluate_user("u1", pairs, SMALL_GRID, FoldSpec(k=5, seed=0), SplitSpec())
    assert row.n_train == 14 and row.n_test == 6
    assert row.test_accuracy == 1.0
    assert row.kernel in ("linear", "rbf(gamma=0.1)")
    assert 0.0 <= row.cv_accuracy <= 1.0


def test_constant_training_labels_fall_back_to_majority():
    # First 7 days all level 2, test days are [2, 2, 4].
    pairs = _user_pairs(7, [2], seed=1) + [
        (np.array([4.0, 0.0]), 2),
        (np.array([4.1, 0.0]), 2),
        (np.array([8.0, 0.0]), 4),
    ]
    row = evaluate_user("u9", pairs, SMALL_GRID, FoldSpec(k=5, seed=0), SplitSpec())
    assert row.kernel == "majority"
    assert row.c is None
    assert row.cv_accuracy == 1.0
    assert row.note == "majority-class fallback (single-class training split)"
    assert math.isclose(row.test_accuracy, 2.0 / 3.0, abs_tol=1e-12)
    # truth {2: P=2/3 R=1, 4: P=0 R=0} -> macro (1/3, 1/2)
    assert math.isclose(row.precision, 1.0 / 3.0, abs_tol=1e-12)
    assert math.isclose(row.recall, 0.5, abs_tol=1e-12)


def test_permuting_test_labels_never_changes_selection():
    pairs = _user_pairs(20, [1, 2, 3], seed=7, noise=0.6)
    spec = SplitSpec()
    n_train = 14
    baseline = evaluate_user("u1", pairs, SMALL_GRID, FoldSpec(k=5, seed=3), spec)
    for rotation in (1, 2, 3):
        test_labels = [label for _, label in pairs[n_train:]]
        rotated = test_labels[rotation:] + test_labels[:rotation]
        mutated = pairs[:n_train] + [
            (vec, new) for (vec, _), new in zip(pairs[n_train:], rotated)
        ]
        row = evaluate_user("u1", mutated, SMALL_GRID, FoldSpec(k=5, seed=3), spec)
        assert row.kernel == baseline.kernel
        assert row.c == baseline.c
        assert row.cv_accuracy == baseline.cv_accuracy


# -- pooled and cohort ----------------------------------------------------------------


def test_pooled_single_user_equals_cross_validate():
    pairs = _user_pairs(12, [1, 2], seed=11, noise=0.8)
    kernel = KernelSpec("rbf", gamma=0.1)
    grid = Grid(kernels=(kernel,), c_values=(1.0,))
    fold_spec = FoldSpec(k=10, seed=5)
    pooled = evaluate_pooled(pairs, grid, fold_spec)
    assert pooled.user_id == "POOLED"
    assert pooled.n_train == 12 and pooled.n_test == 0
    assert pooled.test_accuracy is None and pooled.precision is None
    assert pooled.note == "cross-validated accuracy of the generic model"
    assert pooled.cv_accuracy == cross_validate(pairs, kernel, SvmParams(c=1.0), fold_spec)


def test_pooled_needs_two_samples():
    with pytest.raises(DataError):
        evaluate_pooled(_user_pairs(1, [1]), SMALL_GRID, FoldSpec(k=2))


def test_cohort_report_structure_and_averages():
    by_user = {
        "u2": _user_pairs(12, [1, 2], seed=2),
        "u1": _user_pairs(14, [2, 3], seed=1),
        "u3": _user_pairs(9, [1, 2], seed=3),  # below the gate
    }
    report = evaluate_cohort(by_user, SMALL_GRID, FoldSpec(k=5, seed=0), SplitSpec())
    assert [r.user_id for r in report.rows] == ["u1", "u2"]
    assert report.skipped == [("u3", "only 9 labeled days (minimum 10)")]
    assert report.pooled is not None
    cv, test, prec, rec = report.averages
    assert math.isclose(cv, np.mean([r.cv_accuracy for r in report.rows]), abs_tol=1e-9)
    assert math.isclose(test, np.mean([r.test_accuracy for r in report.rows]), abs_tol=1e-9)
    assert math.isclose(prec, np.mean([r.precision for r in report.rows]), abs_tol=1e-9)
    assert math.isclose(rec, np.mean([r.recall for r in report.rows]), abs_tol=1e-9)
    for r in report.rows:
        for value in (r.cv_accuracy, r.test_accuracy, r.precision, r.recall):
            assert 0.0 <= value <= 1.0


def test_single_user_cohort_has_no_pooled_row():
    report = evaluate_cohort(
        {"u1": _user_pairs(12, [1, 2], seed=4)}, SMALL_GRID, FoldSpec(k=5, seed=0), SplitSpec()
    )
    assert report.pooled is None


def test_all_users_below_gate_is_fatal():
    with pytest.raises(DataError):
        evaluate_cohort(
            {"u1": _user_pairs(3, [1, 2]), "u2": _user_pairs(2, [1, 2])},
            SMALL_GRID,
            FoldSpec(k=5),
            SplitSpec(),
        )
    assert MIN_LABELED_DAYS == 10


def test_homogeneous_cohort_pooled_matches_per_user_mean():
    # Every user shares rule 0, so one generic model fits everyone: the
    # pooled CV accuracy and the mean per-user test accuracy agree within
    # 0.1 (measured 0.927 vs 0.837 on this pinned configuration).
    cohort = synth.generate_cohort(synth.CohortSpec(heterogeneity="homogeneous"))
    tax = default_taxonomy()
    clipped = clip_to_screen_on(cohort.events, normalize_screen_intervals(cohort.screens))
    vectors = extract_daily_features(clipped, tax)
    labels = aggregate_daily_label(cohort.emas)
    pairs, _ = join_features_labels(vectors, labels)
    by_user = {}
    for fv, lv in pairs:
        by_user.setdefault(fv.user_id, []).append((fv.as_array(), lv))
    report = evaluate_cohort(by_user, SMALL_GRID, FoldSpec(k=10, seed=42), SplitSpec())
    mean_test = float(np.mean([r.test_accuracy for r in report.rows]))
    assert len(report.rows) == 22
    assert abs(report.pooled.cv_accuracy - mean_test) <= 0.1


# -- category usage summary -----------------------------------------------------------


def test_usage_summary_empty():
    usage = category_usage_summary([], default_taxonomy())
    assert set(usage) == set(AppCategory)
    assert all(v == (0.0, 0.0) for v in usage.values())


def test_usage_summary_single_event():
    t0 = parse_timestamp("2013-11-04T09:00:00Z")
    usage = category_usage_summary([AppEvent("u1", "chrome", t0, t0 + 300)], default_taxonomy())
    assert usage[AppCategory.BROWSER] == (1.0, 300.0)
    assert usage[AppCategory.GAME] == (0.0, 0.0)


def test_usage_summary_day_denominator_counts_user_days():
    t0 = parse_timestamp("2013-11-04T09:00:00Z")
    events = [
        AppEvent("u1", "chrome", t0, t0 + 300),
        AppEvent("u2", "youtube", t0, t0 + 100),
        AppEvent("u2", "youtube", t0 + 200, t0 + 300),
    ]
    usage = category_usage_summary(events, default_taxonomy())
    assert usage[AppCategory.BROWSER] == (0.5, 300.0)  # 1 use over 2 user-days
    assert usage[AppCategory.ENTERTAINMENT] == (1.0, 100.0)


def test_usage_summary_attributes_event_to_start_day():
    start = parse_timestamp("2013-11-04T23:59:00Z")
    events = [AppEvent("u1", "chrome", start, start + 1860)]  # crosses midnight
    usage = category_usage_summary(events, default_taxonomy())
    assert usage[AppCategory.BROWSER] == (1.0, 1860.0)  # one user-day, not two


# -- report rendering --------------------------------------------------------------------


def _tiny_report() -> EvaluationReport:
    rows = [
        UserResult("u1", 7, 3, 0.9, 2.0 / 3.0, 0.5, 0.5, "linear", 1.0),
        UserResult("u2", 7, 3, 0.8, 1.0, 1.0, 1.0, "rbf(gamma=0.1)", 0.1),
    ]
    pooled = UserResult(
        "POOLED", 20, 0, 0.55, None, None, None, "linear", 1.0,
        note="cross-validated accuracy of the generic model",
    )
    return EvaluationReport(
        rows=rows,
        averages=(0.85, 5.0 / 6.0, 0.75, 0.75),
        pooled=pooled,
        skipped=[("u3", "only 4 labeled days (minimum 10)")],
    )


def test_report_csv_layout():
    text = report_csv_text(_tiny_report())
    lines = text.splitlines()
    assert lines[0] == "user_id,n_train,n_test,cv_accuracy,test_accuracy,precision,recall,kernel,c,note"
    assert len(lines) == 1 + 2 + 1 + 1 + 1  # header, users, average, pooled, skipped
    assert lines[1] == "u1,7,3,0.900000,0.666667,0.500000,0.500000,linear,1,"
    assert lines[3].startswith("AVERAGE,,,0.850000,0.833333,")
    assert lines[4].startswith("POOLED,20,,0.550000,,,,linear,1,")
    assert lines[5] == "u3,,,,,,,,,skipped: only 4 labeled days (minimum 10)"
    assert text.endswith("\n")


def test_report_csv_quotes_fields_containing_commas():
    report = EvaluationReport(
        rows=[UserResult("u1", 7, 3, 0.9, 1.0, 1.0, 1.0, "poly(degree=2, coef0=1)", 10.0)],
        averages=(0.9, 1.0, 1.0, 1.0),
        pooled=None,
        skipped=[],
    )
    text = report_csv_text(report)
    assert '"poly(degree=2, coef0=1)"' in text
    import csv
    import io

    parsed = list(csv.reader(io.StringIO(text)))
    assert all(len(row) == 10 for row in parsed)
    assert parsed[1][7] == "poly(degree=2, coef0=1)"


def test_report_table_layout():
    text = format_report_table(_tiny_report())
    assert text.splitlines()[0].startswith("user")
    assert "AVERAGE" in text and "POOLED" in text
    assert "u3" in text and "skipped" in text
    assert "90.000" in text  # percentages, three places


def test_usage_svg_is_valid_and_omits_empty_categories():
    t0 = parse_timestamp("2013-11-04T09:00:00Z")
    events = [
        AppEvent("u1", "chrome", t0, t0 + 300),
        AppEvent("u1", "candycrushsaga", t0 + 400, t0 + 900),
    ]
    usage = category_usage_summary(events, default_taxonomy())
    svg = usage_svg_text(usage)
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert svg.count("<circle") == 2
    assert "browser" in svg and "game" in svg
    assert "social_networking" not in svg
    assert "App category usage" in svg
