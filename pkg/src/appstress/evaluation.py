"""Per-user and pooled evaluation with tabular and SVG reporting.

Each user's labeled days are split train/test (chronological by default,
so no temporal leakage), the kernel/parameter grid is searched with
cross-validation on the training split only, and the selected model is
retrained on the full training split and scored on the held-out days.
The pooled path trains one generic model over everyone's days and
reports its cross-validated accuracy for contrast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, PipelineError
from .features import _local_date, _zone
from .ingest import AppEvent
from .model_selection import FoldSpec, Grid, grid_search, majority_label
from .svm import KernelSpec, SvmParams, predict_multiclass_batch, train_multiclass
from .taxonomy import AppCategory, Taxonomy, categorize_app

SPLIT_MODES = ("chronological", "random_stratified")

# Users with fewer labeled days than this are skipped and listed in the
# report rather than evaluated on meaninglessly small splits.
MIN_LABELED_DAYS = 10


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    mode: str = "chronological"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("evaluation", "train_fraction must be strictly between 0 and 1")
        if self.mode not in SPLIT_MODES:
            raise ConfigError("evaluation", f"split mode must be one of {SPLIT_MODES}, got {self.mode!r}")
        if self.seed < 0:
            raise ConfigError("evaluation", "seed must be non-negative")


@dataclass
class UserResult:
    user_id: str
    n_train: int
    n_test: int
    cv_accuracy: float
    test_accuracy: float | None
    precision: float | None
    recall: float | None
    kernel: str
    c: float | None
    note: str = ""


@dataclass
class EvaluationReport:
    rows: list[UserResult]
    averages: tuple[float, float, float, float]  # cv, test, precision, recall
    pooled: UserResult | None = None
    category_usage: dict[AppCategory, tuple[float, float]] = field(default_factory=dict)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def split_train_test(pairs, spec: SplitSpec):
    """Partition date-ordered (vector, label) pairs into train and test.

    Chronological mode keeps the first ceil(fraction * n) days for
    training; random_stratified samples that fraction per class with the
    spec's seed. Both clamp so the test side is never empty.
    """
    n = len(pairs)
    if n < 2:
        raise DataError("evaluation", f"need at least 2 labeled days to split, got {n}")
    n_train = min(math.ceil(spec.train_fraction * n), n - 1)
    n_train = max(n_train, 1)
    if spec.mode == "chronological":
        return list(pairs[:n_train]), list(pairs[n_train:])
    rng = np.random.default_rng(spec.seed)
    labels = [int(label) for _, label in pairs]
    by_class: dict[int, list[int]] = {}
    for idx, label in enumerate(labels):
        by_class.setdefault(label, []).append(idx)
    train_idx: set[int] = set()
    for label in sorted(by_class):
        members = by_class[label]
        take = math.ceil(spec.train_fraction * len(members))
        order = rng.permutation(len(members))
        train_idx.update(members[int(i)] for i in order[:take])
    if len(train_idx) == n:
        # Per-class ceilings can swallow everything; release the last day.
        train_idx.discard(n - 1)
    train = [pairs[i] for i in range(n) if i in train_idx]
    test = [pairs[i] for i in range(n) if i not in train_idx]
    return train, test


def compute_metrics(truth, pred) -> tuple[float, float, float]:
    """Accuracy plus macro precision/recall over classes present in truth.

    A class that is never predicted contributes precision 0, so a model
    cannot gain by refusing to predict rare classes.
    """
    truth = [int(v) for v in truth]
    pred = [int(v) for v in pred]
    if len(truth) != len(pred):
        raise PipelineError("evaluation", f"length mismatch: {len(truth)} truth vs {len(pred)} pred")
    if not truth:
        raise PipelineError("evaluation", "cannot compute metrics on empty label lists")
    accuracy = sum(t == p for t, p in zip(truth, pred)) / len(truth)
    classes = sorted(set(truth))
    precisions = []
    recalls = []
    for cls in classes:
        tp = sum(1 for t, p in zip(truth, pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(truth, pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(truth, pred) if t == cls and p != cls)
        precisions.append(tp / (tp + fp) if tp + fp > 0 else 0.0)
        recalls.append(tp / (tp + fn))
    return float(accuracy), float(np.mean(precisions)), float(np.mean(recalls))


def evaluate_user(
    user_id: str, pairs, grid: Grid, fold_spec: FoldSpec, split_spec: SplitSpec
) -> UserResult:
    """Grid-search on the training split only, then score the test split."""
    train, test = split_train_test(pairs, split_spec)
    train_labels = [int(label) for _, label in train]
    test_x = np.asarray([np.asarray(v, dtype=float).ravel() for v, _ in test], dtype=float)
    test_labels = [int(label) for _, label in test]
    if len(set(train_labels)) < 2:
        constant = majority_label(train_labels)
        pred = [constant] * len(test)
        accuracy, precision, recall = compute_metrics(test_labels, pred)
        return UserResult(
            user_id=user_id,
            n_train=len(train),
            n_test=len(test),
            cv_accuracy=1.0,
            test_accuracy=accuracy,
            precision=precision,
            recall=recall,
            kernel="majority",
            c=None,
            note="majority-class fallback (single-class training split)",
        )
    selection = grid_search(train, grid, fold_spec)
    kernel, params = selection.best
    model = train_multiclass(train, kernel, params)
    pred = predict_multiclass_batch(model, test_x)
    accuracy, precision, recall = compute_metrics(test_labels, list(pred))
    note = ""
    if any(not m.converged for m in model.pairwise.values()):
        note = "final model had non-converged pairwise solves"
    return UserResult(
        user_id=user_id,
        n_train=len(train),
        n_test=len(test),
        cv_accuracy=selection.cv_accuracy,
        test_accuracy=accuracy,
        precision=precision,
        recall=recall,
        kernel=kernel.describe(),
        c=params.c,
        note=note,
    )


def evaluate_pooled(all_pairs, grid: Grid, fold_spec: FoldSpec) -> UserResult:
    """Cross-validated accuracy of one generic model over everyone's days."""
    if len(all_pairs) < 2:
        raise DataError("evaluation", "pooled evaluation needs at least 2 samples")
    selection = grid_search(all_pairs, grid, fold_spec)
    kernel, params = selection.best
    return UserResult(
        user_id="POOLED",
        n_train=len(all_pairs),
        n_test=0,
        cv_accuracy=selection.cv_accuracy,
        test_accuracy=None,
        precision=None,
        recall=None,
        kernel=kernel.describe(),
        c=params.c,
        note="cross-validated accuracy of the generic model",
    )


def evaluate_cohort(
    pairs_by_user: dict[str, list],
    grid: Grid,
    fold_spec: FoldSpec,
    split_spec: SplitSpec,
    min_days: int = MIN_LABELED_DAYS,
) -> EvaluationReport:
    """Evaluate every user with enough labeled days, then the pooled model."""
    rows: list[UserResult] = []
    skipped: list[tuple[str, str]] = []
    included_pairs = []
    for user_id in sorted(pairs_by_user):
        pairs = pairs_by_user[user_id]
        if len(pairs) < min_days:
            skipped.append((user_id, f"only {len(pairs)} labeled days (minimum {min_days})"))
            continue
        rows.append(evaluate_user(user_id, pairs, grid, fold_spec, split_spec))
        included_pairs.extend(pairs)
    if not rows:
        raise DataError("evaluation", f"no user has {min_days}+ labeled days")
    averages = (
        float(np.mean([r.cv_accuracy for r in rows])),
        float(np.mean([r.test_accuracy for r in rows])),
        float(np.mean([r.precision for r in rows])),
        float(np.mean([r.recall for r in rows])),
    )
    pooled = evaluate_pooled(included_pairs, grid, fold_spec) if len(rows) >= 2 else None
    return EvaluationReport(rows=rows, averages=averages, pooled=pooled, skipped=skipped)


def category_usage_summary(
    events: list[AppEvent], taxonomy: Taxonomy, timezone: str = "UTC"
) -> dict[AppCategory, tuple[float, float]]:
    """Per category: (mean uses per active user-day, mean seconds per use).

    An event counts toward the local day it starts on; the day denominator
    is the number of distinct (user, day) pairs with any usage at all.
    """
    zone = _zone(timezone)
    day_pairs: set[tuple[str, object]] = set()
    counts: dict[AppCategory, int] = {cat: 0 for cat in AppCategory}
    seconds: dict[AppCategory, int] = {cat: 0 for cat in AppCategory}
    for ev in events:
        day_pairs.add((ev.user_id, _local_date(ev.start, zone)))
        cat = categorize_app(taxonomy, ev.app_id)
        counts[cat] += 1
        seconds[cat] += ev.end - ev.start
    n_days = len(day_pairs)
    out: dict[AppCategory, tuple[float, float]] = {}
    for cat in AppCategory:
        uses_per_day = counts[cat] / n_days if n_days else 0.0
        sec_per_use = seconds[cat] / counts[cat] if counts[cat] else 0.0
        out[cat] = (float(uses_per_day), float(sec_per_use))
    return out


# -- report rendering ---------------------------------------------------------


def _fmt(value: float | None, places: int = 6) -> str:
    return "" if value is None else f"{value:.{places}f}"


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def report_csv_text(report: EvaluationReport) -> str:
    lines = ["user_id,n_train,n_test,cv_accuracy,test_accuracy,precision,recall,kernel,c,note"]
    for r in report.rows:
        c_text = "" if r.c is None else f"{r.c:g}"
        lines.append(
            f"{r.user_id},{r.n_train},{r.n_test},{_fmt(r.cv_accuracy)},{_fmt(r.test_accuracy)},"
            f"{_fmt(r.precision)},{_fmt(r.recall)},{_csv_field(r.kernel)},{c_text},{_csv_field(r.note)}"
        )
    cv, test, prec, rec = report.averages
    lines.append(f"AVERAGE,,,{_fmt(cv)},{_fmt(test)},{_fmt(prec)},{_fmt(rec)},,,mean over user rows")
    if report.pooled is not None:
        p = report.pooled
        c_text = "" if p.c is None else f"{p.c:g}"
        lines.append(
            f"{p.user_id},{p.n_train},,{_fmt(p.cv_accuracy)},,,,{_csv_field(p.kernel)},{c_text},"
            f"{_csv_field(p.note)}"
        )
    for user_id, reason in report.skipped:
        lines.append(f"{user_id},,,,,,,,,{_csv_field('skipped: ' + reason)}")
    return "\n".join(lines) + "\n"


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.3f}"


def format_report_table(report: EvaluationReport) -> str:
    header = f"{'user':<10}{'cv acc %':>12}{'test acc %':>12}{'precision %':>13}{'recall %':>12}  {'model':<22}"
    rule = "-" * len(header)
    lines = [header, rule]
    for r in report.rows:
        model = r.kernel if r.c is None else f"{r.kernel} c={r.c:g}"
        lines.append(
            f"{r.user_id:<10}{_pct(r.cv_accuracy):>12}{_pct(r.test_accuracy):>12}"
            f"{_pct(r.precision):>13}{_pct(r.recall):>12}  {model:<22}"
        )
    lines.append(rule)
    cv, test, prec, rec = report.averages
    lines.append(f"{'AVERAGE':<10}{_pct(cv):>12}{_pct(test):>12}{_pct(prec):>13}{_pct(rec):>12}")
    if report.pooled is not None:
        p = report.pooled
        model = p.kernel if p.c is None else f"{p.kernel} c={p.c:g}"
        lines.append(f"{'POOLED':<10}{_pct(p.cv_accuracy):>12}{'-':>12}{'-':>13}{'-':>12}  {model:<22}")
    for user_id, reason in report.skipped:
        lines.append(f"{user_id:<10}skipped: {reason}")
    return "\n".join(lines) + "\n"


def usage_svg_text(usage: dict[AppCategory, tuple[float, float]]) -> str:
    """Scatter of uses/day vs seconds/use, one labeled point per category."""
    points = [
        (cat.value, freq, dur)
        for cat, (freq, dur) in sorted(usage.items(), key=lambda kv: kv[0].value)
        if freq > 0
    ]
    width, height, margin = 640, 480, 70
    max_x = max((p[1] for p in points), default=1.0) * 1.15 or 1.0
    max_y = max((p[2] for p in points), default=1.0) * 1.15 or 1.0

    def sx(v: float) -> float:
        return margin + (width - 2 * margin) * v / max_x

    def sy(v: float) -> float:
        return height - margin - (height - 2 * margin) * v / max_y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" '
        'stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 20}" text-anchor="middle" font-size="14">'
        "mean uses per day</text>",
        f'<text x="20" y="{height / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {height / 2:.1f})">mean seconds per use</text>',
        f'<text x="{width / 2:.1f}" y="30" text-anchor="middle" font-size="16">'
        "App category usage</text>",
        f'<text x="{margin}" y="{height - margin + 18}" text-anchor="middle" font-size="11">0</text>',
        f'<text x="{width - margin}" y="{height - margin + 18}" text-anchor="middle" font-size="11">'
        f"{max_x:.1f}</text>",
        f'<text x="{margin - 8}" y="{height - margin}" text-anchor="end" font-size="11">0</text>',
        f'<text x="{margin - 8}" y="{margin + 4}" text-anchor="end" font-size="11">{max_y:.0f}</text>',
    ]
    for name, freq, dur in points:
        x, y = sx(freq), sy(dur)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="steelblue"/>')
        parts.append(f'<text x="{x + 8:.2f}" y="{y - 8:.2f}" font-size="12">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
