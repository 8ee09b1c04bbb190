"""Stratified k-fold cross-validation and kernel/parameter grid search.

Fold construction is a seeded round-robin: each class's shuffled indices
are dealt to folds at a rotating offset, so overall fold sizes differ by
at most one and so do each class's per-fold counts. Every grid point is
scored on the same folds; ties fall to the simpler kernel (linear, then
polynomial, then rbf), then smaller c, then smaller gamma/degree, which
makes the selection a total order independent of evaluation schedule.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .svm import (
    KERNEL_SIMPLICITY,
    KernelSpec,
    SvmParams,
    predict_multiclass_batch,
    train_multiclass,
)

logger = logging.getLogger(__name__)

DEFAULT_K = 10


@dataclass(frozen=True)
class FoldSpec:
    k: int = DEFAULT_K
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ConfigError("model_selection", "fold count k must be >= 2")
        if self.seed < 0:
            raise ConfigError("model_selection", "seed must be non-negative")


@dataclass(frozen=True)
class Grid:
    kernels: tuple[KernelSpec, ...]
    c_values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.kernels or not self.c_values:
            raise ConfigError("model_selection", "grid needs at least one kernel and one c value")
        if any(c <= 0 for c in self.c_values):
            raise ConfigError("model_selection", "grid c values must be positive")

    def points(self) -> list[tuple[KernelSpec, float]]:
        return [(k, c) for c in self.c_values for k in self.kernels]


@dataclass
class SelectionResult:
    best: tuple[KernelSpec, SvmParams]
    cv_accuracy: float
    table: dict[tuple[KernelSpec, float], float] = field(default_factory=dict)


def default_grid() -> Grid:
    """c over four decades; linear, rbf over four gammas, poly degrees 2-3."""
    kernels = [KernelSpec(kind="linear")]
    kernels += [KernelSpec(kind="rbf", gamma=g) for g in (0.01, 0.1, 1.0, 10.0)]
    kernels += [KernelSpec(kind="poly", degree=d, coef0=1.0) for d in (2, 3)]
    return Grid(kernels=tuple(kernels), c_values=(0.1, 1.0, 10.0, 100.0))


def load_grid(path: str) -> Grid:
    """Read a grid from JSON: {"c_values": [...], "kernels": [{"kind": ...}]}."""
    try:
        with open(path, "rb") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("model_selection", f"cannot read grid file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("model_selection", f"grid file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "kernels" not in doc or "c_values" not in doc:
        raise ConfigError("model_selection", "grid file needs 'kernels' and 'c_values' keys")
    kernels = []
    for entry in doc["kernels"]:
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ConfigError("model_selection", f"bad kernel entry in grid file: {entry!r}")
        kernels.append(
            KernelSpec(
                kind=entry["kind"],
                gamma=entry.get("gamma"),
                degree=entry.get("degree"),
                coef0=entry.get("coef0", 1.0),
            )
        )
    return Grid(kernels=tuple(kernels), c_values=tuple(float(c) for c in doc["c_values"]))


def make_folds(n: int, labels, spec: FoldSpec) -> list[np.ndarray]:
    """Partition range(n) into k index arrays (k reduced to n when n < k)."""
    if n < 2:
        raise DataError("model_selection", f"need at least 2 samples to fold, got {n}")
    labels = [int(v) for v in labels]
    if len(labels) != n:
        raise DataError("model_selection", f"got {n} samples but {len(labels)} labels")
    k = spec.k
    if n < k:
        logger.info("reducing k from %d to %d (only %d samples: leave-one-out)", k, n, n)
        k = n
    rng = np.random.default_rng(spec.seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    if spec.stratified:
        by_class: dict[int, list[int]] = {}
        for idx, label in enumerate(labels):
            by_class.setdefault(label, []).append(idx)
        groups = [np.asarray(by_class[label]) for label in sorted(by_class)]
    else:
        groups = [np.arange(n)]
    for group in groups:
        order = rng.permutation(len(group))
        for pos, g in enumerate(order):
            folds[(offset + pos) % k].append(int(group[g]))
        offset = (offset + len(group)) % k
    return [np.array(sorted(f), dtype=int) for f in folds]


def majority_label(labels) -> int:
    """Most frequent label; ties fall to the smaller label."""
    counts = Counter(int(v) for v in labels)
    top = max(counts.values())
    return min(label for label, c in counts.items() if c == top)


def cross_validate(
    data,
    kernel: KernelSpec,
    params: SvmParams,
    spec: FoldSpec,
    folds: list[np.ndarray] | None = None,
) -> float:
    """Unweighted mean held-out accuracy over the folds.

    A fold whose training complement contains a single class is scored
    with majority-class prediction instead of aborting; tiny per-user
    datasets make that reachable.
    """
    if len(data) < 2:
        raise DataError("model_selection", "cross-validation needs at least 2 samples")
    x = np.asarray([np.asarray(v, dtype=float).ravel() for v, _ in data], dtype=float)
    y = np.asarray([int(label) for _, label in data], dtype=int)
    if folds is None:
        folds = make_folds(len(data), y, spec)
    accuracies = []
    for fold in folds:
        mask = np.ones(len(data), dtype=bool)
        mask[fold] = False
        train_y = y[mask]
        if len(np.unique(train_y)) < 2:
            pred = np.full(len(fold), majority_label(train_y))
        else:
            train_pairs = list(zip(x[mask], train_y))
            model = train_multiclass(train_pairs, kernel, params)
            pred = predict_multiclass_batch(model, x[fold])
        accuracies.append(float(np.mean(pred == y[fold])))
    return float(np.mean(accuracies))


def grid_search(data, grid: Grid, spec: FoldSpec) -> SelectionResult:
    """Score every grid point on identical folds and pick the winner.

    Winner order: highest cv accuracy, then linear < poly < rbf, then
    smaller c, then smaller gamma/degree.
    """
    if len(data) < 2:
        raise DataError("model_selection", "grid search needs at least 2 samples")
    labels = [int(label) for _, label in data]
    folds = make_folds(len(data), labels, spec)
    table: dict[tuple[KernelSpec, float], float] = {}
    for kernel, c in grid.points():
        table[(kernel, c)] = cross_validate(data, kernel, SvmParams(c=c), spec, folds=folds)

    def sort_key(point: tuple[KernelSpec, float]):
        kernel, c = point
        knob = kernel.gamma if kernel.kind == "rbf" else float(kernel.degree or 0)
        return (-table[point], KERNEL_SIMPLICITY[kernel.kind], c, knob)

    best_kernel, best_c = min(table, key=sort_key)
    return SelectionResult(
        best=(best_kernel, SvmParams(c=best_c)),
        cv_accuracy=table[(best_kernel, best_c)],
        table=table,
    )
