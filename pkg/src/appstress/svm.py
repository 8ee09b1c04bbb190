"""Soft-margin SVM trained by sequential minimal optimization.

The dual solver is written from scratch: pairwise coordinate ascent with
Platt-style full-sweep / non-bound-sweep alternation and a deterministic
second-index heuristic, so identical inputs always yield identical models.
The hot loop is plain scalar code; numba compiles it when available and
the same code runs uncompiled otherwise.

Feature standardization (z-score, population sd floored at 1e-12) happens
inside training and the fitted scaler is stored in the model, so a model
is self-contained at prediction time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, PipelineError

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


KERNEL_KINDS = ("linear", "poly", "rbf")

# Tie-break order for model selection: prefer simpler kernels.
KERNEL_SIMPLICITY = {"linear": 0, "poly": 1, "rbf": 2}

_SD_FLOOR = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: float | None = None
    degree: int | None = None
    coef0: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise PipelineError("svm", f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and (self.gamma is None or self.gamma <= 0):
            raise PipelineError("svm", "rbf kernel requires gamma > 0")
        if self.kind == "poly" and (self.degree is None or self.degree < 1):
            raise PipelineError("svm", "poly kernel requires degree >= 1")

    def describe(self) -> str:
        if self.kind == "rbf":
            return f"rbf(gamma={self.gamma:g})"
        if self.kind == "poly":
            return f"poly(degree={self.degree}, coef0={self.coef0:g})"
        return "linear"


@dataclass(frozen=True)
class SvmParams:
    c: float
    kkt_tol: float = 1e-3
    max_passes: int = 100
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise PipelineError("svm", "soft-margin constant c must be positive")
        if self.kkt_tol <= 0 or self.eps <= 0:
            raise PipelineError("svm", "tolerances must be positive")


@dataclass
class BinarySvmModel:
    kernel: KernelSpec
    params: SvmParams
    support_points: np.ndarray  # already standardized
    support_alphas: np.ndarray
    support_labels: np.ndarray
    support_indices: np.ndarray  # positions in the training set
    bias: float
    scaler_mean: np.ndarray
    scaler_scale: np.ndarray
    converged: bool = True
    dual_objective: float = 0.0
    n_sweeps: int = 0


@dataclass
class MulticlassModel:
    """One-vs-one reduction: one binary model per unordered class pair.

    Within a pair (a, b) with a < b, class a plays the -1 role and class b
    the +1 role.
    """

    classes: list[int]
    pairwise: dict[tuple[int, int], BinarySvmModel] = field(default_factory=dict)


def kernel_eval(kernel: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise PipelineError("svm", f"kernel dimension mismatch: {x.shape} vs {y.shape}")
    if kernel.kind == "linear":
        return float(x @ y)
    if kernel.kind == "poly":
        return float((x @ y + kernel.coef0) ** kernel.degree)
    d2 = float(np.sum((x - y) ** 2))
    return float(math.exp(-kernel.gamma * d2))


def kernel_cross(kernel: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kernel matrix K[i, j] = k(a_i, b_j) for row-stacked inputs."""
    if a.shape[1] != b.shape[1]:
        raise PipelineError("svm", f"kernel dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    dots = a @ b.T
    if kernel.kind == "linear":
        return dots
    if kernel.kind == "poly":
        return (dots + kernel.coef0) ** kernel.degree
    d2 = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * dots
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-kernel.gamma * d2)


def gram_matrix(kernel: KernelSpec, x: np.ndarray) -> np.ndarray:
    return kernel_cross(kernel, x, x)


@njit(cache=True)
def _take_step(i, j, K, y, alpha, E, b, c, eps):  # pragma: no cover - jitted
    if i == j:
        return False, b
    ai = alpha[i]
    aj = alpha[j]
    yi = y[i]
    yj = y[j]
    Ei = E[i]
    Ej = E[j]
    s = yi * yj
    if s > 0.0:
        L = max(0.0, ai + aj - c)
        H = min(c, ai + aj)
    else:
        L = max(0.0, aj - ai)
        H = min(c, c + aj - ai)
    if L >= H:
        return False, b
    kii = K[i, i]
    kjj = K[j, j]
    kij = K[i, j]
    eta = kii + kjj - 2.0 * kij
    if eta > 0.0:
        aj_new = aj + yj * (Ei - Ej) / eta
        if aj_new < L:
            aj_new = L
        elif aj_new > H:
            aj_new = H
    else:
        # Degenerate curvature: compare the dual objective at both ends.
        gi = Ei + yi - b
        gj = Ej + yj - b
        v1 = gi - ai * yi * kii - aj * yj * kij
        v2 = gj - ai * yi * kij - aj * yj * kjj
        a1L = ai + s * (aj - L)
        a1H = ai + s * (aj - H)
        objL = (
            a1L + L
            - 0.5 * kii * a1L * a1L
            - 0.5 * kjj * L * L
            - s * kij * a1L * L
            - yi * a1L * v1
            - yj * L * v2
        )
        objH = (
            a1H + H
            - 0.5 * kii * a1H * a1H
            - 0.5 * kjj * H * H
            - s * kij * a1H * H
            - yi * a1H * v1
            - yj * H * v2
        )
        if objL > objH + eps:
            aj_new = L
        elif objL < objH - eps:
            aj_new = H
        else:
            return False, b
    # Snap to exact bounds only when the bound is inside [L, H], so the
    # equality constraint is preserved exactly.
    if aj_new < eps and L <= 0.0:
        aj_new = 0.0
    elif aj_new > c - eps and H >= c:
        aj_new = c
    if abs(aj_new - aj) < eps * (aj_new + aj + eps):
        return False, b
    ai_new = ai + s * (aj - aj_new)
    if ai_new < 0.0:
        ai_new = 0.0
    elif ai_new > c:
        ai_new = c
    dai = ai_new - ai
    daj = aj_new - aj
    b1 = b - Ei - yi * dai * kii - yj * daj * kij
    b2 = b - Ej - yi * dai * kij - yj * daj * kjj
    if 0.0 < ai_new < c:
        b_new = b1
    elif 0.0 < aj_new < c:
        b_new = b2
    else:
        b_new = 0.5 * (b1 + b2)
    db = b_new - b
    for k in range(K.shape[0]):
        E[k] += yi * dai * K[i, k] + yj * daj * K[j, k] + db
    alpha[i] = ai_new
    alpha[j] = aj_new
    return True, b_new


@njit(cache=True)
def _smo_loop(K, y, c, tol, eps, max_passes):  # pragma: no cover - jitted
    n = y.shape[0]
    alpha = np.zeros(n)
    E = np.empty(n)
    for k in range(n):
        E[k] = -y[k]
    b = 0.0
    examine_all = True
    full_sweeps = 0
    total_sweeps = 0
    sweep_cap = max_passes * 50
    converged = False
    while True:
        num_changed = 0
        for i in range(n):
            if not examine_all and (alpha[i] <= 0.0 or alpha[i] >= c):
                continue
            r = E[i] * y[i]
            if not ((r < -tol and alpha[i] < c) or (r > tol and alpha[i] > 0.0)):
                continue
            changed = False
            best_j = -1
            best_gap = -1.0
            for k in range(n):
                if k == i or alpha[k] <= 0.0 or alpha[k] >= c:
                    continue
                gap = abs(E[i] - E[k])
                if gap > best_gap:
                    best_gap = gap
                    best_j = k
            if best_j >= 0:
                changed, b = _take_step(i, best_j, K, y, alpha, E, b, c, eps)
            if not changed:
                for j in range(n):
                    if j == i or j == best_j or alpha[j] <= 0.0 or alpha[j] >= c:
                        continue
                    changed, b = _take_step(i, j, K, y, alpha, E, b, c, eps)
                    if changed:
                        break
            if not changed:
                for j in range(n):
                    if j == i or (0.0 < alpha[j] < c):
                        continue
                    changed, b = _take_step(i, j, K, y, alpha, E, b, c, eps)
                    if changed:
                        break
            if changed:
                num_changed += 1
        total_sweeps += 1
        if examine_all:
            full_sweeps += 1
            if num_changed == 0:
                converged = True
                break
            examine_all = False
        elif num_changed == 0:
            examine_all = True
        if full_sweeps >= max_passes or total_sweeps >= sweep_cap:
            break
    return alpha, b, converged, full_sweeps


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray([np.asarray(x, dtype=float).ravel() for x, _ in data], dtype=float)
    ys = np.asarray([float(label) for _, label in data], dtype=float)
    return xs, ys


def fit_scaler(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    return mean, np.maximum(sd, _SD_FLOOR)


def dual_objective_value(alphas: np.ndarray, y: np.ndarray, gram: np.ndarray) -> float:
    ay = alphas * y
    return float(alphas.sum() - 0.5 * ay @ gram @ ay)


def _final_bias(alphas: np.ndarray, y: np.ndarray, g: np.ndarray, c: float, eps: float) -> float:
    """Bias for a solved dual, given g = gram @ (alphas * y).

    With free support vectors, each implies a bias y_i - g_i; their Chebyshev
    center (midpoint of min and max) minimizes the worst margin violation,
    keeping cleanly-converged models within kkt_tol. The conventional mean can
    drift a free vector up to twice as far from its margin.
    """
    v = y - g
    unbounded = (alphas > eps) & (alphas < c - eps)
    if unbounded.any():
        vu = v[unbounded]
        return float(0.5 * (vu.min() + vu.max()))
    # No free support vector: take the midpoint of the feasible bias range.
    lower = ((alphas <= eps) & (y > 0)) | ((alphas >= c - eps) & (y < 0))
    upper = ((alphas <= eps) & (y < 0)) | ((alphas >= c - eps) & (y > 0))
    lo = v[lower].max() if lower.any() else -math.inf
    hi = v[upper].min() if upper.any() else math.inf
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return float(hi)
    if math.isinf(hi):
        return float(lo)
    return float(0.5 * (lo + hi))


def _kkt_violation(
    alphas: np.ndarray, y: np.ndarray, g: np.ndarray, bias: float, c: float, eps: float
) -> float:
    """Worst violation of the box-respecting margin conditions.

    alpha = 0 wants y*f >= 1, alpha = C wants y*f <= 1, free alphas want
    y*f = 1; the return value is how far the worst point strays.
    """
    yf = y * (g + bias)
    lower = alphas <= eps
    upper = alphas >= c - eps
    mid = ~lower & ~upper
    violation = 0.0
    if lower.any():
        violation = max(violation, float((1.0 - yf[lower]).max()))
    if upper.any():
        violation = max(violation, float((yf[upper] - 1.0).max()))
    if mid.any():
        violation = max(violation, float(np.abs(yf[mid] - 1.0).max()))
    return violation


def solve_smo(
    data,
    kernel: KernelSpec,
    params: SvmParams,
    standardize: bool = True,
) -> BinarySvmModel:
    """Train a binary soft-margin SVM on (vector, ±1 label) pairs.

    Raises on single-class input. ``converged=True`` certifies that the
    returned model satisfies the KKT conditions at ``params.kkt_tol``;
    exhausting the sweep budget (or a rare stalled sweep) returns the
    current model flagged ``converged=False`` so callers like grid search
    survive bad parameter points.
    """
    x, y = _as_xy(data)
    if x.ndim != 2 or len(x) == 0:
        raise DataError("svm", "empty training set")
    if not np.isfinite(x).all():
        raise DataError("svm", "non-finite feature values")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("svm", "binary labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise DataError("svm", "single-class training set")

    if standardize:
        mean, scale = fit_scaler(x)
    else:
        mean = np.zeros(x.shape[1])
        scale = np.ones(x.shape[1])
    xs = (x - mean) / scale

    gram = gram_matrix(kernel, xs)
    alphas, _, converged, sweeps = _smo_loop(
        gram, y, float(params.c), float(params.kkt_tol), float(params.eps), int(params.max_passes)
    )
    g = gram @ (alphas * y)
    bias = _final_bias(alphas, y, g, params.c, params.eps)
    if converged:
        converged = (
            _kkt_violation(alphas, y, g, bias, params.c, params.eps) <= params.kkt_tol
        )
    support = alphas > params.eps
    return BinarySvmModel(
        kernel=kernel,
        params=params,
        support_points=xs[support].copy(),
        support_alphas=alphas[support].copy(),
        support_labels=y[support].astype(int),
        support_indices=np.flatnonzero(support),
        bias=bias,
        scaler_mean=mean,
        scaler_scale=scale,
        converged=bool(converged),
        dual_objective=dual_objective_value(alphas, y, gram),
        n_sweeps=int(sweeps),
    )


def decision_values(model: BinarySvmModel, x: np.ndarray) -> np.ndarray:
    """Decision function for row-stacked inputs (scaling applied here)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.scaler_mean.shape[0]:
        raise PipelineError(
            "svm", f"dimension mismatch: model expects {model.scaler_mean.shape[0]}, got {x.shape[1]}"
        )
    xs = (x - model.scaler_mean) / model.scaler_scale
    if len(model.support_alphas) == 0:
        return np.full(len(xs), model.bias)
    k = kernel_cross(model.kernel, model.support_points, xs)
    return (model.support_alphas * model.support_labels) @ k + model.bias


def decision_value(model: BinarySvmModel, x) -> float:
    return float(decision_values(model, np.asarray(x, dtype=float))[0])


def train_multiclass(
    data, kernel: KernelSpec, params: SvmParams, standardize: bool = True
) -> MulticlassModel:
    """One-vs-one training over integer labels; each pair refits its scaler."""
    labels = sorted({int(label) for _, label in data})
    if len(labels) < 2:
        raise DataError("svm", "degenerate label set: need at least 2 distinct classes")
    model = MulticlassModel(classes=labels)
    for ai, a in enumerate(labels):
        for b in labels[ai + 1 :]:
            subset = [
                (x, -1 if int(label) == a else 1)
                for x, label in data
                if int(label) in (a, b)
            ]
            model.pairwise[(a, b)] = solve_smo(subset, kernel, params, standardize=standardize)
    return model


def multiclass_decision_matrix(model: MulticlassModel, x: np.ndarray) -> dict[tuple[int, int], np.ndarray]:
    return {pair: decision_values(m, x) for pair, m in model.pairwise.items()}


def predict_multiclass_batch(model: MulticlassModel, x: np.ndarray) -> np.ndarray:
    """Vote over all pairwise models; ties fall to larger summed |decision|
    across the class's models, then to the smaller label."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    n = len(x)
    votes = {c: np.zeros(n, dtype=int) for c in model.classes}
    margin = {c: np.zeros(n) for c in model.classes}
    for (a, b), m in model.pairwise.items():
        d = decision_values(m, x)
        wins_b = d > 0
        votes[b][wins_b] += 1
        votes[a][~wins_b] += 1
        margin[a] += np.abs(d)
        margin[b] += np.abs(d)
    out = np.empty(n, dtype=int)
    for i in range(n):
        out[i] = min(
            model.classes, key=lambda c: (-votes[c][i], -margin[c][i], c)
        )
    return out


def predict_multiclass(model: MulticlassModel, x) -> int:
    return int(predict_multiclass_batch(model, np.asarray(x, dtype=float))[0])


# -- serialization ----------------------------------------------------------


def _kernel_to_dict(kernel: KernelSpec) -> dict:
    return {"kind": kernel.kind, "gamma": kernel.gamma, "degree": kernel.degree, "coef0": kernel.coef0}


def _kernel_from_dict(d: dict) -> KernelSpec:
    return KernelSpec(kind=d["kind"], gamma=d["gamma"], degree=d["degree"], coef0=d["coef0"])


def binary_model_to_dict(model: BinarySvmModel) -> dict:
    return {
        "type": "binary",
        "kernel": _kernel_to_dict(model.kernel),
        "params": {
            "c": model.params.c,
            "kkt_tol": model.params.kkt_tol,
            "max_passes": model.params.max_passes,
            "eps": model.params.eps,
        },
        "support_points": model.support_points.tolist(),
        "support_alphas": model.support_alphas.tolist(),
        "support_labels": model.support_labels.tolist(),
        "support_indices": model.support_indices.tolist(),
        "bias": model.bias,
        "scaler_mean": model.scaler_mean.tolist(),
        "scaler_scale": model.scaler_scale.tolist(),
        "converged": model.converged,
        "dual_objective": model.dual_objective,
        "n_sweeps": model.n_sweeps,
    }


def binary_model_from_dict(d: dict) -> BinarySvmModel:
    n_dim = len(d["scaler_mean"])
    return BinarySvmModel(
        kernel=_kernel_from_dict(d["kernel"]),
        params=SvmParams(**d["params"]),
        support_points=np.array(d["support_points"], dtype=float).reshape(-1, n_dim),
        support_alphas=np.array(d["support_alphas"], dtype=float),
        support_labels=np.array(d["support_labels"], dtype=int),
        support_indices=np.array(d["support_indices"], dtype=int),
        bias=d["bias"],
        scaler_mean=np.array(d["scaler_mean"], dtype=float),
        scaler_scale=np.array(d["scaler_scale"], dtype=float),
        converged=d["converged"],
        dual_objective=d["dual_objective"],
        n_sweeps=d["n_sweeps"],
    )


def multiclass_model_to_dict(model: MulticlassModel) -> dict:
    return {
        "type": "multiclass",
        "classes": model.classes,
        "pairwise": {
            f"{a},{b}": binary_model_to_dict(m) for (a, b), m in sorted(model.pairwise.items())
        },
    }


def multiclass_model_from_dict(d: dict) -> MulticlassModel:
    model = MulticlassModel(classes=[int(c) for c in d["classes"]])
    for key, sub in d["pairwise"].items():
        a, b = key.split(",")
        model.pairwise[(int(a), int(b))] = binary_model_from_dict(sub)
    return model


def model_to_json(model: BinarySvmModel | MulticlassModel) -> str:
    if isinstance(model, BinarySvmModel):
        doc = binary_model_to_dict(model)
    else:
        doc = multiclass_model_to_dict(model)
    return json.dumps(doc, indent=2, sort_keys=True)


def model_from_json(text: str) -> BinarySvmModel | MulticlassModel:
    doc = json.loads(text)
    if doc.get("type") == "binary":
        return binary_model_from_dict(doc)
    if doc.get("type") == "multiclass":
        return multiclass_model_from_dict(doc)
    raise PipelineError("svm", f"unknown model document type {doc.get('type')!r}")
