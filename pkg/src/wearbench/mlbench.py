"""Feature-matrix assembly, leakage-safe LOOCV grid search, and metrics.

The protocol: for every hyperparameter combination, run a full
leave-one-out pass where imputation medians and z-score statistics are
refit on each fold's training rows; pick the combination with the best
pooled accuracy (first wins ties) and report its pooled confusion matrix.
Because the same LOOCV both selects and scores, reports carry an explicit
optimistic-bias flag.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .actigraphy import ACC_FEATURE_NAMES
from .eda import EDA_FEATURE_NAMES
from .errors import ClassUnderpopulated, EmptyConfusion
from .hrv import HRV_FREQ_NAMES, HRV_TIME_NAMES
from .models import ModelKind, ModelSpec, predict, train
from .session_io import Label
from .thermo import TEMP_FEATURE_NAMES

FEATURE_GROUPS: dict[str, tuple[str, ...]] = {
    "hrv_time": HRV_TIME_NAMES,
    "hrv_freq": HRV_FREQ_NAMES,
    "eda": EDA_FEATURE_NAMES,
    "acc": ACC_FEATURE_NAMES,
    "temp": TEMP_FEATURE_NAMES,
}
FEATURE_GROUPS["all"] = (HRV_TIME_NAMES + HRV_FREQ_NAMES + EDA_FEATURE_NAMES
                         + ACC_FEATURE_NAMES + TEMP_FEATURE_NAMES)

MODEL_DISPLAY_NAMES = {
    ModelKind.KNN: "kNN",
    ModelKind.DECISION_TREE: "DT",
    ModelKind.RANDOM_FOREST: "RF",
    ModelKind.GRADIENT_BOOSTING: "GB (stands in for XGB)",
    ModelKind.SVM: "SVM",
    ModelKind.MLP: "MLP",
}


@dataclass(frozen=True)
class SubjectFeatures:
    subject_id: str
    label: Label
    features: dict[str, float]


@dataclass(frozen=True)
class FeatureMatrix:
    subject_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray  # (n_subjects, n_features), NaN marks absent
    labels: np.ndarray  # (n_subjects,), 0 = unipolar, 1 = bipolar


def assemble_matrix(rows, selector: str) -> FeatureMatrix:
    """Stack per-subject feature maps into a matrix with a fixed column order.

    ``selector`` picks one of the groups in :data:`FEATURE_GROUPS`; missing
    values stay NaN here and are imputed per fold at fit time.
    """
    if selector not in FEATURE_GROUPS:
        raise KeyError(f"unknown feature selector {selector!r}; "
                       f"choose from {sorted(FEATURE_GROUPS)}")
    names = FEATURE_GROUPS[selector]
    rows = list(rows)
    labels = np.array([r.label.to_int() for r in rows], dtype=int)
    for cls in (0, 1):
        if int(np.sum(labels == cls)) < 2:
            raise ClassUnderpopulated(
                f"class {cls} has {int(np.sum(labels == cls))} subjects; "
                "need >= 2 per class")
    values = np.full((len(rows), len(names)), np.nan)
    for i, row in enumerate(rows):
        for j, name in enumerate(names):
            v = row.features.get(name)
            if v is not None:
                values[i, j] = float(v)
    return FeatureMatrix(
        subject_ids=tuple(r.subject_id for r in rows),
        feature_names=names,
        values=values,
        labels=labels,
    )


# --- leakage-safe preprocessing ------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    medians: np.ndarray
    means: np.ndarray
    stds: np.ndarray


def fit_standardizer(train_rows: np.ndarray) -> Standardizer:
    """Column medians (for imputation) and post-imputation z-score stats.

    The std floor keeps constant columns from dividing by zero; they scale
    to all-zeros instead.
    """
    x = np.asarray(train_rows, dtype=float)
    with warnings.catch_warnings():
        # an all-NaN column legitimately yields a NaN median (handled below)
        warnings.simplefilter("ignore", category=RuntimeWarning)
        medians = np.nanmedian(x, axis=0)
    medians = np.where(np.isnan(medians), 0.0, medians)
    imputed = np.where(np.isnan(x), medians[None, :], x)
    means = imputed.mean(axis=0)
    stds = np.maximum(imputed.std(axis=0), 1e-9)
    return Standardizer(medians=medians, means=means, stds=stds)


def apply_standardizer(s: Standardizer, rows: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    x = np.where(np.isnan(x), s.medians[None, :], x)
    return (x - s.means[None, :]) / s.stds[None, :]


# --- metrics -----------------------------------------------------------------------------


@dataclass(frozen=True)
class Confusion:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: tuple[str, ...] = ()


def compute_metrics(confusion: Confusion) -> Metrics:
    """Accuracy, precision, recall, F1 in percent from a pooled confusion.

    A zero denominator yields 0 for that metric, flagged in ``degenerate``.
    """
    if confusion.total < 1:
        raise EmptyConfusion("confusion matrix has no entries")
    flags = []
    accuracy = 100.0 * (confusion.tp + confusion.tn) / confusion.total
    if confusion.tp + confusion.fp > 0:
        precision = 100.0 * confusion.tp / (confusion.tp + confusion.fp)
    else:
        precision, flags = 0.0, flags + ["precision"]
    if confusion.tp + confusion.fn > 0:
        recall = 100.0 * confusion.tp / (confusion.tp + confusion.fn)
    else:
        recall, flags = 0.0, flags + ["recall"]
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1, flags = 0.0, flags + ["f1"]
    return Metrics(accuracy=accuracy, precision=precision, recall=recall,
                   f1=f1, degenerate=tuple(flags))


# --- LOOCV grid search --------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    model: ModelSpec
    confusion: Confusion
    metrics: Metrics
    per_fold: tuple[tuple[str, int, int], ...]  # (subject_id, true, predicted)
    selector: str
    positive_class: int
    seed: int
    n_grid_points: int
    optimistic_bias: bool = True  # non-nested selection, by protocol

    def to_json_dict(self) -> dict:
        return {
            "model": {
                "kind": self.model.kind.value,
                "display_name": MODEL_DISPLAY_NAMES[self.model.kind],
                "hyperparameters": self.model.hyperparameters,
            },
            "confusion": {"tp": self.confusion.tp, "tn": self.confusion.tn,
                          "fp": self.confusion.fp, "fn": self.confusion.fn},
            "metrics": {"accuracy": self.metrics.accuracy,
                        "precision": self.metrics.precision,
                        "recall": self.metrics.recall,
                        "f1": self.metrics.f1,
                        "degenerate": list(self.metrics.degenerate)},
            "per_fold": [{"subject_id": sid, "true": t, "predicted": p}
                         for sid, t, p in self.per_fold],
            "selector": self.selector,
            "positive_class": self.positive_class,
            "seed": self.seed,
            "grid_search": {
                "n_points": self.n_grid_points,
                "selection": "pooled LOOCV accuracy, first best on ties",
                "optimistic_bias": self.optimistic_bias,
            },
        }


def _fold_seed(seed: int, grid_index: int, fold: int) -> int:
    ss = np.random.SeedSequence((seed, grid_index, fold))
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 62))


def _loocv_predictions(matrix: FeatureMatrix, spec: ModelSpec, seed: int,
                       grid_index: int) -> np.ndarray:
    n = matrix.values.shape[0]
    preds = np.empty(n, dtype=int)
    for fold in range(n):
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        x_train = matrix.values[mask]
        y_train = matrix.labels[mask]
        std = fit_standardizer(x_train)
        model = train(spec, apply_standardizer(std, x_train), y_train,
                      seed=_fold_seed(seed, grid_index, fold))
        x_test = apply_standardizer(std, matrix.values[fold:fold + 1])
        preds[fold] = predict(model, x_test[0])
    return preds


def _pool_confusion(labels, preds, positive: int) -> Confusion:
    tp = int(np.sum((preds == positive) & (labels == positive)))
    tn = int(np.sum((preds != positive) & (labels != positive)))
    fp = int(np.sum((preds == positive) & (labels != positive)))
    fn = int(np.sum((preds != positive) & (labels == positive)))
    return Confusion(tp=tp, tn=tn, fp=fp, fn=fn)


def loocv_grid_search(matrix: FeatureMatrix, kind: ModelKind, grid,
                      seed: int = 0, positive_class: int = 1,
                      selector: str = "all") -> EvalReport:
    """Exhaustive hyperparameter search scored by pooled LOOCV accuracy.

    ``grid`` is an ordered sequence of hyperparameter dicts; determinism
    comes from that order, the seed, and first-best tie-breaking.
    """
    grid = [dict(g) for g in grid]
    if not grid:
        raise ValueError("hyperparameter grid must be non-empty")
    n = matrix.values.shape[0]
    if n < 3:
        raise ClassUnderpopulated(f"need >= 3 subjects for LOOCV, got {n}")

    best = None  # (accuracy, grid_index, preds)
    for gi, hp in enumerate(grid):
        preds = _loocv_predictions(matrix, ModelSpec(kind, hp), seed, gi)
        accuracy = float(np.mean(preds == matrix.labels))
        if best is None or accuracy > best[0] + 1e-12:
            best = (accuracy, gi, preds)
    _, gi, preds = best
    confusion = _pool_confusion(matrix.labels, preds, positive_class)
    return EvalReport(
        model=ModelSpec(kind, grid[gi]),
        confusion=confusion,
        metrics=compute_metrics(confusion),
        per_fold=tuple(
            (sid, int(t), int(p))
            for sid, t, p in zip(matrix.subject_ids, matrix.labels, preds)),
        selector=selector,
        positive_class=positive_class,
        seed=seed,
        n_grid_points=len(grid),
    )


# --- default grids and report rendering --------------------------------------------------


def expand_grid(axes: dict[str, list]) -> list[dict]:
    """Cartesian product of axis values, in axis-declaration order."""
    points = [{}]
    for name, values in axes.items():
        points = [{**p, name: v} for p in points for v in values]
    return points


def default_grids() -> dict[ModelKind, list[dict]]:
    return {
        ModelKind.KNN: expand_grid({"k": [1, 3, 5, 7]}),
        ModelKind.DECISION_TREE: expand_grid({"max_depth": [2, 3, 5, None]}),
        ModelKind.RANDOM_FOREST: expand_grid(
            {"n_estimators": [50, 200], "max_depth": [3, None]}),
        ModelKind.GRADIENT_BOOSTING: expand_grid(
            {"n_estimators": [50, 200], "learning_rate": [0.05, 0.1]}),
        ModelKind.SVM: (
            expand_grid({"kernel": ["linear"], "c": [0.1, 1.0, 10.0]})
            + expand_grid({"kernel": ["rbf"], "c": [0.1, 1.0, 10.0],
                           "gamma": [0.01, 0.1, 1.0]})),
        ModelKind.MLP: expand_grid(
            {"hidden": [8, 16, 32], "learning_rate": [0.01, 0.001],
             "epochs": [500]}),
    }


def render_markdown_table(reports) -> str:
    """One results table in the benchmark layout, percentages to 2 decimals."""
    lines = [
        "| Method | Accuracy | Precision | Recall | F1 Score |",
        "|---|---|---|---|---|",
    ]
    for report in reports:
        m = report.metrics
        lines.append(
            f"| {MODEL_DISPLAY_NAMES[report.model.kind]} "
            f"| {m.accuracy:.2f} | {m.precision:.2f} "
            f"| {m.recall:.2f} | {m.f1:.2f} |")
    return "\n".join(lines) + "\n"
