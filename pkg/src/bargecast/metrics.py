"""Confusion matrices, precision/recall/F1, accuracy and ROC-AUC, plus
evaluation-report emission.

Zero denominators never propagate NaN: the affected score is 0 and the report
carries a flag naming it. Multiclass headline scores are support-weighted;
macro averages are always reported alongside.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._util import write_json


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (K, K), rows = true class, columns = predicted
    class_names: list[str]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class ClassScores:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    flags: list[str] = field(default_factory=list)


@dataclass
class EvalReport:
    class_names: list[str]
    per_class: ClassScores
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    accuracy: float
    roc_auc: float | None
    confusion: ConfusionMatrix
    flags: list[str]
    model_id: str = ""
    feature_subset: list[str] = field(default_factory=list)
    seed: int | None = None
    data_hash: str = ""
    provenance_note: str = ""

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "model_id": self.model_id,
            "feature_subset": self.feature_subset,
            "seed": self.seed,
            "data_hash": self.data_hash,
            "provenance_note": self.provenance_note,
            "class_names": self.class_names,
            "per_class": {
                "precision": self.per_class.precision.tolist(),
                "recall": self.per_class.recall.tolist(),
                "f1": self.per_class.f1.tolist(),
                "support": self.per_class.support.tolist(),
            },
            "precision_weighted": self.precision_weighted,
            "recall_weighted": self.recall_weighted,
            "f1_weighted": self.f1_weighted,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro,
            "f1_macro": self.f1_macro,
            "accuracy": self.accuracy,
            "roc_auc": self.roc_auc,
            "confusion": self.confusion.counts.tolist(),
            "flags": self.flags,
        }


def confusion(y_true, y_pred, n_classes: int, class_names: list[str] | None = None) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have the same length")
    if len(y_true) and (y_true.min() < 0 or y_true.max() >= n_classes or y_pred.min() < 0 or y_pred.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    if class_names is None:
        class_names = [str(i) for i in range(n_classes)]
    return ConfusionMatrix(counts=counts, class_names=list(class_names))


def precision_recall_f1(cm: ConfusionMatrix) -> ClassScores:
    counts = cm.counts.astype(float)
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    flags = []
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        f1 = np.where(precision + recall > 0, 2 * precision * recall / (precision + recall), 0.0)
    for k in range(len(tp)):
        if tp[k] + fp[k] == 0:
            flags.append(f"precision_zero_denominator:{cm.class_names[k]}")
        if tp[k] + fn[k] == 0:
            flags.append(f"recall_zero_denominator:{cm.class_names[k]}")
    support = cm.counts.sum(axis=1)
    return ClassScores(precision=precision, recall=recall, f1=f1, support=support, flags=flags)


def _average(values: np.ndarray, support: np.ndarray, how: str) -> float:
    if how == "macro":
        return float(values.mean())
    total = support.sum()
    if total == 0:
        return 0.0
    return float((values * support).sum() / total)


def f1_score(y_true, y_pred, n_classes: int, average: str = "weighted") -> float:
    scores = precision_recall_f1(confusion(y_true, y_pred, n_classes))
    return _average(scores.f1, scores.support, average)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


def _binary_auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Normalized Mann-Whitney statistic; ties credited 0.5."""
    pos = y_true == 1
    n_pos = int(pos.sum())
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("binary ROC-AUC needs both classes present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    # average ranks over tied score groups (1-based)
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    r_pos = ranks[pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_auc(y_true, scores, mode: str = "binary") -> tuple[float | None, list[str]]:
    """Binary AUC or the unweighted mean of one-vs-rest AUCs.

    Classes whose OvR problem is degenerate (no positives or no negatives)
    are skipped and flagged.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    if mode == "binary":
        return _binary_auc(y_true, scores), []
    if mode != "macro_ovr":
        raise ValueError(f"unknown ROC-AUC mode {mode!r}")
    if scores.ndim != 2:
        raise ValueError("macro_ovr needs per-class probability columns")
    aucs = []
    flags = []
    for k in range(scores.shape[1]):
        yk = (y_true == k).astype(np.int64)
        n_pos = int(yk.sum())
        if n_pos == 0 or n_pos == len(yk):
            flags.append(f"roc_auc_skipped_class:{k}")
            continue
        aucs.append(_binary_auc(yk, scores[:, k]))
    if not aucs:
        return None, flags + ["roc_auc_undefined"]
    return float(np.mean(aucs)), flags


def evaluate(
    y_true,
    y_pred,
    n_classes: int,
    proba=None,
    class_names: list[str] | None = None,
    model_id: str = "",
    feature_subset: list[str] | None = None,
    seed: int | None = None,
    data_hash: str = "",
    provenance_note: str = "",
) -> EvalReport:
    cm = confusion(y_true, y_pred, n_classes, class_names)
    scores = precision_recall_f1(cm)
    flags = list(scores.flags)
    auc = None
    if proba is not None:
        proba = np.asarray(proba, dtype=float)
        try:
            if n_classes == 2:
                auc, auc_flags = roc_auc(y_true, proba[:, 1], mode="binary")
            else:
                auc, auc_flags = roc_auc(y_true, proba, mode="macro_ovr")
            flags.extend(auc_flags)
        except ValueError as exc:
            flags.append(f"roc_auc_unavailable:{exc}")
    else:
        flags.append("roc_auc_unavailable:no_probabilities")
    return EvalReport(
        class_names=cm.class_names,
        per_class=scores,
        precision_weighted=_average(scores.precision, scores.support, "weighted"),
        recall_weighted=_average(scores.recall, scores.support, "weighted"),
        f1_weighted=_average(scores.f1, scores.support, "weighted"),
        precision_macro=_average(scores.precision, scores.support, "macro"),
        recall_macro=_average(scores.recall, scores.support, "macro"),
        f1_macro=_average(scores.f1, scores.support, "macro"),
        accuracy=accuracy(cm),
        roc_auc=auc,
        confusion=cm,
        flags=flags,
        model_id=model_id,
        feature_subset=feature_subset or [],
        seed=seed,
        data_hash=data_hash,
        provenance_note=provenance_note,
    )


def write_confusion_csv(cm: ConfusionMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["true\\pred"] + cm.class_names)
        for name, row in zip(cm.class_names, cm.counts):
            w.writerow([name] + [int(v) for v in row])


def emit_report(report: EvalReport, json_path, confusion_csv_path=None) -> None:
    write_json(json_path, report.to_dict())
    if confusion_csv_path is not None:
        write_confusion_csv(report.confusion, confusion_csv_path)
