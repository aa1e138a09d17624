"""Supervised learners with a single training/inference/serialization surface.

train_model dispatches on a kind string ("cart", "rf", "adaboost", "gbdt",
"knn", or "stack:<kind>+<kind>"); every fitted model offers predict_proba and
serializes to one versioned JSON artifact whose canonical form byte-stably
round-trips.
"""

from __future__ import annotations

import functools
import json

import numpy as np

from .._util import DataError, canonical_json, config_hash, derive_seed
from .adaboost import AdaBoost, train_adaboost
from .forest import RandomForest, train_random_forest
from .gbdt import GBDT, train_gbdt
from .knn import KNN, train_knn
from .stacking import LogisticMeta, StackedModel, fit_logistic_meta, train_stacked
from .tree import DecisionTree, train_cart

FORMAT_VERSION = 1

_KIND_BY_CLASS = {
    DecisionTree: "cart",
    RandomForest: "rf",
    AdaBoost: "adaboost",
    GBDT: "gbdt",
    KNN: "knn",
    StackedModel: "stack",
}
_CLASS_BY_KIND = {v: k for k, v in _KIND_BY_CLASS.items()}

BASE_KINDS = ("cart", "rf", "adaboost", "gbdt", "knn")


def model_kind(model) -> str:
    kind = _KIND_BY_CLASS.get(type(model))
    if kind is None:
        raise ValueError(f"unknown model type {type(model).__name__}")
    if kind == "stack":
        return "stack:" + "+".join(model.base_kinds)
    return kind


def _fit_base(kind: str, X, y, w, n_classes: int, params: dict, seed: int):
    params = dict(params or {})
    if kind == "cart":
        return train_cart(
            X, y, sample_weights=w, n_classes=n_classes,
            max_depth=params.get("max_depth"),
            min_samples_split=int(params.get("min_samples_split", 2)),
            min_samples_leaf=int(params.get("min_samples_leaf", 1)),
        )
    if kind == "rf":
        return train_random_forest(
            X, y, sample_weights=w, n_classes=n_classes,
            n_estimators=int(params.get("n_estimators", 100)),
            max_depth=params.get("max_depth"),
            min_samples_split=int(params.get("min_samples_split", 2)),
            min_samples_leaf=int(params.get("min_samples_leaf", 1)),
            seed=seed,
        )
    if kind == "adaboost":
        return train_adaboost(
            X, y, sample_weights=w, n_classes=n_classes,
            n_estimators=int(params.get("n_estimators", 50)),
            learning_rate=float(params.get("learning_rate", 1.0)),
            seed=seed,
        )
    if kind == "gbdt":
        return train_gbdt(
            X, y, sample_weights=w, n_classes=n_classes,
            n_estimators=int(params.get("n_estimators", 100)),
            max_depth=int(params.get("max_depth", -1)),
            learning_rate=float(params.get("learning_rate", 0.1)),
            num_leaves=int(params.get("num_leaves", 31)),
            min_child_samples=int(params.get("min_child_samples", 20)),
            seed=seed,
        )
    if kind == "knn":
        return train_knn(X, y, n_classes=n_classes, k=int(params.get("k", 5)))
    raise ValueError(f"unknown model kind {kind!r}")


def parse_stack_kind(kind: str) -> list[str] | None:
    """"stack:rf+adaboost" -> ["rf", "adaboost"]; None for base kinds."""
    if not kind.startswith("stack:"):
        return None
    bases = kind.split(":", 1)[1].split("+")
    bad = [b for b in bases if b not in BASE_KINDS]
    if bad:
        raise ValueError(f"unknown stacked base kinds {bad}")
    return bases


def train_model(
    kind: str,
    X,
    y,
    sample_weights=None,
    n_classes: int | None = None,
    params: dict | None = None,
    seed: int = 0,
    fold_count: int = 5,
):
    """Train any supported model kind.

    For stacks, params maps each base kind to its own parameter dict (e.g.
    {"rf": {...}, "adaboost": {...}}) and each base gets a derived seed.
    """
    bases = parse_stack_kind(kind)
    if bases is None:
        return _fit_base(kind, X, y, sample_weights, n_classes or int(np.max(y)) + 1, params or {}, seed)
    params = params or {}
    factories = [
        functools.partial(
            _fit_base, b, n_classes=n_classes or int(np.max(y)) + 1,
            params=params.get(b, {}), seed=derive_seed(seed, "stack_base", i),
        )
        for i, b in enumerate(bases)
    ]
    return train_stacked(
        factories, X, y, sample_weights=sample_weights,
        n_classes=n_classes, fold_count=fold_count, seed=seed, base_kinds=bases,
    )


def predict_proba(model, X) -> np.ndarray:
    proba = model.predict_proba(np.asarray(X, dtype=float))
    return proba / proba.sum(axis=1, keepdims=True)


def predict(model, X) -> np.ndarray:
    return np.argmax(predict_proba(model, X), axis=1)


def model_to_dict(model) -> dict:
    kind = _KIND_BY_CLASS[type(model)]
    return {"kind": kind, "payload": model.to_dict()}


def model_from_dict(d: dict):
    cls = _CLASS_BY_KIND.get(d.get("kind"))
    if cls is None:
        raise DataError(f"unknown model kind {d.get('kind')!r} in artifact")
    return cls.from_dict(d["payload"])


def model_artifact_dict(model, feature_indices=None, feature_names=None) -> dict:
    params = getattr(model, "params", {})
    seed = getattr(model, "seed", None)
    return {
        "format_version": FORMAT_VERSION,
        "kind": model_kind(model),
        "seed": seed,
        "params": params,
        "config_hash": config_hash({"kind": model_kind(model), "params": params, "seed": seed}),
        "feature_indices": list(feature_indices) if feature_indices is not None else None,
        "feature_names": list(feature_names) if feature_names is not None else None,
        "model": model_to_dict(model),
    }


def save_model(model, path, feature_indices=None, feature_names=None) -> None:
    """Write one self-describing versioned JSON artifact (canonical form, so
    save(load(save(m))) is byte-identical)."""
    data = model_artifact_dict(model, feature_indices, feature_names)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(data))
        fh.write("\n")


def load_model(path):
    """Load a model artifact; returns (model, meta) where meta carries the
    feature bookkeeping. Version mismatches and corrupt files are explicit
    errors."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model artifact {path}: {exc}") from exc
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"model artifact {path} has format_version {version!r}, expected {FORMAT_VERSION}")
    model = model_from_dict(data["model"])
    meta = {k: data.get(k) for k in ("kind", "seed", "params", "config_hash", "feature_indices", "feature_names")}
    return model, meta


__all__ = [
    "AdaBoost",
    "BASE_KINDS",
    "DecisionTree",
    "FORMAT_VERSION",
    "GBDT",
    "KNN",
    "LogisticMeta",
    "RandomForest",
    "StackedModel",
    "fit_logistic_meta",
    "load_model",
    "model_artifact_dict",
    "model_from_dict",
    "model_kind",
    "model_to_dict",
    "parse_stack_kind",
    "predict",
    "predict_proba",
    "save_model",
    "train_adaboost",
    "train_cart",
    "train_gbdt",
    "train_knn",
    "train_model",
    "train_random_forest",
    "train_stacked",
]
