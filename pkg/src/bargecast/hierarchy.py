"""Two-stage predictor: a binary presence model gates a six-class quantity
model; records predicted without barges never reach the quantity stage.

The artifact bundles both stage models, their feature subsets, the barge
class map and the dimension-imputation model, so inference imputes and
subsets exactly as training did.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._util import DataError, canonical_json
from . import features as ft
from .learners import model_from_dict, model_to_dict, predict_proba
from .prep import BargeClassMap, ImputationModel, kmeans_impute_apply

ARTIFACT_VERSION = 1

WITHOUT_BARGE = 0
WITH_BARGE = 1


@dataclass
class HierarchicalModel:
    presence_model: object
    quantity_model: object
    class_map: BargeClassMap
    imputer: ImputationModel
    presence_features: list
    quantity_features: list
    seeds: dict = field(default_factory=dict)
    config_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "format_version": ARTIFACT_VERSION,
            "presence_model": model_to_dict(self.presence_model),
            "quantity_model": model_to_dict(self.quantity_model),
            "class_bins": [list(b) for b in self.class_map.bins],
            "imputer": self.imputer.to_dict(),
            "presence_features": list(self.presence_features),
            "quantity_features": list(self.quantity_features),
            "feature_names": ft.FEATURE_NAMES,
            "seeds": dict(self.seeds),
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HierarchicalModel":
        version = d.get("format_version")
        if version != ARTIFACT_VERSION:
            raise DataError(f"model artifact has format_version {version!r}, expected {ARTIFACT_VERSION}")
        return cls(
            presence_model=model_from_dict(d["presence_model"]),
            quantity_model=model_from_dict(d["quantity_model"]),
            class_map=BargeClassMap(tuple(tuple(b) for b in d["class_bins"])),
            imputer=ImputationModel.from_dict(d["imputer"]),
            presence_features=[int(i) for i in d["presence_features"]],
            quantity_features=[int(i) for i in d["quantity_features"]],
            seeds=dict(d.get("seeds", {})),
            config_hash=d.get("config_hash", ""),
        )


@dataclass
class HierarchicalPrediction:
    has_barge: bool
    class_id: int | None
    bin_label: str
    presence_proba: np.ndarray
    quantity_proba: np.ndarray | None
    presence_tie: bool = False


def predict_hierarchical(model: HierarchicalModel, X: np.ndarray) -> list[HierarchicalPrediction]:
    """Run the two-stage prediction on complete (already imputed) 36-feature
    rows. Batch results equal per-row results; presence ties resolve to the
    without-barge class and are flagged."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != ft.N_FEATURES:
        raise DataError(f"expected {ft.N_FEATURES} features, got {X.shape[1]}")
    if np.isnan(X).any():
        raise DataError("features contain NaN; apply the artifact's imputation first")
    p_pres = predict_proba(model.presence_model, X[:, model.presence_features])
    out: list[HierarchicalPrediction] = []
    quantity_rows = np.nonzero(np.argmax(p_pres, axis=1) == WITH_BARGE)[0]
    p_quant = {}
    if len(quantity_rows):
        probs = predict_proba(model.quantity_model, X[np.ix_(quantity_rows, model.quantity_features)])
        p_quant = {int(r): probs[i] for i, r in enumerate(quantity_rows)}
    for i in range(len(X)):
        tie = bool(p_pres[i, WITHOUT_BARGE] == p_pres[i, WITH_BARGE])
        if int(np.argmax(p_pres[i])) == WITHOUT_BARGE:
            out.append(
                HierarchicalPrediction(
                    has_barge=False,
                    class_id=None,
                    bin_label="0 barges",
                    presence_proba=p_pres[i],
                    quantity_proba=None,
                    presence_tie=tie,
                )
            )
            continue
        q = p_quant[i]
        cls = int(np.argmax(q))
        out.append(
            HierarchicalPrediction(
                has_barge=True,
                class_id=cls,
                bin_label=f"{model.class_map.class_names[cls]} barges",
                presence_proba=p_pres[i],
                quantity_proba=q,
                presence_tie=tie,
            )
        )
    return out


def impute_and_predict(model: HierarchicalModel, X: np.ndarray, dims: np.ndarray) -> list[HierarchicalPrediction]:
    """Convenience wrapper: fill missing dimensions with the stored imputer,
    then predict."""
    X_filled, _ = kmeans_impute_apply(model.imputer, X, dims)
    return predict_hierarchical(model, X_filled)


def save_hierarchical(model: HierarchicalModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(model.to_dict()))
        fh.write("\n")


def load_hierarchical(path) -> HierarchicalModel:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model artifact {path}: {exc}") from exc
    return HierarchicalModel.from_dict(data)
