"""Random forest: weighted bootstrap per member, sqrt(n_features) candidate
features per split, probability averaging over member leaf distributions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._util import rng_for
from .tree import DecisionTree, train_cart


@dataclass
class RandomForest:
    n_classes: int
    params: dict
    seed: int
    trees: list[DecisionTree] = field(default_factory=list)
    n_features: int = 0

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros((len(X), self.n_classes))
        for tree in self.trees:
            out += tree.predict_proba(X)
        out /= len(self.trees)
        return out

    def feature_importances(self) -> np.ndarray:
        total = np.zeros(self.n_features)
        for tree in self.trees:
            total += tree.feature_importances()
        return total

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "params": dict(self.params),
            "seed": self.seed,
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        return cls(
            n_classes=int(d["n_classes"]),
            params=dict(d["params"]),
            seed=int(d["seed"]),
            n_features=int(d["n_features"]),
            trees=[DecisionTree.from_dict(t) for t in d["trees"]],
        )


def train_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray | None = None,
    n_classes: int | None = None,
    n_estimators: int = 100,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    seed: int = 0,
) -> RandomForest:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    w = np.ones(len(y)) if sample_weights is None else np.asarray(sample_weights, dtype=float)
    K = int(n_classes if n_classes is not None else y.max() + 1)
    m_feats = max(1, int(np.sqrt(X.shape[1])))
    trees = []
    for member in range(n_estimators):
        rng = rng_for(seed, "rf", member)
        idx = rng.integers(0, len(y), size=len(y))
        trees.append(
            train_cart(
                X[idx],
                y[idx],
                sample_weights=w[idx],
                n_classes=K,
                max_depth=max_depth,
                min_samples_split=min_samples_split,
                min_samples_leaf=min_samples_leaf,
                feature_candidates=m_feats,
                rng=rng,
            )
        )
    return RandomForest(
        n_classes=K,
        params={
            "n_estimators": n_estimators,
            "max_depth": max_depth,
            "min_samples_split": min_samples_split,
            "min_samples_leaf": min_samples_leaf,
        },
        seed=seed,
        trees=trees,
        n_features=X.shape[1],
    )
