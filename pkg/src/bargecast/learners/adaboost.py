"""Multiclass AdaBoost (SAMME) over depth-1 weighted CART stumps.

Member weight alpha = lr * (ln((1-err)/err) + ln(K-1)); misclassified sample
weights are scaled by e^alpha and renormalized. Boosting stops early when a
member is perfect (it is kept) or no better than chance (it is not).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import DecisionTree, train_cart

_ERR_FLOOR = 1e-10


@dataclass
class AdaBoost:
    n_classes: int
    params: dict
    seed: int
    stumps: list[DecisionTree] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    prior: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_features: int = 0

    def _margins(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((len(X), self.n_classes))
        for stump, alpha in zip(self.stumps, self.alphas):
            pred = np.argmax(stump.predict_proba(X), axis=1)
            votes[np.arange(len(X)), pred] += alpha
        return votes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if not self.stumps:
            return np.tile(self.prior, (len(X), 1))
        votes = self._margins(X)
        votes -= votes.max(axis=1, keepdims=True)
        e = np.exp(votes)
        return e / e.sum(axis=1, keepdims=True)

    def feature_importances(self) -> np.ndarray:
        total = np.zeros(self.n_features)
        for stump in self.stumps:
            total += stump.feature_importances()
        return total

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "params": dict(self.params),
            "seed": self.seed,
            "n_features": self.n_features,
            "alphas": list(self.alphas),
            "prior": self.prior.tolist(),
            "stumps": [s.to_dict() for s in self.stumps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdaBoost":
        return cls(
            n_classes=int(d["n_classes"]),
            params=dict(d["params"]),
            seed=int(d["seed"]),
            n_features=int(d["n_features"]),
            alphas=[float(a) for a in d["alphas"]],
            prior=np.array(d["prior"], dtype=float),
            stumps=[DecisionTree.from_dict(s) for s in d["stumps"]],
        )


def train_adaboost(
    X: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray | None = None,
    n_classes: int | None = None,
    n_estimators: int = 50,
    learning_rate: float = 1.0,
    seed: int = 0,
) -> AdaBoost:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    K = int(n_classes if n_classes is not None else y.max() + 1)
    if len(np.unique(y)) < 2:
        raise ValueError("AdaBoost needs at least 2 classes in the training data")
    base = np.ones(len(y)) if sample_weights is None else np.asarray(sample_weights, dtype=float)
    w = base / base.sum()

    prior = np.bincount(y, weights=base, minlength=K)
    model = AdaBoost(
        n_classes=K,
        params={"n_estimators": n_estimators, "learning_rate": learning_rate},
        seed=seed,
        prior=prior / prior.sum(),
        n_features=X.shape[1],
    )
    chance = 1.0 - 1.0 / K
    for _ in range(n_estimators):
        stump = train_cart(X, y, sample_weights=w, n_classes=K, max_depth=1)
        pred = np.argmax(stump.predict_proba(X), axis=1)
        miss = pred != y
        err = float(w[miss].sum())
        if err >= chance:
            break
        err_eff = max(err, _ERR_FLOOR)
        alpha = learning_rate * (np.log((1.0 - err_eff) / err_eff) + np.log(K - 1.0))
        model.stumps.append(stump)
        model.alphas.append(float(alpha))
        if err == 0.0:
            break
        w = w * np.exp(alpha * miss)
        w = w / w.sum()
    return model
