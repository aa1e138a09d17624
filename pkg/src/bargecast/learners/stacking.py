"""Stacked ensembles: base models produce out-of-fold class probabilities,
a multinomial logistic meta-model combines them, and the bases are refit on
the full training set for inference.

The fold assignment used to build the meta-features is kept on the model so
the no-label-leak property (row i scored by a model that never saw row i) is
checkable after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LogisticMeta:
    """Softmax regression fit by full-batch gradient descent with an L2
    penalty; the fixed step size comes from a Lipschitz bound so the fit is
    deterministic and needs no line search."""

    W: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))  # (d+1, K), last row = bias
    l2: float = 1.0
    steps_run: int = 0

    def predict_proba(self, F: np.ndarray) -> np.ndarray:
        Z = np.hstack([F, np.ones((len(F), 1))]) @ self.W
        Z -= Z.max(axis=1, keepdims=True)
        e = np.exp(Z)
        return e / e.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {"W": self.W.tolist(), "l2": self.l2, "steps_run": self.steps_run}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticMeta":
        return cls(W=np.array(d["W"], dtype=float), l2=float(d["l2"]), steps_run=int(d["steps_run"]))


def fit_logistic_meta(
    F: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray | None = None,
    n_classes: int | None = None,
    l2: float = 1.0,
    max_steps: int = 5000,
    tol: float = 1e-6,
) -> LogisticMeta:
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n, d = F.shape
    K = int(n_classes if n_classes is not None else y.max() + 1)
    w = np.ones(n) if sample_weights is None else np.asarray(sample_weights, dtype=float)
    w = w / w.sum()
    Xb = np.hstack([F, np.ones((n, 1))])
    Y = np.zeros((n, K))
    Y[np.arange(n), y] = 1.0
    W = np.zeros((d + 1, K))
    # Hessian of the weighted softmax CE is bounded by 0.5 * max ||x||^2
    lip = 0.5 * float((Xb * Xb).sum(axis=1).max()) + l2 / n
    step = 1.0 / lip
    meta = LogisticMeta(W=W, l2=l2)
    for it in range(max_steps):
        Z = Xb @ W
        Z -= Z.max(axis=1, keepdims=True)
        e = np.exp(Z)
        P = e / e.sum(axis=1, keepdims=True)
        grad = Xb.T @ (w[:, None] * (P - Y)) + (l2 / n) * W
        gn = float(np.sqrt((grad * grad).sum()))
        meta.steps_run = it + 1
        if gn < tol:
            break
        W -= step * grad
    meta.W = W
    return meta


@dataclass
class StackedModel:
    n_classes: int
    base_kinds: list
    bases: list
    meta: LogisticMeta
    fold_assignment: np.ndarray
    seed: int
    n_features: int = 0

    @property
    def params(self) -> dict:
        return {"base_kinds": list(self.base_kinds), "fold_count": int(self.fold_assignment.max() + 1) if len(self.fold_assignment) else 0}

    def _meta_features(self, X: np.ndarray) -> np.ndarray:
        return np.hstack([b.predict_proba(X) for b in self.bases])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return self.meta.predict_proba(self._meta_features(X))

    def to_dict(self) -> dict:
        from . import model_to_dict

        return {
            "n_classes": self.n_classes,
            "base_kinds": list(self.base_kinds),
            "bases": [model_to_dict(b) for b in self.bases],
            "meta": self.meta.to_dict(),
            "fold_assignment": self.fold_assignment.tolist(),
            "seed": self.seed,
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StackedModel":
        from . import model_from_dict

        return cls(
            n_classes=int(d["n_classes"]),
            base_kinds=list(d["base_kinds"]),
            bases=[model_from_dict(b) for b in d["bases"]],
            meta=LogisticMeta.from_dict(d["meta"]),
            fold_assignment=np.array(d["fold_assignment"], dtype=np.int64),
            seed=int(d["seed"]),
            n_features=int(d["n_features"]),
        )


def train_stacked(
    base_factories: list,
    X: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray | None = None,
    n_classes: int | None = None,
    folds: list | None = None,
    fold_count: int = 5,
    seed: int = 0,
    base_kinds: list | None = None,
) -> StackedModel:
    """Build a stacked ensemble.

    base_factories: callables (X, y, w) -> fitted model with predict_proba.
    folds: (train_idx, val_idx) pairs; derived by stratified k-fold when not
    given. Needs at least 2 base models.
    """
    from ..prep import stratified_kfold

    if len(base_factories) < 2:
        raise ValueError("stacking needs at least 2 base models")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    w = np.ones(len(y)) if sample_weights is None else np.asarray(sample_weights, dtype=float)
    K = int(n_classes if n_classes is not None else y.max() + 1)
    if folds is None:
        folds = stratified_kfold(y, k=fold_count, seed=seed)

    fold_assignment = np.full(len(y), -1, dtype=np.int64)
    for i, (_, val_idx) in enumerate(folds):
        fold_assignment[val_idx] = i
    if (fold_assignment < 0).any():
        raise ValueError("folds must cover every row")

    meta_F = np.zeros((len(y), len(base_factories) * K))
    for b, factory in enumerate(base_factories):
        for train_idx, val_idx in folds:
            fitted = factory(X[train_idx], y[train_idx], w[train_idx])
            meta_F[val_idx, b * K : (b + 1) * K] = fitted.predict_proba(X[val_idx])
    assert meta_F.shape[1] == len(base_factories) * K

    meta = fit_logistic_meta(meta_F, y, sample_weights=w, n_classes=K)
    bases = [factory(X, y, w) for factory in base_factories]
    return StackedModel(
        n_classes=K,
        base_kinds=base_kinds or [f"base{b}" for b in range(len(bases))],
        bases=bases,
        meta=meta,
        fold_assignment=fold_assignment,
        seed=seed,
        n_features=X.shape[1],
    )
