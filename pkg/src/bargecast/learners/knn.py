"""K-nearest-neighbour classifier over the standardized training matrix.
Distance ties resolve toward the lower training-row index."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class KNN:
    n_classes: int
    k: int
    means: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sds: np.ndarray = field(default_factory=lambda: np.zeros(0))
    Z: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def params(self) -> dict:
        return {"k": self.k}

    @property
    def n_features(self) -> int:
        return self.Z.shape[1]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        Zq = (X - self.means) / self.sds
        d2 = ((Zq[:, None, :] - self.Z[None, :, :]) ** 2).sum(axis=2)
        order = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        out = np.zeros((len(X), self.n_classes))
        for i in range(len(X)):
            counts = np.bincount(self.y[order[i]], minlength=self.n_classes)
            out[i] = counts / counts.sum()
        return out

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "k": self.k,
            "means": self.means.tolist(),
            "sds": self.sds.tolist(),
            "Z": self.Z.tolist(),
            "y": self.y.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KNN":
        return cls(
            n_classes=int(d["n_classes"]),
            k=int(d["k"]),
            means=np.array(d["means"], dtype=float),
            sds=np.array(d["sds"], dtype=float),
            Z=np.array(d["Z"], dtype=float),
            y=np.array(d["y"], dtype=np.int64),
        )


def train_knn(X: np.ndarray, y: np.ndarray, n_classes: int | None = None, k: int = 5) -> KNN:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if k > len(X):
        raise ValueError(f"k={k} exceeds the {len(X)} training rows")
    K = int(n_classes if n_classes is not None else y.max() + 1)
    means = X.mean(axis=0)
    sds = X.std(axis=0)
    sds = np.where(sds > 0, sds, 1.0)
    return KNN(n_classes=K, k=k, means=means, sds=sds, Z=(X - means) / sds, y=y.copy())
