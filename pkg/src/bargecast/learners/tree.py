"""CART decision tree with sample weights, grown by exhaustive weighted-Gini
search over midpoints between distinct feature values.

Tie-breaks are pinned so training is reproducible: equal-gain splits resolve
to the lower feature index, then the lower threshold; node ids follow
depth-first preorder. min_samples_* limits count rows, not weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-12


@dataclass
class DecisionTree:
    n_classes: int
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    # flat node arrays; feature == -1 marks a leaf
    feature: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    threshold: np.ndarray = field(default_factory=lambda: np.zeros(0))
    left: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    right: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    proba: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    n_samples: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_features: int = 0
    importances: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            go_left = X[rows, feat[rows]] <= self.threshold[node[rows]]
            node[rows[go_left]] = self.left[node[rows]][go_left]
            node[rows[~go_left]] = self.right[node[rows]][~go_left]
        return self.proba[node]

    def feature_importances(self) -> np.ndarray:
        return self.importances.copy()

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "n_features": self.n_features,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "proba": self.proba.tolist(),
            "n_samples": self.n_samples.tolist(),
            "importances": self.importances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            n_classes=int(d["n_classes"]),
            max_depth=d["max_depth"],
            min_samples_split=int(d["min_samples_split"]),
            min_samples_leaf=int(d["min_samples_leaf"]),
            n_features=int(d["n_features"]),
            feature=np.array(d["feature"], dtype=np.int64),
            threshold=np.array(d["threshold"], dtype=float),
            left=np.array(d["left"], dtype=np.int64),
            right=np.array(d["right"], dtype=np.int64),
            proba=np.array(d["proba"], dtype=float).reshape(len(d["feature"]), int(d["n_classes"])),
            n_samples=np.array(d["n_samples"], dtype=np.int64),
            importances=np.array(d["importances"], dtype=float),
        )


def _best_split(Xn, yn, wn, n_classes, min_leaf, W, gini_parent):
    """Fused search over every candidate feature column of a node.

    Returns (gain, local_feature, threshold) or None. Candidate thresholds are
    midpoints between consecutive distinct sorted values; the argmax scans
    feature-major then position-ascending, which realises the documented
    (lower feature, lower threshold) tie-break.
    """
    m, f = Xn.shape
    order = np.argsort(Xn, axis=0, kind="stable")
    Xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn[order]
    ws = wn[order]
    cw = ws[:, :, None] * (ys[:, :, None] == np.arange(n_classes))
    cums = np.cumsum(cw, axis=0)
    L = cums[:-1]
    R = cums[-1][None, :, :] - L
    WL = L.sum(axis=2)
    WR = R.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        gini_l = 1.0 - (L * L).sum(axis=2) / (WL * WL)
        gini_r = 1.0 - (R * R).sum(axis=2) / (WR * WR)
    child = (WL * gini_l + WR * gini_r) / W
    gain = gini_parent - child
    counts = np.arange(1, m)[:, None]
    valid = (
        (Xs[1:] > Xs[:-1])
        & (counts >= min_leaf)
        & ((m - counts) >= min_leaf)
        & (WL > 0)
        & (WR > 0)
    )
    gain = np.where(valid, gain, -np.inf)
    flat = np.argmax(gain.T)  # feature-major scan pins the tie-break
    fi, pos = np.unravel_index(flat, (f, m - 1))
    best = gain[pos, fi]
    if not np.isfinite(best) or best <= _EPS:
        return None
    thr = 0.5 * (Xs[pos, fi] + Xs[pos + 1, fi])
    return float(best), int(fi), float(thr)


def train_cart(
    X: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray | None = None,
    n_classes: int | None = None,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    feature_candidates: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Grow a weighted-Gini CART classifier.

    feature_candidates limits each split's search to that many randomly drawn
    features (used by random forests); None searches every feature.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("empty training set")
    w = np.ones(len(y)) if sample_weights is None else np.asarray(sample_weights, dtype=float)
    if (w < 0).any() or w.sum() <= 0:
        raise ValueError("sample weights must be non-negative and not all zero")
    K = int(n_classes if n_classes is not None else y.max() + 1)
    if feature_candidates is not None and rng is None:
        raise ValueError("feature subsampling needs an rng")

    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    probas: list[np.ndarray] = []
    sizes: list[int] = []
    importances = np.zeros(X.shape[1])
    W_root = w.sum()
    depth_cap = np.inf if max_depth is None else max_depth

    def new_node() -> int:
        features.append(-1)
        thresholds.append(0.0)
        lefts.append(-1)
        rights.append(-1)
        probas.append(np.zeros(K))
        sizes.append(0)
        return len(features) - 1

    stack = [(np.arange(len(y)), 0, new_node())]
    while stack:
        rows, depth, node_id = stack.pop()
        yn = y[rows]
        wn = w[rows]
        W = wn.sum()
        cw_tot = np.bincount(yn, weights=wn, minlength=K)
        probas[node_id] = cw_tot / W
        sizes[node_id] = len(rows)
        gini = 1.0 - ((cw_tot / W) ** 2).sum()
        if depth >= depth_cap or len(rows) < min_samples_split or gini <= _EPS:
            continue
        if feature_candidates is None or feature_candidates >= X.shape[1]:
            cand = np.arange(X.shape[1])
        else:
            cand = np.sort(rng.choice(X.shape[1], size=feature_candidates, replace=False))
        found = _best_split(X[np.ix_(rows, cand)], yn, wn, K, min_samples_leaf, W, gini)
        if found is None:
            continue
        gain, fi, thr = found
        feat = int(cand[fi])
        mask = X[rows, feat] <= thr
        features[node_id] = feat
        thresholds[node_id] = thr
        importances[feat] += (W / W_root) * gain
        left_id = new_node()
        right_id = new_node()
        lefts[node_id] = left_id
        rights[node_id] = right_id
        # push right first so the left subtree is numbered next (preorder)
        stack.append((rows[~mask], depth + 1, right_id))
        stack.append((rows[mask], depth + 1, left_id))

    return DecisionTree(
        n_classes=K,
        max_depth=max_depth,
        min_samples_split=min_samples_split,
        min_samples_leaf=min_samples_leaf,
        n_features=X.shape[1],
        feature=np.array(features, dtype=np.int64),
        threshold=np.array(thresholds),
        left=np.array(lefts, dtype=np.int64),
        right=np.array(rights, dtype=np.int64),
        proba=np.vstack(probas),
        n_samples=np.array(sizes, dtype=np.int64),
        importances=importances,
    )
