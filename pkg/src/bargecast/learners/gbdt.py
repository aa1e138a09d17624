"""Histogram gradient boosting with leaf-wise tree growth.

One-vs-rest logistic loss per class; features are pre-binned into at most 255
equal-frequency bins; each round grows one tree per class by always splitting
the leaf with the largest gain until num_leaves or min_child_samples stops.
Leaf values are damped Newton steps sum(grad)/(sum(hess)+1). The per-round
training loss (mean weighted binary log-loss over classes, i.e. the boosting
objective) is recorded so convergence is auditable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LAMBDA = 1.0
MAX_BINS = 255


def _fit_bin_edges(X: np.ndarray, max_bins: int = MAX_BINS) -> list[np.ndarray]:
    edges = []
    for f in range(X.shape[1]):
        col = X[:, f]
        qs = np.quantile(col, np.linspace(0, 1, max_bins + 1)[1:-1])
        edges.append(np.unique(qs))
    return edges


def _apply_bins(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    out = np.empty(X.shape, dtype=np.int64)
    for f, e in enumerate(edges):
        out[:, f] = np.searchsorted(e, X[:, f], side="right")
    return out


@dataclass
class HistTree:
    feature: np.ndarray
    bin_thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, bins: np.ndarray) -> np.ndarray:
        node = np.zeros(len(bins), dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            go_left = bins[rows, feat[rows]] <= self.bin_thr[node[rows]]
            node[rows[go_left]] = self.left[node[rows]][go_left]
            node[rows[~go_left]] = self.right[node[rows]][~go_left]
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "bin_thr": self.bin_thr.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HistTree":
        return cls(
            feature=np.array(d["feature"], dtype=np.int64),
            bin_thr=np.array(d["bin_thr"], dtype=np.int64),
            left=np.array(d["left"], dtype=np.int64),
            right=np.array(d["right"], dtype=np.int64),
            value=np.array(d["value"], dtype=float),
        )


class _Leaf:
    __slots__ = ("rows", "depth", "node_id", "gain", "feat", "bin", "left_rows", "right_rows")

    def __init__(self, rows, depth, node_id):
        self.rows = rows
        self.depth = depth
        self.node_id = node_id
        self.gain = -np.inf
        self.feat = -1
        self.bin = -1
        self.left_rows = None
        self.right_rows = None


@dataclass
class GBDT:
    n_classes: int
    params: dict
    seed: int
    bin_edges: list = field(default_factory=list)
    trees: list = field(default_factory=list)  # trees[round][class]
    train_loss: list = field(default_factory=list)
    n_features: int = 0
    importance_: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def _raw(self, bins: np.ndarray) -> np.ndarray:
        F = np.zeros((len(bins), self.n_classes))
        lr = self.params["learning_rate"]
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                F[:, k] += lr * tree.predict(bins)
        return F

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        bins = _apply_bins(X, self.bin_edges)
        p = 1.0 / (1.0 + np.exp(-self._raw(bins)))
        total = p.sum(axis=1, keepdims=True)
        uniform = np.full_like(p, 1.0 / self.n_classes)
        return np.where(total > 0, p / np.where(total > 0, total, 1.0), uniform)

    def feature_importances(self) -> np.ndarray:
        return self.importance_.copy()

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "params": dict(self.params),
            "seed": self.seed,
            "n_features": self.n_features,
            "bin_edges": [e.tolist() for e in self.bin_edges],
            "trees": [[t.to_dict() for t in r] for r in self.trees],
            "train_loss": list(self.train_loss),
            "importances": self.importance_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GBDT":
        return cls(
            n_classes=int(d["n_classes"]),
            params=dict(d["params"]),
            seed=int(d["seed"]),
            n_features=int(d["n_features"]),
            bin_edges=[np.array(e, dtype=float) for e in d["bin_edges"]],
            trees=[[HistTree.from_dict(t) for t in r] for r in d["trees"]],
            train_loss=[float(v) for v in d["train_loss"]],
            importance_=np.array(d["importances"], dtype=float),
        )


def _leaf_hists(bins, rows, g, h, n_bins, offsets, total_bins):
    flat = (bins[rows] + offsets[None, :]).ravel()
    gw = np.broadcast_to(g[rows, None], (len(rows), len(offsets))).ravel()
    hw = np.broadcast_to(h[rows, None], (len(rows), len(offsets))).ravel()
    G = np.bincount(flat, weights=gw, minlength=total_bins)
    H = np.bincount(flat, weights=hw, minlength=total_bins)
    C = np.bincount(flat, minlength=total_bins)
    return G, H, C


def _find_best(G, H, C, n_bins, offsets, min_child):
    """Best (gain, feature, bin) across all features; ties resolve to the
    lower feature then lower bin because the scan is feature-major."""
    best_gain, best_feat, best_bin = -np.inf, -1, -1
    for f in range(len(n_bins)):
        nb = n_bins[f]
        if nb < 2:
            continue
        sl = slice(offsets[f], offsets[f] + nb)
        Gf, Hf, Cf = G[sl], H[sl], C[sl]
        GL = np.cumsum(Gf)[:-1]
        HL = np.cumsum(Hf)[:-1]
        CL = np.cumsum(Cf)[:-1]
        Gt, Ht, Ct = Gf.sum(), Hf.sum(), Cf.sum()
        GR, HR, CR = Gt - GL, Ht - HL, Ct - CL
        gain = 0.5 * (
            GL * GL / (HL + _LAMBDA) + GR * GR / (HR + _LAMBDA) - Gt * Gt / (Ht + _LAMBDA)
        )
        gain = np.where((CL >= min_child) & (CR >= min_child), gain, -np.inf)
        b = int(np.argmax(gain))
        if gain[b] > best_gain:
            best_gain, best_feat, best_bin = float(gain[b]), f, b
    return best_gain, best_feat, best_bin


def _grow_tree(bins, rows_all, g, h, n_bins, offsets, total_bins, num_leaves, min_child, max_depth, importance):
    features, bin_thrs, lefts, rights, values = [], [], [], [], []

    def new_node():
        features.append(-1)
        bin_thrs.append(-1)
        lefts.append(-1)
        rights.append(-1)
        values.append(0.0)
        return len(features) - 1

    def eval_leaf(leaf: _Leaf):
        if max_depth >= 0 and leaf.depth >= max_depth:
            return
        if len(leaf.rows) < 2 * min_child:
            return
        G, H, C = _leaf_hists(bins, leaf.rows, g, h, n_bins, offsets, total_bins)
        gain, feat, b = _find_best(G, H, C, n_bins, offsets, min_child)
        if gain <= 0 or feat < 0:
            return
        leaf.gain, leaf.feat, leaf.bin = gain, feat, b
        mask = bins[leaf.rows, feat] <= b
        leaf.left_rows = leaf.rows[mask]
        leaf.right_rows = leaf.rows[~mask]

    root = _Leaf(rows_all, 0, new_node())
    eval_leaf(root)
    leaves = [root]
    while len(leaves) < num_leaves:
        best = None
        for leaf in leaves:  # earliest leaf wins gain ties
            if leaf.feat >= 0 and (best is None or leaf.gain > best.gain):
                best = leaf
        if best is None:
            break
        features[best.node_id] = best.feat
        bin_thrs[best.node_id] = best.bin
        importance[best.feat] += best.gain
        lchild = _Leaf(best.left_rows, best.depth + 1, new_node())
        rchild = _Leaf(best.right_rows, best.depth + 1, new_node())
        lefts[best.node_id] = lchild.node_id
        rights[best.node_id] = rchild.node_id
        eval_leaf(lchild)
        eval_leaf(rchild)
        leaves.remove(best)
        leaves.extend([lchild, rchild])
    for leaf in leaves:
        values[leaf.node_id] = float(g[leaf.rows].sum() / (h[leaf.rows].sum() + _LAMBDA))
    return HistTree(
        feature=np.array(features, dtype=np.int64),
        bin_thr=np.array(bin_thrs, dtype=np.int64),
        left=np.array(lefts, dtype=np.int64),
        right=np.array(rights, dtype=np.int64),
        value=np.array(values),
    )


def train_gbdt(
    X: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray | None = None,
    n_classes: int | None = None,
    n_estimators: int = 100,
    max_depth: int = -1,
    learning_rate: float = 0.1,
    num_leaves: int = 31,
    min_child_samples: int = 20,
    seed: int = 0,
) -> GBDT:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    w = np.ones(len(y)) if sample_weights is None else np.asarray(sample_weights, dtype=float)
    K = int(n_classes if n_classes is not None else y.max() + 1)
    edges = _fit_bin_edges(X)
    bins = _apply_bins(X, edges)
    n_bins = np.array([len(e) + 1 for e in edges], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(n_bins)[:-1]])
    total_bins = int(n_bins.sum())

    model = GBDT(
        n_classes=K,
        params={
            "n_estimators": n_estimators,
            "max_depth": max_depth,
            "learning_rate": learning_rate,
            "num_leaves": num_leaves,
            "min_child_samples": min_child_samples,
        },
        seed=seed,
        bin_edges=edges,
        n_features=X.shape[1],
        importance_=np.zeros(X.shape[1]),
    )
    Y = np.zeros((len(y), K))
    Y[np.arange(len(y)), y] = 1.0
    F = np.zeros((len(y), K))
    rows_all = np.arange(len(y))
    w_total = w.sum()
    for _ in range(n_estimators):
        p = 1.0 / (1.0 + np.exp(-F))
        round_trees = []
        for k in range(K):
            g = w * (Y[:, k] - p[:, k])
            h = w * p[:, k] * (1.0 - p[:, k])
            tree = _grow_tree(
                bins, rows_all, g, h, n_bins, offsets, total_bins,
                num_leaves, min_child_samples, max_depth, model.importance_,
            )
            F[:, k] += learning_rate * tree.predict(bins)
            round_trees.append(tree)
        model.trees.append(round_trees)
        p = np.clip(1.0 / (1.0 + np.exp(-F)), 1e-15, 1 - 1e-15)
        loss = -(w[:, None] * (Y * np.log(p) + (1 - Y) * np.log(1 - p))).sum() / (w_total * K)
        model.train_loss.append(float(loss))
    return model
