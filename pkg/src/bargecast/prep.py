"""Dataset preparation: barge-count binning, K-means imputation of missing
vessel dimensions, per-count majority downsampling, constraint-preserving
SMOTE augmentation, class weights and stratified splitting/folding.

Every randomized operation is bit-reproducible given (inputs, seed) and
synthetic rows can never reach a test partition.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from ._util import DataError, rng_for
from . import features as ft

logger = logging.getLogger(__name__)

REAL = "real"
SYNTHETIC = "synthetic"

DEFAULT_BINS = [(1, 1), (2, 4), (5, 12), (13, 20), (21, 29), (30, 42)]
MAX_BARGE_COUNT = 42


@dataclass(frozen=True)
class BargeClassMap:
    """Ordered, disjoint, contiguous inclusive count ranges covering [1, 42]."""

    bins: tuple = tuple(DEFAULT_BINS)

    def __post_init__(self):
        prev_hi = 0
        for lo, hi in self.bins:
            if lo != prev_hi + 1 or hi < lo:
                raise ValueError(f"bins must tile [1, {MAX_BARGE_COUNT}] contiguously: {self.bins}")
            prev_hi = hi
        if prev_hi != MAX_BARGE_COUNT:
            raise ValueError(f"bins must cover up to {MAX_BARGE_COUNT}")

    @property
    def n_classes(self) -> int:
        return len(self.bins)

    @property
    def class_names(self) -> list[str]:
        return [f"{lo}" if lo == hi else f"{lo}-{hi}" for lo, hi in self.bins]

    def bin_of(self, count: int) -> int:
        if not 1 <= count <= MAX_BARGE_COUNT:
            raise DataError(f"barge count {count} outside [1, {MAX_BARGE_COUNT}]")
        for i, (lo, hi) in enumerate(self.bins):
            if lo <= count <= hi:
                return i
        raise AssertionError("unreachable: bins tile the range")


def bin_barge_count(count: int, class_map: BargeClassMap | None = None) -> int:
    return (class_map or BargeClassMap()).bin_of(count)


@dataclass
class Dataset:
    """Feature matrix plus labels, raw counts, provenance and location group."""

    X: np.ndarray
    y: np.ndarray
    counts: np.ndarray
    provenance: np.ndarray
    group: np.ndarray
    class_names: list[str]

    @property
    def n(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            X=self.X[idx].copy(),
            y=self.y[idx].copy(),
            counts=self.counts[idx].copy(),
            provenance=self.provenance[idx].copy(),
            group=self.group[idx].copy(),
            class_names=list(self.class_names),
        )


@dataclass
class LabeledFrame:
    """The labeled-dataset table: one row per matched trip."""

    trip_ids: list[str]
    mmsi: list[int]
    X: np.ndarray
    counts: np.ndarray
    provenance: np.ndarray
    location: np.ndarray

    @property
    def n(self) -> int:
        return len(self.trip_ids)


LABELED_COLUMNS = ["trip_id", "mmsi"] + ft.FEATURE_NAMES + [
    "barge_count",
    "has_barge",
    "provenance",
    "location_id",
]


def write_labeled_csv(frame: LabeledFrame, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(LABELED_COLUMNS)
        for i in range(frame.n):
            row = [frame.trip_ids[i], frame.mmsi[i]]
            row += [repr(float(v)) for v in frame.X[i]]
            row += [
                int(frame.counts[i]),
                "true" if frame.counts[i] > 0 else "false",
                frame.provenance[i],
                frame.location[i],
            ]
            w.writerow(row)


def load_labeled_csv(path) -> LabeledFrame:
    trip_ids, mmsi, rows, counts, prov, loc = [], [], [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in LABELED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"labeled dataset {path} missing columns: {missing}")
        for row in reader:
            trip_ids.append(row["trip_id"])
            mmsi.append(int(row["mmsi"]))
            rows.append([float(row[name]) for name in ft.FEATURE_NAMES])
            counts.append(int(row["barge_count"]))
            prov.append(row["provenance"])
            loc.append(row["location_id"])
    return LabeledFrame(
        trip_ids=trip_ids,
        mmsi=mmsi,
        X=np.array(rows, dtype=float).reshape(len(rows), ft.N_FEATURES),
        counts=np.array(counts, dtype=np.int64),
        provenance=np.array(prov, dtype=object),
        location=np.array(loc, dtype=object),
    )


def presence_dataset(frame: LabeledFrame) -> Dataset:
    return Dataset(
        X=frame.X.copy(),
        y=(frame.counts > 0).astype(np.int64),
        counts=frame.counts.copy(),
        provenance=frame.provenance.copy(),
        group=frame.location.copy(),
        class_names=["without_barge", "with_barge"],
    )


def quantity_dataset(frame: LabeledFrame, class_map: BargeClassMap | None = None) -> Dataset:
    class_map = class_map or BargeClassMap()
    mask = frame.counts > 0
    counts = frame.counts[mask]
    y = np.array([class_map.bin_of(int(c)) for c in counts], dtype=np.int64)
    return Dataset(
        X=frame.X[mask].copy(),
        y=y,
        counts=counts.copy(),
        provenance=frame.provenance[mask].copy(),
        group=frame.location[mask].copy(),
        class_names=class_map.class_names,
    )


# ---------------------------------------------------------------------------
# K-means imputation of missing vessel dimensions


@dataclass
class ImputationModel:
    k: int
    feature_idx: list[int]
    means: np.ndarray
    sds: np.ndarray
    centroids: np.ndarray
    cluster_dims: np.ndarray  # (k, 3) mean length/width/draft per cluster
    n_iter: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "feature_idx": list(self.feature_idx),
            "means": self.means.tolist(),
            "sds": self.sds.tolist(),
            "centroids": self.centroids.tolist(),
            "cluster_dims": self.cluster_dims.tolist(),
            "n_iter": self.n_iter,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImputationModel":
        return cls(
            k=int(d["k"]),
            feature_idx=[int(i) for i in d["feature_idx"]],
            means=np.array(d["means"], dtype=float),
            sds=np.array(d["sds"], dtype=float),
            centroids=np.array(d["centroids"], dtype=float),
            cluster_dims=np.array(d["cluster_dims"], dtype=float),
            n_iter=int(d["n_iter"]),
            seed=int(d["seed"]),
        )


def _standardize_fit(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    means = Z.mean(axis=0)
    sds = Z.std(axis=0)
    sds = np.where(sds > 0, sds, 1.0)
    return means, sds


def _kmeans_pp_init(Z: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(Z)
    centroids = np.empty((k, Z.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = Z[first]
    d2 = ((Z - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = Z[int(rng.integers(n))]
        else:
            centroids[j] = Z[int(rng.choice(n, p=d2 / total))]
        d2 = np.minimum(d2, ((Z - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _assign(Z: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = ((Z[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def kmeans_impute_fit(
    X: np.ndarray, dims: np.ndarray, k: int = 7, seed: int = 0, max_iter: int = 300
) -> ImputationModel:
    """Cluster rows on their motion/identity features and learn per-cluster
    mean length/width/draft from the rows that report them.

    dims is (n, 3) with NaN marking missing values. Clusters with no reporting
    member fall back to the global means.
    """
    X = np.asarray(X, dtype=float)
    dims = np.asarray(dims, dtype=float)
    if len(X) < k:
        raise DataError(f"k-means imputation needs at least k={k} rows, got {len(X)}")
    feat_idx = list(ft.CLUSTER_FEATURE_IDX)
    Z = X[:, feat_idx]
    means, sds = _standardize_fit(Z)
    Zs = (Z - means) / sds

    rng = rng_for(seed, "kmeans")
    centroids = _kmeans_pp_init(Zs, k, rng)
    assign = _assign(Zs, centroids)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        for j in range(k):
            mask = assign == j
            if mask.any():
                centroids[j] = Zs[mask].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centroid
                far = int(np.argmax(((Zs - centroids[assign]) ** 2).sum(axis=1)))
                centroids[j] = Zs[far]
        new_assign = _assign(Zs, centroids)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign

    global_means = np.empty(3)
    for d in range(3):
        col = dims[:, d]
        ok = ~np.isnan(col)
        if not ok.any():
            raise DataError("cannot impute: a dimension field is missing in every row")
        global_means[d] = col[ok].mean()
    cluster_dims = np.empty((k, 3))
    for j in range(k):
        mask = assign == j
        for d in range(3):
            col = dims[mask, d]
            ok = ~np.isnan(col)
            cluster_dims[j, d] = col[ok].mean() if ok.any() else global_means[d]

    return ImputationModel(
        k=k,
        feature_idx=feat_idx,
        means=means,
        sds=sds,
        centroids=centroids,
        cluster_dims=cluster_dims,
        n_iter=n_iter,
        seed=seed,
    )


def kmeans_impute_apply(model: ImputationModel, X: np.ndarray, dims: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fill missing dims from each row's nearest cluster and refresh the
    dimension-derived feature slots. Present values are never modified."""
    X = np.array(X, dtype=float, copy=True)
    dims = np.array(dims, dtype=float, copy=True)
    single = X.ndim == 1
    if single:
        X = X[None, :]
        dims = dims[None, :]
    Zs = (X[:, model.feature_idx] - model.means) / model.sds
    assign = _assign(Zs, model.centroids)
    fill = model.cluster_dims[assign]
    missing = np.isnan(dims)
    dims[missing] = fill[missing]
    for col, idx in enumerate(ft.DIMENSION_IDX):
        X[:, idx] = dims[:, col]
    ft.recompute_derived(X)
    if single:
        return X[0], dims[0]
    return X, dims


# ---------------------------------------------------------------------------
# Resampling


def downsample_majority(ds: Dataset, cap: int = 3, seed: int = 0) -> Dataset:
    """Within the majority presence class, keep at most `cap` rows per exact
    barge-count value (chosen uniformly at random); minority rows untouched."""
    has_barge = ds.counts > 0
    n_with = int(has_barge.sum())
    n_without = ds.n - n_with
    majority_with = n_with >= n_without
    keep = np.ones(ds.n, dtype=bool)
    in_majority = has_barge if majority_with else ~has_barge
    for value in np.unique(ds.counts[in_majority]):
        idx = np.nonzero(in_majority & (ds.counts == value))[0]
        if len(idx) > cap:
            rng = rng_for(seed, "downsample", int(value))
            survivors = rng.choice(len(idx), size=cap, replace=False)
            drop = np.setdiff1d(np.arange(len(idx)), survivors)
            keep[idx[drop]] = False
    return ds.subset(np.nonzero(keep)[0])


@dataclass
class SmoteRecord:
    class_id: int
    seed_row: int  # indices into the input dataset
    neighbor_row: int
    pre_repair: np.ndarray


@dataclass
class SmoteReport:
    records: list[SmoteRecord] = field(default_factory=list)


def default_smote_targets(y: np.ndarray, fraction: float = 0.5) -> dict[int, int]:
    """+fraction synthetic rows for every class except the largest."""
    classes, sizes = np.unique(y, return_counts=True)
    largest = classes[int(np.argmax(sizes))]
    return {
        int(c): int(round(fraction * s))
        for c, s in zip(classes, sizes)
        if c != largest
    }


def smote_augment(
    ds: Dataset,
    targets: dict[int, int] | None = None,
    k_neighbors: int = 5,
    seed: int = 0,
) -> tuple[Dataset, SmoteReport]:
    """Interpolating oversampler with feature-semantics repair.

    Each synthetic row draws every continuous feature uniformly from the
    seed-neighbor range and takes each one-hot group from the modal category
    of the seed's nearest same-class neighbours. Repair then restores the
    invariants: sorted speed quartiles, speed-band shares renormalized to one,
    and every product/power slot recomputed from its bases.
    """
    if targets is None:
        targets = default_smote_targets(ds.y)
    report = SmoteReport()
    new_X, new_y, new_counts, new_group = [], [], [], []
    cont = np.array(ft.CONTINUOUS_IDX)
    for class_id in sorted(targets):
        n_new = targets[class_id]
        if n_new <= 0:
            continue
        rows = np.nonzero((ds.y == class_id) & (ds.provenance == REAL))[0]
        if len(rows) < 2:
            raise DataError(f"SMOTE needs at least 2 real rows in class {class_id}, got {len(rows)}")
        k = min(k_neighbors, len(rows) - 1)
        Xc = ds.X[rows][:, cont]
        means, sds = _standardize_fit(Xc)
        Zs = (Xc - means) / sds
        d2 = ((Zs[:, None, :] - Zs[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        neighbor_lists = np.argsort(d2, axis=1, kind="stable")[:, :k]
        rng = rng_for(seed, "smote", int(class_id))
        for _ in range(n_new):
            si = int(rng.integers(len(rows)))
            neighbors = neighbor_lists[si]
            ni = int(neighbors[rng.integers(k)])
            seed_vec = ds.X[rows[si]]
            nbr_vec = ds.X[rows[ni]]
            vec = np.zeros(ft.N_FEATURES)
            lo = np.minimum(seed_vec[cont], nbr_vec[cont])
            hi = np.maximum(seed_vec[cont], nbr_vec[cont])
            vec[cont] = lo + rng.random(len(cont)) * (hi - lo)
            for group_idx in ft.ONE_HOT_GROUPS.values():
                votes = ds.X[rows[neighbors]][:, group_idx].sum(axis=0)
                best = np.nonzero(votes == votes.max())[0]
                if len(best) > 1:
                    chosen = int(np.argmax(seed_vec[group_idx]))
                else:
                    chosen = int(best[0])
                for j, idx in enumerate(group_idx):
                    vec[idx] = 1.0 if j == chosen else 0.0
            report.records.append(
                SmoteRecord(class_id=class_id, seed_row=int(rows[si]), neighbor_row=int(rows[ni]), pre_repair=vec.copy())
            )
            # constraint repair
            q = np.sort(vec[list(ft.QUARTILE_IDX)])
            for idx, val in zip(ft.QUARTILE_IDX, q):
                vec[idx] = val
            p = vec[list(ft.PTST_IDX)]
            total = p.sum()
            if total > 0:
                vec[list(ft.PTST_IDX)] = p / total
            ft.recompute_derived(vec)
            new_X.append(vec)
            new_y.append(class_id)
            new_counts.append(int(ds.counts[rows[si]]))
            new_group.append(ds.group[rows[si]])
    if not new_X:
        return ds.subset(np.arange(ds.n)), report
    return (
        Dataset(
            X=np.vstack([ds.X, np.array(new_X)]),
            y=np.concatenate([ds.y, np.array(new_y, dtype=np.int64)]),
            counts=np.concatenate([ds.counts, np.array(new_counts, dtype=np.int64)]),
            provenance=np.concatenate([ds.provenance, np.array([SYNTHETIC] * len(new_X), dtype=object)]),
            group=np.concatenate([ds.group, np.array(new_group, dtype=object)]),
            class_names=list(ds.class_names),
        ),
        report,
    )


def write_dataset_csv(ds: Dataset, path) -> None:
    """Augmented-dataset export: the labeled-dataset schema with provenance."""
    frame = LabeledFrame(
        trip_ids=[f"row-{i:05d}" for i in range(ds.n)],
        mmsi=[0] * ds.n,
        X=ds.X,
        counts=ds.counts,
        provenance=ds.provenance,
        location=ds.group,
    )
    write_labeled_csv(frame, path)


# ---------------------------------------------------------------------------
# Weights, splits and folds


def presence_class_weights(y: np.ndarray) -> dict[int, float]:
    """Minority presence class weighted 3x the majority."""
    classes, sizes = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise DataError("class weights need at least 2 classes present")
    if sizes[0] == sizes[1]:
        logger.warning("presence classes balanced; treating class %d as minority", classes[0])
        minority = classes[0]
    else:
        minority = classes[int(np.argmin(sizes))]
    return {int(c): (3.0 if c == minority else 1.0) for c in classes}


def sample_weights(y: np.ndarray, weight_map: dict[int, float] | None) -> np.ndarray:
    if weight_map is None:
        return np.ones(len(y))
    return np.array([weight_map.get(int(c), 1.0) for c in y])


def stratified_split(ds: Dataset, test_fraction: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-class proportional split over the real rows; synthetic rows always
    train. Returns (train_idx, test_idx)."""
    if not 0 <= test_fraction < 1:
        raise ValueError("test_fraction must be in [0, 1)")
    real = ds.provenance == REAL
    classes = np.unique(ds.y)
    sizes = {int(c): int(((ds.y == c) & real).sum()) for c in classes}
    for c, s in sizes.items():
        if s == 0:
            raise DataError(f"class {c} has no real rows to split")
    n_real = sum(sizes.values())
    target_total = int(round(n_real * test_fraction))
    quota = {c: s * test_fraction for c, s in sizes.items()}
    alloc = {c: int(round(q)) for c, q in quota.items()}
    # largest-remainder adjustment to hit the global total exactly
    while sum(alloc.values()) > target_total:
        c = max(sorted(alloc), key=lambda c: (alloc[c] - quota[c], alloc[c] > 0))
        if alloc[c] == 0:
            break
        alloc[c] -= 1
    while sum(alloc.values()) < target_total:
        c = min(sorted(alloc), key=lambda c: (alloc[c] - quota[c], -(sizes[c] - alloc[c])))
        if alloc[c] >= sizes[c]:
            break
        alloc[c] += 1
    test_idx = []
    for c in classes:
        rows = np.nonzero((ds.y == c) & real)[0]
        take = alloc[int(c)]
        if take == 0:
            continue
        rng = rng_for(seed, "split", int(c))
        chosen = rng.choice(len(rows), size=take, replace=False)
        test_idx.extend(rows[chosen].tolist())
    test_idx = np.array(sorted(test_idx), dtype=np.int64)
    train_idx = np.setdiff1d(np.arange(ds.n), test_idx)
    return train_idx, test_idx


def stratified_kfold(y: np.ndarray, k: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified k-fold index pairs. Per-fold class counts deviate from the
    perfect proportion by at most 1 and the validation folds partition the
    index set."""
    if k < 2:
        raise ValueError("k must be at least 2")
    y = np.asarray(y)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(y):
        rows = np.nonzero(y == c)[0]
        if len(rows) < k:
            logger.warning("class %s has %d rows for %d folds", c, len(rows), k)
        rng = rng_for(seed, "kfold", int(c))
        perm = rows[rng.permutation(len(rows))]
        for i, row in enumerate(perm):
            folds[(offset + i) % k].append(int(row))
        offset += len(rows)
    out = []
    all_idx = np.arange(len(y))
    for i in range(k):
        val = np.array(sorted(folds[i]), dtype=np.int64)
        train = np.setdiff1d(all_idx, val)
        out.append((train, val))
    return out
