"""Class imbalance handling: binning, per-count downsampling, SMOTE with
constraint repair, class weights and leakage-safe splits.
"""

import numpy as np

from bargecast import features as ft
from bargecast import prep

rng = np.random.default_rng(0)

# barge counts bin into six classes
print("count -> class:", {c: prep.bin_barge_count(c) for c in (1, 2, 4, 5, 12, 13, 20, 21, 29, 30, 42)})
print("class names:   ", prep.BargeClassMap().class_names)

# a skewed little dataset: lots of 10-barge tows, few big ones
from _support import random_valid_features  # noqa: E402

n = 80
counts = np.concatenate([np.full(30, 10), rng.integers(1, 43, 40), np.zeros(10, dtype=int)])
ds = prep.Dataset(
    X=random_valid_features(rng, n),
    y=(counts > 0).astype(np.int64),
    counts=counts,
    provenance=np.array(["real"] * n, dtype=object),
    group=np.array(["loc1"] * n, dtype=object),
    class_names=["without_barge", "with_barge"],
)

capped = prep.downsample_majority(ds, cap=3, seed=0)
print(f"\ndownsampling: {n} rows -> {capped.n} (at most 3 per exact count in the majority class)")
print(f"  rows with count 10: {(ds.counts == 10).sum()} -> {(capped.counts == 10).sum()}")

targets = prep.default_smote_targets(capped.y)
augmented, report = prep.smote_augment(capped, targets=targets, seed=0)
print(f"SMOTE: +{len(report.records)} synthetic rows (targets {targets})")
row = augmented.X[-1]
print("  a synthetic row keeps its structure:")
print(f"    quartiles sorted: {row[list(ft.QUARTILE_IDX)].round(3)}")
print(f"    speed-band shares sum to {row[list(ft.PTST_IDX)].sum():.9f}")
print(f"    Len*Wid == Len x Wid: {row[ft.IDX['Len*Wid']] == row[ft.IDX['Len']] * row[ft.IDX['Wid']]}")

weights = prep.presence_class_weights(augmented.y)
print(f"\npresence class weights (minority 3x): {weights}")

train_idx, test_idx = prep.stratified_split(augmented, test_fraction=0.3, seed=0)
test = augmented.subset(test_idx)
print(f"70/30 split: {len(train_idx)} train / {len(test_idx)} test rows")
print(f"synthetic rows in test: {(test.provenance == 'synthetic').sum()} (always zero)")

folds = prep.stratified_kfold(augmented.y[train_idx], k=5, seed=0)
print("fold validation sizes:", [len(val) for _, val in folds])
