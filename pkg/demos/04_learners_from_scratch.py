"""The learner zoo on one planted problem.

Trains each from-scratch learner on the same 3-class task, then the stacked
ensemble that combines forest and boosting through a logistic meta-model, and
round-trips one model through its JSON artifact.
"""

import tempfile

import numpy as np

from bargecast.learners import (
    load_model,
    predict,
    save_model,
    train_model,
)

rng = np.random.default_rng(3)
n = 240
X = rng.normal(size=(n, 6))
y = (X[:, 0] > 0.6).astype(int) + (X[:, 0] > -0.4).astype(int)  # 3 bands of x0
split = 180
X_train, y_train = X[:split], y[:split]
X_test, y_test = X[split:], y[split:]

kinds = [
    ("cart", {"max_depth": 6}),
    ("rf", {"n_estimators": 100, "max_depth": 8}),
    ("adaboost", {"n_estimators": 60, "learning_rate": 0.8}),
    ("gbdt", {"n_estimators": 60, "learning_rate": 0.1, "min_child_samples": 10}),
    ("knn", {"k": 7}),
    ("stack:rf+adaboost", {"rf": {"n_estimators": 60, "max_depth": 8},
                           "adaboost": {"n_estimators": 60}}),
]
print(f"{n} rows, 3 classes, signal only in feature 0\n")
for kind, params in kinds:
    model = train_model(kind, X_train, y_train, n_classes=3, params=params, seed=0)
    acc = float((predict(model, X_test) == y_test).mean())
    print(f"  {kind:<20} test accuracy {acc:.3f}")

model = train_model("rf", X_train, y_train, n_classes=3, params={"n_estimators": 40}, seed=0)
with tempfile.NamedTemporaryFile(suffix=".json", delete=False) as fh:
    path = fh.name
save_model(model, path, feature_indices=list(range(6)))
clone, meta = load_model(path)
same = bool(np.array_equal(predict(model, X_test), predict(clone, X_test)))
print(f"\nartifact round-trip: predictions identical = {same}, kind = {meta['kind']}, seed = {meta['seed']}")

imp = model.feature_importances()
print("forest importances (impurity decrease):", np.round(imp / imp.sum(), 3))
