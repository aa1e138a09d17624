import json
import math

import numpy as np
import pytest

from bargecast._util import DataError
from bargecast.learners import (
    fit_logistic_meta,
    load_model,
    model_kind,
    predict,
    predict_proba,
    save_model,
    train_adaboost,
    train_cart,
    train_gbdt,
    train_knn,
    train_model,
    train_random_forest,
    train_stacked,
)
from bargecast.learners.tree import _best_split


def separable_2d(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = (X[:, 0] + 0.3 * X[:, 1] > 0).astype(int)
    return X, y


class TestCart:
    def test_separable_1d_depth_one(self):
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0, 0, 1, 1])
        tree = train_cart(X, y)
        assert np.array_equal(predict(tree, X), y)
        assert tree.n_nodes == 3  # root + 2 leaves

    def test_pure_labels_single_leaf(self):
        X = np.array([[1.0], [2.0], [3.0]])
        tree = train_cart(X, np.zeros(3, dtype=int), n_classes=2)
        assert tree.n_nodes == 1
        assert tree.proba[0].tolist() == [1.0, 0.0]

    def test_weighted_gini_hand_value(self):
        # 2 vs 2 with unit weights: parent Gini 0.5; a clean split gains 0.5
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 0, 1, 1])
        w = np.ones(4)
        found = _best_split(X, y, w, 2, 1, 4.0, 0.5)
        gain, fi, thr = found
        assert gain == pytest.approx(0.5)
        assert thr == pytest.approx(1.5)

    def test_zero_weights_rejected(self):
        with pytest.raises(ValueError):
            train_cart(np.ones((2, 1)), np.array([0, 1]), sample_weights=np.zeros(2))

    def test_duplicate_row_equals_double_weight(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [6.0]])
        y = np.array([0, 0, 1, 1, 0, 1])
        dup = np.vstack([X, X[2:3]])
        y_dup = np.concatenate([y, y[2:3]])
        w = np.ones(6)
        w[2] = 2.0
        t_w = train_cart(X, y, sample_weights=w)
        t_dup = train_cart(dup, y_dup)
        grid = np.linspace(-1, 7, 50)[:, None]
        assert np.array_equal(t_w.predict_proba(grid), t_dup.predict_proba(grid))

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(3)
        X = rng.integers(0, 20, size=(40, 4)).astype(float)
        y = rng.integers(0, 3, 40)
        t1 = train_cart(X, y, n_classes=3)
        perm = rng.permutation(40)
        t2 = train_cart(X[perm], y[perm], n_classes=3)
        assert t1.feature.tolist() == t2.feature.tolist()
        assert t1.threshold.tolist() == t2.threshold.tolist()

    def test_tie_breaks_prefer_lower_feature(self):
        # identical duplicate columns: all splits must land on column 0
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([0, 1, 0, 1])
        tree = train_cart(X, y)
        used = set(tree.feature[tree.feature >= 0].tolist())
        assert used <= {0}

    def test_min_samples_leaf_respected(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(30, 3))
        y = rng.integers(0, 2, 30)
        tree = train_cart(X, y, min_samples_leaf=5)
        leaves = tree.n_samples[tree.feature == -1]
        assert (leaves >= 5).all()

    def test_max_depth_zero_is_leaf(self):
        X, y = separable_2d()
        tree = train_cart(X, y, max_depth=0)
        assert tree.n_nodes == 1


class TestRandomForest:
    def test_selected_presence_configuration_trains(self):
        X, y = separable_2d(80)
        model = train_random_forest(X, y, n_estimators=200, max_depth=5, seed=1)
        assert len(model.trees) == 200
        assert (predict(model, X) == y).mean() > 0.9

    def test_single_row(self):
        model = train_random_forest(np.array([[1.0]]), np.array([1]), n_classes=2, n_estimators=3, seed=0)
        assert predict(model, np.array([[1.0]]))[0] == 1

    def test_same_seed_identical_members(self, tmp_path):
        X, y = separable_2d(40, seed=2)
        a = train_random_forest(X, y, n_estimators=10, seed=9)
        b = train_random_forest(X, y, n_estimators=10, seed=9)
        save_model(a, tmp_path / "a.json")
        save_model(b, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_importances_shape(self):
        X, y = separable_2d(50)
        model = train_random_forest(X, y, n_estimators=5, seed=0)
        imp = model.feature_importances()
        assert imp.shape == (2,)
        assert imp[0] > imp[1]  # x0 carries the signal


class TestAdaBoost:
    def test_separable_training_error_zero_within_rounds(self):
        X, y = separable_2d(50, seed=5)
        model = train_adaboost(X, y, n_estimators=10, seed=0)
        assert (predict(model, X) == y).mean() == 1.0

    def test_alpha_formula(self):
        # first stump errs on exactly 1 of 4 equally weighted rows:
        # err 0.25, K=2 -> alpha = ln 3
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 1, 0, 1])  # no stump is perfect; best errs once
        model = train_adaboost(X, y, n_estimators=1, learning_rate=1.0)
        assert model.alphas[0] == pytest.approx(math.log(3.0))

    def test_selected_presence_configuration(self):
        X, y = separable_2d(60)
        model = train_adaboost(X, y, n_estimators=50, learning_rate=1.0, seed=0)
        assert model.params == {"n_estimators": 50, "learning_rate": 1.0}

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            train_adaboost(np.ones((3, 1)), np.zeros(3, dtype=int))

    def test_duplicate_row_equals_double_weight(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0], [5.0], [6.0]])
        y = np.array([0, 1, 0, 1, 0, 1])
        w = np.ones(6)
        w[3] = 2.0
        a = train_adaboost(X, y, sample_weights=w, n_estimators=5)
        b = train_adaboost(
            np.vstack([X, X[3:4]]), np.concatenate([y, y[3:4]]), n_estimators=5
        )
        assert a.alphas == pytest.approx(b.alphas)
        grid = np.linspace(-1, 7, 30)[:, None]
        assert np.allclose(a.predict_proba(grid), b.predict_proba(grid))

    def test_multiclass_samme(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(90, 2))
        y = (X[:, 0] > 0.5).astype(int) + (X[:, 0] > -0.5).astype(int)
        model = train_adaboost(X, y, n_classes=3, n_estimators=40, seed=0)
        assert (predict(model, X) == y).mean() > 0.85


class TestGbdt:
    def test_selected_quantity_configuration_trains(self):
        X, y = separable_2d(80)
        model = train_gbdt(X, y, n_estimators=50, max_depth=-1, learning_rate=0.1,
                           num_leaves=31, min_child_samples=20, seed=0)
        assert len(model.trees) == 50
        assert (predict(model, X) == y).mean() > 0.9

    def test_constant_features_give_uniform_probability(self):
        X = np.ones((20, 3))
        y = np.array([0, 1] * 10)
        model = train_gbdt(X, y, n_estimators=1, min_child_samples=1)
        proba = predict_proba(model, X)
        assert np.allclose(proba, 0.5)

    def test_training_loss_monotone_on_separable_fixture(self):
        X, y = separable_2d(100, seed=7)
        model = train_gbdt(X, y, n_estimators=50, learning_rate=0.1, min_child_samples=5)
        losses = model.train_loss
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
        assert losses[-1] < losses[0]

    def test_root_leaf_value_matches_finite_difference_newton_step(self):
        # constant features force a root-only tree; its value must equal the
        # Newton step of the class-0 logistic loss at F=0, which we estimate
        # independently by finite differences
        rng = np.random.default_rng(8)
        y = rng.integers(0, 2, 50)
        X = np.ones((50, 2))
        model = train_gbdt(X, y, n_estimators=1, min_child_samples=1)
        leaf_value = model.trees[0][0].value[0]

        y0 = (y == 0).astype(float)

        def loss(v):
            return float(np.sum(np.log(1 + np.exp(v)) - y0 * v))

        eps = 1e-5
        g = (loss(eps) - loss(-eps)) / (2 * eps)          # = sum(p - y0) at v=0
        h = (loss(eps) - 2 * loss(0.0) + loss(-eps)) / eps**2
        expected = -g / (h + 1.0)
        assert leaf_value == pytest.approx(expected, abs=1e-4)

    def test_num_leaves_cap(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(200, 4))
        y = rng.integers(0, 2, 200)
        model = train_gbdt(X, y, n_estimators=1, num_leaves=4, min_child_samples=1)
        tree = model.trees[0][0]
        assert (tree.feature == -1).sum() <= 4


class TestKnn:
    def test_exact_row_k1(self):
        X = np.array([[0.0, 0.0], [5.0, 5.0]])
        y = np.array([0, 1])
        model = train_knn(X, y, k=1)
        assert predict_proba(model, X[:1])[0].tolist() == [1.0, 0.0]

    def test_k_equals_n_gives_global_distribution(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 0, 0, 1])
        model = train_knn(X, y, k=4)
        assert predict_proba(model, np.array([[10.0]]))[0].tolist() == [0.75, 0.25]

    def test_distance_tie_prefers_lower_index(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([1, 0])
        model = train_knn(X, y, k=1)
        # query at 0 is equidistant; row 0 wins
        assert predict(model, np.array([[0.0]]))[0] == 1

    def test_k_larger_than_n_rejected(self):
        with pytest.raises(ValueError):
            train_knn(np.ones((2, 1)), np.array([0, 1]), k=3)


class _MemorizerModel:
    """Test double: perfect on training rows, uniform on anything unseen."""

    def __init__(self, X, y, n_classes):
        self.keys = {tuple(row) for row in X.tolist()}
        self.lookup = {tuple(row): int(label) for row, label in zip(X.tolist(), y)}
        self.n_classes = n_classes

    def predict_proba(self, X):
        out = np.full((len(X), self.n_classes), 1.0 / self.n_classes)
        for i, row in enumerate(X.tolist()):
            label = self.lookup.get(tuple(row))
            if label is not None:
                out[i] = 0.0
                out[i, label] = 1.0
        return out


class TestStacking:
    def test_meta_feature_width(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 6, 60)
        model = train_model("stack:rf+adaboost", X, y, n_classes=6,
                            params={"rf": {"n_estimators": 5}, "adaboost": {"n_estimators": 5}}, seed=0)
        assert model.meta.W.shape == (2 * 6 + 1, 6)
        assert model.params["base_kinds"] == ["rf", "adaboost"]

    def test_oracle_base_dominates(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(80, 2))
        y = (X[:, 0] > 0).astype(int)

        def oracle_factory(Xt, yt, wt):
            class Oracle:
                def predict_proba(self, Xq):
                    p = (Xq[:, 0] > 0).astype(float)
                    return np.column_stack([1 - p, p])
            return Oracle()

        def weak_factory(Xt, yt, wt):
            return train_knn(Xt, yt, n_classes=2, k=len(Xt))

        stacked = train_stacked([oracle_factory, weak_factory], X, y, n_classes=2, seed=0)
        base_acc = (predict(stacked.bases[0], X) == y).mean()
        assert (predict(stacked, X) == y).mean() >= base_acc

    def test_meta_features_are_out_of_fold(self):
        # a memorizing base is perfect in-fold; if OOF discipline held, the
        # stacking meta-features for each row came from a model that never saw
        # it, so the recorded fold assignment must place every row out of the
        # base model's training fold
        rng = np.random.default_rng(12)
        X = rng.normal(size=(40, 2))
        y = rng.integers(0, 2, 40)

        seen_by_fold = {}
        fold_counter = [0]

        def memorizer_factory(Xt, yt, wt):
            model = _MemorizerModel(Xt, yt, 2)
            seen_by_fold[fold_counter[0]] = model.keys
            fold_counter[0] += 1
            return model

        stacked = train_stacked([memorizer_factory, memorizer_factory], X, y, n_classes=2, seed=3)
        # first 5 factory calls built the OOF models for base 0
        for i, row in enumerate(X.tolist()):
            fold = stacked.fold_assignment[i]
            assert tuple(row) not in seen_by_fold[fold]

    def test_requires_two_bases(self):
        with pytest.raises(ValueError):
            train_stacked([lambda X, y, w: None], np.ones((4, 1)), np.array([0, 1, 0, 1]))

    def test_logistic_meta_converges_on_separable(self):
        rng = np.random.default_rng(13)
        F = rng.normal(size=(100, 2))
        y = (F[:, 0] > 0).astype(int)
        meta = fit_logistic_meta(F, y, n_classes=2)
        pred = np.argmax(meta.predict_proba(F), axis=1)
        assert (pred == y).mean() > 0.95


class TestPredictContract:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(50, 3))
        y = rng.integers(0, 3, 50)
        for kind, params in [
            ("cart", {}), ("rf", {"n_estimators": 5}), ("adaboost", {"n_estimators": 5}),
            ("gbdt", {"n_estimators": 3, "min_child_samples": 5}), ("knn", {"k": 3}),
        ]:
            model = train_model(kind, X, y, n_classes=3, params=params, seed=0)
            proba = predict_proba(model, X)
            assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)

    def test_argmax_tie_breaks_low(self):
        X = np.ones((4, 2))
        y = np.array([0, 1, 0, 1])
        model = train_knn(X, y, k=4)
        assert predict(model, np.array([[1.0, 1.0]]))[0] == 0

    def test_feature_width_mismatch_rejected(self):
        X, y = separable_2d(30)
        model = train_cart(X, y)
        with pytest.raises(ValueError):
            model.predict_proba(np.ones((2, 5)))

    def test_zero_impurity_leaves_one_hot(self):
        X = np.array([[-1.0], [-2.0], [1.0], [2.0]])
        y = np.array([0, 0, 1, 1])
        tree = train_cart(X, y)
        proba = predict_proba(tree, X)
        assert set(np.unique(proba)) == {0.0, 1.0}


class TestSerialization:
    def fit_all(self, seed=0):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(40, 3))
        y = rng.integers(0, 2, 40)
        return [
            train_cart(X, y),
            train_random_forest(X, y, n_estimators=4, seed=1),
            train_adaboost(X, y, n_estimators=4, seed=1),
            train_gbdt(X, y, n_estimators=2, min_child_samples=5),
            train_knn(X, y, k=3),
            train_model("stack:rf+adaboost", X, y, n_classes=2,
                        params={"rf": {"n_estimators": 3}, "adaboost": {"n_estimators": 3}}, seed=2),
        ], X

    def test_roundtrip_predictions_and_bytes(self, tmp_path):
        models, X = self.fit_all()
        for i, model in enumerate(models):
            path = tmp_path / f"m{i}.json"
            save_model(model, path, feature_indices=[0, 1, 2])
            loaded, meta = load_model(path)
            assert np.allclose(predict_proba(model, X), predict_proba(loaded, X))
            assert meta["feature_indices"] == [0, 1, 2]
            path2 = tmp_path / f"m{i}b.json"
            save_model(loaded, path2, feature_indices=[0, 1, 2])
            assert path.read_bytes() == path2.read_bytes()

    def test_version_mismatch_rejected(self, tmp_path):
        models, _ = self.fit_all()
        path = tmp_path / "m.json"
        save_model(models[0], path)
        data = json.loads(path.read_text())
        data["format_version"] = 99
        path.write_text(json.dumps(data))
        with pytest.raises(DataError, match="format_version"):
            load_model(path)

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(DataError):
            load_model(path)

    def test_artifact_records_seed_and_config_hash(self, tmp_path):
        models, _ = self.fit_all()
        path = tmp_path / "m.json"
        save_model(models[1], path)
        data = json.loads(path.read_text())
        assert data["seed"] == 1
        assert len(data["config_hash"]) == 16
        assert model_kind(models[1]) == "rf"
