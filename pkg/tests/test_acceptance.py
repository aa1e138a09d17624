"""Acceptance suite: every criterion runs at its stated tolerance and prints
one pass/fail line. Run with `pytest tests/test_acceptance.py -v -s`.

The end-to-end criterion (09) trains the full pipeline twice on the 600-vessel
scenario to prove byte-identical reruns; expect several minutes of wall time.
"""

import filecmp
import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from bargecast._util import SOG_UNAVAILABLE
from bargecast import features as ft
from bargecast import prep
from bargecast.ais import clean_records, parse_ais_csv
from bargecast.geo import GeoPoint, haversine_km, load_centerline_geojson
from bargecast.learners import predict, train_adaboost, train_cart, train_gbdt
from bargecast.metrics import accuracy, confusion, precision_recall_f1, roc_auc
from bargecast.pipeline import PipelineConfig, run_training, sensitivity_segment, transferability_run
from bargecast.prep import stratified_kfold
from bargecast.synth import SyntheticScenario, generate_synthetic
from bargecast.tuning import ParamSpec, rfe_select, tpe_optimize

from conftest import make_record
from test_prep import random_valid_features


def _report(num, name, fn):
    try:
        fn()
    except BaseException:
        print(f"\nACCEPTANCE {num:02d} {name}: FAIL")
        raise
    print(f"\nACCEPTANCE {num:02d} {name}: PASS")


def test_criterion_01_metric_oracles():
    def run():
        t0 = time.monotonic()
        rng = np.random.default_rng(101)
        for _ in range(1000):
            k = int(rng.integers(2, 7))
            n = int(rng.integers(4, 50))
            y_true = rng.integers(0, k, n)
            y_pred = rng.integers(0, k, n)
            cm = confusion(y_true, y_pred, k)
            scores = precision_recall_f1(cm)
            # brute-force tuple counting, vectorised per class
            for c in range(k):
                tp = int(((y_true == c) & (y_pred == c)).sum())
                fp = int(((y_true != c) & (y_pred == c)).sum())
                fn = int(((y_true == c) & (y_pred != c)).sum())
                p = tp / (tp + fp) if tp + fp else 0.0
                r = tp / (tp + fn) if tp + fn else 0.0
                f1 = 2 * p * r / (p + r) if p + r else 0.0
                assert abs(scores.precision[c] - p) <= 1e-12
                assert abs(scores.recall[c] - r) <= 1e-12
                assert abs(scores.f1[c] - f1) <= 1e-12
            assert abs(accuracy(cm) - float((y_true == y_pred).mean())) <= 1e-12
        for _ in range(1000):
            n = int(rng.integers(4, 60))
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            scores_vec = np.round(rng.random(n), 1)  # coarse grid forces ties
            auc, _ = roc_auc(y, scores_vec, mode="binary")
            pos = scores_vec[y == 1][:, None]
            neg = scores_vec[y == 0][None, :]
            n_pairs = int((y == 1).sum()) * int((y == 0).sum())
            oracle = float(((pos > neg).sum() + 0.5 * (pos == neg).sum()) / n_pairs)
            assert auc == oracle
        assert time.monotonic() - t0 < 10.0

    _report(1, "metric-oracle-equivalence", run)


def test_criterion_02_haversine_references():
    def law_of_cosines(p1, p2):
        phi1, phi2 = math.radians(p1.lat), math.radians(p2.lat)
        dlam = math.radians(p2.lon - p1.lon)
        c = math.sin(phi1) * math.sin(phi2) + math.cos(phi1) * math.cos(phi2) * math.cos(dlam)
        return 6371.0 * math.acos(min(1.0, max(-1.0, c)))

    pairs = [
        (GeoPoint(0, 0), GeoPoint(0, 0)),          # identical
        (GeoPoint(0, 0), GeoPoint(0, 180)),        # antipodal
        (GeoPoint(0, 0), GeoPoint(0, 1)),          # 1 deg longitude at equator
        (GeoPoint(35.15, -90.05), GeoPoint(38.63, -90.20)),   # Memphis - St. Louis
        (GeoPoint(29.95, -90.07), GeoPoint(35.15, -90.05)),   # New Orleans - Memphis
        (GeoPoint(51.5, -0.12), GeoPoint(40.71, -74.01)),     # London - New York
        (GeoPoint(-33.86, 151.21), GeoPoint(35.68, 139.69)),  # Sydney - Tokyo
        (GeoPoint(90, 0), GeoPoint(-90, 0)),       # pole to pole
        (GeoPoint(10, 10), GeoPoint(10.001, 10.001)),         # near-coincident
        (GeoPoint(45, 170), GeoPoint(45, -170)),   # across the antimeridian
    ]

    def run():
        for p1, p2 in pairs:
            ours = haversine_km(p1, p2)
            ref = law_of_cosines(p1, p2)
            if ref < 1e-6:
                assert ours < 1e-6
            else:
                assert abs(ours - ref) / ref <= 0.005
        assert haversine_km(GeoPoint(0, 0), GeoPoint(0, 1)) == pytest.approx(111.195, rel=0.005)
        assert haversine_km(GeoPoint(0, 0), GeoPoint(0, 180)) == pytest.approx(20015.1, rel=0.005)

    _report(2, "haversine-reference-points", run)


def test_criterion_03_smote_validity():
    def run():
        cont = np.array(ft.CONTINUOUS_IDX)
        for seed in range(50):
            rng = np.random.default_rng(1000 + seed)
            n = int(rng.integers(20, 60))
            k = int(rng.integers(2, 4))
            ds = prep.Dataset(
                X=random_valid_features(rng, n),
                y=rng.integers(0, k, n),
                counts=rng.integers(1, 43, n),
                provenance=np.array(["real"] * n, dtype=object),
                group=np.array(["g"] * n, dtype=object),
                class_names=[str(i) for i in range(k)],
            )
            targets = {c: 4 for c in range(k) if (ds.y == c).sum() >= 2}
            out, rpt = prep.smote_augment(ds, targets=targets, seed=seed)
            assert len(rpt.records) == sum(targets.values())
            for rec, row in zip(rpt.records, out.X[n:]):
                lo = np.minimum(ds.X[rec.seed_row][cont], ds.X[rec.neighbor_row][cont])
                hi = np.maximum(ds.X[rec.seed_row][cont], ds.X[rec.neighbor_row][cont])
                assert (rec.pre_repair[cont] >= lo - 1e-12).all()
                assert (rec.pre_repair[cont] <= hi + 1e-12).all()
                q = row[list(ft.QUARTILE_IDX)]
                assert q[0] <= q[1] <= q[2]
                assert abs(row[list(ft.PTST_IDX)].sum() - 1.0) <= 1e-9
                for group in ft.ONE_HOT_GROUPS.values():
                    assert row[group].sum() == 1.0
                assert row[ft.IDX["(SOG_Q2)^2_a"]] == row[ft.IDX["SOG_Q2"]] * row[ft.IDX["SOG_Q2"]]
                assert row[ft.IDX["(SOG_Q2)^2_b"]] == row[ft.IDX["(SOG_Q2)^2_a"]]
                assert row[ft.IDX["Len*Wid"]] == row[ft.IDX["Len"]] * row[ft.IDX["Wid"]]
                assert row[ft.IDX["Len*Wid*SOG_Q2"]] == row[ft.IDX["Len"]] * row[ft.IDX["Wid"]] * row[ft.IDX["SOG_Q2"]]
                assert row[ft.IDX["(Len)^3"]] == row[ft.IDX["Len"]] * row[ft.IDX["Len"]] * row[ft.IDX["Len"]]
                assert row[ft.IDX["Acc_SD*SOG_SD"]] == row[ft.IDX["Acc_SD"]] * row[ft.IDX["SOG_SD"]]

    _report(3, "smote-synthetic-validity", run)


def test_criterion_04_stratified_folds():
    def run():
        for seed in range(100):
            rng = np.random.default_rng(2000 + seed)
            k_classes = int(rng.integers(2, 6))
            n = int(rng.integers(30, 120))
            y = rng.integers(0, k_classes, n)
            folds = stratified_kfold(y, k=5, seed=seed)
            all_val = np.concatenate([val for _, val in folds])
            assert sorted(all_val.tolist()) == list(range(n))
            for train, val in folds:
                assert not set(train) & set(val)
                assert len(train) + len(val) == n
                for c in range(k_classes):
                    perfect = (y == c).sum() / 5
                    assert abs((y[val] == c).sum() - perfect) <= 1.0

    _report(4, "stratified-fold-proportions", run)


def _separable_fixture():
    rng = np.random.default_rng(42)
    X = rng.normal(size=(120, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    return X, y


def test_criterion_05_learner_sanity():
    def run():
        X, y = _separable_fixture()
        ada = train_adaboost(X, y, n_estimators=50, seed=0)
        assert (predict(ada, X) == y).mean() == 1.0

        gbdt = train_gbdt(X, y, n_estimators=40, learning_rate=0.1, min_child_samples=5)
        losses = gbdt.train_loss
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

        # leaf Newton step vs finite differences of the logistic loss
        rng = np.random.default_rng(7)
        yy = rng.integers(0, 2, 60)
        const_X = np.ones((60, 2))
        model = train_gbdt(const_X, yy, n_estimators=1, min_child_samples=1)
        leaf_value = model.trees[0][0].value[0]
        y0 = (yy == 0).astype(float)

        def loss(v):
            return float(np.sum(np.log(1 + np.exp(v)) - y0 * v))

        eps = 1e-5
        g = (loss(eps) - loss(-eps)) / (2 * eps)
        h = (loss(eps) - 2 * loss(0.0) + loss(-eps)) / eps**2
        assert abs(leaf_value - (-g / (h + 1.0))) <= 1e-4

    _report(5, "learner-sanity", run)


def test_criterion_06_tpe_beats_random():
    space = [ParamSpec("x", "float", 0.0, 1.0)]

    def objective(params):
        return (params["x"] - 0.3) ** 2

    def run():
        tpe_best, random_best = [], []
        for seed in range(20):
            tpe = tpe_optimize(space, objective, n_trials=50, n_startup=10, seed=seed)
            rand = tpe_optimize(space, objective, n_trials=50, n_startup=50, seed=seed)
            tpe_best.append(tpe.best_trial.value)
            random_best.append(rand.best_trial.value)
        assert float(np.median(tpe_best)) <= float(np.median(random_best))

    _report(6, "tpe-beats-random-search", run)


def test_criterion_07_rfe_recovers_planted_feature():
    def run():
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(3000 + seed)
            X = rng.normal(size=(120, 10))
            y = (X[:, 0] > 0).astype(int)  # feature 0 alone determines the label
            folds = stratified_kfold(y, k=5, seed=seed)

            def factory(Xt, yt, wt):
                return train_cart(Xt, yt, sample_weights=wt, n_classes=2, max_depth=4)

            result = rfe_select(factory, X, y, None, folds, min_features=1, seed=seed)
            if 0 in result.best_subset:
                hits += 1
        assert hits >= 19  # >= 95% of 20 runs

    _report(7, "rfe-planted-feature-recovery", run)


def test_criterion_08_class_binning():
    def run():
        expected_pairs = {1: 0, 4: 1, 5: 2, 12: 2, 13: 3, 20: 3, 21: 4, 29: 4, 30: 5, 42: 5}
        bins = [(1, 1), (2, 4), (5, 12), (13, 20), (21, 29), (30, 42)]
        for count in range(1, 43):
            cls = prep.bin_barge_count(count)
            lo, hi = bins[cls]
            assert lo <= count <= hi
            if count in expected_pairs:
                assert cls == expected_pairs[count]

    _report(8, "barge-count-binning", run)


@pytest.fixture(scope="module")
def end_to_end(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance-e2e")
    scn = SyntheticScenario(seed=11)  # 4 locations x 150 vessels, moderate noise
    info = generate_synthetic(scn, root / "data")
    cfg = PipelineConfig(
        ais_csv=info["ais_csv"],
        river_geojson=info["river_geojson"],
        observations_csv=info["observations_csv"],
        seed=11,
        n_trials=50,
        n_startup=10,
    )
    t0 = time.monotonic()
    result = run_training(cfg, root / "run1")
    elapsed = time.monotonic() - t0
    return root, cfg, result, elapsed


def test_criterion_09_end_to_end(end_to_end):
    root, cfg, result, elapsed = end_to_end

    def run():
        assert result.presence.report.f1_weighted >= 0.90
        assert result.quantity.report.f1_weighted >= 0.75
        assert elapsed <= 600.0
        run_training(cfg, root / "run2")
        for rel in (
            "artifacts/model.json",
            "reports/presence_report.json",
            "reports/quantity_report.json",
            "reports/presence_confusion.csv",
            "reports/quantity_confusion.csv",
            "data/labeled.csv",
            "manifest.json",
        ):
            assert filecmp.cmp(root / "run1" / rel, root / "run2" / rel, shallow=False), rel

    _report(9, "end-to-end-synthetic", run)


def test_criterion_10_segment_size_sensitivity(tmp_path):
    def run():
        scn = SyntheticScenario(
            n_locations=4, vessels_per_location=60, seed=13,
            cross_track_noise_miles=0.004, gap_rate=0.0,
        )
        info = generate_synthetic(scn, tmp_path)
        records, _ = parse_ais_csv(info["ais_csv"])
        centerline = load_centerline_geojson(info["river_geojson"])
        sizes = (2.0, 1.0, 0.5, 0.3, 0.1)
        rows = sensitivity_segment(records, centerline, sizes=sizes, seed=0)
        errors = [r["mean_error_miles"] for r in rows]
        rho, _ = spearmanr(np.arange(len(sizes)), errors)
        assert rho <= -0.9

    _report(10, "segment-size-sensitivity", run)


def test_criterion_11_cleaning_fixture():
    def run():
        # 20 rows covering every cleaning rule; rows marked keep=True must
        # survive exactly
        rows = [
            (0.5, 0, False),            # below 1 knot
            (0.0, 0, False),            # zero speed
            (0.99, 0, False),           # boundary: still below 1
            (1.0, 0, True),             # exactly 1 knot is kept
            (26.0, 0, False),           # above 25 knots
            (25.0, 0, True),            # exactly 25 is kept
            (25.1, 0, False),
            (SOG_UNAVAILABLE, 0, True), # sentinel speed retained
            (6.0, 1, False),            # at anchor
            (6.0, 2, False),            # not under command
            (6.0, 0, True),
            (6.0, 12, True),
            (6.0, 15, True),
            (3.2, 0, True),
            (0.2, 1, False),            # slow and anchored
            (30.0, 2, False),           # fast and not under command
            (SOG_UNAVAILABLE, 1, False),  # sentinel but anchored
            (12.5, 0, True),
            (24.9, 5, True),
            (0.9, 12, False),           # slow despite pushing status
        ]
        records = [make_record(timestamp=float(i), sog=s, status=st) for i, (s, st, _) in enumerate(rows)]
        kept, report = clean_records(records)
        expected = [r for r, (_, _, keep) in zip(records, rows) if keep]
        assert kept == expected
        assert report.input == 20
        assert report.kept == len(expected)
        assert report.kept + report.removed_slow + report.removed_fast + report.removed_status == 20

    _report(11, "cleaning-rules-fixture", run)


def test_criterion_12_transferability(tmp_path):
    def run():
        scn = SyntheticScenario(
            n_locations=4, vessels_per_location=60, seed=17,
            p_no_barge=0.15,
            location_speed_shift_kn=(0.0, 0.0, 0.0, -1.8),
        )
        info = generate_synthetic(scn, tmp_path)
        cfg = PipelineConfig(
            ais_csv=info["ais_csv"], river_geojson=info["river_geojson"],
            observations_csv=info["observations_csv"], seed=17,
        )
        from bargecast.pipeline import build_labeled_frame

        frame, _ = build_labeled_frame(cfg)
        holdout, indomain = transferability_run(frame, "loc4", seed=17, kind="stack:rf+adaboost")
        assert holdout.f1_weighted <= indomain.f1_weighted
        assert holdout.per_class.support.sum() > 0

    _report(12, "spatial-transferability", run)
