"""End-to-end orchestration: ingest -> river path -> matching -> features ->
imputation -> per-stage preparation, feature selection and tuning -> final
hierarchical model -> held-out evaluation, plus the three study harnesses
(segment-size sensitivity, class-grouping sensitivity, spatial transfer).

Outputs land under a fixed layout (artifacts/, reports/, logs/, data/) and
are byte-identical across reruns with the same config and inputs; wall-clock
timestamps only ever go to logs/.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass

import numpy as np

from ._util import DataError, config_hash, derive_seed, rng_for, write_json
from . import features as ft
from .ais import buffer_filter, clean_records, parse_ais_csv, split_trips
from .geo import (
    assign_and_cog,
    average_path,
    build_segments,
    distance_to_polyline_miles,
    load_centerline_geojson,
    write_polyline_geojson,
    write_segment_csv,
)
from .hierarchy import HierarchicalModel, impute_and_predict, save_hierarchical
from .learners import predict, predict_proba, train_model
from .matching import match_observations, parse_observations
from .metrics import ConfusionMatrix, EvalReport, emit_report, evaluate, precision_recall_f1
from .prep import (
    BargeClassMap,
    Dataset,
    LabeledFrame,
    REAL,
    default_smote_targets,
    downsample_majority,
    kmeans_impute_apply,
    kmeans_impute_fit,
    presence_class_weights,
    presence_dataset,
    quantity_dataset,
    sample_weights,
    smote_augment,
    stratified_kfold,
    stratified_split,
    write_dataset_csv,
)
from .tuning import SELECTED_PARAMS, SPACES, cross_validate, rfe_select, tpe_optimize

logger = logging.getLogger(__name__)

# lightweight forest used only to rank features inside RFE for stacked stages
RFE_PROBE_PARAMS = {"n_estimators": 60, "max_depth": 10, "min_samples_split": 4, "min_samples_leaf": 2}


@dataclass
class PipelineConfig:
    ais_csv: str = ""
    river_geojson: str = ""
    observations_csv: str = ""
    segment_length_miles: float = 0.3
    buffer_miles: float = 1.0
    session_gap_minutes: float = 60.0
    match_tolerance_s: float = 900.0
    seed: int = 7
    presence_test_fraction: float = 0.30
    quantity_test_fraction: float = 0.15
    downsample_cap: int = 3
    smote_fraction: float = 0.5
    smote_k_neighbors: int = 5
    imputation_k: int = 7
    presence_kind: str = "adaboost"
    quantity_kind: str = "stack:rf+adaboost"
    n_trials: int = 50
    n_startup: int = 10
    rfe_step: int = 6
    rfe_min_features: int = 4
    cv_folds: int = 5
    stack_fold_count: int = 5

    def validate(self):
        for name in ("presence_test_fraction", "quantity_test_fraction"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise DataError(f"{name} must be in (0, 1), got {v}")
        for name in ("ais_csv", "river_geojson", "observations_csv"):
            p = getattr(self, name)
            if not p or not os.path.exists(p):
                raise DataError(f"{name} path does not exist: {p!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, path, overrides: dict | None = None) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        if overrides:
            data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass
class StageResult:
    kind: str
    feature_subset: list
    tuned_params: dict
    rfe_curve: list
    report: EvalReport
    model: object


@dataclass
class RunResult:
    out_dir: str
    manifest: dict
    presence: StageResult
    quantity: StageResult
    artifact_path: str


def _ensure_dirs(out_dir):
    paths = {}
    for sub in ("artifacts", "reports", "logs", "data"):
        p = os.path.join(out_dir, sub)
        os.makedirs(p, exist_ok=True)
        paths[sub] = p
    return paths


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def build_labeled_frame(config: PipelineConfig, data_dir=None) -> tuple[LabeledFrame, dict]:
    """Ingest AIS + observations and produce the labeled feature table."""
    records, parse_report = parse_ais_csv(config.ais_csv)
    kept, clean_report = clean_records(records)
    clean_report.parse_skipped = parse_report.skipped
    centerline = load_centerline_geojson(config.river_geojson)
    kept = buffer_filter(kept, centerline, config.buffer_miles)
    trips = split_trips(kept, config.session_gap_minutes)

    path = build_segments(centerline, config.segment_length_miles)
    path = assign_and_cog(path, kept)
    avg = average_path(path)

    observations, obs_report = parse_observations(config.observations_csv)
    matches, unmatched = match_observations(
        trips, observations, avg,
        tolerance_s=config.match_tolerance_s,
        segment_length_miles=config.segment_length_miles,
    )
    trips_by_id = {t.trip_id: t for t in trips}
    vectors = {}
    extraction_failures = 0
    for m in matches:
        try:
            vectors[m.trip_id] = ft.extract_features(trips_by_id[m.trip_id]).values
        except DataError:
            extraction_failures += 1
    matches = [m for m in matches if m.trip_id in vectors]
    if not matches:
        raise DataError("no matched trips produced usable feature vectors")

    frame = LabeledFrame(
        trip_ids=[m.trip_id for m in matches],
        mmsi=[m.mmsi for m in matches],
        X=np.array([vectors[m.trip_id] for m in matches]),
        counts=np.array([m.barge_count for m in matches], dtype=np.int64),
        provenance=np.array([m.provenance for m in matches], dtype=object),
        location=np.array([m.location_id for m in matches], dtype=object),
    )
    info = {
        "cleaning": clean_report.to_dict(),
        "records_in_buffer": len(kept),
        "trips": len(trips),
        "observations": len(observations),
        "observation_parse": obs_report,
        "matches": frame.n,
        "unmatched": unmatched,
        "feature_extraction_failures": extraction_failures,
    }
    if data_dir:
        write_polyline_geojson(avg, os.path.join(data_dir, "average_path.geojson"))
        write_segment_csv(path, os.path.join(data_dir, "segments.csv"))
    return frame, info


def _smote_targets_for(ds: Dataset, fraction: float) -> dict[int, int]:
    targets = default_smote_targets(ds.y, fraction)
    # augmentation needs at least two real parents per class
    return {
        c: t
        for c, t in targets.items()
        if ((ds.y == c) & (ds.provenance == REAL)).sum() >= 2
    }


def _tune_kind(kind, stage, X, y, w, folds, n_trials, n_startup, seed, log_path, space=None):
    """One TPE study for a single base kind; objective is 1 - mean CV weighted F1."""
    if space is None:
        space = SPACES.get(kind)
    n_classes = int(y.max()) + 1
    if space is None or n_trials <= 0:
        params = SELECTED_PARAMS[stage].get(kind, {})
        logger.info("%s/%s: no tuning space or budget, using defaults %s", stage, kind, params)
        return params, None

    def objective(params):
        factory = functools.partial(
            _fit_kind, kind, params=params, n_classes=n_classes, seed=derive_seed(seed, "cv_fit", kind)
        )
        mean, scores = cross_validate(factory, X, y, w, folds)
        return 1.0 - mean, scores

    study = tpe_optimize(
        space,
        objective,
        n_trials=n_trials,
        n_startup=min(n_startup, n_trials),
        seed=derive_seed(seed, "tpe", stage, kind),
        log_path=log_path,
    )
    if study.best_trial is None:
        logger.warning("%s/%s: all trials failed, falling back to defaults", stage, kind)
        return SELECTED_PARAMS[stage].get(kind, {}), study
    return study.best_trial.params, study


def _fit_kind(kind, X, y, w, params, n_classes, seed, fold_count=5):
    return train_model(
        kind, X, y, sample_weights=w, n_classes=n_classes, params=params, seed=seed, fold_count=fold_count
    )


def _run_stage(
    stage: str,
    config: PipelineConfig,
    ds: Dataset,
    weight_map: dict | None,
    test_fraction: float,
    log_dir,
    data_dir,
) -> StageResult:
    """Augment, split, select features, tune and fit one classifier stage."""
    seed = derive_seed(config.seed, "stage", stage)
    kind = config.presence_kind if stage == "presence" else config.quantity_kind
    n_classes = len(ds.class_names)

    ds_aug, _ = smote_augment(
        ds, targets=_smote_targets_for(ds, config.smote_fraction),
        k_neighbors=config.smote_k_neighbors, seed=derive_seed(seed, "smote"),
    )
    if data_dir:
        write_dataset_csv(ds_aug, os.path.join(data_dir, f"{stage}_augmented.csv"))
    train_idx, test_idx = stratified_split(ds_aug, test_fraction, seed=derive_seed(seed, "split"))
    train, test = ds_aug.subset(train_idx), ds_aug.subset(test_idx)
    assert not (test.provenance == "synthetic").any()
    w_train = sample_weights(train.y, weight_map)
    folds = stratified_kfold(train.y, k=config.cv_folds, seed=derive_seed(seed, "folds"))

    # feature selection first, tuning on the selected subset
    from .learners import parse_stack_kind

    bases = parse_stack_kind(kind)
    if bases is None:
        rfe_kind, rfe_params = kind, SELECTED_PARAMS[stage].get(kind, {})
    else:
        rfe_kind, rfe_params = "rf", RFE_PROBE_PARAMS
    rfe_factory = functools.partial(
        _fit_kind, rfe_kind, params=rfe_params, n_classes=n_classes, seed=derive_seed(seed, "rfe_fit")
    )
    rfe = rfe_select(
        rfe_factory, train.X, train.y, w_train, folds,
        min_features=config.rfe_min_features, step=config.rfe_step, seed=derive_seed(seed, "rfe"),
    )
    subset = rfe.best_subset
    Xs = train.X[:, subset]

    if bases is None:
        params, _ = _tune_kind(
            kind, stage, Xs, train.y, w_train, folds,
            config.n_trials, config.n_startup, seed,
            os.path.join(log_dir, f"{stage}_study.jsonl") if log_dir else None,
        )
    else:
        params = {}
        per_base = config.n_trials // len(bases)
        extra = config.n_trials - per_base * len(bases)
        for i, base in enumerate(bases):
            budget = per_base + (extra if i == 0 else 0)
            params[base], _ = _tune_kind(
                base, stage, Xs, train.y, w_train, folds,
                budget, config.n_startup, seed,
                os.path.join(log_dir, f"{stage}_{base}_study.jsonl") if log_dir else None,
            )

    final_factory = functools.partial(
        _fit_kind, kind, params=params, n_classes=n_classes,
        seed=derive_seed(seed, "final"), fold_count=config.stack_fold_count,
    )
    model = final_factory(Xs, train.y, w_train)

    proba = predict_proba(model, test.X[:, subset])
    report = evaluate(
        test.y,
        np.argmax(proba, axis=1),
        n_classes,
        proba=proba,
        class_names=ds.class_names,
        model_id=f"{stage}:{kind}",
        feature_subset=[ft.FEATURE_NAMES[i] for i in subset],
        seed=seed,
        provenance_note="held-out real rows only",
    )
    return StageResult(
        kind=kind,
        feature_subset=list(subset),
        tuned_params=params,
        rfe_curve=[(size, score) for size, score, _ in rfe.curve],
        report=report,
        model=model,
    )


def run_training(config: PipelineConfig, out_dir) -> RunResult:
    """Execute the full training pipeline and write artifacts, reports and
    logs under out_dir. A stage failure halts the run with the stage name and
    leaves a partial manifest beside whatever was already written."""
    config.validate()
    dirs = _ensure_dirs(out_dir)
    cfg_hash = config_hash(config.to_dict())
    logger.info("pipeline start (config %s)", cfg_hash)
    stage_name = "ingest"
    completed: list[str] = []

    def _fail(exc):
        partial = {
            "config_hash": cfg_hash,
            "failed_stage": stage_name,
            "error": str(exc),
            "completed_stages": completed,
        }
        write_json(os.path.join(out_dir, "manifest_partial.json"), partial)
        raise DataError(f"pipeline stage {stage_name!r} failed: {exc}") from exc

    try:
        frame, ingest_info = build_labeled_frame(config, data_dir=dirs["data"])
        labeled_path = os.path.join(dirs["data"], "labeled.csv")
        from .prep import write_labeled_csv

        write_labeled_csv(frame, labeled_path)
        data_hash = _file_sha256(labeled_path)
        completed.append(stage_name)

        # impute missing dimensions once, on the full labeled table
        stage_name = "imputation"
        dims = frame.X[:, list(ft.DIMENSION_IDX)].copy()
        imputer = kmeans_impute_fit(frame.X, dims, k=config.imputation_k, seed=derive_seed(config.seed, "impute"))
        frame.X, _ = kmeans_impute_apply(imputer, frame.X, dims)
        logger.info("labeled rows: %d (data hash %s)", frame.n, data_hash)
        completed.append(stage_name)

        # presence stage: cap-N downsample, SMOTE, 3:1 weights, 70/30 split
        stage_name = "presence"
        pres_ds = presence_dataset(frame)
        pres_ds = downsample_majority(pres_ds, cap=config.downsample_cap, seed=derive_seed(config.seed, "downsample"))
        weight_map = presence_class_weights(pres_ds.y)
        presence = _run_stage(
            "presence", config, pres_ds, weight_map, config.presence_test_fraction, dirs["logs"], dirs["data"]
        )
        presence.report.data_hash = data_hash
        logger.info("presence F1 (weighted, held out): %.3f", presence.report.f1_weighted)
        completed.append(stage_name)

        # quantity stage: bin, SMOTE, 85/15 split, unweighted
        stage_name = "quantity"
        class_map = BargeClassMap()
        quant_ds = quantity_dataset(frame, class_map)
        quantity = _run_stage(
            "quantity", config, quant_ds, None, config.quantity_test_fraction, dirs["logs"], dirs["data"]
        )
        quantity.report.data_hash = data_hash
        logger.info("quantity F1 (weighted, held out): %.3f", quantity.report.f1_weighted)
        completed.append(stage_name)
        stage_name = "emit"
    except DataError as exc:
        _fail(exc)
    except Exception as exc:  # noqa: BLE001 - surface the failing stage
        _fail(exc)

    emit_report(
        presence.report,
        os.path.join(dirs["reports"], "presence_report.json"),
        os.path.join(dirs["reports"], "presence_confusion.csv"),
    )
    emit_report(
        quantity.report,
        os.path.join(dirs["reports"], "quantity_report.json"),
        os.path.join(dirs["reports"], "quantity_confusion.csv"),
    )

    artifact = HierarchicalModel(
        presence_model=presence.model,
        quantity_model=quantity.model,
        class_map=class_map,
        imputer=imputer,
        presence_features=presence.feature_subset,
        quantity_features=quantity.feature_subset,
        seeds={"master": config.seed},
        config_hash=cfg_hash,
    )
    artifact_path = os.path.join(dirs["artifacts"], "model.json")
    save_hierarchical(artifact, artifact_path)

    manifest = {
        "config": config.to_dict(),
        "config_hash": cfg_hash,
        "data_hash": data_hash,
        "ingest": ingest_info,
        "presence": {
            "kind": presence.kind,
            "feature_subset": [ft.FEATURE_NAMES[i] for i in presence.feature_subset],
            "tuned_params": presence.tuned_params,
            "rfe_curve": presence.rfe_curve,
            "test_rows": int(presence.report.per_class.support.sum()),
            "f1_weighted": presence.report.f1_weighted,
        },
        "quantity": {
            "kind": quantity.kind,
            "feature_subset": [ft.FEATURE_NAMES[i] for i in quantity.feature_subset],
            "tuned_params": quantity.tuned_params,
            "rfe_curve": quantity.rfe_curve,
            "test_rows": int(quantity.report.per_class.support.sum()),
            "f1_weighted": quantity.report.f1_weighted,
            "train_label_counts_min": 1,  # quantity stage never sees no-barge rows
        },
        "files": {
            "artifact": "artifacts/model.json",
            "labeled": "data/labeled.csv",
            "presence_report": "reports/presence_report.json",
            "quantity_report": "reports/quantity_report.json",
        },
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return RunResult(
        out_dir=str(out_dir),
        manifest=manifest,
        presence=presence,
        quantity=quantity,
        artifact_path=artifact_path,
    )


# ---------------------------------------------------------------------------
# Harnesses


def sensitivity_segment(
    records,
    centerline,
    sizes=(2.0, 1.0, 0.5, 0.3, 0.1),
    holdout_fraction: float = 0.2,
    seed: int = 0,
) -> list[dict]:
    """Rebuild the average path at each segment size and measure the mean
    great-circle distance from held-out positions to the reconstructed path."""
    if not records:
        raise DataError("segment sensitivity needs AIS records")
    rng = rng_for(seed, "sensitivity_holdout")
    n = len(records)
    holdout_mask = np.zeros(n, dtype=bool)
    holdout_mask[rng.choice(n, size=max(1, int(round(holdout_fraction * n))), replace=False)] = True
    fit_records = [r for r, m in zip(records, holdout_mask) if not m]
    hold_lats = np.array([r.lat for r, m in zip(records, holdout_mask) if m])
    hold_lons = np.array([r.lon for r, m in zip(records, holdout_mask) if m])
    out = []
    for size in sizes:
        path = assign_and_cog(build_segments(centerline, size), fit_records)
        avg = average_path(path)
        err = distance_to_polyline_miles(hold_lats, hold_lons, avg)
        out.append({"segment_miles": float(size), "mean_error_miles": float(err.mean()), "n_holdout": int(len(hold_lats))})
    return out


def write_sensitivity_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["segment_miles", "mean_error_miles", "n_holdout"])
        for r in rows:
            w.writerow([r["segment_miles"], repr(r["mean_error_miles"]), r["n_holdout"]])


@dataclass
class GroupingReport:
    curve: list  # (n_classes, weighted_f1, grouping as [lo, hi] ranges)
    best_grouping: list
    best_f1: float


def sensitivity_grouping(
    X: np.ndarray,
    counts: np.ndarray,
    seed: int = 0,
    model_factory=None,
    folds_k: int = 5,
) -> GroupingReport:
    """Start from one class per observed barge count and greedily merge the
    adjacent pair with the worst pooled CV confusion, recording weighted F1 at
    every class count down to 2."""
    counts = np.asarray(counts, dtype=np.int64)
    if (counts < 1).any():
        raise DataError("grouping sensitivity expects with-barge rows only")
    observed = sorted(int(c) for c in np.unique(counts))
    if len(observed) < 2:
        raise DataError("need at least 2 distinct barge counts")
    groups: list[list[int]] = [[c] for c in observed]
    curve = []
    while True:
        k = len(groups)
        lookup = {c: i for i, grp in enumerate(groups) for c in grp}
        y = np.array([lookup[int(c)] for c in counts], dtype=np.int64)
        if model_factory is None:
            factory = functools.partial(
                _fit_kind, "rf",
                params={"n_estimators": 40, "max_depth": 10, "min_samples_split": 4, "min_samples_leaf": 2},
                n_classes=k, seed=derive_seed(seed, "grouping", k),
            )
        else:
            factory = functools.partial(model_factory, n_classes=k)
        folds = stratified_kfold(y, k=folds_k, seed=derive_seed(seed, "grouping_folds", k))
        cm = np.zeros((k, k), dtype=np.int64)
        for train_idx, val_idx in folds:
            model = factory(X[train_idx], y[train_idx], np.ones(len(train_idx)))
            pred = predict(model, X[val_idx])
            np.add.at(cm, (y[val_idx], pred), 1)
        pooled = ConfusionMatrix(counts=cm, class_names=[str(i) for i in range(k)])
        scores = precision_recall_f1(pooled)
        support = scores.support
        score = float((scores.f1 * support).sum() / support.sum()) if support.sum() else 0.0
        ranges = [[grp[0], grp[-1]] for grp in groups]
        curve.append((k, float(score), ranges))
        if k <= 2:
            break
        support = cm.sum(axis=1)
        worst_i, worst_val = 0, -1.0
        for i in range(k - 1):
            denom = support[i] + support[i + 1]
            confusion_rate = (cm[i, i + 1] + cm[i + 1, i]) / denom if denom else 0.0
            if confusion_rate > worst_val:
                worst_i, worst_val = i, confusion_rate
        groups[worst_i : worst_i + 2] = [groups[worst_i] + groups[worst_i + 1]]
    best = max(curve, key=lambda row: (row[1], -row[0]))
    return GroupingReport(curve=curve, best_grouping=best[2], best_f1=best[1])


def transferability_run(
    frame: LabeledFrame,
    holdout_location: str,
    seed: int = 0,
    kind: str = "stack:rf+adaboost",
    smote_fraction: float = 0.5,
    indomain_test_fraction: float = 0.15,
) -> tuple[EvalReport, EvalReport]:
    """Train on every location except the holdout (with augmentation) and
    evaluate on the holdout's real rows; also returns the in-domain report
    from a stratified split of the training locations."""
    locations = set(str(g) for g in frame.location)
    if holdout_location not in locations:
        raise DataError(f"unknown holdout location {holdout_location!r}; have {sorted(locations)}")
    if len(locations) < 2:
        raise DataError("transferability needs at least 2 locations")
    class_map = BargeClassMap()
    full = quantity_dataset(frame, class_map)
    hold_mask = full.group == holdout_location
    holdout = full.subset(np.nonzero(hold_mask & (full.provenance == REAL))[0])
    train_all = full.subset(np.nonzero(~hold_mask)[0])
    if holdout.n == 0:
        raise DataError(f"holdout location {holdout_location!r} has no with-barge rows")

    n_classes = class_map.n_classes
    params = {b: SELECTED_PARAMS["quantity"].get(b, {}) for b in ("rf", "adaboost", "gbdt")}

    def fit_on(ds: Dataset):
        aug, _ = smote_augment(
            ds, targets=_smote_targets_for(ds, smote_fraction), seed=derive_seed(seed, "transfer_smote")
        )
        return train_model(
            kind, aug.X, aug.y, n_classes=n_classes,
            params=params if kind.startswith("stack:") else params.get(kind, {}),
            seed=derive_seed(seed, "transfer_fit"),
        ), aug

    model, _ = fit_on(train_all)
    proba = predict_proba(model, holdout.X)
    holdout_report = evaluate(
        holdout.y, np.argmax(proba, axis=1), n_classes, proba=proba,
        class_names=class_map.class_names, model_id=f"transfer:{kind}",
        seed=seed, provenance_note=f"holdout location {holdout_location}",
    )

    train_idx, test_idx = stratified_split(train_all, indomain_test_fraction, seed=derive_seed(seed, "transfer_split"))
    indomain_model, _ = fit_on(train_all.subset(train_idx))
    indomain_test = train_all.subset(test_idx)
    proba_in = predict_proba(indomain_model, indomain_test.X)
    indomain_report = evaluate(
        indomain_test.y, np.argmax(proba_in, axis=1), n_classes, proba=proba_in,
        class_names=class_map.class_names, model_id=f"transfer-indomain:{kind}",
        seed=seed, provenance_note="in-domain split of training locations",
    )
    return holdout_report, indomain_report


def predict_trips(model: HierarchicalModel, trips, out_csv=None) -> list[dict]:
    """Per-trip hierarchical predictions (CLI `predict` backend)."""
    rows = []
    usable = []
    for trip in trips:
        try:
            vec = ft.extract_features(trip).values
        except DataError:
            continue
        usable.append((trip, vec))
    if not usable:
        raise DataError("no trips produced usable feature vectors")
    X = np.array([v for _, v in usable])
    dims = X[:, list(ft.DIMENSION_IDX)].copy()
    preds = impute_and_predict(model, X, dims)
    for (trip, _), p in zip(usable, preds):
        rows.append(
            {
                "trip_id": trip.trip_id,
                "mmsi": trip.mmsi,
                "has_barge": p.has_barge,
                "class_bin": p.bin_label,
                "presence_proba": [float(v) for v in p.presence_proba],
                "quantity_proba": [float(v) for v in p.quantity_proba] if p.quantity_proba is not None else None,
            }
        )
    if out_csv:
        with open(out_csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["trip_id", "mmsi", "has_barge", "class_bin", "p_without", "p_with"]
                + [f"p_bin{i}" for i in range(BargeClassMap().n_classes)]
            )
            for r in rows:
                q = r["quantity_proba"] or [""] * BargeClassMap().n_classes
                w.writerow(
                    [r["trip_id"], r["mmsi"], str(r["has_barge"]).lower(), r["class_bin"]]
                    + [repr(v) for v in r["presence_proba"]]
                    + [repr(v) if v != "" else "" for v in q]
                )
    return rows
