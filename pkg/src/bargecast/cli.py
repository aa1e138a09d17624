"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error. Global flags --config,
--seed and --out override config-file keys.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields as dataclass_fields

import numpy as np

from ._util import DataError, write_json
from . import features as ft
from .ais import buffer_filter, clean_records, parse_ais_csv, split_trips, write_ais_csv
from .geo import (
    assign_and_cog,
    average_path,
    build_segments,
    load_centerline_geojson,
    write_polyline_geojson,
    write_segment_csv,
)
from .hierarchy import load_hierarchical
from .metrics import emit_report, evaluate
from .pipeline import (
    PipelineConfig,
    build_labeled_frame,
    predict_trips,
    run_training,
    sensitivity_grouping,
    sensitivity_segment,
    transferability_run,
    write_sensitivity_csv,
)
from .prep import load_labeled_csv, quantity_dataset
from .synth import SyntheticScenario, generate_synthetic

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(args, require_inputs=True) -> PipelineConfig:
    overrides = {
        k: getattr(args, k, None)
        for k in ("ais_csv", "river_geojson", "observations_csv", "seed")
    }
    if getattr(args, "config", None):
        cfg = PipelineConfig.from_json(args.config, overrides)
    else:
        cfg = PipelineConfig(**{k: v for k, v in overrides.items() if v is not None})
    if require_inputs:
        cfg.validate()
    return cfg


def _add_io_flags(p, ais=False, river=False, obs=False):
    if ais:
        p.add_argument("--ais", dest="ais_csv", help="AIS CSV export")
    if river:
        p.add_argument("--river", dest="river_geojson", help="river centerline GeoJSON (upstream to downstream)")
    if obs:
        p.add_argument("--obs", dest="observations_csv", help="bridge observations CSV")


def build_parser() -> _Parser:
    parser = _Parser(prog="bargecast", description="Barge presence/quantity prediction from AIS tracks")
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--seed", type=int, default=None, help="master random seed")
    parser.add_argument("--out", default="out", help="output directory")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("clean", help="parse + clean an AIS CSV, write kept records and the cleaning report")
    _add_io_flags(p, ais=True)

    p = sub.add_parser("path", help="build river segments, per-segment COGs and the average path")
    _add_io_flags(p, ais=True, river=True)
    p.add_argument("--segment-miles", type=float, default=None)
    p.add_argument("--buffer-miles", type=float, default=None)

    p = sub.add_parser("match", help="match observations to trips; write matches and the labeled dataset")
    _add_io_flags(p, ais=True, river=True, obs=True)

    p = sub.add_parser("features", help="extract per-trip feature vectors and the feature registry")
    _add_io_flags(p, ais=True, river=True)

    p = sub.add_parser("prep", help="imputation + augmentation + split for one stage")
    p.add_argument("--labeled", required=False, help="labeled dataset CSV")
    p.add_argument("--stage", choices=["presence", "quantity"], default="presence")

    p = sub.add_parser("train", help="run the full training pipeline")
    _add_io_flags(p, ais=True, river=True, obs=True)

    p = sub.add_parser("tune", help="TPE-tune one model kind on a labeled dataset")
    p.add_argument("--labeled", required=False)
    p.add_argument("--stage", choices=["presence", "quantity"], default="quantity")
    p.add_argument("--kind", default=None, help="model kind (defaults to the stage's configured kind)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--tuning-config", default=None,
                   help="JSON with kind/stage/budgets/seed and per-parameter space overrides")

    p = sub.add_parser("evaluate", help="evaluate a saved hierarchical model on a labeled dataset")
    p.add_argument("--model", required=False)
    p.add_argument("--labeled", required=False)

    p = sub.add_parser("predict", help="predict barge presence/quantity for new AIS data")
    p.add_argument("--model", required=False)
    _add_io_flags(p, ais=True, river=True)

    p = sub.add_parser("synth", help="generate a synthetic scenario (AIS, river, observations, truth)")
    p.add_argument("--scenario", help="scenario JSON overrides", default=None)

    p = sub.add_parser("sensitivity-segment", help="segment-size sensitivity table")
    _add_io_flags(p, ais=True, river=True)
    p.add_argument("--sizes", default="2.0,1.0,0.5,0.3,0.1")

    p = sub.add_parser("sensitivity-grouping", help="barge class-grouping sensitivity")
    p.add_argument("--labeled", required=False)

    p = sub.add_parser("transfer", help="hold one location out and test spatial transfer")
    p.add_argument("--labeled", required=False)
    p.add_argument("--holdout", required=False)
    return parser


def _require(args, *names):
    missing = [n for n in names if not getattr(args, n, None)]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _cmd_clean(args, out_dir):
    cfg = _load_config(args, require_inputs=False)
    _require(args, "ais_csv")
    records, parse_report = parse_ais_csv(args.ais_csv)
    kept, report = clean_records(records)
    report.parse_skipped = parse_report.skipped
    write_ais_csv(kept, os.path.join(out_dir, "cleaned.csv"))
    write_json(os.path.join(out_dir, "cleaning_report.json"), report.to_dict())
    print(f"kept {report.kept}/{report.input} records -> {out_dir}/cleaned.csv")
    return 0


def _build_trips(args, cfg):
    records, _ = parse_ais_csv(args.ais_csv)
    kept, _ = clean_records(records)
    centerline = load_centerline_geojson(args.river_geojson)
    kept = buffer_filter(kept, centerline, cfg.buffer_miles)
    trips = split_trips(kept, cfg.session_gap_minutes)
    return kept, centerline, trips


def _cmd_path(args, out_dir):
    cfg = _load_config(args, require_inputs=False)
    _require(args, "ais_csv", "river_geojson")
    seg = args.segment_miles if args.segment_miles is not None else cfg.segment_length_miles
    buf = args.buffer_miles if args.buffer_miles is not None else cfg.buffer_miles
    cfg.segment_length_miles, cfg.buffer_miles = seg, buf
    kept, centerline, _ = _build_trips(args, cfg)
    path = assign_and_cog(build_segments(centerline, seg), kept)
    avg = average_path(path)
    write_polyline_geojson(avg, os.path.join(out_dir, "average_path.geojson"))
    write_segment_csv(path, os.path.join(out_dir, "segments.csv"))
    print(f"{len(path.segments)} segments, {len(avg)} average-path points -> {out_dir}")
    return 0


def _cmd_match(args, out_dir):
    cfg = _load_config(args, require_inputs=False)
    _require(args, "ais_csv", "river_geojson", "observations_csv")
    cfg.ais_csv, cfg.river_geojson, cfg.observations_csv = args.ais_csv, args.river_geojson, args.observations_csv
    frame, info = build_labeled_frame(cfg, data_dir=out_dir)
    from .prep import write_labeled_csv

    write_labeled_csv(frame, os.path.join(out_dir, "labeled.csv"))
    write_json(os.path.join(out_dir, "unmatched_report.json"), info["unmatched"])
    print(f"{frame.n} matches -> {out_dir}/labeled.csv")
    return 0


def _cmd_features(args, out_dir):
    cfg = _load_config(args, require_inputs=False)
    _require(args, "ais_csv", "river_geojson")
    _, _, trips = _build_trips(args, cfg)
    with open(os.path.join(out_dir, "feature_registry.json"), "w", encoding="utf-8") as fh:
        fh.write(ft.registry_json() + "\n")
    import csv as _csv

    n_ok = 0
    with open(os.path.join(out_dir, "features.csv"), "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(["trip_id", "mmsi"] + ft.FEATURE_NAMES)
        for trip in trips:
            try:
                vec = ft.extract_features(trip).values
            except DataError:
                continue
            w.writerow([trip.trip_id, trip.mmsi] + [repr(float(v)) for v in vec])
            n_ok += 1
    print(f"{n_ok} trips featurized -> {out_dir}/features.csv")
    return 0


def _cmd_prep(args, out_dir):
    from . import prep as prep_mod

    cfg = _load_config(args, require_inputs=False)
    _require(args, "labeled")
    frame = load_labeled_csv(args.labeled)
    dims = frame.X[:, list(ft.DIMENSION_IDX)].copy()
    imputer = prep_mod.kmeans_impute_fit(frame.X, dims, k=cfg.imputation_k, seed=cfg.seed)
    frame.X, _ = prep_mod.kmeans_impute_apply(imputer, frame.X, dims)
    if args.stage == "presence":
        ds = prep_mod.presence_dataset(frame)
        ds = prep_mod.downsample_majority(ds, cap=cfg.downsample_cap, seed=cfg.seed)
        fraction = cfg.presence_test_fraction
    else:
        ds = prep_mod.quantity_dataset(frame)
        fraction = cfg.quantity_test_fraction
    aug, _ = prep_mod.smote_augment(
        ds, targets={c: t for c, t in prep_mod.default_smote_targets(ds.y, cfg.smote_fraction).items()
                     if ((ds.y == c) & (ds.provenance == prep_mod.REAL)).sum() >= 2},
        k_neighbors=cfg.smote_k_neighbors, seed=cfg.seed,
    )
    train_idx, test_idx = prep_mod.stratified_split(aug, fraction, seed=cfg.seed)
    prep_mod.write_dataset_csv(aug.subset(train_idx), os.path.join(out_dir, f"{args.stage}_train.csv"))
    prep_mod.write_dataset_csv(aug.subset(test_idx), os.path.join(out_dir, f"{args.stage}_test.csv"))
    print(f"{len(train_idx)} train / {len(test_idx)} test rows -> {out_dir}")
    return 0


def _cmd_train(args, out_dir):
    cfg = _load_config(args)
    result = run_training(cfg, out_dir)
    print(
        f"presence F1 {result.presence.report.f1_weighted:.3f}, "
        f"quantity F1 {result.quantity.report.f1_weighted:.3f} -> {out_dir}"
    )
    return 0


def _cmd_tune(args, out_dir):
    from .pipeline import _smote_targets_for, _tune_kind
    from .prep import presence_dataset, sample_weights, smote_augment, stratified_kfold
    from .tuning import space_with_overrides

    cfg = _load_config(args, require_inputs=False)
    _require(args, "labeled")
    tuning_cfg = {}
    if args.tuning_config:
        with open(args.tuning_config, encoding="utf-8") as fh:
            tuning_cfg = json.load(fh)
    stage = tuning_cfg.get("stage", args.stage)
    kind = args.kind or tuning_cfg.get("kind") or (
        cfg.presence_kind if stage == "presence" else cfg.quantity_kind
    )
    if kind.startswith("stack:"):
        raise UsageError("tune one base kind at a time (e.g. --kind rf)")
    cfg.n_trials = args.trials or tuning_cfg.get("n_trials", cfg.n_trials)
    cfg.n_startup = tuning_cfg.get("n_startup", cfg.n_startup)
    cfg.seed = tuning_cfg.get("seed", cfg.seed)
    space = space_with_overrides(kind, tuning_cfg.get("space"))

    frame = load_labeled_csv(args.labeled)
    ds = presence_dataset(frame) if stage == "presence" else quantity_dataset(frame)
    aug, _ = smote_augment(ds, targets=_smote_targets_for(ds, cfg.smote_fraction), seed=cfg.seed)
    folds = stratified_kfold(aug.y, k=cfg.cv_folds, seed=cfg.seed)
    params, study = _tune_kind(
        kind, stage, aug.X, aug.y, sample_weights(aug.y, None), folds,
        cfg.n_trials, cfg.n_startup, cfg.seed,
        os.path.join(out_dir, f"{stage}_{kind}_study.jsonl"), space=space,
    )
    write_json(os.path.join(out_dir, "best_params.json"), {"kind": kind, "stage": stage, "params": params})
    print(f"best params {params} -> {out_dir}/best_params.json")
    return 0


def _cmd_evaluate(args, out_dir):
    _require(args, "model", "labeled")
    model = load_hierarchical(args.model)
    frame = load_labeled_csv(args.labeled)
    dims = frame.X[:, list(ft.DIMENSION_IDX)].copy()
    from .hierarchy import impute_and_predict

    preds = impute_and_predict(model, frame.X, dims)
    pres_true = (frame.counts > 0).astype(int)
    pres_pred = np.array([1 if p.has_barge else 0 for p in preds])
    pres_proba = np.array([p.presence_proba for p in preds])
    report = evaluate(
        pres_true, pres_pred, 2, proba=pres_proba,
        class_names=["without_barge", "with_barge"], model_id="evaluate:presence",
    )
    emit_report(report, os.path.join(out_dir, "presence_eval.json"), os.path.join(out_dir, "presence_eval_confusion.csv"))
    mask = (frame.counts > 0) & np.array([p.has_barge for p in preds])
    if mask.any():
        cmap = model.class_map
        q_true = np.array([cmap.bin_of(int(c)) for c in frame.counts[mask]])
        q_pred = np.array([preds[i].class_id for i in np.nonzero(mask)[0]])
        q_report = evaluate(q_true, q_pred, cmap.n_classes, class_names=cmap.class_names, model_id="evaluate:quantity")
        emit_report(q_report, os.path.join(out_dir, "quantity_eval.json"), os.path.join(out_dir, "quantity_eval_confusion.csv"))
    print(f"presence F1 {report.f1_weighted:.3f} -> {out_dir}")
    return 0


def _cmd_predict(args, out_dir):
    cfg = _load_config(args, require_inputs=False)
    _require(args, "model", "ais_csv", "river_geojson")
    model = load_hierarchical(args.model)
    _, _, trips = _build_trips(args, cfg)
    rows = predict_trips(model, trips, out_csv=os.path.join(out_dir, "predictions.csv"))
    print(f"{len(rows)} trips predicted -> {out_dir}/predictions.csv")
    return 0


def _cmd_synth(args, out_dir):
    scn = SyntheticScenario()
    if args.scenario:
        with open(args.scenario, encoding="utf-8") as fh:
            overrides = json.load(fh)
        known = {f.name for f in dataclass_fields(SyntheticScenario)}
        unknown = set(overrides) - known
        if unknown:
            raise DataError(f"unknown scenario keys: {sorted(unknown)}")
        for k, v in overrides.items():
            setattr(scn, k, tuple(v) if isinstance(v, list) else v)
    if args.seed is not None:
        scn.seed = args.seed
    info = generate_synthetic(scn, out_dir)
    print(f"{info['n_vessels']} vessels, {info['n_observations']} observations -> {out_dir}")
    return 0


def _cmd_sensitivity_segment(args, out_dir):
    cfg = _load_config(args, require_inputs=False)
    _require(args, "ais_csv", "river_geojson")
    sizes = [float(s) for s in args.sizes.split(",") if s.strip()]
    kept, centerline, _ = _build_trips(args, cfg)
    rows = sensitivity_segment(kept, centerline, sizes, seed=cfg.seed)
    write_sensitivity_csv(rows, os.path.join(out_dir, "segment_sensitivity.csv"))
    for r in rows:
        print(f"  {r['segment_miles']:5.2f} mi -> mean error {r['mean_error_miles']:.4f} mi")
    return 0


def _cmd_sensitivity_grouping(args, out_dir):
    cfg = _load_config(args, require_inputs=False)
    _require(args, "labeled")
    frame = load_labeled_csv(args.labeled)
    mask = frame.counts > 0
    report = sensitivity_grouping(frame.X[mask], frame.counts[mask], seed=cfg.seed)
    write_json(
        os.path.join(out_dir, "grouping_report.json"),
        {"curve": [{"n_classes": k, "f1_weighted": s, "grouping": g} for k, s, g in report.curve],
         "best_grouping": report.best_grouping, "best_f1": report.best_f1},
    )
    print(f"best grouping {report.best_grouping} (F1 {report.best_f1:.3f}) -> {out_dir}")
    return 0


def _cmd_transfer(args, out_dir):
    cfg = _load_config(args, require_inputs=False)
    _require(args, "labeled", "holdout")
    frame = load_labeled_csv(args.labeled)
    holdout_report, indomain_report = transferability_run(
        frame, args.holdout, seed=cfg.seed, kind=cfg.quantity_kind, smote_fraction=cfg.smote_fraction
    )
    emit_report(holdout_report, os.path.join(out_dir, "transfer_holdout.json"),
                os.path.join(out_dir, "transfer_holdout_confusion.csv"))
    emit_report(indomain_report, os.path.join(out_dir, "transfer_indomain.json"),
                os.path.join(out_dir, "transfer_indomain_confusion.csv"))
    print(
        f"holdout F1 {holdout_report.f1_weighted:.3f} vs in-domain {indomain_report.f1_weighted:.3f} -> {out_dir}"
    )
    return 0


_COMMANDS = {
    "clean": _cmd_clean,
    "path": _cmd_path,
    "match": _cmd_match,
    "features": _cmd_features,
    "prep": _cmd_prep,
    "train": _cmd_train,
    "tune": _cmd_tune,
    "evaluate": _cmd_evaluate,
    "predict": _cmd_predict,
    "synth": _cmd_synth,
    "sensitivity-segment": _cmd_sensitivity_segment,
    "sensitivity-grouping": _cmd_sensitivity_grouping,
    "transfer": _cmd_transfer,
}


def cli(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    try:
        return _COMMANDS[args.command](args, args.out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
