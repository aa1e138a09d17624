"""Hyperparameter search and feature selection: stratified cross-validation
driver, univariate tree-structured Parzen estimator (TPE) optimization, and
recursive feature elimination.

Search spaces follow the published tuning ranges; the selected values the
source study settled on are kept as defaults for untuned runs.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from ._util import DataError, rng_for
from .metrics import f1_score

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # "int" | "float" | "logfloat"
    low: float
    high: float

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"{self.name}: low > high")
        if self.kind not in ("int", "float", "logfloat"):
            raise ValueError(f"{self.name}: unknown kind {self.kind}")
        if self.kind == "logfloat" and self.low <= 0:
            raise ValueError(f"{self.name}: log-scale bounds must be positive")


SPACES: dict[str, list[ParamSpec]] = {
    "rf": [
        ParamSpec("n_estimators", "int", 50, 300),
        ParamSpec("max_depth", "int", 5, 50),
        ParamSpec("min_samples_split", "int", 2, 15),
        ParamSpec("min_samples_leaf", "int", 1, 6),
    ],
    "gbdt": [
        ParamSpec("n_estimators", "int", 50, 300),
        ParamSpec("max_depth", "int", -1, 7),
        ParamSpec("learning_rate", "logfloat", 0.01, 1.0),
        ParamSpec("num_leaves", "int", 31, 100),
        ParamSpec("min_child_samples", "int", 20, 50),
    ],
    "adaboost": [
        ParamSpec("n_estimators", "int", 50, 300),
        ParamSpec("learning_rate", "logfloat", 0.01, 1.0),
    ],
}

# values the source study selected per stage (used as untuned defaults)
SELECTED_PARAMS = {
    "presence": {
        "rf": {"n_estimators": 200, "max_depth": 5, "min_samples_split": 5, "min_samples_leaf": 2},
        "gbdt": {"n_estimators": 50, "max_depth": -1, "learning_rate": 1.0, "num_leaves": 31, "min_child_samples": 20},
        "adaboost": {"n_estimators": 50, "learning_rate": 1.0},
    },
    "quantity": {
        "rf": {"n_estimators": 100, "max_depth": 10, "min_samples_split": 2, "min_samples_leaf": 1},
        "gbdt": {"n_estimators": 50, "max_depth": -1, "learning_rate": 0.1, "num_leaves": 31, "min_child_samples": 20},
        "adaboost": {"n_estimators": 200, "learning_rate": 0.5},
    },
}


def space_with_overrides(kind: str, overrides: dict | None) -> list[ParamSpec]:
    """The kind's published space with per-parameter [low, high] overrides
    (used by tuning config files)."""
    base = SPACES.get(kind)
    if base is None:
        raise DataError(f"no tuning space for model kind {kind!r}")
    if not overrides:
        return list(base)
    unknown = set(overrides) - {s.name for s in base}
    if unknown:
        raise DataError(f"unknown space override parameters: {sorted(unknown)}")
    out = []
    for spec in base:
        if spec.name in overrides:
            lo, hi = overrides[spec.name]
            out.append(ParamSpec(spec.name, spec.kind, float(lo), float(hi)))
        else:
            out.append(spec)
    return out


def cross_validate(model_factory, X, y, weights, folds, metric=None):
    """Fit on each fold's train indices, score its validation indices.

    model_factory(X, y, w) -> fitted model; metric(y_true, y_pred) -> score
    (weighted F1 when omitted). Returns (mean, per-fold scores).
    """
    from .learners import predict

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    n_classes = int(y.max()) + 1
    if metric is None:
        metric = lambda yt, yp: f1_score(yt, yp, n_classes, "weighted")
    scores = []
    for train_idx, val_idx in folds:
        model = model_factory(X[train_idx], y[train_idx], w[train_idx])
        scores.append(float(metric(y[val_idx], predict(model, X[val_idx]))))
    return float(np.mean(scores)), scores


# ---------------------------------------------------------------------------
# TPE


@dataclass
class Trial:
    number: int
    params: dict
    value: float | None
    fold_scores: list = field(default_factory=list)
    status: str = "completed"  # or "failed"


@dataclass
class StudyResult:
    trials: list
    best_index: int | None
    seed: int
    wall_time_s: float
    status: str = "ok"

    @property
    def best_trial(self) -> Trial | None:
        return None if self.best_index is None else self.trials[self.best_index]


def _sample_uniform(spec: ParamSpec, rng: np.random.Generator):
    if spec.kind == "int":
        return int(rng.integers(int(spec.low), int(spec.high) + 1))
    if spec.kind == "logfloat":
        return float(np.exp(rng.uniform(np.log(spec.low), np.log(spec.high))))
    return float(rng.uniform(spec.low, spec.high))


def _to_model_space(spec: ParamSpec, value: float) -> float:
    return float(np.log(value)) if spec.kind == "logfloat" else float(value)


def _from_model_space(spec: ParamSpec, z: float):
    v = float(np.exp(z)) if spec.kind == "logfloat" else float(z)
    lo, hi = spec.low, spec.high
    v = min(max(v, lo), hi)
    if spec.kind == "int":
        v = int(round(v))
    return v


def _bounds_model_space(spec: ParamSpec) -> tuple[float, float]:
    if spec.kind == "logfloat":
        return float(np.log(spec.low)), float(np.log(spec.high))
    return float(spec.low), float(spec.high)


def _kde_logpdf(spec: ParamSpec, observed: np.ndarray, x: float) -> float:
    """Mixture of truncated Gaussian kernels at observed values with bandwidth
    range/sqrt(n); evaluated in model (possibly log) space."""
    lo, hi = _bounds_model_space(spec)
    if hi <= lo:
        return 0.0
    sigma = (hi - lo) / max(1.0, np.sqrt(len(observed)))
    z = (x - observed) / sigma
    norm = ndtr((hi - observed) / sigma) - ndtr((lo - observed) / sigma)
    norm = np.maximum(norm, 1e-12)
    dens = np.exp(-0.5 * z * z) / (np.sqrt(2 * np.pi) * sigma) / norm
    return float(np.log(max(dens.mean(), 1e-300)))


def _kde_sample(spec: ParamSpec, observed: np.ndarray, rng: np.random.Generator) -> float:
    lo, hi = _bounds_model_space(spec)
    if hi <= lo:
        return lo
    sigma = (hi - lo) / max(1.0, np.sqrt(len(observed)))
    mu = float(observed[rng.integers(len(observed))])
    a, b = ndtr((lo - mu) / sigma), ndtr((hi - mu) / sigma)
    u = rng.uniform(a, b)
    u = min(max(u, 1e-12), 1 - 1e-12)
    return mu + sigma * float(ndtri(u))


def tpe_optimize(
    space: list[ParamSpec],
    objective,
    n_trials: int = 50,
    n_startup: int = 10,
    gamma: float = 0.25,
    n_candidates: int = 24,
    seed: int = 0,
    log_path=None,
) -> StudyResult:
    """Sequential univariate TPE minimization.

    The first n_startup trials sample uniformly. Afterwards completed trials
    split at the gamma-quantile of the objective into a good set L and rest G;
    candidates drawn from L's kernel-density model are ranked by the density
    ratio L/G and the best is evaluated. objective(params) returns a float or
    (float, fold_scores); exceptions mark the trial failed.
    """
    if n_trials < n_startup:
        raise ValueError("n_trials must be >= n_startup")
    t0 = time.monotonic()
    trials: list[Trial] = []
    log_fh = open(log_path, "a", encoding="utf-8") if log_path else None
    try:
        for number in range(n_trials):
            rng = rng_for(seed, "tpe", number)
            completed = [t for t in trials if t.status == "completed"]
            if number < n_startup or len(completed) < 2:
                params = {s.name: _sample_uniform(s, rng) for s in space}
            else:
                by_value = sorted(completed, key=lambda t: (t.value, t.number))
                n_good = max(1, int(np.ceil(gamma * len(completed))))
                good = by_value[:n_good]
                rest = by_value[n_good:]
                obs_good = {
                    s.name: np.array([_to_model_space(s, t.params[s.name]) for t in good])
                    for s in space
                }
                obs_rest = {
                    s.name: np.array([_to_model_space(s, t.params[s.name]) for t in rest])
                    for s in space
                }
                best_score, params = -np.inf, None
                for _ in range(n_candidates):
                    cand = {}
                    score = 0.0
                    for s in space:
                        z = _kde_sample(s, obs_good[s.name], rng)
                        value = _from_model_space(s, z)
                        cand[s.name] = value
                        z_eval = _to_model_space(s, value) if s.kind == "int" else z
                        score += _kde_logpdf(s, obs_good[s.name], z_eval)
                        if len(rest):
                            score -= _kde_logpdf(s, obs_rest[s.name], z_eval)
                        else:
                            lo, hi = _bounds_model_space(s)
                            score -= -np.log(hi - lo) if hi > lo else 0.0
                    if score > best_score:
                        best_score, params = score, cand
            trial = Trial(number=number, params=params, value=None)
            try:
                result = objective(params)
                if isinstance(result, tuple):
                    trial.value, trial.fold_scores = float(result[0]), list(result[1])
                else:
                    trial.value = float(result)
            except Exception as exc:  # noqa: BLE001 - a failed trial must not kill the study
                trial.status = "failed"
                logger.warning("trial %d failed: %s", number, exc)
            trials.append(trial)
            if log_fh:
                log_fh.write(
                    json.dumps(
                        {
                            "trial": number,
                            "params": params,
                            "value": trial.value,
                            "fold_scores": trial.fold_scores,
                            "status": trial.status,
                            "time": time.time(),
                        }
                    )
                    + "\n"
                )
    finally:
        if log_fh:
            log_fh.close()
    completed = [t for t in trials if t.status == "completed"]
    best_index = None
    status = "ok"
    if completed:
        best = min(completed, key=lambda t: (t.value, t.number))
        best_index = best.number
    else:
        status = "no_completed_trials"
    return StudyResult(
        trials=trials,
        best_index=best_index,
        seed=seed,
        wall_time_s=time.monotonic() - t0,
        status=status,
    )


# ---------------------------------------------------------------------------
# Recursive feature elimination


@dataclass
class RfeResult:
    best_subset: list
    curve: list  # (n_features, mean_cv_score, subset) in elimination order
    aborted: bool = False


def _permutation_importance(model, X, y, n_classes, n_shuffles, seed):
    from .learners import predict

    base = f1_score(y, predict(model, X), n_classes, "weighted")
    imp = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        drops = []
        for s in range(n_shuffles):
            rng = rng_for(seed, "perm", j, s)
            Xp = X.copy()
            Xp[:, j] = Xp[rng.permutation(len(X)), j]
            drops.append(base - f1_score(y, predict(model, Xp), n_classes, "weighted"))
        imp[j] = float(np.mean(drops))
    return imp


def rfe_select(
    model_factory,
    X,
    y,
    weights,
    folds,
    min_features: int = 1,
    step: int = 1,
    n_shuffles: int = 5,
    seed: int = 0,
    metric=None,
) -> RfeResult:
    """Iteratively drop the least-important features, scoring each subset size
    by cross-validation; returns the subset with the best score (ties favour
    fewer features).

    Tree models rank by accumulated impurity decrease; models without native
    importances fall back to permutation importance. Importance ties drop the
    higher feature index first.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[1] < 1:
        raise ValueError("need at least one feature")
    if min_features < 1 or min_features > X.shape[1]:
        raise ValueError("min_features out of range")
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    n_classes = int(y.max()) + 1
    subset = list(range(X.shape[1]))
    curve = []
    try:
        while True:
            score, _ = cross_validate(
                model_factory, X[:, subset], y, w, folds, metric=metric
            )
            curve.append((len(subset), score, list(subset)))
            if len(subset) <= min_features:
                break
            model = model_factory(X[:, subset], y, w)
            if hasattr(model, "feature_importances"):
                imp = np.asarray(model.feature_importances(), dtype=float)
            else:
                imp = _permutation_importance(model, X[:, subset], y, n_classes, n_shuffles, seed)
            n_drop = min(step, len(subset) - min_features)
            for _ in range(n_drop):
                worst = max(
                    range(len(subset)), key=lambda i: (-imp[i], subset[i])
                )
                imp = np.delete(imp, worst)
                del subset[worst]
    except DataError:
        raise
    except Exception as exc:  # noqa: BLE001 - surface a partial report
        logger.warning("RFE aborted after %d sizes: %s", len(curve), exc)
        if not curve:
            raise
        return RfeResult(best_subset=list(curve[-1][2]), curve=curve, aborted=True)
    best = max(curve, key=lambda row: (row[1], -row[0]))
    return RfeResult(best_subset=list(best[2]), curve=curve)
