"""Per-trip feature extraction: speed quartiles, time-in-speed-band shares,
normalized rate of turn, acceleration spread, vessel one-hots, dimensions and
their interaction terms.

The registry order is fixed; datasets, models and artifacts all index
features by position in FEATURE_NAMES. Two slots intentionally duplicate the
squared median speed - the source feature list counts them separately, so the
registry keeps both and feature selection is free to discard one.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ._util import DataError
from .ais import Trip, valid_heading, valid_sog

FEATURE_NAMES = [
    "SOG_Q1",
    "SOG_Q2",
    "SOG_Q3",
    "PTST_SOG_<5.4",
    "PTST_SOG_5.4_to_6.9",
    "PTST_SOG_>6.9",
    "SOG_SD",
    "(SOG_Q2)^2_a",
    "(SOG_SD)^2",
    "(SOG_Q2)^2_b",
    "(SOG_Q2)^3",
    "NROT",
    "VT_31_Towing",
    "VT_52_Tug",
    "VT_Other",
    "CT_31",
    "CT_32",
    "CT_52",
    "CT_57",
    "CT_Other",
    "Len",
    "Wid",
    "Len*Wid",
    "Len*SOG_Q2",
    "Wid*SOG_Q2",
    "Len*Wid*SOG_Q2",
    "(Len)^2",
    "(Wid)^2",
    "(Len)^3",
    "VDraft",
    "Acc_SD",
    "Acc_SD*SOG_SD",
    "Status_0",
    "Status_12",
    "Status_15",
    "Status_Other",
]

N_FEATURES = len(FEATURE_NAMES)

FEATURE_UNITS = {
    "SOG_Q1": "knots",
    "SOG_Q2": "knots",
    "SOG_Q3": "knots",
    "PTST_SOG_<5.4": "fraction",
    "PTST_SOG_5.4_to_6.9": "fraction",
    "PTST_SOG_>6.9": "fraction",
    "SOG_SD": "knots",
    "(SOG_Q2)^2_a": "knots^2",
    "(SOG_SD)^2": "knots^2",
    "(SOG_Q2)^2_b": "knots^2",
    "(SOG_Q2)^3": "knots^3",
    "NROT": "deg/min",
    "VT_31_Towing": "indicator",
    "VT_52_Tug": "indicator",
    "VT_Other": "indicator",
    "CT_31": "indicator",
    "CT_32": "indicator",
    "CT_52": "indicator",
    "CT_57": "indicator",
    "CT_Other": "indicator",
    "Len": "m",
    "Wid": "m",
    "Len*Wid": "m^2",
    "Len*SOG_Q2": "m*knots",
    "Wid*SOG_Q2": "m*knots",
    "Len*Wid*SOG_Q2": "m^2*knots",
    "(Len)^2": "m^2",
    "(Wid)^2": "m^2",
    "(Len)^3": "m^3",
    "VDraft": "m",
    "Acc_SD": "knots/min",
    "Acc_SD*SOG_SD": "knots^2/min",
    "Status_0": "indicator",
    "Status_12": "indicator",
    "Status_15": "indicator",
    "Status_Other": "indicator",
}

IDX = {name: i for i, name in enumerate(FEATURE_NAMES)}

QUARTILE_IDX = (IDX["SOG_Q1"], IDX["SOG_Q2"], IDX["SOG_Q3"])
PTST_IDX = (IDX["PTST_SOG_<5.4"], IDX["PTST_SOG_5.4_to_6.9"], IDX["PTST_SOG_>6.9"])

ONE_HOT_GROUPS = {
    "vessel_type": [IDX["VT_31_Towing"], IDX["VT_52_Tug"], IDX["VT_Other"]],
    "cargo_type": [IDX["CT_31"], IDX["CT_32"], IDX["CT_52"], IDX["CT_57"], IDX["CT_Other"]],
    "status": [IDX["Status_0"], IDX["Status_12"], IDX["Status_15"], IDX["Status_Other"]],
}

ONE_HOT_IDX = sorted(i for grp in ONE_HOT_GROUPS.values() for i in grp)
CONTINUOUS_IDX = [i for i in range(N_FEATURES) if i not in set(ONE_HOT_IDX)]

DIMENSION_IDX = (IDX["Len"], IDX["Wid"], IDX["VDraft"])

# features the dimension-imputation clusters on: everything observed about
# motion and vessel identity, nothing derived from the dimensions themselves
CLUSTER_FEATURE_IDX = sorted(
    list(QUARTILE_IDX)
    + list(PTST_IDX)
    + [IDX["SOG_SD"], IDX["Acc_SD"]]
    + ONE_HOT_IDX
)

SPEED_BAND_LOW = 5.4
SPEED_BAND_HIGH = 6.9


@dataclass
class FeatureResult:
    values: np.ndarray
    flags: list[str] = field(default_factory=list)


def registry_json() -> str:
    return json.dumps(
        {"names": FEATURE_NAMES, "units": [FEATURE_UNITS[n] for n in FEATURE_NAMES]},
        indent=2,
    )


def quartiles(values) -> tuple[float, float, float]:
    """Linear-interpolation quartiles: h = (n-1)p on the sorted values."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DataError("quartiles of an empty list")
    q = np.quantile(arr, [0.25, 0.5, 0.75])
    return float(q[0]), float(q[1]), float(q[2])


def _band(sog: float) -> int:
    if sog < SPEED_BAND_LOW:
        return 0
    if sog <= SPEED_BAND_HIGH:  # boundary values belong to the middle band
        return 1
    return 2


def ptst(trip: Trip) -> tuple[float, float, float]:
    """Share of travel time in each speed band, weighting every inter-ping
    interval by the earlier ping's speed. Falls back to counting pings when
    no interval has a usable leading speed."""
    reals = [r for r in trip.records if not r.synthetic]
    valid = [r for r in reals if valid_sog(r.sog)]
    if not valid:
        raise DataError("no valid-speed records for PTST")
    weights = np.zeros(3)
    for cur, nxt in zip(reals, reals[1:]):
        if not valid_sog(cur.sog):
            continue
        dt = nxt.timestamp - cur.timestamp
        if dt > 0:
            weights[_band(cur.sog)] += dt
    if weights.sum() == 0:
        for r in valid:
            weights[_band(r.sog)] += 1.0
    weights /= weights.sum()
    return float(weights[0]), float(weights[1]), float(weights[2])


def _wrap_heading_delta(delta: float) -> float:
    """Map a heading difference to (-180, 180]."""
    d = (delta + 180.0) % 360.0 - 180.0
    if d == -180.0:
        d = 180.0
    return d


def nrot(trip: Trip) -> tuple[float, bool]:
    """Mean absolute heading change per minute over consecutive valid-heading
    pings. Returns (value, degenerate_flag)."""
    reals = [r for r in trip.records if not r.synthetic and valid_heading(r.heading)]
    if len(reals) < 2:
        return 0.0, True
    rates = []
    for cur, nxt in zip(reals, reals[1:]):
        dt_min = (nxt.timestamp - cur.timestamp) / 60.0
        if dt_min <= 0:
            continue
        rates.append(abs(_wrap_heading_delta(nxt.heading - cur.heading)) / dt_min)
    if not rates:
        return 0.0, True
    return float(np.mean(rates)), False


def acc_sd(trip: Trip) -> tuple[float, bool]:
    """Sample standard deviation of per-minute speed changes over consecutive
    valid-speed pings. Returns (value, degenerate_flag)."""
    reals = [r for r in trip.records if not r.synthetic and valid_sog(r.sog)]
    if len(reals) < 3:
        return 0.0, True
    accs = []
    for cur, nxt in zip(reals, reals[1:]):
        dt_min = (nxt.timestamp - cur.timestamp) / 60.0
        if dt_min <= 0:
            continue
        accs.append((nxt.sog - cur.sog) / dt_min)
    if len(accs) < 2:
        return 0.0, True
    return float(np.std(accs, ddof=1)), False


def recompute_derived(X: np.ndarray) -> np.ndarray:
    """Overwrite every product/power slot from its base slots (in place).

    Works on a single 36-vector or an (n, 36) matrix; also the single source
    of truth for the derived-slot definitions.
    """
    Q2 = X[..., IDX["SOG_Q2"]]
    SD = X[..., IDX["SOG_SD"]]
    L = X[..., IDX["Len"]]
    W = X[..., IDX["Wid"]]
    A = X[..., IDX["Acc_SD"]]
    X[..., IDX["(SOG_Q2)^2_a"]] = Q2 * Q2
    X[..., IDX["(SOG_SD)^2"]] = SD * SD
    X[..., IDX["(SOG_Q2)^2_b"]] = Q2 * Q2
    X[..., IDX["(SOG_Q2)^3"]] = Q2 * Q2 * Q2
    X[..., IDX["Len*Wid"]] = L * W
    X[..., IDX["Len*SOG_Q2"]] = L * Q2
    X[..., IDX["Wid*SOG_Q2"]] = W * Q2
    X[..., IDX["Len*Wid*SOG_Q2"]] = L * W * Q2
    X[..., IDX["(Len)^2"]] = L * L
    X[..., IDX["(Wid)^2"]] = W * W
    X[..., IDX["(Len)^3"]] = L * L * L
    X[..., IDX["Acc_SD*SOG_SD"]] = A * SD
    return X


def fill_dimension_slots(
    vec: np.ndarray, length: float | None, width: float | None, draft: float | None
) -> np.ndarray:
    """Set Len/Wid/VDraft (NaN when missing) and refresh the derived slots."""
    vec[IDX["Len"]] = np.nan if length is None else length
    vec[IDX["Wid"]] = np.nan if width is None else width
    vec[IDX["VDraft"]] = np.nan if draft is None else draft
    return recompute_derived(vec)


def _modal(values: list[int]) -> int | None:
    """Most frequent value; ties broken toward the smaller code."""
    if not values:
        return None
    counts = Counter(values)
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    return best[0]


def trip_dimensions(trip: Trip) -> tuple[float | None, float | None, float | None]:
    """First reported (non-missing) length/width/draft across the trip."""
    length = width = draft = None
    for r in trip.records:
        if length is None and r.length is not None:
            length = r.length
        if width is None and r.width is not None:
            width = r.width
        if draft is None and r.draft is not None:
            draft = r.draft
    return length, width, draft


def extract_features(trip: Trip, dims: tuple | None = None) -> FeatureResult:
    """Compute the full 36-slot vector for one trip.

    Synthetic (trajectory-imputed) records never enter any statistic. Missing
    vessel dimensions surface as NaN in their slots and in every derived slot
    so the imputation stage can recognise and fill them.
    """
    reals = [r for r in trip.records if not r.synthetic]
    sogs = [r.sog for r in reals if valid_sog(r.sog)]
    if not sogs:
        raise DataError(f"trip {trip.trip_id} has no valid-speed records")
    flags: list[str] = []

    vec = np.zeros(N_FEATURES)
    q1, q2, q3 = quartiles(sogs)
    vec[IDX["SOG_Q1"]], vec[IDX["SOG_Q2"]], vec[IDX["SOG_Q3"]] = q1, q2, q3
    if len(sogs) >= 2:
        vec[IDX["SOG_SD"]] = float(np.std(sogs, ddof=1))
    else:
        flags.append("sog_sd_single_record")

    p = ptst(trip)
    vec[IDX["PTST_SOG_<5.4"]], vec[IDX["PTST_SOG_5.4_to_6.9"]], vec[IDX["PTST_SOG_>6.9"]] = p

    rot, degenerate = nrot(trip)
    vec[IDX["NROT"]] = rot
    if degenerate:
        flags.append("nrot_degenerate")
    acc, degenerate = acc_sd(trip)
    vec[IDX["Acc_SD"]] = acc
    if degenerate:
        flags.append("acc_sd_degenerate")

    vt = _modal([r.vessel_type for r in reals if r.vessel_type is not None])
    vec[IDX["VT_31_Towing"] if vt == 31 else IDX["VT_52_Tug"] if vt == 52 else IDX["VT_Other"]] = 1.0
    ct = _modal([r.cargo for r in reals if r.cargo is not None])
    ct_slot = {31: "CT_31", 32: "CT_32", 52: "CT_52", 57: "CT_57"}.get(ct, "CT_Other")
    vec[IDX[ct_slot]] = 1.0
    status = _modal([r.status for r in reals if r.status is not None])
    if status is None:
        status = 15  # AIS default "undefined"
        flags.append("status_missing")
    st_slot = {0: "Status_0", 12: "Status_12", 15: "Status_15"}.get(status, "Status_Other")
    vec[IDX[st_slot]] = 1.0

    if dims is None:
        dims = trip_dimensions(trip)
    fill_dimension_slots(vec, *dims)
    return FeatureResult(values=vec, flags=flags)
