"""Match bridge-point barge observations to AIS trips.

A candidate pair must agree on all three attributes at once: estimated
arrival within tolerance of the observation time, equal travel direction
(trips without a clear direction never match), and - after greedy one-to-one
assignment by smallest time difference - arrival order consistent with
observation order. Matching is one-to-one across the whole run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._util import DataError, parse_timestamp
from .ais import Trip
from .geo import GeoPoint, estimate_arrival, project_points
from . import features as ft

MAX_BARGE_COUNT = 42

UPSTREAM = "upstream"
DOWNSTREAM = "downstream"
AMBIGUOUS = "ambiguous"


@dataclass
class CameraObservation:
    location_id: str
    bridge_point: GeoPoint
    observed_at: float
    direction: str  # "upstream" | "downstream"
    barge_count: int


@dataclass
class LabeledSample:
    trip_id: str
    mmsi: int
    location_id: str
    barge_count: int
    has_barge: bool
    estimated_arrival: float
    match_delta_s: float
    provenance: str = "real"


def parse_observations(path) -> tuple[list[CameraObservation], dict]:
    """Read the observations CSV (location_id, lat, lon, observed_at,
    direction, barge_count). Rows with out-of-range counts, bad timestamps or
    unknown directions are rejected and counted."""
    obs: list[CameraObservation] = []
    report = {"rows": 0, "rejected_count": 0, "rejected_timestamp": 0, "rejected_direction": 0}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read observations file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        required = {"location_id", "lat", "lon", "observed_at", "direction", "barge_count"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise DataError(f"observations file {path} missing columns: {sorted(missing)}")
        for row in reader:
            report["rows"] += 1
            try:
                count = int(row["barge_count"])
            except ValueError:
                report["rejected_count"] += 1
                continue
            if not 0 <= count <= MAX_BARGE_COUNT:
                report["rejected_count"] += 1
                continue
            try:
                ts = parse_timestamp(row["observed_at"])
            except ValueError:
                report["rejected_timestamp"] += 1
                continue
            direction = row["direction"].strip().lower()
            if direction not in (UPSTREAM, DOWNSTREAM):
                report["rejected_direction"] += 1
                continue
            obs.append(
                CameraObservation(
                    location_id=row["location_id"].strip(),
                    bridge_point=GeoPoint(float(row["lat"]), float(row["lon"])),
                    observed_at=ts,
                    direction=direction,
                    barge_count=count,
                )
            )
    return obs, report


def trip_direction(trip: Trip, avg_path: list[GeoPoint], segment_length_miles: float) -> str:
    """downstream / upstream / ambiguous from the net arclength change; the
    dead band is one segment length. Downstream = increasing arclength, which
    requires the centerline to be digitized from upstream to downstream."""
    if len(trip.records) < 2:
        return AMBIGUOUS
    lats = np.array([r.lat for r in trip.records])
    lons = np.array([r.lon for r in trip.records])
    s, _, _, _ = project_points(lats, lons, avg_path)
    net = float(s[-1] - s[0])
    if net > segment_length_miles:
        return DOWNSTREAM
    if net < -segment_length_miles:
        return UPSTREAM
    return AMBIGUOUS


def _longest_nondecreasing(values: list[float]) -> list[int]:
    """Indices of a longest non-decreasing subsequence (earliest on ties)."""
    n = len(values)
    best_len = [1] * n
    prev = [-1] * n
    for i in range(n):
        for j in range(i):
            if values[j] <= values[i] and best_len[j] + 1 > best_len[i]:
                best_len[i] = best_len[j] + 1
                prev[i] = j
    end = max(range(n), key=lambda i: (best_len[i], -i))
    out = []
    while end != -1:
        out.append(end)
        end = prev[end]
    return out[::-1]


def match_observations(
    trips: list[Trip],
    observations: list[CameraObservation],
    avg_path: list[GeoPoint],
    tolerance_s: float = 900.0,
    segment_length_miles: float = 0.3,
    bridge_points: dict[str, GeoPoint] | None = None,
) -> tuple[list[LabeledSample], dict]:
    """Greedy one-to-one matching per location with an order-consistency
    filter; returns the matches and a per-location unmatched report.

    Report semantics: dropped_direction / dropped_tolerance count observations
    whose only failure was that attribute; dropped_order counts pairs removed
    by the arrival-order check; trips_unmatched counts trips that had some
    within-tolerance candidate but ended unmatched.
    """
    by_location: dict[str, list[CameraObservation]] = {}
    for ob in observations:
        by_location.setdefault(ob.location_id, []).append(ob)
    if bridge_points is not None:
        for loc in by_location:
            if loc not in bridge_points:
                raise DataError(f"unknown location_id {loc!r}: no bridge point configured")

    matches: list[LabeledSample] = []
    report: dict[str, dict] = {}
    matched_trips: set[str] = set()
    for loc in sorted(by_location):
        obs = sorted(by_location[loc], key=lambda o: o.observed_at)
        point = bridge_points[loc] if bridge_points else obs[0].bridge_point
        stats = {
            "trips_unmatched": 0,
            "obs_unmatched": 0,
            "dropped_direction": 0,
            "dropped_tolerance": 0,
            "dropped_order": 0,
        }
        candidates = []  # (abs_dt, trip_pos, obs_pos, arrival)
        trip_info = {}
        for ti, trip in enumerate(trips):
            if trip.trip_id in matched_trips or not trip.records:
                continue
            arrival, _ = estimate_arrival(trip, point, avg_path, mode="nearest")
            direction = trip_direction(trip, avg_path, segment_length_miles)
            trip_info[ti] = (arrival, direction)
            for oi, ob in enumerate(obs):
                dt = arrival - ob.observed_at
                if abs(dt) <= tolerance_s and direction == ob.direction:
                    candidates.append((abs(dt), ti, oi, arrival))
        candidates.sort(key=lambda c: (c[0], trips[c[1]].trip_id, c[2]))
        taken_t: set[int] = set()
        taken_o: set[int] = set()
        assigned = []
        for abs_dt, ti, oi, arrival in candidates:
            if ti in taken_t or oi in taken_o:
                continue
            taken_t.add(ti)
            taken_o.add(oi)
            assigned.append((ti, oi, arrival))
        # headway check: matched arrival order must equal observation order
        assigned.sort(key=lambda a: (a[2], trips[a[0]].trip_id))
        keep = set(_longest_nondecreasing([obs[a[1]].observed_at for a in assigned])) if assigned else set()
        for pos, (ti, oi, arrival) in enumerate(assigned):
            if pos not in keep:
                stats["dropped_order"] += 1
                continue
            ob = obs[oi]
            matches.append(
                LabeledSample(
                    trip_id=trips[ti].trip_id,
                    mmsi=trips[ti].mmsi,
                    location_id=loc,
                    barge_count=ob.barge_count,
                    has_barge=ob.barge_count > 0,
                    estimated_arrival=arrival,
                    match_delta_s=arrival - ob.observed_at,
                    provenance="real",
                )
            )
            matched_trips.add(trips[ti].trip_id)

        matched_obs = {a[1] for pos, a in enumerate(assigned) if pos in keep}
        for oi, ob in enumerate(obs):
            if oi in matched_obs:
                continue
            stats["obs_unmatched"] += 1
            in_tol = [
                ti for ti, (arrival, _) in trip_info.items()
                if abs(arrival - ob.observed_at) <= tolerance_s
            ]
            if not in_tol:
                stats["dropped_tolerance"] += 1
            elif all(trip_info[ti][1] != ob.direction for ti in in_tol):
                stats["dropped_direction"] += 1
        matched_here = {trips[a[0]].trip_id for pos, a in enumerate(assigned) if pos in keep}
        for ti, (arrival, _) in trip_info.items():
            if trips[ti].trip_id in matched_here:
                continue
            if any(abs(arrival - ob.observed_at) <= tolerance_s for ob in obs):
                stats["trips_unmatched"] += 1
        report[loc] = stats
    return matches, report


def emit_labeled_dataset(matches: list[LabeledSample], feature_vectors: dict[str, np.ndarray], path) -> None:
    """Write the labeled dataset CSV: identifiers, the 36 features in registry
    order, the label columns and provenance."""
    from .prep import LabeledFrame, write_labeled_csv

    rows = []
    for m in matches:
        if m.trip_id not in feature_vectors:
            raise DataError(f"no feature vector for matched trip {m.trip_id}")
        rows.append(feature_vectors[m.trip_id])
    frame = LabeledFrame(
        trip_ids=[m.trip_id for m in matches],
        mmsi=[m.mmsi for m in matches],
        X=np.array(rows, dtype=float).reshape(len(rows), ft.N_FEATURES),
        counts=np.array([m.barge_count for m in matches], dtype=np.int64),
        provenance=np.array([m.provenance for m in matches], dtype=object),
        location=np.array([m.location_id for m in matches], dtype=object),
    )
    write_labeled_csv(frame, path)
