"""River geometry: great-circle distance, equal-length segmentation,
per-segment center-of-gravity, average-path reconstruction, trajectory
imputation and bridge arrival-time estimation.

All distances are statute miles unless a name says otherwise; the sphere
radius is the mean Earth radius R = 6371 km.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._util import (
    DataError,
    EARTH_RADIUS_KM,
    KM_PER_MILE,
    MPH_PER_KNOT,
    SOG_UNAVAILABLE,
)
from .ais import AisRecord, Trip, valid_sog


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float


@dataclass(frozen=True)
class PathPosition:
    """1-D river coordinate: arclength along the path plus signed cross-track
    offset (positive to the right of increasing arclength)."""

    arclength_miles: float
    side_miles: float


@dataclass
class Segment:
    start_miles: float
    end_miles: float
    cog: GeoPoint | None = None
    n_points: int = 0


@dataclass
class RiverPath:
    centerline: list[GeoPoint]
    segment_length_miles: float
    segments: list[Segment] = field(default_factory=list)
    earth_radius_km: float = EARTH_RADIUS_KM

    @property
    def total_length_miles(self) -> float:
        return polyline_arclengths(self.centerline)[-1]


def haversine_km(p1: GeoPoint, p2: GeoPoint) -> float:
    """Great-circle distance in km (haversine formula, R = 6371 km)."""
    phi1, phi2 = math.radians(p1.lat), math.radians(p2.lat)
    dphi = phi2 - phi1
    dlam = math.radians(p2.lon - p1.lon)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    c = 2.0 * math.atan2(math.sqrt(a), math.sqrt(1.0 - a))
    return EARTH_RADIUS_KM * c


def haversine_miles(p1: GeoPoint, p2: GeoPoint) -> float:
    return haversine_km(p1, p2) / KM_PER_MILE


def _haversine_km_arrays(lat1, lon1, lat2, lon2):
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    a = (
        np.sin((phi2 - phi1) / 2.0) ** 2
        + np.cos(phi1) * np.cos(phi2) * np.sin(np.radians(lon2 - lon1) / 2.0) ** 2
    )
    return EARTH_RADIUS_KM * 2.0 * np.arctan2(np.sqrt(a), np.sqrt(1.0 - a))


def polyline_arclengths(polyline: list[GeoPoint]) -> np.ndarray:
    """Cumulative arclength (miles) at every vertex, starting at 0."""
    if len(polyline) < 2:
        raise DataError("polyline needs at least 2 points")
    lat = np.array([p.lat for p in polyline])
    lon = np.array([p.lon for p in polyline])
    seg = _haversine_km_arrays(lat[:-1], lon[:-1], lat[1:], lon[1:]) / KM_PER_MILE
    return np.concatenate([[0.0], np.cumsum(seg)])


def project_points(lats, lons, polyline: list[GeoPoint]):
    """Project points onto a polyline (local tangent-plane approximation).

    Returns (arclength_miles, side_miles, dist_miles, off_end) arrays where
    off_end is -1/+1 when the nearest location is clamped past the first/last
    vertex and 0 otherwise. side is positive to the right of travel.
    """
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    cum = polyline_arclengths(polyline)
    vlat = np.array([p.lat for p in polyline])
    vlon = np.array([p.lon for p in polyline])

    # local equirectangular plane in miles, per-segment x scale at segment start
    deg_mi = (math.pi / 180.0) * EARTH_RADIUS_KM / KM_PER_MILE
    coslat = np.cos(np.radians(vlat[:-1]))
    n = lats.shape[0]
    best_d2 = np.full(n, np.inf)
    best_s = np.zeros(n)
    best_side = np.zeros(n)
    best_seg = np.zeros(n, dtype=np.int64)
    best_t = np.zeros(n)

    # chunk points to bound the (points x segments) working set
    chunk = max(1, int(4e6 // max(1, len(polyline) - 1)))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        plat = lats[lo:hi, None]
        plon = lons[lo:hi, None]
        bx = (vlon[1:] - vlon[:-1])[None, :] * coslat[None, :] * deg_mi
        by = (vlat[1:] - vlat[:-1])[None, :] * deg_mi
        px = (plon - vlon[None, :-1]) * coslat[None, :] * deg_mi
        py = (plat - vlat[None, :-1]) * deg_mi
        ab2 = bx * bx + by * by
        with np.errstate(invalid="ignore", divide="ignore"):
            t_raw = (px * bx + py * by) / ab2
        t_raw = np.where(ab2 > 0, t_raw, 0.0)
        t = np.clip(t_raw, 0.0, 1.0)
        dx = px - t * bx
        dy = py - t * by
        d2 = dx * dx + dy * dy
        idx = np.argmin(d2, axis=1)
        rows = np.arange(hi - lo)
        best_d2[lo:hi] = d2[rows, idx]
        tt = t[rows, idx]
        best_t[lo:hi] = t_raw[rows, idx]
        best_seg[lo:hi] = idx
        seglen = cum[idx + 1] - cum[idx]
        best_s[lo:hi] = cum[idx] + tt * seglen
        # cross product z of (segment direction, offset): >0 means left of travel
        cross = bx[0, idx] * dy[rows, idx] - by[0, idx] * dx[rows, idx]
        norm = np.sqrt(ab2[0, idx])
        with np.errstate(invalid="ignore", divide="ignore"):
            side = -cross / norm
        best_side[lo:hi] = np.where(norm > 0, side, 0.0)

    off_end = np.zeros(n, dtype=np.int8)
    off_end[(best_seg == 0) & (best_t < 0.0)] = -1
    off_end[(best_seg == len(polyline) - 2) & (best_t > 1.0)] = 1
    return best_s, best_side, np.sqrt(best_d2), off_end


def project_to_path(p: GeoPoint, avg_path: list[GeoPoint]) -> PathPosition:
    s, side, _, _ = project_points([p.lat], [p.lon], avg_path)
    return PathPosition(float(s[0]), float(side[0]))


def distance_to_polyline_miles(lats, lons, polyline: list[GeoPoint]) -> np.ndarray:
    _, _, dist, _ = project_points(lats, lons, polyline)
    return dist


def build_segments(centerline: list[GeoPoint], segment_length_miles: float) -> RiverPath:
    """Divide the centerline into equal-length arclength segments (last one
    may be shorter); all center-of-gravity slots start empty."""
    if segment_length_miles <= 0:
        raise DataError("segment length must be positive")
    if len(centerline) < 2:
        raise DataError("centerline needs at least 2 points")
    total = polyline_arclengths(centerline)[-1]
    n = max(1, int(math.ceil(total / segment_length_miles - 1e-9)))
    segments = [
        Segment(i * segment_length_miles, min((i + 1) * segment_length_miles, total))
        for i in range(n)
    ]
    return RiverPath(centerline=list(centerline), segment_length_miles=segment_length_miles, segments=segments)


def assign_and_cog(path: RiverPath, records: list[AisRecord]) -> RiverPath:
    """Assign records to segments by projected arclength and set each
    segment's cog to the arithmetic mean of its assigned positions."""
    segments = [Segment(s.start_miles, s.end_miles) for s in path.segments]
    out = replace(path, segments=segments)
    if not records:
        return out
    lats = np.array([r.lat for r in records])
    lons = np.array([r.lon for r in records])
    s, _, _, _ = project_points(lats, lons, path.centerline)
    idx = np.minimum(
        (s // path.segment_length_miles).astype(np.int64), len(segments) - 1
    )
    idx = np.maximum(idx, 0)
    for i in range(len(segments)):
        mask = idx == i
        k = int(mask.sum())
        if k == 0:
            continue
        segments[i].cog = GeoPoint(float(lats[mask].mean()), float(lons[mask].mean()))
        segments[i].n_points = k
    return out


def segment_pairwise_mean_distance(path: RiverPath, records: list[AisRecord]) -> list[float | None]:
    """Diagnostic only: mean pairwise great-circle distance (miles) among the
    points assigned to each segment (None for segments with < 2 points)."""
    lats = np.array([r.lat for r in records]) if records else np.zeros(0)
    lons = np.array([r.lon for r in records]) if records else np.zeros(0)
    if len(records):
        s, _, _, _ = project_points(lats, lons, path.centerline)
        idx = np.clip((s // path.segment_length_miles).astype(np.int64), 0, len(path.segments) - 1)
    out: list[float | None] = []
    for i in range(len(path.segments)):
        if not len(records):
            out.append(None)
            continue
        mask = idx == i
        k = int(mask.sum())
        if k < 2:
            out.append(None)
            continue
        la, lo = lats[mask], lons[mask]
        iu, ju = np.triu_indices(k, 1)
        d = _haversine_km_arrays(la[iu], lo[iu], la[ju], lo[ju]) / KM_PER_MILE
        out.append(float(d.mean()))
    return out


def average_path(path: RiverPath) -> list[GeoPoint]:
    """Ordered polyline of non-empty segment cogs; empty segments are bridged
    by joining their neighbours directly."""
    cogs = [s.cog for s in path.segments if s.cog is not None]
    if len(cogs) < 2:
        raise DataError("average path needs at least 2 segments with points")
    return cogs


def impute_trajectory(
    trip: Trip, avg_path: list[GeoPoint], segment_length_miles: float
) -> tuple[Trip, dict]:
    """Insert flagged synthetic records at average-path vertices crossed
    between consecutive pings that are more than one segment apart, with
    timestamps interpolated by along-path distance (constant speed).

    Original records are never modified; synthetic records carry sentinel
    speed/heading so they can never enter motion statistics.
    """
    if len(trip.records) < 2:
        raise DataError("trajectory imputation needs at least 2 records")
    cum = polyline_arclengths(avg_path)
    lats = np.array([r.lat for r in trip.records])
    lons = np.array([r.lon for r in trip.records])
    s, _, _, off_end = project_points(lats, lons, avg_path)

    out: list[AisRecord] = []
    inserted = 0
    skipped_pairs = 0
    for i, rec in enumerate(trip.records):
        out.append(rec)
        if i + 1 >= len(trip.records):
            break
        nxt = trip.records[i + 1]
        if off_end[i] != 0 or off_end[i + 1] != 0:
            skipped_pairs += 1
            continue
        s1, s2 = float(s[i]), float(s[i + 1])
        gap = abs(s2 - s1)
        if gap <= segment_length_miles:
            continue
        lo, hi = min(s1, s2), max(s1, s2)
        crossed = np.nonzero((cum > lo + 1e-12) & (cum < hi - 1e-12))[0]
        if s2 < s1:
            crossed = crossed[::-1]
        for vi in crossed:
            frac = abs(cum[vi] - s1) / gap
            ts = rec.timestamp + frac * (nxt.timestamp - rec.timestamp)
            out.append(
                AisRecord(
                    mmsi=rec.mmsi,
                    timestamp=float(ts),
                    lat=avg_path[vi].lat,
                    lon=avg_path[vi].lon,
                    sog=SOG_UNAVAILABLE,
                    course=None,
                    heading=None,
                    vessel_type=rec.vessel_type,
                    status=rec.status,
                    length=rec.length,
                    width=rec.width,
                    draft=rec.draft,
                    cargo=rec.cargo,
                    synthetic=True,
                )
            )
            inserted += 1
    imputed = Trip(mmsi=trip.mmsi, trip_id=trip.trip_id, records=out)
    return imputed, {"inserted": inserted, "skipped_pairs": skipped_pairs}


@dataclass
class ArrivalDiagnostics:
    mode: str
    record_index: int
    distance_miles: float
    shift_s: float = 0.0
    fell_back_to_nearest: bool = False


def estimate_arrival(
    trip: Trip,
    landmark: GeoPoint,
    avg_path: list[GeoPoint],
    mode: str = "nearest",
) -> tuple[float, ArrivalDiagnostics]:
    """Estimate when the trip crossed a bridge point.

    nearest: timestamp of the closest record, shifted by remaining along-path
    distance over that record's speed when the speed is usable. weighted:
    inverse-distance average of the nearest record on each side of the
    landmark's arclength, falling back to nearest when one side is empty.
    """
    if not trip.records:
        raise DataError("cannot estimate arrival for an empty trip")
    if mode not in ("nearest", "weighted"):
        raise ValueError(f"unknown arrival mode {mode!r}")
    lats = np.array([r.lat for r in trip.records])
    lons = np.array([r.lon for r in trip.records])
    dist = _haversine_km_arrays(lats, lons, landmark.lat, landmark.lon) / KM_PER_MILE
    s, _, _, _ = project_points(lats, lons, avg_path)
    s_lm = project_to_path(landmark, avg_path).arclength_miles

    nearest_i = int(np.argmin(dist))
    if dist[nearest_i] <= 1e-9:
        return trip.records[nearest_i].timestamp, ArrivalDiagnostics(
            mode=mode, record_index=nearest_i, distance_miles=0.0
        )

    if mode == "weighted":
        before = np.nonzero(s <= s_lm)[0]
        after = np.nonzero(s > s_lm)[0]
        if len(before) and len(after):
            b = before[np.argmax(s[before])]
            a = after[np.argmin(s[after])]
            d1, d2 = float(dist[b]), float(dist[a])
            t1, t2 = trip.records[b].timestamp, trip.records[a].timestamp
            arrival = (t1 / d1 + t2 / d2) / (1.0 / d1 + 1.0 / d2)
            return arrival, ArrivalDiagnostics(
                mode="weighted", record_index=int(b), distance_miles=min(d1, d2)
            )
        diag_fallback = True
    else:
        diag_fallback = False

    rec = trip.records[nearest_i]
    net = float(s[-1] - s[0])
    direction = 0.0 if net == 0.0 else math.copysign(1.0, net)
    shift_s = 0.0
    if direction != 0.0 and valid_sog(rec.sog) and rec.sog > 0:
        remaining = (s_lm - float(s[nearest_i])) * direction
        shift_s = remaining / (rec.sog * MPH_PER_KNOT) * 3600.0
    return rec.timestamp + shift_s, ArrivalDiagnostics(
        mode="nearest",
        record_index=nearest_i,
        distance_miles=float(dist[nearest_i]),
        shift_s=shift_s,
        fell_back_to_nearest=diag_fallback,
    )


def load_centerline_geojson(path) -> list[GeoPoint]:
    """Read a GeoJSON file containing a single LineString in (lon, lat) order,
    digitized from upstream to downstream."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    geom = data
    if data.get("type") == "FeatureCollection":
        feats = data.get("features", [])
        if len(feats) != 1:
            raise DataError("centerline GeoJSON must contain exactly one feature")
        geom = feats[0].get("geometry", {})
    elif data.get("type") == "Feature":
        geom = data.get("geometry", {})
    if geom.get("type") != "LineString":
        raise DataError("centerline geometry must be a LineString")
    coords = geom.get("coordinates", [])
    if len(coords) < 2:
        raise DataError("centerline needs at least 2 points")
    return [GeoPoint(lat=float(c[1]), lon=float(c[0])) for c in coords]


def write_polyline_geojson(polyline: list[GeoPoint], path) -> None:
    obj = {
        "type": "Feature",
        "geometry": {
            "type": "LineString",
            "coordinates": [[p.lon, p.lat] for p in polyline],
        },
        "properties": {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def write_segment_csv(path_obj: RiverPath, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["segment_index", "start_mi", "end_mi", "cog_lat", "cog_lon", "n_points"])
        for i, seg in enumerate(path_obj.segments):
            if seg.cog is None:
                w.writerow([i, repr(seg.start_miles), repr(seg.end_miles), "", "", 0])
            else:
                w.writerow(
                    [i, repr(seg.start_miles), repr(seg.end_miles), repr(seg.cog.lat), repr(seg.cog.lon), seg.n_points]
                )
