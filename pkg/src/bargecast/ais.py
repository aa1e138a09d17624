"""AIS CSV ingest: parsing, the speed/status cleaning rules, channel-buffer
filtering and per-vessel trip splitting.

Input files follow the MarineCadastre export layout by default; column names
are remappable through a schema map. Missing numeric cells become None, never
zero, and sentinel values (SOG 102.3, heading 511, course 360) are kept as-is
so downstream statistics can exclude them explicitly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from ._util import (
    DataError,
    HEADING_UNAVAILABLE,
    SOG_UNAVAILABLE,
    parse_timestamp,
)

DEFAULT_SCHEMA = {
    "mmsi": "MMSI",
    "timestamp": "BaseDateTime",
    "lat": "LAT",
    "lon": "LON",
    "sog": "SOG",
    "course": "COG",
    "heading": "Heading",
    "vessel_type": "VesselType",
    "status": "Status",
    "length": "Length",
    "width": "Width",
    "draft": "Draft",
    "cargo": "Cargo",
}

MANDATORY_FIELDS = ("mmsi", "timestamp", "lat", "lon", "sog")

MIN_SOG_KNOTS = 1.0
MAX_SOG_KNOTS = 25.0
REMOVED_STATUSES = (1, 2)  # at anchor, not under command


@dataclass
class AisRecord:
    mmsi: int
    timestamp: float  # epoch seconds, UTC
    lat: float
    lon: float
    sog: float
    course: float | None = None
    heading: float | None = None
    vessel_type: int | None = None
    status: int | None = None
    length: float | None = None
    width: float | None = None
    draft: float | None = None
    cargo: int | None = None
    synthetic: bool = False


@dataclass
class Trip:
    mmsi: int
    trip_id: str
    records: list[AisRecord] = field(default_factory=list)


@dataclass
class ParseReport:
    rows: int = 0
    parsed: int = 0
    skipped: int = 0


@dataclass
class CleaningReport:
    input: int = 0
    kept: int = 0
    removed_slow: int = 0
    removed_fast: int = 0
    removed_status: int = 0
    parse_skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "kept": self.kept,
            "removed_slow": self.removed_slow,
            "removed_fast": self.removed_fast,
            "removed_status": self.removed_status,
            "parse_skipped": self.parse_skipped,
        }


def valid_sog(sog: float | None) -> bool:
    return sog is not None and sog != SOG_UNAVAILABLE


def valid_heading(heading: float | None) -> bool:
    return heading is not None and heading != HEADING_UNAVAILABLE


def _opt_float(cell: str | None) -> float | None:
    if cell is None or cell.strip() == "":
        return None
    return float(cell)


def _opt_int(cell: str | None) -> int | None:
    v = _opt_float(cell)
    return None if v is None else int(round(v))


def _parse_row(row: dict, cols: dict) -> AisRecord:
    rec = AisRecord(
        mmsi=int(float(row[cols["mmsi"]])),
        timestamp=parse_timestamp(row[cols["timestamp"]]),
        lat=float(row[cols["lat"]]),
        lon=float(row[cols["lon"]]),
        sog=float(row[cols["sog"]]),
        course=_opt_float(row.get(cols.get("course", ""), None)),
        heading=_opt_float(row.get(cols.get("heading", ""), None)),
        vessel_type=_opt_int(row.get(cols.get("vessel_type", ""), None)),
        status=_opt_int(row.get(cols.get("status", ""), None)),
        length=_opt_float(row.get(cols.get("length", ""), None)),
        width=_opt_float(row.get(cols.get("width", ""), None)),
        draft=_opt_float(row.get(cols.get("draft", ""), None)),
        cargo=_opt_int(row.get(cols.get("cargo", ""), None)),
    )
    if not (-90.0 <= rec.lat <= 90.0 and -180.0 <= rec.lon <= 180.0):
        raise ValueError("lat/lon out of range")
    if rec.sog < 0 and rec.sog != SOG_UNAVAILABLE:
        raise ValueError("negative SOG")
    if rec.status is not None and not (0 <= rec.status <= 15):
        raise ValueError("status out of range")
    return rec


def parse_ais_csv(path, schema: dict | None = None) -> tuple[list[AisRecord], ParseReport]:
    """Parse an AIS CSV export into records.

    Rows that fail type conversion or violate field invariants are skipped and
    counted; a missing mandatory column is a hard error naming the column.
    """
    cols = dict(DEFAULT_SCHEMA)
    if schema:
        cols.update(schema)
    report = ParseReport()
    records: list[AisRecord] = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read AIS file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for fld in MANDATORY_FIELDS:
            if cols[fld] not in header:
                raise DataError(f"AIS file {path} is missing mandatory column {cols[fld]!r} ({fld})")
        for row in reader:
            report.rows += 1
            try:
                records.append(_parse_row(row, cols))
            except (ValueError, TypeError, KeyError):
                report.skipped += 1
    report.parsed = len(records)
    return records, report


def clean_records(records: list[AisRecord]) -> tuple[list[AisRecord], CleaningReport]:
    """Apply the speed and status cleaning rules.

    Removes records slower than 1 knot, faster than 25 knots (the 102.3
    unavailable sentinel is retained) and records with status 1 or 2. Kept
    records are returned unchanged.
    """
    report = CleaningReport(input=len(records))
    kept: list[AisRecord] = []
    for rec in records:
        if rec.sog < MIN_SOG_KNOTS:
            report.removed_slow += 1
        elif rec.sog > MAX_SOG_KNOTS and rec.sog != SOG_UNAVAILABLE:
            report.removed_fast += 1
        elif rec.status in REMOVED_STATUSES:
            report.removed_status += 1
        else:
            kept.append(rec)
    report.kept = len(kept)
    return kept, report


def buffer_filter(records: list[AisRecord], centerline, buffer_miles: float) -> list[AisRecord]:
    """Keep records whose great-circle distance to the centerline polyline is
    at most buffer_miles."""
    import numpy as np

    from .geo import distance_to_polyline_miles  # local import to avoid a cycle

    if buffer_miles <= 0:
        raise DataError("buffer width must be positive")
    if len(centerline) < 2:
        raise DataError("centerline needs at least 2 points")
    if not records:
        return []
    lats = np.array([r.lat for r in records])
    lons = np.array([r.lon for r in records])
    dist = distance_to_polyline_miles(lats, lons, centerline)
    return [rec for rec, d in zip(records, dist) if d <= buffer_miles]


def split_trips(records: list[AisRecord], gap_minutes: float = 60.0) -> list[Trip]:
    """Group records by vessel, sort by time, and split into trips wherever
    the gap between consecutive pings exceeds gap_minutes. Every input record
    lands in exactly one trip."""
    by_mmsi: dict[int, list[AisRecord]] = {}
    for rec in records:
        by_mmsi.setdefault(rec.mmsi, []).append(rec)
    trips: list[Trip] = []
    gap_s = gap_minutes * 60.0
    for mmsi in sorted(by_mmsi):
        recs = sorted(by_mmsi[mmsi], key=lambda r: r.timestamp)
        seq = 0
        current = [recs[0]]
        for prev, rec in zip(recs, recs[1:]):
            if rec.timestamp - prev.timestamp > gap_s:
                trips.append(Trip(mmsi=mmsi, trip_id=f"{mmsi}-{seq:03d}", records=current))
                seq += 1
                current = [rec]
            else:
                current.append(rec)
        trips.append(Trip(mmsi=mmsi, trip_id=f"{mmsi}-{seq:03d}", records=current))
    return trips


def write_ais_csv(records: list[AisRecord], path, schema: dict | None = None) -> None:
    """Write records back out in the input column layout (used by `clean`)."""
    from ._util import format_timestamp

    cols = dict(DEFAULT_SCHEMA)
    if schema:
        cols.update(schema)
    names = [cols[k] for k in DEFAULT_SCHEMA]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for r in records:
            w.writerow(
                [
                    r.mmsi,
                    format_timestamp(r.timestamp),
                    repr(r.lat),
                    repr(r.lon),
                    repr(r.sog),
                    "" if r.course is None else repr(r.course),
                    "" if r.heading is None else repr(r.heading),
                    "" if r.vessel_type is None else r.vessel_type,
                    "" if r.status is None else r.status,
                    "" if r.length is None else repr(r.length),
                    "" if r.width is None else repr(r.width),
                    "" if r.draft is None else repr(r.draft),
                    "" if r.cargo is None else r.cargo,
                ]
            )
