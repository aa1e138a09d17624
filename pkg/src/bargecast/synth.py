"""Synthetic test bed: a sinusoidal river, tow vessels with planted
barge-count signal, bridge-point observations with clock skew, and the
ground-truth pairing file.

The planted signal follows the documented direction: base speed strictly
decreases with barge count, turn rate rises mildly with it, and vessel
dimensions grow with it. Same seed, byte-identical output files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, asdict

import numpy as np

from ._util import DataError, MPH_PER_KNOT, SOG_UNAVAILABLE, HEADING_UNAVAILABLE, format_timestamp, rng_for
from .geo import GeoPoint, polyline_arclengths, write_polyline_geojson

# statute miles per degree of latitude on the R=6371 km sphere
_MILES_PER_DEG = 2 * math.pi * 6371.0 / 1.609344 / 360.0

BASE_EPOCH = 1680307200  # 2023-04-01T00:00:00Z


@dataclass
class SyntheticScenario:
    river_length_miles: float = 40.0
    river_amplitude_miles: float = 1.2
    river_wavelength_miles: float = 9.0
    river_origin_lat: float = 35.5
    river_origin_lon: float = -90.8
    river_vertices: int = 420
    n_locations: int = 4
    vessels_per_location: int = 150
    p_no_barge: float = 0.28
    bin_weights: tuple = (0.20, 0.24, 0.22, 0.14, 0.11, 0.09)
    ping_interval_s: float = 60.0
    speed_noise_kn: float = 0.35
    vessel_speed_sd_kn: float = 0.25
    cross_track_noise_miles: float = 0.02
    dim_noise_m: tuple = (2.5, 0.8, 0.15)
    missing_rate: float = 0.2
    gap_rate: float = 0.15
    gap_miles: tuple = (1.0, 3.5)
    obs_skew_sd_s: float = 90.0
    headway_s: tuple = (1200.0, 2400.0)
    sentinel_rate: float = 0.01
    location_speed_shift_kn: tuple = (0.0, 0.0, 0.0, 0.0)
    seed: int = 7

    def validate(self):
        if self.n_locations < 1 or self.vessels_per_location < 1:
            raise DataError("scenario needs at least one location and one vessel")
        if not math.isclose(sum(self.bin_weights), 1.0, abs_tol=1e-6):
            raise DataError("bin_weights must sum to 1")
        if len(self.location_speed_shift_kn) < self.n_locations:
            raise DataError("location_speed_shift_kn must cover every location")
        if self.base_speed_knots(42) - 3 * self.speed_noise_kn <= 0.5:
            raise DataError("speed model reaches non-positive speeds at high barge counts")

    @staticmethod
    def base_speed_knots(barge_count: int) -> float:
        """Strictly decreasing in barge count; unencumbered tows are clearly
        faster than any loaded configuration."""
        if barge_count == 0:
            return 10.8
        return 9.5 - 0.12 * barge_count


_BIN_RANGES = [(1, 1), (2, 4), (5, 12), (13, 20), (21, 29), (30, 42)]


def make_river(scn: SyntheticScenario) -> list[GeoPoint]:
    """Sinusoidal centerline digitized upstream (north) to downstream."""
    s = np.linspace(0.0, scn.river_length_miles, scn.river_vertices)
    lat = scn.river_origin_lat - s / _MILES_PER_DEG
    wiggle = scn.river_amplitude_miles * np.sin(2 * math.pi * s / scn.river_wavelength_miles)
    lon = scn.river_origin_lon + wiggle / (_MILES_PER_DEG * np.cos(np.radians(lat)))
    return [GeoPoint(float(a), float(o)) for a, o in zip(lat, lon)]


def _point_at_arclength(polyline: list[GeoPoint], cum: np.ndarray, s: float) -> GeoPoint:
    s = min(max(s, 0.0), float(cum[-1]))
    i = int(np.searchsorted(cum, s, side="right") - 1)
    i = min(i, len(polyline) - 2)
    span = cum[i + 1] - cum[i]
    t = 0.0 if span <= 0 else (s - cum[i]) / span
    a, b = polyline[i], polyline[i + 1]
    return GeoPoint(a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon))


def _bearing_at(polyline: list[GeoPoint], cum: np.ndarray, s: float) -> float:
    i = int(np.searchsorted(cum, min(max(s, 0.0), float(cum[-1])), side="right") - 1)
    i = min(i, len(polyline) - 2)
    a, b = polyline[i], polyline[i + 1]
    dy = b.lat - a.lat
    dx = (b.lon - a.lon) * math.cos(math.radians(a.lat))
    return (math.degrees(math.atan2(dx, dy)) + 360.0) % 360.0


def _offset_point(p: GeoPoint, bearing_deg: float, right_miles: float) -> GeoPoint:
    """Shift a point perpendicular to a bearing (positive to the right)."""
    perp = math.radians(bearing_deg + 90.0)
    dlat = right_miles * math.cos(perp) / _MILES_PER_DEG
    dlon = right_miles * math.sin(perp) / (_MILES_PER_DEG * math.cos(math.radians(p.lat)))
    return GeoPoint(p.lat + dlat, p.lon + dlon)


def _draw_barge_count(rng: np.random.Generator, scn: SyntheticScenario) -> int:
    if rng.random() < scn.p_no_barge:
        return 0
    b = int(rng.choice(len(_BIN_RANGES), p=np.array(scn.bin_weights)))
    lo, hi = _BIN_RANGES[b]
    return int(rng.integers(lo, hi + 1))


def generate_synthetic(scn: SyntheticScenario, out_dir) -> dict:
    """Write ais.csv, river.geojson, observations.csv and truth.csv under
    out_dir; returns the file paths plus scenario bookkeeping."""
    import os

    scn.validate()
    os.makedirs(out_dir, exist_ok=True)
    river = make_river(scn)
    cum = polyline_arclengths(river)
    total = float(cum[-1])

    # bridges sit at even fractions of the river, numbered from upstream
    fracs = np.linspace(0.2, 0.85, scn.n_locations)
    bridges = []
    for i, f in enumerate(fracs):
        s_b = f * total
        bridges.append((f"loc{i + 1}", s_b, _point_at_arclength(river, cum, s_b)))

    ais_rows = []  # (timestamp, formatted row)
    obs_rows = []
    truth_rows = []
    vessel_counter = 0
    for li, (loc_id, s_bridge, bridge_pt) in enumerate(bridges):
        # each camera gets its own observation window (passive monitoring ran
        # for months); windows are spaced so traffic never overlaps across sites
        slot_t = float(BASE_EPOCH) + li * 30 * 86400.0
        for vi in range(scn.vessels_per_location):
            rng = rng_for(scn.seed, "vessel", li, vi)
            vessel_counter += 1
            mmsi = 366000000 + vessel_counter
            barges = _draw_barge_count(rng, scn)
            speed = (
                scn.base_speed_knots(barges)
                + float(rng.normal(0.0, scn.vessel_speed_sd_kn))
                + scn.location_speed_shift_kn[li]
            )
            speed = max(speed, 1.6)
            downstream = bool(rng.random() < 0.5)
            reach = float(rng.uniform(2.8, 4.0))
            s_start = s_bridge - reach if downstream else s_bridge + reach
            s_end = s_bridge + reach if downstream else s_bridge - reach

            slot_t += float(rng.uniform(*scn.headway_s))
            cross_t = slot_t
            mph = speed * MPH_PER_KNOT
            start_t = cross_t - abs(s_bridge - s_start) / mph * 3600.0

            length = 20.0 + 2.4 * barges + float(rng.normal(0.0, scn.dim_noise_m[0]))
            width = 9.0 + 0.5 * barges + float(rng.normal(0.0, scn.dim_noise_m[1]))
            draft = 2.0 + 0.045 * barges + float(rng.normal(0.0, scn.dim_noise_m[2]))
            length, width, draft = max(length, 8.0), max(width, 3.0), max(draft, 0.5)
            miss_len = rng.random() < scn.missing_rate
            miss_wid = rng.random() < scn.missing_rate
            miss_drf = rng.random() < scn.missing_rate
            vtype = int(rng.choice([31, 52, 70], p=[0.7, 0.25, 0.05]))
            cargo = int(rng.choice([31, 32, 52, 57, 70], p=[0.4, 0.2, 0.2, 0.1, 0.1]))
            status = int(rng.choice([0, 12, 15], p=[0.7, 0.28, 0.02]))
            # turn-rate wiggle grows mildly with load
            wiggle_deg = 1.0 + 0.04 * barges

            has_gap = rng.random() < scn.gap_rate
            gap_len = float(rng.uniform(*scn.gap_miles)) if has_gap else 0.0
            gap_at = float(rng.uniform(0.3, 2 * reach - 0.3 - gap_len)) if has_gap and 2 * reach - 0.6 - gap_len > 0 else None

            t = start_t
            travelled = 0.0
            sign = 1.0 if downstream else -1.0
            heading_prev = None
            while travelled <= 2 * reach:
                s_here = s_start + sign * travelled
                ping_speed = max(speed + float(rng.normal(0.0, scn.speed_noise_kn)), 1.2)
                in_gap = gap_at is not None and gap_at <= travelled < gap_at + gap_len
                if not in_gap:
                    p = _point_at_arclength(river, cum, s_here)
                    brg = _bearing_at(river, cum, s_here)
                    if not downstream:
                        brg = (brg + 180.0) % 360.0
                    p = _offset_point(p, brg, float(rng.normal(0.0, scn.cross_track_noise_miles)))
                    heading = (brg + float(rng.normal(0.0, wiggle_deg))) % 360.0
                    heading_prev = heading
                    sog_field = SOG_UNAVAILABLE if rng.random() < scn.sentinel_rate else round(ping_speed, 1)
                    hdg_field = HEADING_UNAVAILABLE if rng.random() < scn.sentinel_rate else round(heading, 1)
                    ais_rows.append(
                        (
                            t,
                            [
                                mmsi,
                                format_timestamp(t),
                                f"{p.lat:.6f}",
                                f"{p.lon:.6f}",
                                f"{sog_field:.1f}",
                                f"{(heading_prev or 0.0):.1f}",
                                f"{hdg_field:.1f}",
                                vtype,
                                status,
                                "" if miss_len else f"{length:.1f}",
                                "" if miss_wid else f"{width:.1f}",
                                "" if miss_drf else f"{draft:.2f}",
                                cargo,
                            ],
                        )
                    )
                t += scn.ping_interval_s
                travelled += ping_speed * MPH_PER_KNOT * scn.ping_interval_s / 3600.0

            observed_at = cross_t + float(rng.normal(0.0, scn.obs_skew_sd_s))
            obs_rows.append(
                [
                    loc_id,
                    f"{bridge_pt.lat:.6f}",
                    f"{bridge_pt.lon:.6f}",
                    format_timestamp(observed_at),
                    "Downstream" if downstream else "Upstream",
                    barges,
                ]
            )
            truth_rows.append(
                [loc_id, mmsi, barges, format_timestamp(cross_t), "downstream" if downstream else "upstream"]
            )

    ais_rows.sort(key=lambda r: (r[0], r[1][0]))
    paths = {
        "ais_csv": str(os.path.join(out_dir, "ais.csv")),
        "river_geojson": str(os.path.join(out_dir, "river.geojson")),
        "observations_csv": str(os.path.join(out_dir, "observations.csv")),
        "truth_csv": str(os.path.join(out_dir, "truth.csv")),
    }
    with open(paths["ais_csv"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["MMSI", "BaseDateTime", "LAT", "LON", "SOG", "COG", "Heading",
             "VesselType", "Status", "Length", "Width", "Draft", "Cargo"]
        )
        for _, row in ais_rows:
            w.writerow(row)
    write_polyline_geojson(river, paths["river_geojson"])
    with open(paths["observations_csv"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["location_id", "lat", "lon", "observed_at", "direction", "barge_count"])
        w.writerows(obs_rows)
    with open(paths["truth_csv"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["location_id", "mmsi", "barge_count", "crossed_at", "direction"])
        w.writerows(truth_rows)
    return {
        **paths,
        "n_vessels": vessel_counter,
        "n_observations": len(obs_rows),
        "scenario": asdict(scn),
    }
