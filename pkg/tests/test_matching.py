import itertools

import numpy as np
import pytest

from bargecast._util import DataError
from bargecast.matching import (
    CameraObservation,
    match_observations,
    parse_observations,
    trip_direction,
)

from conftest import equator_path, equator_point, make_record, make_trip

OBS_HEADER = "location_id,lat,lon,observed_at,direction,barge_count\n"


def obs_row(loc="b1", lat=0.0, lon=0.05, ts="2023-04-01T12:03:00", direction="Downstream", count=10):
    return f"{loc},{lat},{lon},{ts},{direction},{count}\n"


class TestParseObservations:
    def test_direction_normalized(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text(OBS_HEADER + obs_row(direction="Downstream"))
        obs, report = parse_observations(path)
        assert obs[0].direction == "downstream"
        assert report["rows"] == 1

    def test_out_of_range_count_rejected(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text(OBS_HEADER + obs_row(count=50) + obs_row(count=3))
        obs, report = parse_observations(path)
        assert len(obs) == 1
        assert report["rejected_count"] == 1

    def test_bad_timestamp_rejected(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text(OBS_HEADER + obs_row(ts="yesterday"))
        obs, report = parse_observations(path)
        assert obs == [] and report["rejected_timestamp"] == 1

    def test_header_only(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text(OBS_HEADER)
        obs, _ = parse_observations(path)
        assert obs == []

    def test_missing_column_hard_error(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text("location_id,lat,lon\n")
        with pytest.raises(DataError):
            parse_observations(path)


def traversing_trip(start_mi, end_mi, t0=0.0, speed_mi_per_s=0.002, mmsi=1, trip_id="t-0"):
    n = 20
    arcs = np.linspace(start_mi, end_mi, n)
    dt = abs(end_mi - start_mi) / (n - 1) / speed_mi_per_s
    records = [
        make_record(mmsi=mmsi, timestamp=t0 + i * dt, lat=0.0, lon=equator_point(a).lon, sog=7.0)
        for i, a in enumerate(arcs)
    ]
    return make_trip(records, mmsi=mmsi, trip_id=trip_id)


class TestTripDirection:
    def test_downstream(self, straight_path):
        trip = traversing_trip(0.1, 0.9)
        assert trip_direction(trip, straight_path, 0.3) == "downstream"

    def test_upstream(self, straight_path):
        trip = traversing_trip(0.9, 0.1)
        assert trip_direction(trip, straight_path, 0.3) == "upstream"

    def test_ambiguous_within_one_segment(self, straight_path):
        trip = traversing_trip(0.40, 0.50)
        assert trip_direction(trip, straight_path, 0.3) == "ambiguous"


def camera(loc, arc_mi, observed_at, direction="downstream", count=10):
    p = equator_point(arc_mi)
    return CameraObservation(
        location_id=loc, bridge_point=p, observed_at=observed_at, direction=direction, barge_count=count
    )


class TestMatchObservations:
    def path(self):
        return equator_path(3.0, 31)

    def test_single_candidate_within_tolerance(self):
        path = self.path()
        trip = traversing_trip(0.0, 2.0, t0=0.0)
        # the trip crosses 1.0 mi at t = 500 s; the observation is 180 s later
        ob = camera("b1", 1.0, 500.0 + 180.0)
        matches, report = match_observations([trip], [ob], path, tolerance_s=900, segment_length_miles=0.3)
        assert len(matches) == 1
        m = matches[0]
        assert m.match_delta_s == pytest.approx(-180.0, abs=15.0)
        assert m.barge_count == 10 and m.has_barge

    def test_direction_mismatch_never_matches(self):
        path = self.path()
        trip = traversing_trip(2.0, 0.0, t0=0.0)  # upstream
        ob = camera("b1", 1.0, 500.0, direction="downstream")
        matches, report = match_observations([trip], [ob], path, tolerance_s=3600, segment_length_miles=0.3)
        assert matches == []
        assert report["b1"]["dropped_direction"] == 1

    def test_outside_tolerance_unmatched(self):
        path = self.path()
        trip = traversing_trip(0.0, 2.0, t0=0.0)
        ob = camera("b1", 1.0, 99999.0)
        matches, report = match_observations([trip], [ob], path, tolerance_s=900, segment_length_miles=0.3)
        assert matches == []
        assert report["b1"]["dropped_tolerance"] == 1

    def test_ambiguous_trip_never_matches(self):
        path = self.path()
        trip = traversing_trip(0.95, 1.05, t0=480.0)
        ob = camera("b1", 1.0, 500.0)
        matches, _ = match_observations([trip], [ob], path, tolerance_s=3600, segment_length_miles=0.3)
        assert matches == []

    def brute_force_best(self, arrivals, obs_times, tolerance):
        """Maximum one-to-one order-consistent assignment (oracle)."""
        best = []
        n, m = len(arrivals), len(obs_times)
        for k in range(min(n, m), 0, -1):
            for trips_sub in itertools.combinations(range(n), k):
                for obs_perm in itertools.permutations(range(m), k):
                    pairs = list(zip(trips_sub, obs_perm))
                    if any(abs(arrivals[t] - obs_times[o]) > tolerance for t, o in pairs):
                        continue
                    by_arrival = sorted(pairs, key=lambda p: arrivals[p[0]])
                    times = [obs_times[o] for _, o in by_arrival]
                    if all(a <= b for a, b in zip(times, times[1:])):
                        best.append(set(pairs))
            if best:
                return best
        return [set()]

    def test_order_check_against_brute_force(self):
        path = self.path()
        # two trips crossing the bridge at 12:00 and 12:10; observations at
        # 12:11 and 12:02 - the only order-consistent 2-matching pairs them
        # crosswise, and greedy + the order filter must find exactly that
        t1 = traversing_trip(0.0, 2.0, t0=43200.0 - 500.0, mmsi=1, trip_id="t-1")
        t2 = traversing_trip(0.0, 2.0, t0=43800.0 - 500.0, mmsi=2, trip_id="t-2")
        obs = [camera("b1", 1.0, 43860.0), camera("b1", 1.0, 43320.0)]
        matches, _ = match_observations([t1, t2], obs, path, tolerance_s=900, segment_length_miles=0.3)
        arrivals = {m.trip_id: m.estimated_arrival for m in matches}
        got = {(m.trip_id, m.barge_count) for m in matches}
        oracle = self.brute_force_best([43200.0, 43800.0], [43860.0, 43320.0], 900.0)
        assert len(matches) == len(max(oracle, key=len))
        # pairing must be the crosswise one: t-1 with the 12:02 obs
        matched_obs = {m.trip_id: m.match_delta_s for m in matches}
        assert len(matches) == 2
        by_id = {m.trip_id: m for m in matches}
        assert abs(by_id["t-1"].estimated_arrival - 43320.0) < abs(by_id["t-1"].estimated_arrival - 43860.0)

    def test_order_violator_dropped(self):
        path = self.path()
        # t-1 (arrives ~503) greedily grabs the 520 observation, pushing t-2
        # (arrives ~2503) onto the 480 one - a time-order crossing the
        # headway check must break by dropping one pair
        t1 = traversing_trip(0.0, 2.0, t0=0.0, mmsi=1, trip_id="t-1")
        t2 = traversing_trip(0.0, 2.0, t0=2000.0, mmsi=2, trip_id="t-2")
        obs = [camera("b1", 1.0, 480.0), camera("b1", 1.0, 520.0)]
        matches, report = match_observations([t1, t2], obs, path, tolerance_s=3000, segment_length_miles=0.3)
        assert len(matches) == 1
        assert report["b1"]["dropped_order"] == 1
        assert matches[0].trip_id == "t-1"

    def test_one_to_one_across_locations(self):
        path = self.path()
        trip = traversing_trip(0.0, 2.5, t0=0.0, trip_id="t-1")
        obs = [camera("a", 1.0, 500.0), camera("b", 2.0, 1000.0)]
        matches, _ = match_observations([trip], obs, path, tolerance_s=3600, segment_length_miles=0.3)
        assert len(matches) == 1  # a trip is matched at most once globally

    def test_tolerance_anti_monotone(self):
        path = self.path()
        rng = np.random.default_rng(0)
        trips = [
            traversing_trip(0.0, 2.0, t0=float(i * 1800 + rng.uniform(-60, 60)), mmsi=i, trip_id=f"t-{i}")
            for i in range(6)
        ]
        obs = [camera("b1", 1.0, 500.0 + i * 1800 + float(rng.uniform(-200, 200))) for i in range(6)]
        sizes = []
        for tol in (60.0, 300.0, 900.0, 3600.0):
            matches, _ = match_observations(trips, obs, path, tolerance_s=tol, segment_length_miles=0.3)
            sizes.append(len(matches))
        assert sizes == sorted(sizes)

    def test_recall_on_known_pairings(self):
        # arrivals spaced 2000 s apart; skew max 120 s; tolerance 900 s:
        # every true pair must be recovered
        path = self.path()
        rng = np.random.default_rng(1)
        trips, obs, truth = [], [], {}
        for i in range(10):
            cross = 500.0 + i * 2000.0
            trips.append(traversing_trip(0.0, 2.0, t0=cross - 500.0, mmsi=i, trip_id=f"t-{i}"))
            skew = float(rng.uniform(-120, 120))
            obs.append(camera("b1", 1.0, cross + skew, count=i + 1))
            truth[f"t-{i}"] = i + 1
        matches, _ = match_observations(trips, obs, path, tolerance_s=900, segment_length_miles=0.3)
        assert len(matches) == 10
        for m in matches:
            assert truth[m.trip_id] == m.barge_count

    def test_unknown_location_hard_error(self):
        path = self.path()
        trip = traversing_trip(0.0, 2.0)
        ob = camera("mystery", 1.0, 500.0)
        with pytest.raises(DataError, match="mystery"):
            match_observations([trip], [ob], path, bridge_points={"b1": equator_point(1.0)},
                               tolerance_s=900, segment_length_miles=0.3)

    def test_rechecked_attributes_on_emitted_matches(self):
        path = self.path()
        rng = np.random.default_rng(2)
        trips, obs = [], []
        for i in range(8):
            cross = 500.0 + i * 1500.0
            direction = "downstream" if i % 2 == 0 else "upstream"
            span = (0.0, 2.0) if direction == "downstream" else (2.0, 0.0)
            trips.append(traversing_trip(span[0], span[1], t0=cross - 500.0, mmsi=i, trip_id=f"t-{i}"))
            obs.append(camera("b1", 1.0, cross + float(rng.uniform(-100, 100)), direction=direction, count=i))
        matches, _ = match_observations(trips, obs, path, tolerance_s=900, segment_length_miles=0.3)
        trip_by_id = {t.trip_id: t for t in trips}
        obs_by_count = {o.barge_count: o for o in obs}
        seen_trips, seen_obs = set(), set()
        for m in matches:
            assert m.trip_id not in seen_trips
            assert m.barge_count not in seen_obs
            seen_trips.add(m.trip_id)
            seen_obs.add(m.barge_count)
            assert abs(m.match_delta_s) <= 900
            ob = obs_by_count[m.barge_count]
            assert trip_direction(trip_by_id[m.trip_id], path, 0.3) == ob.direction
        by_arrival = sorted(matches, key=lambda m: m.estimated_arrival)
        obs_times = [obs_by_count[m.barge_count].observed_at for m in by_arrival]
        assert all(a <= b for a, b in zip(obs_times, obs_times[1:]))


class TestEmitLabeledDataset:
    def test_rows_and_has_barge(self, tmp_path):
        from bargecast.matching import LabeledSample, emit_labeled_dataset
        from bargecast import features as ft

        matches = [
            LabeledSample("t-1", 1, "b1", 10, True, 500.0, -20.0),
            LabeledSample("t-2", 2, "b1", 0, False, 900.0, 5.0),
        ]
        vectors = {"t-1": np.arange(36, dtype=float), "t-2": np.ones(36)}
        path = tmp_path / "labeled.csv"
        emit_labeled_dataset(matches, vectors, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        assert lines[0].split(",")[2] == ft.FEATURE_NAMES[0]
        assert ",false," in lines[2]

    def test_empty_matches_header_only(self, tmp_path):
        from bargecast.matching import emit_labeled_dataset

        path = tmp_path / "labeled.csv"
        emit_labeled_dataset([], {}, path)
        assert len(path.read_text().splitlines()) == 1

    def test_missing_vector_names_trip(self, tmp_path):
        from bargecast.matching import LabeledSample, emit_labeled_dataset

        matches = [LabeledSample("t-9", 1, "b1", 3, True, 0.0, 0.0)]
        with pytest.raises(DataError, match="t-9"):
            emit_labeled_dataset(matches, {}, tmp_path / "x.csv")
