import numpy as np
import pytest

from bargecast._util import DataError, SOG_UNAVAILABLE
from bargecast.ais import (
    buffer_filter,
    clean_records,
    parse_ais_csv,
    split_trips,
)
from bargecast.geo import haversine_miles

from conftest import equator_path, equator_point, make_record

HEADER = "MMSI,BaseDateTime,LAT,LON,SOG,COG,Heading,VesselType,Status,Length,Width,Draft,Cargo\n"


def write_csv(tmp_path, rows, header=HEADER, name="ais.csv"):
    path = tmp_path / name
    path.write_text(header + "".join(rows))
    return path


def row(ts="2023-04-01T00:00:00", lat="35.0", lon="-90.0", sog="6.0", length="30", status="0"):
    return f"366000001,{ts},{lat},{lon},{sog},90.0,90.0,31,{status},{length},10,2.7,31\n"


class TestParse:
    def test_sentinel_sog_kept_as_value(self, tmp_path):
        records, report = parse_ais_csv(write_csv(tmp_path, [row(sog="102.3")]))
        assert report.skipped == 0
        assert records[0].sog == SOG_UNAVAILABLE

    def test_empty_length_becomes_missing(self, tmp_path):
        records, _ = parse_ais_csv(write_csv(tmp_path, [row(length="")]))
        assert records[0].length is None
        assert records[0].width == 10.0

    def test_malformed_row_skipped_and_counted(self, tmp_path):
        rows = [row(), row(), row(), row(lat="not-a-number")]
        records, report = parse_ais_csv(write_csv(tmp_path, rows))
        assert len(records) == 3
        assert report.skipped == 1

    def test_out_of_range_lat_is_malformed(self, tmp_path):
        records, report = parse_ais_csv(write_csv(tmp_path, [row(lat="95.0"), row()]))
        assert len(records) == 1
        assert report.skipped == 1

    def test_missing_mandatory_column_is_hard_error(self, tmp_path):
        header = HEADER.replace("SOG,", "Speed,")
        path = write_csv(tmp_path, [], header=header)
        with pytest.raises(DataError, match="SOG"):
            parse_ais_csv(path)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(DataError):
            parse_ais_csv(tmp_path / "nope.csv")

    def test_schema_remap(self, tmp_path):
        header = HEADER.replace("BaseDateTime", "Timestamp")
        path = write_csv(tmp_path, [row()], header=header)
        records, _ = parse_ais_csv(path, schema={"timestamp": "Timestamp"})
        assert len(records) == 1


class TestClean:
    def test_slow_removed(self):
        kept, report = clean_records([make_record(sog=0.5)])
        assert kept == [] and report.removed_slow == 1

    def test_sentinel_kept(self):
        rec = make_record(sog=SOG_UNAVAILABLE)
        kept, _ = clean_records([rec])
        assert kept == [rec]

    def test_status_at_anchor_removed(self):
        kept, report = clean_records([make_record(sog=6.0, status=1)])
        assert kept == [] and report.removed_status == 1

    def test_fast_removed(self):
        kept, report = clean_records([make_record(sog=26.0)])
        assert kept == [] and report.removed_fast == 1

    def test_empty_input(self):
        kept, report = clean_records([])
        assert kept == [] and report.input == 0

    def test_counts_partition_input(self):
        records = [
            make_record(sog=0.5), make_record(sog=0.0), make_record(sog=26.0),
            make_record(sog=SOG_UNAVAILABLE), make_record(sog=6.0, status=1),
            make_record(sog=6.0, status=2), make_record(sog=6.0),
        ]
        kept, r = clean_records(records)
        assert r.kept + r.removed_slow + r.removed_fast + r.removed_status == r.input == len(records)

    def test_idempotent_and_untouched(self):
        records = [make_record(sog=s, status=st) for s, st in [(0.5, 0), (6.0, 0), (26.0, 0), (6.0, 1), (102.3, 0)]]
        kept1, _ = clean_records(records)
        kept2, r2 = clean_records(kept1)
        assert kept2 == kept1  # same objects, unmodified
        assert r2.removed_slow == r2.removed_fast == r2.removed_status == 0


class TestBufferFilter:
    def test_on_vertex_kept(self):
        path = equator_path(5.0)
        rec = make_record(lat=path[0].lat, lon=path[0].lon)
        assert buffer_filter([rec], path, 0.1) == [rec]

    def test_two_miles_abeam_removed(self):
        path = equator_path(5.0)
        p = equator_point(2.5, lat=2.0 / 69.0)  # ~2 miles north of the line
        rec = make_record(lat=p.lat, lon=p.lon)
        # oracle: great-circle distance to the nearest centerline point
        d = min(haversine_miles(p, v) for v in path)
        assert d > 1.0
        assert buffer_filter([rec], path, 1.0) == []
        assert buffer_filter([rec], path, d + 0.1) == [rec]

    def test_empty_input(self):
        assert buffer_filter([], equator_path(5.0), 1.0) == []

    def test_monotone_in_buffer(self):
        path = equator_path(5.0)
        rng = np.random.default_rng(0)
        records = [
            make_record(lat=float(rng.uniform(-0.05, 0.05)), lon=float(rng.uniform(0, 0.07)))
            for _ in range(60)
        ]
        kept_small = set(id(r) for r in buffer_filter(records, path, 0.5))
        kept_big = set(id(r) for r in buffer_filter(records, path, 2.0))
        assert kept_small <= kept_big

    def test_degenerate_centerline(self):
        with pytest.raises(DataError):
            buffer_filter([make_record()], [equator_point(0.0)], 1.0)


class TestSplitTrips:
    def test_small_gaps_one_trip(self):
        records = [make_record(timestamp=120.0 * i) for i in range(10)]
        trips = split_trips(records, gap_minutes=60)
        assert len(trips) == 1 and len(trips[0].records) == 10

    def test_large_gap_splits(self):
        records = [make_record(timestamp=0.0), make_record(timestamp=90 * 60.0)]
        trips = split_trips(records, gap_minutes=60)
        assert len(trips) == 2

    def test_two_vessels_interleaved(self):
        records = [
            make_record(mmsi=1, timestamp=0.0),
            make_record(mmsi=2, timestamp=30.0),
            make_record(mmsi=1, timestamp=60.0),
            make_record(mmsi=2, timestamp=90.0),
        ]
        trips = split_trips(records, gap_minutes=60)
        assert len(trips) == 2
        assert {t.mmsi for t in trips} == {1, 2}

    def test_partition_property(self):
        rng = np.random.default_rng(1)
        records = []
        for mmsi in (11, 22, 33):
            t = 0.0
            for _ in range(rng.integers(5, 40)):
                t += float(rng.uniform(10, 7000))
                records.append(make_record(mmsi=mmsi, timestamp=t))
        shuffled = [records[i] for i in rng.permutation(len(records))]
        trips = split_trips(shuffled, gap_minutes=60)
        for mmsi in (11, 22, 33):
            own = sorted((r for r in records if r.mmsi == mmsi), key=lambda r: r.timestamp)
            concat = [r for t in trips if t.mmsi == mmsi for r in t.records]
            assert concat == own
        assert all(
            b.timestamp > a.timestamp
            for t in trips
            for a, b in zip(t.records, t.records[1:])
        )
