import math

import numpy as np
import pytest

from bargecast.ais import AisRecord, Trip
from bargecast.geo import GeoPoint

# statute miles per degree of latitude / equatorial longitude at R = 6371 km
MILES_PER_DEG = 2 * math.pi * 6371.0 / 1.609344 / 360.0


def make_record(
    mmsi=366000001,
    timestamp=0.0,
    lat=0.0,
    lon=0.0,
    sog=6.0,
    course=None,
    heading=90.0,
    vessel_type=31,
    status=0,
    length=30.0,
    width=10.0,
    draft=2.7,
    cargo=31,
    synthetic=False,
):
    return AisRecord(
        mmsi=mmsi, timestamp=timestamp, lat=lat, lon=lon, sog=sog, course=course,
        heading=heading, vessel_type=vessel_type, status=status, length=length,
        width=width, draft=draft, cargo=cargo, synthetic=synthetic,
    )


def make_trip(records, mmsi=None, trip_id="t-000"):
    return Trip(mmsi=mmsi if mmsi is not None else records[0].mmsi, trip_id=trip_id, records=list(records))


def equator_path(length_miles, n_points=50):
    """Straight west-to-east polyline along the equator."""
    lons = np.linspace(0.0, length_miles / MILES_PER_DEG, n_points)
    return [GeoPoint(0.0, float(lon)) for lon in lons]


def equator_point(arclength_miles, lat=0.0):
    return GeoPoint(lat, arclength_miles / MILES_PER_DEG)


@pytest.fixture
def straight_path():
    return equator_path(1.0, 11)
