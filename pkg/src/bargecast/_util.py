"""Shared constants, seeded-RNG derivation and canonical JSON helpers."""

from __future__ import annotations

import hashlib
import json
import math
from datetime import datetime, timezone

import numpy as np

EARTH_RADIUS_KM = 6371.0
KM_PER_MILE = 1.609344
# one knot = 1.852 km/h exactly
MPH_PER_KNOT = 1.852 / KM_PER_MILE

SOG_UNAVAILABLE = 102.3
COURSE_UNAVAILABLE = 360.0
HEADING_UNAVAILABLE = 511.0

TIMESTAMP_FMT = "%Y-%m-%dT%H:%M:%S"


class DataError(Exception):
    """Input data violates a documented contract (maps to CLI exit code 2)."""


def derive_seed(master: int, *tags) -> int:
    """Stable child seed from a master seed and a tag path.

    Hash-based so results do not depend on call order or platform; used to
    give every stochastic sub-task (tree member, CV fold, trial) its own
    independent stream.
    """
    h = hashlib.sha256(repr((int(master),) + tuple(tags)).encode()).digest()
    return int.from_bytes(h[:8], "big") % (2**63)


def rng_for(master: int, *tags) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *tags))


def parse_timestamp(text: str) -> float:
    """`YYYY-MM-DDTHH:MM:SS` (UTC) -> epoch seconds."""
    dt = datetime.strptime(text.strip().rstrip("Z"), TIMESTAMP_FMT)
    return dt.replace(tzinfo=timezone.utc).timestamp()


def format_timestamp(epoch_s: float) -> str:
    dt = datetime.fromtimestamp(int(round(epoch_s)), tz=timezone.utc)
    return dt.strftime(TIMESTAMP_FMT)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError(f"non-finite value {obj!r} not representable in artifact JSON")
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON encoding: sorted keys, no whitespace drift."""
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_json(path, obj, pretty: bool = True) -> None:
    data = _jsonable(obj)
    with open(path, "w", encoding="utf-8") as fh:
        if pretty:
            json.dump(data, fh, sort_keys=True, indent=2, allow_nan=False)
        else:
            fh.write(canonical_json(obj))
        fh.write("\n")


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]
