"""Time-indexed containers shared by the whole pipeline.

Timestamps are ``numpy.datetime64`` values at hourly resolution, always UTC.
Missing data is absence: an observation or forecast that was never stored is
simply not in the container. Lookups over arrays return NaN for absent
entries so that callers can drop incomplete rows in one vectorised step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterator, Mapping

import numpy as np

SOURCES = ("aro", "det", "ens_mu")
DEFAULT_HORIZONS = {"aro": 36, "det": 84, "ens_mu": 132}
ARCHETYPES = ("plain", "valley", "mountain")

TEMP_MIN_C = -90.0
TEMP_MAX_C = 60.0

HOUR = np.timedelta64(1, "h")


def to_hour(t) -> np.datetime64:
    """Coerce ``t`` to a ``datetime64[h]`` scalar.

    Accepts ISO strings (a trailing ``Z`` is allowed), ``datetime`` objects
    (aware ones are converted to UTC) and ``datetime64`` values. Anything with
    nonzero minutes or seconds is rejected.
    """
    if isinstance(t, str):
        t = t.strip()
        if t.endswith("Z"):
            t = t[:-1]
        t = np.datetime64(t)
    elif isinstance(t, datetime):
        if t.tzinfo is not None:
            t = t.astimezone(timezone.utc).replace(tzinfo=None)
        t = np.datetime64(t)
    elif not isinstance(t, np.datetime64):
        raise TypeError(f"cannot interpret {t!r} as a timestamp")
    hour = t.astype("datetime64[h]")
    if hour != t:
        raise ValueError(f"timestamp {t} is not on a whole hour")
    return hour


def to_hours(values) -> np.ndarray:
    """Vectorised :func:`to_hour` for arrays of ``datetime64``."""
    arr = np.asarray(values)
    if arr.dtype.kind != "M":
        return np.array([to_hour(v) for v in arr.ravel()], dtype="datetime64[h]").reshape(arr.shape)
    hours = arr.astype("datetime64[h]")
    if np.any(hours != arr):
        raise ValueError("timestamps must lie on whole hours")
    return hours


def day_of_year(t):
    """1-based ordinal day within the calendar year (scalar or array)."""
    arr = np.asarray(t)
    if arr.dtype.kind != "M":
        arr = to_hour(t) if arr.ndim == 0 else to_hours(arr)
    days = arr.astype("datetime64[D]")
    doy = (days - days.astype("datetime64[Y]")).astype(np.int64) + 1
    return int(doy) if np.ndim(doy) == 0 else doy


def valid_time(init, lead_h):
    """``init`` shifted forward by ``lead_h`` hours."""
    lead = np.asarray(lead_h)
    if np.any(lead < 0):
        raise ValueError("lead_h must be non-negative")
    arr = np.asarray(init)
    if arr.dtype.kind != "M":
        arr = to_hour(init) if arr.ndim == 0 else to_hours(arr)
    return arr.astype("datetime64[h]") + lead.astype(np.int64) * HOUR


def format_time(t) -> np.ndarray:
    """ISO-8601 ``YYYY-MM-DDTHH:00:00Z`` strings for an array of hours."""
    s = np.datetime_as_string(np.asarray(t, dtype="datetime64[h]"), unit="h")
    return np.char.add(s, ":00:00Z")


def _check_temperatures(values: np.ndarray, what: str) -> None:
    if np.any(~np.isfinite(values)):
        raise ValueError(f"{what}: non-finite temperature")
    bad = (values < TEMP_MIN_C) | (values > TEMP_MAX_C)
    if np.any(bad):
        raise ValueError(
            f"{what}: temperature {values[bad][0]} outside [{TEMP_MIN_C}, {TEMP_MAX_C}] °C"
        )


@dataclass(frozen=True)
class StationMeta:
    id: str
    archetype: str = "plain"

    def __post_init__(self):
        if not self.id:
            raise ValueError("station id must be nonempty")
        if self.archetype not in ARCHETYPES:
            raise ValueError(f"unknown archetype {self.archetype!r}")


class ObservationSeries:
    """Hourly station temperatures in °C, sorted by time."""

    def __init__(self, station: str, times, values):
        times = to_hours(times)
        values = np.asarray(values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        _check_temperatures(values, f"observations[{station}]")
        order = np.argsort(times, kind="stable")
        times, values = times[order], values[order]
        if np.any(times[1:] == times[:-1]):
            raise ValueError(f"observations[{station}]: duplicate timestamps")
        self.station = station
        self.times = times
        self.values = values
        self.times.flags.writeable = False
        self.values.flags.writeable = False

    @classmethod
    def from_mapping(cls, station: str, mapping: Mapping) -> "ObservationSeries":
        keys = list(mapping)
        return cls(station, [to_hour(k) for k in keys], [mapping[k] for k in keys])

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[tuple[np.datetime64, float]]:
        return zip(self.times, self.values.tolist())

    def __eq__(self, other):
        if not isinstance(other, ObservationSeries):
            return NotImplemented
        return (
            self.station == other.station
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    def get(self, t) -> float | None:
        v = self.lookup(np.array([to_hour(t)]))[0]
        return None if np.isnan(v) else float(v)

    def lookup(self, times) -> np.ndarray:
        """Values at ``times``; NaN where nothing was observed."""
        times = np.asarray(times, dtype="datetime64[h]")
        out = np.full(times.shape, np.nan)
        if len(self.times) == 0:
            return out
        idx = np.searchsorted(self.times, times)
        idx_c = np.minimum(idx, len(self.times) - 1)
        hit = self.times[idx_c] == times
        out[hit] = self.values[idx_c[hit]]
        return out


class ForecastArchive:
    """One source's forecasts at one station, keyed by (init, postprocessing lead).

    Stored densely as an ``inits x leads`` table in which NaN marks an entry
    that is absent; the public accessors never expose those cells.
    """

    def __init__(self, station: str, source: str, horizon_h: int, inits, leads, table):
        if source not in SOURCES:
            raise ValueError(f"unknown source {source!r}")
        inits = to_hours(inits)
        leads = np.asarray(leads, dtype=np.int64)
        table = np.asarray(table, dtype=float)
        if table.shape != (len(inits), len(leads)):
            raise ValueError("table shape must be (len(inits), len(leads))")
        if np.any(np.diff(inits.astype(np.int64)) <= 0) or np.any(np.diff(leads) <= 0):
            raise ValueError("inits and leads must be strictly increasing")
        if len(leads) and (leads[0] < 0 or leads[-1] > horizon_h):
            raise ValueError(f"{source}: stored leads must lie in [0, {horizon_h}]")
        if len(inits):
            hours = (inits.astype(np.int64) % 24)
            if np.any(hours != hours[0]):
                raise ValueError(f"{source}: init times do not share one hour of day")
        present = table[np.isfinite(table)]
        _check_temperatures(present, f"forecasts[{station}/{source}]")
        self.station = station
        self.source = source
        self.horizon_h = int(horizon_h)
        self.inits = inits
        self.leads = leads
        self.table = table
        for a in (self.inits, self.leads, self.table):
            a.flags.writeable = False

    @classmethod
    def from_records(cls, station, source, horizon_h, inits, leads, values) -> "ForecastArchive":
        """Build from long-form parallel arrays (one entry per stored forecast)."""
        inits = to_hours(inits)
        leads = np.asarray(leads, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        u_inits, i_idx = np.unique(inits, return_inverse=True)
        u_leads, l_idx = np.unique(leads, return_inverse=True)
        table = np.full((len(u_inits), len(u_leads)), np.nan)
        flat = i_idx * len(u_leads) + l_idx
        if len(np.unique(flat)) != len(flat):
            raise ValueError(f"{source}: duplicate (init, lead) entries")
        table[i_idx, l_idx] = values
        return cls(station, source, horizon_h, u_inits, u_leads, table)

    @property
    def init_hour(self) -> int | None:
        return int(self.inits[0].astype(np.int64) % 24) if len(self.inits) else None

    def __len__(self) -> int:
        return int(np.isfinite(self.table).sum())

    def __eq__(self, other):
        if not isinstance(other, ForecastArchive):
            return NotImplemented
        return (
            (self.station, self.source, self.horizon_h)
            == (other.station, other.source, other.horizon_h)
            and np.array_equal(self.inits, other.inits)
            and np.array_equal(self.leads, other.leads)
            and np.array_equal(self.table, other.table, equal_nan=True)
        )

    def records(self):
        """Long-form ``(inits, leads, values)`` of the stored entries, init-major."""
        i, j = np.nonzero(np.isfinite(self.table))
        return self.inits[i], self.leads[j], self.table[i, j]

    def get(self, init, lead_h: int) -> float | None:
        v = self.lookup(np.array([to_hour(init)]), lead_h)[0]
        return None if np.isnan(v) else float(v)

    def lookup(self, inits, lead_h: int) -> np.ndarray:
        """Forecasts issued at ``inits`` for lead ``lead_h``; NaN where absent."""
        inits = np.asarray(inits, dtype="datetime64[h]")
        out = np.full(inits.shape, np.nan)
        j = np.searchsorted(self.leads, lead_h)
        if j >= len(self.leads) or self.leads[j] != lead_h or len(self.inits) == 0:
            return out
        idx = np.searchsorted(self.inits, inits)
        idx_c = np.minimum(idx, len(self.inits) - 1)
        hit = self.inits[idx_c] == inits
        out[hit] = self.table[idx_c[hit], j]
        return out


@dataclass(frozen=True)
class LeadTimeGrid:
    """Postprocessing lead hours: hourly up to ``hourly_until``, then ``coarse_step``."""

    hourly_until: int = 84
    coarse_step: int = 3
    max_lead: int = 132
    persistence_anchor_h: int = 0
    leads: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not (1 <= self.hourly_until <= self.max_lead) or self.coarse_step < 1:
            raise ValueError("invalid lead-time grid parameters")
        fine = range(1, self.hourly_until + 1)
        coarse = range(self.hourly_until + self.coarse_step, self.max_lead + 1, self.coarse_step)
        leads = tuple(fine) + tuple(coarse)
        if leads[-1] != self.max_lead:
            raise ValueError("max_lead must be reachable from hourly_until in coarse steps")
        object.__setattr__(self, "leads", leads)

    def __iter__(self):
        return iter(self.leads)

    def __len__(self) -> int:
        return len(self.leads)

    def __contains__(self, lead) -> bool:
        return lead in self.leads

    def index(self, lead: int) -> int:
        return self.leads.index(lead)


@dataclass
class Dataset:
    """Observations and forecast archives for a set of stations."""

    stations: dict[str, StationMeta]
    observations: dict[str, ObservationSeries]
    forecasts: dict[str, dict[str, ForecastArchive]]

    def __post_init__(self):
        for sid in self.stations:
            if sid not in self.observations:
                raise ValueError(f"station {sid!r} has no observations")
            self.forecasts.setdefault(sid, {})

    @property
    def station_ids(self) -> list[str]:
        return sorted(self.stations)

    def init_times(self, station: str) -> np.ndarray:
        """Union of the init times present in any archive of ``station``."""
        parts = [a.inits for a in self.forecasts[station].values()]
        if not parts:
            return np.array([], dtype="datetime64[h]")
        return np.unique(np.concatenate(parts))
