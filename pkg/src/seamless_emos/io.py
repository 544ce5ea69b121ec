"""CSV ingestion and emission for observations and forecasts.

Observation schema: ``station,valid_time_utc,temp_c``.
Forecast schema: ``station,source,init_time_utc,lead_h,temp_c`` with
``lead_h`` counted from the postprocessing init.

Raw NWP files (``station,source,nwp_init_time_utc,nwp_lead_h,temp_c``) can be
read with :func:`read_raw_nwp_csv`, which shifts them onto the
postprocessing clock.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .datamodel import (
    DEFAULT_HORIZONS,
    SOURCES,
    TEMP_MAX_C,
    TEMP_MIN_C,
    Dataset,
    ForecastArchive,
    ObservationSeries,
    StationMeta,
    format_time,
)

log = logging.getLogger(__name__)

OBS_COLUMNS = ["station", "valid_time_utc", "temp_c"]
FCST_COLUMNS = ["station", "source", "init_time_utc", "lead_h", "temp_c"]
RAW_NWP_COLUMNS = ["station", "source", "nwp_init_time_utc", "nwp_lead_h", "temp_c"]


class DataError(ValueError):
    """Input data that cannot be used at all (bad header, unreadable file)."""


@dataclass
class IngestReport:
    path: str
    accepted: int = 0
    rejected: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def reject(self, mask: np.ndarray, reason: str) -> None:
        for i in np.flatnonzero(mask):
            # header is line 1
            self.diagnostics.append(f"{self.path}:{i + 2}: {reason}")
        self.rejected += int(mask.sum())

    def summary(self) -> str:
        return f"{self.path}: {self.accepted} rows accepted, {self.rejected} rejected"


def _read(path, columns) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    return df[columns]


def _parse_times(col: pd.Series) -> tuple[np.ndarray, np.ndarray]:
    """Parse ``YYYY-MM-DDTHH:00:00Z``; returns (hours, ok-mask)."""
    s = col.str.strip()
    ok = s.str.fullmatch(r"\d{4}-\d{2}-\d{2}T\d{2}:00:00Z").to_numpy()
    parsed = pd.to_datetime(s.where(ok, None), format="%Y-%m-%dT%H:%M:%SZ", errors="coerce")
    ok &= parsed.notna().to_numpy()
    hours = parsed.to_numpy(dtype="datetime64[ns]").astype("datetime64[h]")
    return hours, ok


def _parse_temps(col: pd.Series, report: IngestReport, bad: np.ndarray) -> np.ndarray:
    temps = pd.to_numeric(col.str.strip(), errors="coerce").to_numpy(dtype=float)
    nonnum = ~np.isfinite(temps) & ~bad
    report.reject(nonnum, "temp_c is not a finite number")
    bad |= nonnum
    implaus = ~bad & ((temps < TEMP_MIN_C) | (temps > TEMP_MAX_C))
    report.reject(implaus, f"temp_c outside plausible range [{TEMP_MIN_C}, {TEMP_MAX_C}]")
    bad |= implaus
    return temps


def _reject_duplicates(keys: pd.DataFrame, report: IngestReport, bad: np.ndarray) -> None:
    dup = keys.duplicated(keep="first").to_numpy() & ~bad
    report.reject(dup, "duplicate key")
    bad |= dup


def read_observations_csv(path) -> tuple[dict[str, ObservationSeries], IngestReport]:
    df = _read(path, OBS_COLUMNS)
    report = IngestReport(str(path))
    stations = df["station"].str.strip()
    bad = (stations == "").to_numpy()
    report.reject(bad, "empty station id")
    times, ok = _parse_times(df["valid_time_utc"])
    report.reject(~ok & ~bad, "valid_time_utc is not YYYY-MM-DDTHH:00:00Z")
    bad |= ~ok
    temps = _parse_temps(df["temp_c"], report, bad)
    _reject_duplicates(pd.DataFrame({"s": stations, "t": times}), report, bad)

    good = ~bad
    report.accepted = int(good.sum())
    out = {}
    st_good = stations.to_numpy()[good]
    for sid in sorted(set(st_good)):
        m = st_good == sid
        out[sid] = ObservationSeries(sid, times[good][m], temps[good][m])
    log.info(report.summary())
    return out, report


def _archives_from_frame(stations, sources, inits, leads, temps, horizons):
    out: dict[str, dict[str, ForecastArchive]] = {}
    for sid in sorted(set(stations)):
        out[sid] = {}
        ms = stations == sid
        for src in SOURCES:
            m = ms & (sources == src)
            if m.any():
                out[sid][src] = ForecastArchive.from_records(
                    sid, src, horizons[src], inits[m], leads[m], temps[m]
                )
    return out


def read_forecasts_csv(
    path, horizons: dict[str, int] | None = None, init_hour: int = 12
) -> tuple[dict[str, dict[str, ForecastArchive]], IngestReport]:
    """Read postprocessing-lead forecasts; returns ``{station: {source: archive}}``."""
    df = _read(path, FCST_COLUMNS)
    return _ingest_forecasts(df, "init_time_utc", "lead_h", path, horizons, init_hour, 0)


def read_raw_nwp_csv(
    path,
    horizons: dict[str, int] | None = None,
    init_hour: int = 12,
    init_offset_h: int = 12,
) -> tuple[dict[str, dict[str, ForecastArchive]], IngestReport]:
    """Read raw NWP leads and shift them onto the postprocessing clock.

    A raw lead ``L`` from an NWP run at ``t`` becomes postprocessing lead
    ``L - init_offset_h`` from init ``t + init_offset_h``. Entries that land
    before the postprocessing init are discarded (not rejected).
    """
    df = _read(path, RAW_NWP_COLUMNS)
    return _ingest_forecasts(
        df, "nwp_init_time_utc", "nwp_lead_h", path, horizons, init_hour, init_offset_h
    )


def _ingest_forecasts(df, init_col, lead_col, path, horizons, init_hour, offset):
    horizons = {**DEFAULT_HORIZONS, **(horizons or {})}
    report = IngestReport(str(path))
    stations = df["station"].str.strip().to_numpy()
    sources = df["source"].str.strip().to_numpy()
    bad = stations == ""
    report.reject(bad, "empty station id")
    unknown = ~np.isin(sources, SOURCES) & ~bad
    report.reject(unknown, f"source not one of {SOURCES}")
    bad |= unknown

    inits, ok = _parse_times(df[init_col])
    report.reject(~ok & ~bad, f"{init_col} is not YYYY-MM-DDTHH:00:00Z")
    bad |= ~ok
    lead_s = df[lead_col].str.strip()
    lead_ok = lead_s.str.fullmatch(r"-?\d+").to_numpy()
    report.reject(~lead_ok & ~bad, f"{lead_col} is not an integer")
    bad |= ~lead_ok
    leads = np.where(lead_ok, pd.to_numeric(lead_s.where(lead_ok, "0")), 0).astype(np.int64)

    if offset:
        inits = inits + np.timedelta64(offset, "h")
        leads = leads - offset
        early = (leads < 0) & ~bad
        bad |= early  # not a rejection: falls before the postprocessing init
    else:
        neg = (leads < 0) & ~bad
        report.reject(neg, "lead_h is negative")
        bad |= neg

    hz = np.array([horizons.get(s, 0) for s in sources])
    beyond = (leads > hz) & ~bad
    report.reject(beyond, "lead exceeds the source horizon")
    bad |= beyond
    hour = inits.astype(np.int64) % 24
    wrong_hour = (hour != init_hour) & ~bad
    report.reject(wrong_hour, f"init is not at {init_hour:02d} UTC")
    bad |= wrong_hour

    temps = _parse_temps(df["temp_c"], report, bad)
    keys = pd.DataFrame({"s": stations, "src": sources, "i": inits, "l": leads})
    _reject_duplicates(keys, report, bad)

    good = ~bad
    report.accepted = int(good.sum())
    out = _archives_from_frame(
        stations[good], sources[good], inits[good], leads[good], temps[good], horizons
    )
    log.info(report.summary())
    return out, report


def load_dataset(obs_path, fcst_path, horizons=None, init_hour: int = 12, archetypes=None):
    """Read both CSVs into a :class:`Dataset`; returns ``(dataset, [reports])``."""
    obs, r1 = read_observations_csv(obs_path)
    fc, r2 = read_forecasts_csv(fcst_path, horizons, init_hour)
    archetypes = archetypes or {}
    stations = {sid: StationMeta(sid, archetypes.get(sid, "plain")) for sid in obs}
    fc = {sid: v for sid, v in fc.items() if sid in stations}
    return Dataset(stations, obs, fc), [r1, r2]


def write_observations_csv(observations: dict[str, ObservationSeries], path) -> int:
    frames = []
    for sid in sorted(observations):
        o = observations[sid]
        frames.append(
            pd.DataFrame(
                {"station": sid, "valid_time_utc": format_time(o.times), "temp_c": o.values}
            )
        )
    df = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=OBS_COLUMNS)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return len(df)


def write_forecasts_csv(forecasts: dict[str, dict[str, ForecastArchive]], path) -> int:
    frames = []
    for sid in sorted(forecasts):
        for src in SOURCES:
            if src not in forecasts[sid]:
                continue
            inits, leads, values = forecasts[sid][src].records()
            frames.append(
                pd.DataFrame(
                    {
                        "station": sid,
                        "source": src,
                        "init_time_utc": format_time(inits),
                        "lead_h": leads,
                        "temp_c": values,
                    }
                )
            )
    df = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=FCST_COLUMNS)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return len(df)
