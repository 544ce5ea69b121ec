"""Seeded synthetic stations: observations plus three forecast sources.

Truth is a seasonal cycle plus a diurnal cycle plus an hourly AR(1) anomaly;
observations add white measurement noise. A source's forecast for
``(init, lead)`` is truth at the valid time plus a deterministic bias and a
random error that is AR(1) along the lead axis with a standard deviation
growing linearly in lead. Because neighbouring leads share most of their
error, a forecast frozen at a source's last lead still carries information
about the next few hours, and the observation at the init carries
information about the first ones.

All randomness comes from one ``numpy.random.Generator`` on the PCG64 bit
generator. Draw order is fixed: hourly anomaly innovations, observation
noise, then one block of lead errors per source in the order aro, det,
ens_mu, and finally missingness draws (only when a missing rate is set).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .datamodel import (
    DEFAULT_HORIZONS,
    SOURCES,
    Dataset,
    ForecastArchive,
    LeadTimeGrid,
    ObservationSeries,
    StationMeta,
    day_of_year,
)


class InvalidProfile(ValueError):
    pass


@dataclass(frozen=True)
class SourceProfile:
    bias_const: float = 0.0
    bias_seasonal_amp: float = 0.0
    bias_night_amp: float = 0.0
    error_sd_at_lead0: float = 1.0
    error_sd_growth: float = 0.02
    error_ar1_rho: float = 0.97


@dataclass(frozen=True)
class SynthProfile:
    archetype: str = "valley"
    mean_temp: float = 9.0
    seasonal_amp: float = 10.0
    diurnal_amp: float = 5.0
    anomaly_sd: float = 3.0
    obs_ar1_rho: float = 0.97
    obs_noise_sd: float = 0.2
    sources: dict[str, SourceProfile] = field(
        default_factory=lambda: {s: SourceProfile() for s in SOURCES}
    )

    def __post_init__(self):
        problems = []
        if not 0 <= self.obs_ar1_rho < 1:
            problems.append("obs_ar1_rho must lie in [0, 1)")
        for name in ("anomaly_sd", "obs_noise_sd"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive")
        if set(self.sources) != set(SOURCES):
            problems.append(f"sources must be exactly {SOURCES}")
        for src, sp in self.sources.items():
            if sp.error_sd_at_lead0 <= 0 or sp.error_sd_growth < 0:
                problems.append(f"{src}: error sd must be positive and non-decreasing")
            if not 0 <= sp.error_ar1_rho < 1:
                problems.append(f"{src}: error_ar1_rho must lie in [0, 1)")
        if problems:
            raise InvalidProfile("; ".join(problems))

    @classmethod
    def from_dict(cls, d: dict) -> "SynthProfile":
        d = dict(d)
        base = DEFAULT_PROFILES.get(d.get("archetype", "valley"), cls())
        srcs = {s: asdict(sp) for s, sp in base.sources.items()}
        for s, over in (d.pop("sources", None) or {}).items():
            if s not in srcs:
                raise InvalidProfile(f"unknown source {s!r}")
            unknown = set(over) - {f.name for f in fields(SourceProfile)}
            if unknown:
                raise InvalidProfile(f"unknown source fields {sorted(unknown)}")
            srcs[s].update(over)
        top = {f.name for f in fields(cls)} - {"sources"}
        unknown = set(d) - top
        if unknown:
            raise InvalidProfile(f"unknown profile fields {sorted(unknown)}")
        params = {**{k: v for k, v in asdict(base).items() if k != "sources"}, **d}
        return cls(**params, sources={s: SourceProfile(**v) for s, v in srcs.items()})

    def to_dict(self) -> dict:
        return asdict(self)


# plain: weak anomaly memory, small biases, good local model.
# valley: long-lived anomalies (cold pools), strong nocturnal model bias.
# mountain: very persistent anomalies, large constant bias from model terrain.
DEFAULT_PROFILES = {
    "plain": SynthProfile(
        archetype="plain", mean_temp=11.0, seasonal_amp=10.0, diurnal_amp=5.0,
        anomaly_sd=2.5, obs_ar1_rho=0.98, obs_noise_sd=0.1,
        sources={
            "aro": SourceProfile(0.2, 0.3, 0.5, 1.0, 0.03, 0.97),
            "det": SourceProfile(0.3, 0.3, 0.5, 1.4, 0.05, 0.99),
            "ens_mu": SourceProfile(0.3, 0.3, 0.5, 1.3, 0.004, 0.99),
        },
    ),
    "valley": SynthProfile(
        archetype="valley", mean_temp=9.0, seasonal_amp=11.0, diurnal_amp=6.0,
        anomaly_sd=3.0, obs_ar1_rho=0.993, obs_noise_sd=0.1,
        sources={
            "aro": SourceProfile(0.5, 0.5, 2.0, 1.3, 0.04, 0.97),
            "det": SourceProfile(1.0, 0.8, 3.0, 2.0, 0.06, 0.99),
            "ens_mu": SourceProfile(1.0, 0.8, 3.0, 1.6, 0.004, 0.99),
        },
    ),
    "mountain": SynthProfile(
        archetype="mountain", mean_temp=-5.0, seasonal_amp=8.0, diurnal_amp=2.0,
        anomaly_sd=3.5, obs_ar1_rho=0.995, obs_noise_sd=0.1,
        sources={
            "aro": SourceProfile(-1.5, 0.5, 0.0, 1.5, 0.04, 0.97),
            "det": SourceProfile(-4.0, 1.0, 0.0, 2.2, 0.06, 0.99),
            "ens_mu": SourceProfile(-4.0, 1.0, 0.0, 1.9, 0.004, 0.99),
        },
    ),
}


def climatology(times, profile: SynthProfile) -> np.ndarray:
    """Deterministic part of the truth (seasonal + diurnal) at ``times``."""
    times = np.asarray(times, dtype="datetime64[h]")
    doy = day_of_year(times)
    hour = times.astype(np.int64) % 24
    seasonal = profile.seasonal_amp * np.cos(2 * np.pi * (doy - 200) / 365.0)
    diurnal = profile.diurnal_amp * np.cos(2 * np.pi * (hour - 15) / 24.0)
    return profile.mean_temp + seasonal + diurnal


def source_bias(times, sp: SourceProfile) -> np.ndarray:
    times = np.asarray(times, dtype="datetime64[h]")
    doy = day_of_year(times)
    hour = times.astype(np.int64) % 24
    night = np.maximum(np.cos(2 * np.pi * (hour - 3) / 24.0), 0.0)
    return (
        sp.bias_const
        + sp.bias_seasonal_amp * np.sin(2 * np.pi * doy / 365.0)
        + sp.bias_night_amp * night
    )


def _ar1(rng: np.random.Generator, n: int, rho: float, sd: float) -> np.ndarray:
    z = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = sd * z[0]
    innov = sd * np.sqrt(1 - rho**2)
    for i in range(1, n):
        out[i] = rho * out[i - 1] + innov * z[i]
    return out


def _round_c(x: np.ndarray) -> np.ndarray:
    # 0.01 °C resolution; k/100 parses back to the identical double
    return np.round(x * 100.0) / 100.0


@dataclass
class World:
    """A generated station: truth kept alongside the public data for testing."""

    station: StationMeta
    times: np.ndarray
    truth: np.ndarray
    observations: ObservationSeries
    archives: dict[str, ForecastArchive]


def generate_world(
    seed,
    profile: SynthProfile,
    n_days: int = 1100,
    init_hour: int = 12,
    *,
    start_date: str = "2021-01-01",
    station_id: str | None = None,
    horizons: dict[str, int] | None = None,
    grid: LeadTimeGrid | None = None,
    missing_rate: float = 0.0,
) -> World:
    """Generate one station with ``n_days`` daily postprocessing inits.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``.
    """
    if n_days < 400:
        raise InvalidProfile("n_days must be >= 400 for a year-blocked cross-validation")
    if not 0 <= init_hour < 24:
        raise InvalidProfile("init_hour must lie in [0, 24)")
    if not 0 <= missing_rate < 1:
        raise InvalidProfile("missing_rate must lie in [0, 1)")
    horizons = {**DEFAULT_HORIZONS, **(horizons or {})}
    grid = grid or LeadTimeGrid()
    rng = np.random.Generator(np.random.PCG64(seed))
    sid = station_id or profile.archetype

    start = np.datetime64(start_date, "D").astype("datetime64[h]")
    inits = start + np.timedelta64(init_hour, "h") + np.arange(n_days) * np.timedelta64(24, "h")
    max_lead = max(grid.leads[-1], max(horizons.values()))
    n_hours = (n_days - 1) * 24 + init_hour + max_lead + 1
    times = start + np.arange(n_hours) * np.timedelta64(1, "h")

    anomaly = _ar1(rng, n_hours, profile.obs_ar1_rho, profile.anomaly_sd)
    truth = climatology(times, profile) + anomaly
    obs_values = _round_c(truth + profile.obs_noise_sd * rng.standard_normal(n_hours))

    # index of each init in the hourly axis
    i0 = (inits - start).astype(np.int64)
    archives = {}
    for src in SOURCES:
        sp = profile.sources[src]
        H = horizons[src]
        lead_axis = np.arange(H + 1)
        sd = sp.error_sd_at_lead0 + sp.error_sd_growth * lead_axis
        z = rng.standard_normal((n_days, H + 1))
        err = np.empty((n_days, H + 1))
        err[:, 0] = sd[0] * z[:, 0]
        innov = np.sqrt(1 - sp.error_ar1_rho**2)
        for lead in range(1, H + 1):
            err[:, lead] = (
                sp.error_ar1_rho * (sd[lead] / sd[lead - 1]) * err[:, lead - 1]
                + innov * sd[lead] * z[:, lead]
            )
        stored = np.array([lead for lead in grid if lead <= H])
        idx = i0[:, None] + stored[None, :]
        values = truth[idx] + source_bias(times[idx], sp) + err[:, stored]
        archives[src] = _round_c(values), stored

    if missing_rate > 0:
        obs_values = np.where(rng.random(n_hours) < missing_rate, np.nan, obs_values)
        for src in SOURCES:
            v, stored = archives[src]
            archives[src] = np.where(rng.random(v.shape) < missing_rate, np.nan, v), stored

    keep = np.isfinite(obs_values)
    obs = ObservationSeries(sid, times[keep], obs_values[keep])
    built = {
        src: ForecastArchive(sid, src, horizons[src], inits, stored, v)
        for src, (v, stored) in archives.items()
    }
    return World(StationMeta(sid, profile.archetype), times, truth, obs, built)


def generate_dataset(
    seed: int,
    profiles: list[SynthProfile] | None = None,
    n_days: int = 1100,
    init_hour: int = 12,
    **kw,
) -> tuple[Dataset, dict[str, World]]:
    """Several independent stations; station ``i`` is seeded by spawn ``i`` of ``SeedSequence(seed)``."""
    if profiles is None:
        profiles = [DEFAULT_PROFILES[a] for a in ("plain", "valley", "mountain")]
    ids = [p.archetype for p in profiles]
    if len(set(ids)) != len(ids):
        ids = [f"{p.archetype}{i}" for i, p in enumerate(profiles)]
    children = np.random.SeedSequence(seed).spawn(len(profiles))
    worlds = {
        sid: generate_world(ss, p, n_days, init_hour, station_id=sid, **kw)
        for sid, ss, p in zip(ids, children, profiles)
    }
    ds = Dataset(
        {sid: w.station for sid, w in worlds.items()},
        {sid: w.observations for sid, w in worlds.items()},
        {sid: w.archives for sid, w in worlds.items()},
    )
    return ds, worlds
