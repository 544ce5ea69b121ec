"""Run configuration loaded from a YAML file.

A config names either a synthetic world (``synth``) or a pair of CSV files
(``data``), never both. Every other section is optional and falls back to the
defaults of the corresponding dataclass; ``configs/default.yaml`` spells all
of them out.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .assembly import DEFAULT_MIN_ROWS, PredictorMode
from .baselines import TRANSITION_MODES, TransitionConfig
from .datamodel import DEFAULT_HORIZONS, LeadTimeGrid
from .emos import SIGMA_FLOOR
from .synthgen import SynthProfile


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 20240601
    n_days: int = 1100
    start_date: str = "2021-01-01"
    missing_rate: float = 0.0
    # archetype names or full profile mappings (overrides on top of an archetype)
    profiles: tuple = ("plain", "valley", "mountain")

    def synth_profiles(self) -> list[SynthProfile]:
        out = []
        for p in self.profiles:
            out.append(SynthProfile.from_dict({"archetype": p} if isinstance(p, str) else p))
        return out


@dataclass(frozen=True)
class DataPaths:
    observations: str
    forecasts: str
    # "postprocessing": lead_h already counts from the 12 UTC init;
    # "raw_nwp": NWP init/lead columns, shifted by init_offset_h on ingestion
    forecast_format: str = "postprocessing"
    # station id -> archetype label, informational only
    archetypes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.forecast_format not in ("postprocessing", "raw_nwp"):
            raise ConfigError(f"unknown forecast_format {self.forecast_format!r}")


@dataclass(frozen=True)
class FoldConfig:
    k: int = 3
    # optional explicit [start, end] date pairs; overrides k when given
    ranges: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    synth: SynthSpec | None = None
    data: DataPaths | None = None
    init_hour: int = 12
    init_offset_h: int = 12
    horizons: dict = field(default_factory=lambda: dict(DEFAULT_HORIZONS))
    grid: LeadTimeGrid = LeadTimeGrid()
    modes: tuple = (
        "persistence", "reference", "transition1", "transition2",
        "single_aro", "single_det", "single_ensmu",
    )
    folds: FoldConfig = FoldConfig()
    transition: TransitionConfig = TransitionConfig()
    min_rows: int = DEFAULT_MIN_ROWS
    sigma_floor: float = SIGMA_FLOOR
    pers_max_lead: int | None = None
    out_dir: str = "out"

    def __post_init__(self):
        if (self.synth is None) == (self.data is None):
            raise ConfigError("exactly one of 'synth' and 'data' must be given")
        for m in self.modes:
            if m not in TRANSITION_MODES:
                try:
                    PredictorMode.parse(m)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        if not self.modes:
            raise ConfigError("at least one mode is required")
        if self.min_rows < 1 or self.sigma_floor <= 0:
            raise ConfigError("min_rows must be >= 1 and sigma_floor > 0")

    @property
    def predictor_modes(self) -> list[PredictorMode]:
        """Regression modes to fit (transitions are derived, not fitted)."""
        return [PredictorMode.parse(m) for m in self.modes if m not in TRANSITION_MODES]

    @property
    def transitions(self) -> list[str]:
        return [m for m in self.modes if m in TRANSITION_MODES]

    def with_overrides(self, *, seed=None, out_dir=None, modes=None) -> "RunConfig":
        cfg = self
        if seed is not None:
            if cfg.synth is None:
                raise ConfigError("--seed only applies to synthetic runs")
            cfg = replace(cfg, synth=replace(cfg.synth, seed=int(seed)))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=str(out_dir))
        if modes is not None:
            cfg = replace(cfg, modes=tuple(modes))
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("synth", "data"):
            if d[key] is None:
                del d[key]
        d["grid"].pop("leads")
        return d


def _build(cls, raw, where):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    raw = dict(raw)
    unknown = set(raw) - {f.name for f in fields(RunConfig)}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    kw = {}
    if raw.get("synth") is not None:
        kw["synth"] = _build(SynthSpec, raw.pop("synth"), "synth")
    if raw.get("data") is not None:
        kw["data"] = _build(DataPaths, raw.pop("data"), "data")
    raw.pop("synth", None), raw.pop("data", None)
    for key, cls in (("grid", LeadTimeGrid), ("folds", FoldConfig), ("transition", TransitionConfig)):
        if key in raw:
            kw[key] = _build(cls, raw.pop(key), key)
    if "horizons" in raw:
        hz = raw.pop("horizons") or {}
        if set(hz) - set(DEFAULT_HORIZONS):
            raise ConfigError(f"horizons: unknown sources {sorted(set(hz) - set(DEFAULT_HORIZONS))}")
        kw["horizons"] = {**DEFAULT_HORIZONS, **{k: int(v) for k, v in hz.items()}}
    if "modes" in raw:
        kw["modes"] = tuple(raw.pop("modes") or ())
    kw.update(raw)
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    """Read a YAML run config; relative data paths resolve against the file's folder."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    cfg = config_from_dict(raw or {})
    if cfg.data is not None:
        base = path.parent
        cfg = replace(
            cfg,
            data=replace(
                cfg.data,
                observations=str(base / cfg.data.observations),
                forecasts=str(base / cfg.data.forecasts),
            ),
        )
    return cfg
