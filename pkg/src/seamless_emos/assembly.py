"""Design-matrix assembly per (station, lead time) under three predictor modes.

``persistence``
    Every source is used at every lead. Once a source runs past its horizon
    its last available lead is kept (model persistence), and the observation
    at the postprocessing init is always added (observation persistence).
``reference``
    Plain multimodel: a source simply drops out past its horizon and there is
    no observation column.
``single``
    One source only, with the reference horizon rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .datamodel import (
    DEFAULT_HORIZONS,
    SOURCES,
    ForecastArchive,
    LeadTimeGrid,
    ObservationSeries,
    day_of_year,
    format_time,
    to_hour,
    valid_time,
)

HARMONICS = ("sin1", "cos1", "sin2", "cos2")
CANONICAL_COLUMNS = ("intercept", "pers") + SOURCES + HARMONICS
DEFAULT_MIN_ROWS = 100


class AssemblyError(ValueError):
    pass


class EmptyDesign(AssemblyError):
    """No (or too few) complete training rows survive."""


class NoPredictor(AssemblyError):
    """A single-model source has no forecast at the requested lead."""


@dataclass(frozen=True)
class PredictorMode:
    kind: str
    source: str | None = None
    exclude: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("persistence", "reference", "single"):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        if (self.kind == "single") != (self.source is not None):
            raise ValueError("single mode needs exactly one source; other modes take none")
        if self.source is not None and self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.exclude and self.kind != "reference":
            raise ValueError("only reference mode can exclude sources")
        if any(s not in SOURCES for s in self.exclude):
            raise ValueError(f"unknown source in {self.exclude}")

    @property
    def name(self) -> str:
        if self.kind == "single":
            return "single_" + self.source.replace("_", "")
        if self.exclude:
            return "reference_no_" + "_".join(s.replace("_", "") for s in self.exclude)
        return self.kind

    @classmethod
    def parse(cls, name: str) -> "PredictorMode":
        if name in ("persistence", "reference"):
            return cls(name)
        by_tag = {s.replace("_", ""): s for s in SOURCES}
        if name.startswith("single_") and name[7:] in by_tag:
            return cls("single", by_tag[name[7:]])
        if name.startswith("reference_no_"):
            tags = name[13:].split("_")
            if all(t in by_tag for t in tags):
                return cls("reference", exclude=tuple(by_tag[t] for t in tags))
        raise ValueError(f"unknown mode name {name!r}")

    def __str__(self) -> str:
        return self.name


PERSISTENCE = PredictorMode("persistence")
REFERENCE = PredictorMode("reference")


def seasonal_basis(doy) -> np.ndarray:
    """``(sin1, cos1, sin2, cos2)`` harmonics of the day of year, period 365.

    Works on scalars (shape ``(4,)``) or arrays (shape ``(..., 4)``).
    """
    d = np.asarray(doy)
    if np.any((d < 1) | (d > 366)):
        raise ValueError(f"day of year out of range [1, 366]: {doy}")
    w = 2.0 * np.pi * d / 365.0
    return np.stack([np.sin(w), np.cos(w), np.sin(2 * w), np.cos(2 * w)], axis=-1)


def effective_lead(requested_lead_h: int, horizon_h: int) -> int:
    """Lead actually read from a source: frozen at its horizon."""
    return min(requested_lead_h, horizon_h)


def observation_persistence(init, obs: ObservationSeries) -> float | None:
    """Observed temperature at the postprocessing init (lead 0), if any."""
    return obs.get(valid_time(to_hour(init), 0))


def mode_columns(
    mode: PredictorMode,
    lead_h: int,
    horizons: Mapping[str, int],
    pers_max_lead: int | None = None,
) -> tuple[str, ...]:
    """Column names (canonical order) that ``mode`` uses at ``lead_h``."""
    if mode.kind == "persistence":
        cols = ["intercept"]
        if pers_max_lead is None or lead_h <= pers_max_lead:
            cols.append("pers")
        cols += list(SOURCES)
    elif mode.kind == "reference":
        cols = ["intercept"] + [
            s for s in SOURCES if horizons[s] >= lead_h and s not in mode.exclude
        ]
    else:
        if horizons[mode.source] < lead_h:
            raise NoPredictor(
                f"{mode.source} ends at +{horizons[mode.source]} h, no predictor at +{lead_h} h"
            )
        cols = ["intercept", mode.source]
    return tuple(cols) + HARMONICS


@dataclass(frozen=True)
class DesignMatrix:
    station: str
    lead_h: int
    mode: PredictorMode
    columns: tuple[str, ...]
    X: np.ndarray
    target: np.ndarray
    inits: np.ndarray

    def __post_init__(self):
        n = len(self.target)
        if n < 1:
            raise EmptyDesign("design matrix has no rows")
        if self.X.shape != (n, len(self.columns)) or len(self.inits) != n:
            raise ValueError("inconsistent design-matrix shapes")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.target)):
            raise ValueError("design matrix contains missing values")
        if self.columns[0] != "intercept" or np.any(self.X[:, 0] != 1.0):
            raise ValueError("first column must be an all-ones intercept")

    @property
    def n_rows(self) -> int:
        return len(self.target)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]

    def rows(self, mask) -> "DesignMatrix":
        """Sub-design with the rows selected by a boolean mask or index array."""
        return DesignMatrix(
            self.station, self.lead_h, self.mode, self.columns,
            self.X[mask], self.target[mask], self.inits[mask],
        )

    def restrict(self, inits) -> "DesignMatrix":
        """Sub-design keeping only rows whose init is in ``inits``."""
        return self.rows(np.isin(self.inits, np.asarray(inits, dtype="datetime64[h]")))

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.X, columns=list(self.columns))
        df.insert(0, "init_time_utc", format_time(self.inits))
        df["target"] = self.target
        return df

    def dump_csv(self, path) -> None:
        """Debug dump: one row per init, columns in canonical order."""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")


def assemble(
    station: str,
    lead_h: int,
    mode: PredictorMode,
    grid: LeadTimeGrid,
    obs: ObservationSeries,
    archives: Mapping[str, ForecastArchive],
    train_inits: Sequence,
    *,
    min_rows: int = DEFAULT_MIN_ROWS,
    pers_max_lead: int | None = None,
) -> DesignMatrix:
    """Build the design matrix and target for one (station, lead, mode) cell.

    Rows whose target or any used predictor is missing are dropped.
    """
    if lead_h not in grid:
        raise ValueError(f"lead {lead_h} is not on the lead-time grid")
    inits = np.unique(np.asarray(train_inits, dtype="datetime64[h]"))
    if len(inits) == 0:
        raise ValueError("train_inits is empty")
    horizons = {
        s: archives[s].horizon_h if s in archives else DEFAULT_HORIZONS[s] for s in SOURCES
    }
    columns = mode_columns(mode, lead_h, horizons, pers_max_lead)

    vt = valid_time(inits, lead_h)
    y = obs.lookup(vt)
    X = np.empty((len(inits), len(columns)))
    for j, name in enumerate(columns):
        if name == "intercept":
            X[:, j] = 1.0
        elif name == "pers":
            X[:, j] = obs.lookup(valid_time(inits, grid.persistence_anchor_h))
        elif name in SOURCES:
            if name in archives:
                X[:, j] = archives[name].lookup(inits, effective_lead(lead_h, horizons[name]))
            else:
                X[:, j] = np.nan
    X[:, len(columns) - 4:] = seasonal_basis(day_of_year(vt))

    keep = np.isfinite(y) & np.all(np.isfinite(X), axis=1)
    n = int(keep.sum())
    if n == 0:
        raise EmptyDesign(f"{station} {mode} +{lead_h} h: every row has a missing value")
    if n < min_rows:
        raise EmptyDesign(
            f"{station} {mode} +{lead_h} h: {n} complete rows, fewer than min_rows={min_rows}"
        )
    return DesignMatrix(station, lead_h, mode, columns, X[keep], y[keep], inits[keep])
