"""Year-blocked cross-validation and MAE / skill-score tables."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .assembly import (
    DEFAULT_MIN_ROWS,
    REFERENCE,
    AssemblyError,
    EmptyDesign,
    NoPredictor,
    PredictorMode,
    assemble,
)
from .datamodel import Dataset, LeadTimeGrid
from .emos import SIGMA_FLOOR, EmosFit, fit_emos, predict_design

log = logging.getLogger(__name__)

POOLED = "ALL_POOLED"
MEAN = "ALL_MEAN"
MAE_CSV_COLUMNS = ["station", "mode", "lead_h", "n_cases", "mae"]
SKILL_CSV_COLUMNS = ["station", "lead_h", "skill_pct", "reference_mode"]


class VerificationError(ValueError):
    pass


class TooFewYears(VerificationError):
    pass


class ZeroReference(VerificationError, ZeroDivisionError):
    pass


class CellError(RuntimeError):
    """An assembly or fitting failure, tagged with the cell that raised it."""

    def __init__(self, station, mode, lead_h, cause):
        super().__init__(f"cell station={station} mode={mode} lead=+{lead_h} h: {cause}")
        self.station, self.mode, self.lead_h, self.cause = station, str(mode), lead_h, cause


def _years(inits) -> np.ndarray:
    return np.asarray(inits, dtype="datetime64[Y]").astype(np.int64) + 1970


@dataclass(frozen=True)
class FoldSpec:
    """Assignment of init dates to ``k`` folds (stored as parallel sorted arrays)."""

    k: int
    inits: np.ndarray
    folds: np.ndarray

    def fold_of(self, inits) -> np.ndarray:
        inits = np.asarray(inits, dtype="datetime64[h]")
        idx = np.minimum(np.searchsorted(self.inits, inits), len(self.inits) - 1)
        if np.any(self.inits[idx] != inits):
            raise VerificationError("init date not covered by the fold specification")
        return self.folds[idx]

    @property
    def assignment(self) -> dict:
        return dict(zip(self.inits.tolist(), self.folds.tolist()))

    def members(self, fold: int) -> np.ndarray:
        return self.inits[self.folds == fold]


def make_folds(init_dates: Sequence, k: int = 3) -> FoldSpec:
    """Block whole calendar years of init dates into ``k`` contiguous folds.

    Every fold holds either ``floor(Y/k)`` or ``ceil(Y/k)`` years. Among those
    splits the one with the smallest largest fold (in init dates) is taken.
    """
    inits = np.unique(np.asarray(init_dates, dtype="datetime64[h]"))
    if k < 1:
        raise ValueError("k must be >= 1")
    years = _years(inits)
    uy, counts = np.unique(years, return_counts=True)
    if len(uy) < k:
        raise TooFewYears(f"{len(uy)} calendar years present, need at least {k}")
    base, extra = divmod(len(uy), k)
    best = None
    for big in itertools.combinations(range(k), extra):
        sizes = [base + (i in big) for i in range(k)]
        bounds = np.cumsum([0] + sizes)
        load = max(counts[bounds[i]:bounds[i + 1]].sum() for i in range(k))
        if best is None or load < best[0]:
            best = (load, bounds)
    bounds = best[1]
    year_fold = {int(y): i for i in range(k) for y in uy[bounds[i]:bounds[i + 1]]}
    folds = np.array([year_fold[int(y)] for y in years], dtype=np.int64)
    return FoldSpec(k, inits, folds)


def folds_from_ranges(init_dates: Sequence, ranges: Sequence[tuple[str, str]]) -> FoldSpec:
    """Folds given as inclusive ``(start_date, end_date)`` ranges; inits outside all ranges are dropped."""
    inits = np.unique(np.asarray(init_dates, dtype="datetime64[h]"))
    days = inits.astype("datetime64[D]")
    folds = np.full(len(inits), -1, dtype=np.int64)
    for i, (start, end) in enumerate(ranges):
        m = (days >= np.datetime64(start, "D")) & (days <= np.datetime64(end, "D"))
        if np.any(m & (folds >= 0)):
            raise VerificationError("fold date ranges overlap")
        if not m.any():
            raise VerificationError(f"fold range {start}..{end} contains no init dates")
        folds[m] = i
    keep = folds >= 0
    return FoldSpec(len(ranges), inits[keep], folds[keep])


def mae(predicted_mu, observed) -> float:
    p = np.asarray(predicted_mu, dtype=float)
    o = np.asarray(observed, dtype=float)
    if p.shape != o.shape:
        raise VerificationError(f"length mismatch: {p.shape} vs {o.shape}")
    if p.size == 0:
        raise VerificationError("cannot score an empty sample")
    return float(np.mean(np.abs(p - o)))


def skill_score(mae_value: float, mae_ref: float) -> float:
    """MAE skill score in percent; positive means better than the reference."""
    if mae_ref <= 0:
        raise ZeroReference("reference MAE must be positive")
    return (1.0 - mae_value / mae_ref) * 100.0


@dataclass
class CellPredictions:
    """Out-of-sample predictions for one (station, mode, lead) cell."""

    station: str
    mode: str
    lead_h: int
    inits: np.ndarray
    fold: np.ndarray
    y: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def restrict(self, inits) -> "CellPredictions":
        m = np.isin(self.inits, inits)
        return CellPredictions(
            self.station, self.mode, self.lead_h,
            self.inits[m], self.fold[m], self.y[m], self.mu[m], self.sigma[m],
        )


@dataclass
class FoldAudit:
    station: str
    mode: str
    lead_h: int
    fold: int
    train_years: frozenset
    test_years: frozenset


@dataclass
class CVResult:
    predictions: dict[tuple[str, str, int], CellPredictions] = field(default_factory=dict)
    fits: list[EmosFit] = field(default_factory=list)
    audit: list[FoldAudit] = field(default_factory=list)


def cv_predict_cell(
    dataset: Dataset,
    grid: LeadTimeGrid,
    mode: PredictorMode,
    folds: FoldSpec,
    station: str,
    lead_h: int,
    *,
    min_rows: int = DEFAULT_MIN_ROWS,
    pers_max_lead: int | None = None,
    sigma_floor: float = SIGMA_FLOOR,
    result: CVResult | None = None,
) -> CellPredictions:
    """Fit on each fold's complement and predict the held-out fold.

    With ``k == 1`` there is no complement, so the single fold is fitted and
    scored in-sample.
    """
    inits = folds.inits
    dm = assemble(
        station, lead_h, mode, grid,
        dataset.observations[station], dataset.forecasts[station], inits,
        min_rows=1, pers_max_lead=pers_max_lead,
    )
    fold_ids = folds.fold_of(dm.inits)
    mu = np.empty(dm.n_rows)
    sigma = np.empty(dm.n_rows)
    for f in range(folds.k):
        test = fold_ids == f
        if not test.any():
            continue
        train = ~test if folds.k > 1 else test
        train_dm = dm.rows(train)
        if train_dm.n_rows < min_rows:
            raise EmptyDesign(
                f"fold {f}: {train_dm.n_rows} training rows, fewer than min_rows={min_rows}"
            )
        fit = fit_emos(train_dm, sigma_floor)
        mu[test] = predict_design(fit, dm.rows(test))
        sigma[test] = fit.sigma
        if result is not None:
            result.audit.append(
                FoldAudit(
                    station, mode.name, lead_h, f,
                    frozenset(_years(train_dm.inits).tolist()),
                    frozenset(_years(dm.inits[test]).tolist()),
                )
            )
    return CellPredictions(station, mode.name, lead_h, dm.inits, fold_ids, dm.target, mu, sigma)


def cv_predictions(
    dataset: Dataset,
    grid: LeadTimeGrid,
    modes: Iterable[PredictorMode],
    folds: FoldSpec,
    *,
    min_rows: int = DEFAULT_MIN_ROWS,
    pers_max_lead: int | None = None,
    sigma_floor: float = SIGMA_FLOOR,
    stations: Sequence[str] | None = None,
) -> CVResult:
    """Out-of-sample predictions for every (station, mode, lead) cell.

    Single-model modes skip leads past their source horizon; every other
    failure is re-raised as :class:`CellError`.
    """
    result = CVResult()
    for station in stations or dataset.station_ids:
        for mode in modes:
            for lead in grid:
                try:
                    cell = cv_predict_cell(
                        dataset, grid, mode, folds, station, lead,
                        min_rows=min_rows, pers_max_lead=pers_max_lead,
                        sigma_floor=sigma_floor, result=result,
                    )
                except NoPredictor:
                    if mode.kind == "single":
                        continue
                    raise
                except (AssemblyError, ValueError) as exc:
                    raise CellError(station, mode, lead, exc) from exc
                result.predictions[(station, mode.name, lead)] = cell
    return result


def in_sample_fits(
    dataset: Dataset,
    grid: LeadTimeGrid,
    mode: PredictorMode,
    station: str,
    lead_h: int,
    **kw,
):
    """Assemble and fit one cell on all available inits."""
    dm = assemble(
        station, lead_h, mode, grid,
        dataset.observations[station], dataset.forecasts[station],
        dataset.init_times(station), **kw,
    )
    return dm, fit_emos(dm)


@dataclass
class ScoreTable:
    mae_rows: pd.DataFrame
    skill_rows: pd.DataFrame
    predictions: dict = field(default_factory=dict, repr=False)
    audit: list = field(default_factory=list, repr=False)

    def mae_of(self, station: str, mode: str, lead_h: int) -> float:
        r = self.mae_rows
        m = (r.station == station) & (r["mode"] == mode) & (r.lead_h == lead_h)
        if not m.any():
            raise KeyError((station, mode, lead_h))
        return float(r.loc[m, "mae"].iloc[0])

    def mae_curve(self, station: str, mode: str) -> pd.Series:
        r = self.mae_rows
        r = r[(r.station == station) & (r["mode"] == mode)]
        return pd.Series(r["mae"].to_numpy(), index=r["lead_h"].to_numpy())

    def skill_curve(self, station: str, reference_mode: str = "reference") -> pd.Series:
        r = self.skill_rows
        r = r[(r.station == station) & (r.reference_mode == reference_mode)]
        return pd.Series(r["skill_pct"].to_numpy(), index=r["lead_h"].to_numpy())

    def write_csv(self, mae_path, skill_path) -> None:
        for df, col, path in (
            (self.mae_rows, "mae", mae_path),
            (self.skill_rows, "skill_pct", skill_path),
        ):
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            # repr() is the shortest string that parses back to the same double
            df.assign(**{col: df[col].map(repr)}).to_csv(path, index=False, lineterminator="\n")

    @classmethod
    def read_csv(cls, mae_path, skill_path) -> "ScoreTable":
        kw = dict(float_precision="round_trip")
        mae_rows = pd.read_csv(mae_path, dtype={"station": str, "mode": str}, **kw)
        skill_rows = pd.read_csv(skill_path, dtype={"station": str, "reference_mode": str}, **kw)
        return cls(mae_rows, skill_rows)


def score_cells(
    predictions: dict[tuple[str, str, int], CellPredictions],
    *,
    comparable: Sequence[str] = ("persistence", "reference"),
    skill_mode: str = "persistence",
    reference_modes: Sequence[str] = ("reference",),
) -> ScoreTable:
    """Pool absolute errors across folds into MAE rows and skill rows.

    Modes listed in ``comparable`` are scored only on inits that every one of
    them predicted at that (station, lead). Other modes use all their cases.
    """
    preds = dict(predictions)
    keys = sorted({(s, lead) for s, _, lead in preds})
    for s, lead in keys:
        present = [m for m in comparable if (s, m, lead) in preds]
        if len(present) < 2:
            continue
        common = preds[(s, present[0], lead)].inits
        for m in present[1:]:
            common = np.intersect1d(common, preds[(s, m, lead)].inits)
        for m in present:
            preds[(s, m, lead)] = preds[(s, m, lead)].restrict(common)

    rows = []
    pooled: dict[tuple[str, int], list[np.ndarray]] = {}
    for (s, m, lead), c in sorted(preds.items()):
        if len(c.y) == 0:
            raise VerificationError(f"cell {s}/{m}/+{lead} h has no cases to score")
        err = np.abs(c.mu - c.y)
        rows.append((s, m, lead, len(err), float(np.mean(err))))
        pooled.setdefault((m, lead), []).append(err)
    stations = sorted({s for s, _, _ in preds})
    if len(stations) > 1:
        for (m, lead), errs in sorted(pooled.items()):
            if len(errs) == len(stations):
                e = np.concatenate(errs)
                rows.append((POOLED, m, lead, len(e), float(np.mean(e))))
    mae_rows = pd.DataFrame(rows, columns=MAE_CSV_COLUMNS)
    mae_rows = mae_rows.sort_values(["station", "mode", "lead_h"], kind="stable").reset_index(drop=True)

    lookup = {(r.station, r.mode, r.lead_h): r.mae for r in mae_rows.itertuples(index=False)}
    skill = []
    for ref in reference_modes:
        per_lead: dict[int, list[float]] = {}
        for (s, m, lead), v in lookup.items():
            if m != skill_mode or (s, ref, lead) not in lookup:
                continue
            ss = skill_score(v, lookup[(s, ref, lead)])
            skill.append((s, lead, ss, ref))
            if s != POOLED:
                per_lead.setdefault(lead, []).append(ss)
        if len(stations) > 1:
            for lead, vals in per_lead.items():
                if len(vals) == len(stations):
                    skill.append((MEAN, lead, float(np.mean(vals)), ref))
    skill_rows = pd.DataFrame(skill, columns=SKILL_CSV_COLUMNS)
    skill_rows = skill_rows.sort_values(
        ["station", "reference_mode", "lead_h"], kind="stable"
    ).reset_index(drop=True)
    return ScoreTable(mae_rows, skill_rows, preds)


def cross_validate(
    dataset: Dataset,
    grid: LeadTimeGrid,
    modes: Sequence[PredictorMode],
    folds: FoldSpec,
    *,
    reference: PredictorMode = REFERENCE,
    min_rows: int = DEFAULT_MIN_ROWS,
    pers_max_lead: int | None = None,
    sigma_floor: float = SIGMA_FLOOR,
) -> ScoreTable:
    """Cross-validated MAE for each mode, plus persistence skill over ``reference``."""
    modes = list(modes)
    run_modes = modes + ([reference] if reference not in modes else [])
    res = cv_predictions(
        dataset, grid, run_modes, folds,
        min_rows=min_rows, pers_max_lead=pers_max_lead, sigma_floor=sigma_floor,
    )
    names = [m.name for m in modes]
    multi = [m.name for m in run_modes if m.kind != "single"]
    skill_mode = "persistence" if "persistence" in names else names[0]
    table = score_cells(
        res.predictions,
        comparable=multi,
        skill_mode=skill_mode,
        reference_modes=[reference.name],
    )
    table.audit = res.audit
    return table
