"""End-to-end steps shared by the CLI and the experiment scripts."""

from __future__ import annotations

import numpy as np

from .assembly import REFERENCE, NoPredictor, assemble
from .baselines import run_transitions
from .config import RunConfig
from .datamodel import Dataset, StationMeta
from .emos import EmosFit, fit_emos
from .io import IngestReport, load_dataset, read_observations_csv, read_raw_nwp_csv
from .synthgen import generate_dataset
from .verification import (
    CellError,
    FoldSpec,
    ScoreTable,
    cv_predictions,
    folds_from_ranges,
    make_folds,
    score_cells,
)

SUMMARY_LEADS = ((36, 37), (84, 87))
SUMMARY_MODES = ("persistence", "reference", "transition1", "transition2")


def build_dataset(cfg: RunConfig) -> tuple[Dataset, list[IngestReport]]:
    """Generate the synthetic world or read the configured CSV files."""
    if cfg.synth is not None:
        s = cfg.synth
        ds, _ = generate_dataset(
            s.seed, s.synth_profiles(), s.n_days, cfg.init_hour,
            start_date=s.start_date, horizons=cfg.horizons, grid=cfg.grid,
            missing_rate=s.missing_rate,
        )
        return ds, []
    d = cfg.data
    if d.forecast_format == "postprocessing":
        return load_dataset(d.observations, d.forecasts, cfg.horizons, cfg.init_hour, d.archetypes)
    obs, r1 = read_observations_csv(d.observations)
    fc, r2 = read_raw_nwp_csv(d.forecasts, cfg.horizons, cfg.init_hour, cfg.init_offset_h)
    stations = {sid: StationMeta(sid, d.archetypes.get(sid, "plain")) for sid in obs}
    return Dataset(stations, obs, {s: v for s, v in fc.items() if s in stations}), [r1, r2]


def build_folds(cfg: RunConfig, dataset: Dataset) -> FoldSpec:
    inits = np.unique(np.concatenate([dataset.init_times(s) for s in dataset.station_ids]))
    if cfg.folds.ranges:
        return folds_from_ranges(inits, [tuple(r) for r in cfg.folds.ranges])
    return make_folds(inits, cfg.folds.k)


def score_run(cfg: RunConfig, dataset: Dataset, folds: FoldSpec) -> ScoreTable:
    """Cross-validate every configured mode and score them in one table.

    Multimodel modes and transitions are scored on the inits they all share.
    Single-model modes keep their own cases. Persistence skill is reported
    against the reference and each configured transition.
    """
    modes = cfg.predictor_modes
    multi = [m for m in modes if m.kind != "single"]
    if (cfg.transitions or any(m.name == "persistence" for m in multi)) and REFERENCE not in multi:
        multi.append(REFERENCE)
    singles = [m for m in modes if m.kind == "single"]
    kw = dict(min_rows=cfg.min_rows, sigma_floor=cfg.sigma_floor)
    res = cv_predictions(dataset, cfg.grid, multi + singles, folds, pers_max_lead=cfg.pers_max_lead, **kw)
    preds = dict(res.predictions)
    if cfg.transitions:
        cells = run_transitions(dataset, cfg.grid, folds, cfg.transition, predictions=preds, **kw)
        preds.update({k: v for k, v in cells.items() if k[1] in cfg.transitions})
    comparable = [m.name for m in multi] + list(cfg.transitions)
    has_pers = any(m.name == "persistence" for m in multi)
    refs = ["reference", *cfg.transitions] if has_pers else []
    table = score_cells(preds, comparable=comparable, skill_mode="persistence", reference_modes=refs)
    table.audit = res.audit
    return table


def fit_all(cfg: RunConfig, dataset: Dataset) -> list[EmosFit]:
    """In-sample fits on every available init for each station, mode and lead."""
    fits = []
    for station in dataset.station_ids:
        inits = dataset.init_times(station)
        for mode in cfg.predictor_modes:
            for lead in cfg.grid:
                try:
                    dm = assemble(
                        station, lead, mode, cfg.grid,
                        dataset.observations[station], dataset.forecasts[station], inits,
                        min_rows=cfg.min_rows, pers_max_lead=cfg.pers_max_lead,
                    )
                    fits.append(fit_emos(dm, cfg.sigma_floor))
                except NoPredictor as exc:
                    if mode.kind == "single":
                        continue
                    raise CellError(station, mode, lead, exc) from exc
                except ValueError as exc:
                    raise CellError(station, mode, lead, exc) from exc
    return fits


def transition_summary(table: ScoreTable) -> str:
    """MAE either side of each horizon, per station and mode."""
    rows = table.mae_rows
    modes = [m for m in SUMMARY_MODES if m in set(rows["mode"])]
    head = f"{'station':<12} {'mode':<13}"
    for a, b in SUMMARY_LEADS:
        head += f" {'+' + str(a):>7} {'+' + str(b):>7} {'jump':>7}"
    lines = ["MAE (degC) either side of the model horizons", head]
    for st in sorted(set(rows.station)):
        for m in modes:
            line = f"{st:<12} {m:<13}"
            for a, b in SUMMARY_LEADS:
                try:
                    va, vb = table.mae_of(st, m, a), table.mae_of(st, m, b)
                    line += f" {va:7.3f} {vb:7.3f} {vb - va:+7.3f}"
                except KeyError:
                    line += f" {'-':>7} {'-':>7} {'-':>7}"
            lines.append(line)
    return "\n".join(lines)
