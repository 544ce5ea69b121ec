"""Comparison runs: single-model EMOS and two blended transitions.

Both transitions blend postprocessed reference-mode output with and without
the short-range local model around the point where that model ends:

``transition1`` (weighted average)
    A linear weight fades the with-local forecast out over ``window_h``
    hours before the transition lead.
``transition2`` (extrapolation)
    After the transition the last with-local forecast is kept as a member
    whose weight decays linearly to zero over ``extrapolation_leads`` grid
    steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import DEFAULT_MIN_ROWS, REFERENCE, PredictorMode
from .datamodel import DEFAULT_HORIZONS, Dataset, LeadTimeGrid
from .emos import SIGMA_FLOOR, GaussianPrediction
from .verification import (
    CellPredictions,
    FoldSpec,
    ScoreTable,
    cv_predictions,
    score_cells,
)

TRANSITION_MODES = ("transition1", "transition2")


@dataclass(frozen=True)
class TransitionConfig:
    transition_lead_h: int = 36
    window_h: int = 6
    extrapolation_leads: int = 3
    weight_profile: str = "linear"

    def __post_init__(self):
        if self.window_h < 1 or self.extrapolation_leads < 1:
            raise ValueError("window_h and extrapolation_leads must be >= 1")
        if self.weight_profile != "linear":
            raise ValueError(f"unsupported weight profile {self.weight_profile!r}")

    def local_source(self, horizons=DEFAULT_HORIZONS) -> str:
        """The source whose horizon ends at the transition lead."""
        for src, h in horizons.items():
            if h == self.transition_lead_h:
                return src
        raise ValueError(f"no source ends at +{self.transition_lead_h} h")


def weighted_average_weight(lead_h: int, transition_lead_h: int, window_h: int) -> float:
    """Weight of the with-local forecast: 1 before the window, 0 from the transition on."""
    if lead_h >= transition_lead_h:
        return 0.0
    start = transition_lead_h - window_h
    if lead_h <= start:
        return 1.0
    return (transition_lead_h - lead_h) / window_h


def extrapolation_weight(leads_past_transition: int, extrapolation_leads: int) -> float:
    """Weight of the last with-local forecast ``leads_past_transition`` steps on."""
    if leads_past_transition < 1:
        raise ValueError("leads_past_transition must be >= 1")
    n = extrapolation_leads
    return max(n + 1 - leads_past_transition, 0) / (n + 1)


def _blend(a: GaussianPrediction, b: GaussianPrediction, w) -> GaussianPrediction:
    return GaussianPrediction(w * a.mu + (1 - w) * b.mu, w * a.sigma + (1 - w) * b.sigma)


def transition_weighted_average(
    pred_with_local: GaussianPrediction,
    pred_without_local: GaussianPrediction,
    lead_h: int,
    cfg: TransitionConfig,
) -> GaussianPrediction:
    w = weighted_average_weight(lead_h, cfg.transition_lead_h, cfg.window_h)
    return _blend(pred_with_local, pred_without_local, w)


def transition_extrapolation(
    last_with_local: GaussianPrediction,
    pred_without_local: GaussianPrediction,
    leads_past_transition: int,
    cfg: TransitionConfig,
) -> GaussianPrediction:
    v = extrapolation_weight(leads_past_transition, cfg.extrapolation_leads)
    if v == 0:
        return pred_without_local
    return _blend(last_with_local, pred_without_local, v)


def gp(c: CellPredictions) -> GaussianPrediction:
    return GaussianPrediction(c.mu, c.sigma)


def _aligned(a: CellPredictions, b: CellPredictions):
    common = np.intersect1d(a.inits, b.inits)
    return a.restrict(common), b.restrict(common)


def _cell(like: CellPredictions, mode: str, lead_h: int, pred: GaussianPrediction, y=None):
    return CellPredictions(
        like.station, mode, lead_h, like.inits, like.fold,
        like.y if y is None else y, np.asarray(pred.mu, float), np.asarray(pred.sigma, float),
    )


def transition_cells(
    predictions: dict,
    station: str,
    grid: LeadTimeGrid,
    cfg: TransitionConfig,
    no_local_mode: str,
) -> dict:
    """Build ``transition1``/``transition2`` cells from reference predictions.

    ``predictions`` must hold reference and ``no_local_mode`` cells for
    ``station`` at every grid lead.
    """
    T = cfg.transition_lead_h
    out = {}
    ref_T = predictions[(station, "reference", T)]
    for lead in grid:
        ref = predictions[(station, "reference", lead)]
        if lead <= T - cfg.window_h or lead > T:
            t1 = _cell(ref, "transition1", lead, gp(ref))
        else:
            a, b = _aligned(ref, predictions[(station, no_local_mode, lead)])
            t1 = _cell(a, "transition1", lead, transition_weighted_average(gp(a), gp(b), lead, cfg))
        out[(station, "transition1", lead)] = t1

        steps = grid.index(lead) - grid.index(T)
        if steps < 1 or steps > cfg.extrapolation_leads:
            t2 = _cell(ref, "transition2", lead, gp(ref))
        else:
            cur, last = _aligned(ref, ref_T)
            t2 = _cell(cur, "transition2", lead, transition_extrapolation(gp(last), gp(cur), steps, cfg))
        out[(station, "transition2", lead)] = t2
    return out


def run_transitions(
    dataset: Dataset,
    grid: LeadTimeGrid,
    folds: FoldSpec,
    cfg: TransitionConfig = TransitionConfig(),
    *,
    predictions: dict | None = None,
    min_rows: int = DEFAULT_MIN_ROWS,
    sigma_floor: float = SIGMA_FLOOR,
) -> dict:
    """Cross-validated transition-baseline predictions for every station.

    Reference predictions already computed can be passed in ``predictions``;
    missing ones are computed here.
    """
    horizons = _horizons(dataset)
    no_local = PredictorMode("reference", exclude=(cfg.local_source(horizons),))
    preds = dict(predictions or {})
    need = [
        m for m in (REFERENCE, no_local)
        if any((s, m.name, lead) not in preds for s in dataset.station_ids for lead in grid)
    ]
    if need:
        preds.update(cv_predictions(
            dataset, grid, need, folds, min_rows=min_rows, sigma_floor=sigma_floor
        ).predictions)
    out = {}
    for s in dataset.station_ids:
        out.update(transition_cells(preds, s, grid, cfg, no_local.name))
    return out


def _horizons(dataset: Dataset) -> dict[str, int]:
    hz = dict(DEFAULT_HORIZONS)
    for archives in dataset.forecasts.values():
        for src, a in archives.items():
            hz[src] = a.horizon_h
    return hz


def run_single_model(
    source: str,
    dataset: Dataset,
    grid: LeadTimeGrid,
    folds: FoldSpec,
    *,
    min_rows: int = DEFAULT_MIN_ROWS,
    sigma_floor: float = SIGMA_FLOOR,
) -> ScoreTable:
    """Cross-validated MAE of EMOS on one source, for leads within its horizon."""
    mode = PredictorMode("single", source)
    if not any(lead <= _horizons(dataset)[source] for lead in grid):
        raise ValueError(f"{source} covers no lead of the grid")
    res = cv_predictions(dataset, grid, [mode], folds, min_rows=min_rows, sigma_floor=sigma_floor)
    return score_cells(res.predictions, comparable=(), reference_modes=())
