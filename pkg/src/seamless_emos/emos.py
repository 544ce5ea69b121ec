"""Homoscedastic Gaussian EMOS fitted by maximum likelihood.

The location is linear in the design columns and the scale is one constant,
so the likelihood maximiser is the least-squares solution together with the
mean squared residual as variance. It is computed with a column-pivoted QR
decomposition; columns that the pivoting finds to be linearly dependent get
a zero coefficient and the fit is flagged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import scipy.linalg

from .assembly import CANONICAL_COLUMNS, DesignMatrix, PredictorMode

SIGMA_FLOOR = 0.01
FIT_CSV_COLUMNS = ["station", "mode", "lead_h", "n_train", "sigma"] + [
    "beta_" + c.replace("_", "") for c in CANONICAL_COLUMNS
]


class EmosError(ValueError):
    pass


class TooFewRows(EmosError):
    pass


class ColumnMismatch(EmosError):
    pass


class MissingPredictor(EmosError, KeyError):
    pass


@dataclass(frozen=True)
class GaussianPrediction:
    mu: float | np.ndarray
    sigma: float | np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.sigma) <= 0):
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class EmosFit:
    coefficients: dict[str, float]
    sigma: float
    n_train: int
    lead_h: int
    mode: PredictorMode
    station: str
    rank_deficient: bool = False

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(self.coefficients)

    @property
    def beta(self) -> np.ndarray:
        return np.array(list(self.coefficients.values()))


def _solve_pivoted_qr(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, bool]:
    n, p = X.shape
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(n, p) * np.finfo(float).eps * diag[0] if p else 0.0
    rank = int(np.sum(diag > tol))
    beta = np.zeros(p)
    if rank:
        z = Q[:, :rank].T @ y
        beta[piv[:rank]] = scipy.linalg.solve_triangular(R[:rank, :rank], z)
    return beta, rank < p


def fit_emos(dm: DesignMatrix, sigma_floor: float = SIGMA_FLOOR) -> EmosFit:
    """Maximum-likelihood fit of ``y ~ N(X beta, sigma^2)`` for one cell."""
    n, p = dm.X.shape
    if n < p:
        raise TooFewRows(f"{dm.station} {dm.mode} +{dm.lead_h} h: {n} rows < {p} columns")
    beta, deficient = _solve_pivoted_qr(dm.X, dm.target)
    resid = dm.target - dm.X @ beta
    sigma = max(float(np.sqrt(np.mean(resid**2))), sigma_floor)
    return EmosFit(
        coefficients=dict(zip(dm.columns, beta.tolist())),
        sigma=sigma,
        n_train=n,
        lead_h=dm.lead_h,
        mode=dm.mode,
        station=dm.station,
        rank_deficient=deficient,
    )


def _check_columns(fit: EmosFit, dm: DesignMatrix) -> None:
    if fit.columns != dm.columns:
        raise ColumnMismatch(f"fit columns {fit.columns} != design columns {dm.columns}")


def nll(fit: EmosFit, dm: DesignMatrix) -> float:
    """Negative Gaussian log-likelihood of ``dm.target`` under ``fit``."""
    _check_columns(fit, dm)
    r = dm.target - dm.X @ fit.beta
    s2 = fit.sigma**2
    return float(0.5 * len(r) * np.log(2 * np.pi * s2) + np.sum(r**2) / (2 * s2))


def predict(fit: EmosFit, row: Mapping[str, float | np.ndarray]) -> GaussianPrediction:
    """Predictive distribution for one row (or arrays of rows) of named predictors."""
    missing = [c for c in fit.coefficients if c not in row]
    if missing:
        raise MissingPredictor(f"row lacks predictors {missing}")
    mu = sum(b * np.asarray(row[c], dtype=float) for c, b in fit.coefficients.items())
    if np.ndim(mu) == 0:
        mu = float(mu)
    sigma = fit.sigma if np.ndim(mu) == 0 else np.full(np.shape(mu), fit.sigma)
    return GaussianPrediction(mu, sigma)


def predict_design(fit: EmosFit, dm: DesignMatrix) -> np.ndarray:
    """Predictive means for every row of ``dm``."""
    _check_columns(fit, dm)
    return dm.X @ fit.beta


def _fmt(x: float) -> str:
    return repr(float(x))


def write_fits_csv(fits: Iterable[EmosFit], path) -> int:
    """One row per cell; coefficients of columns a mode does not use are empty."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIT_CSV_COLUMNS)
        for f in fits:
            betas = [
                _fmt(f.coefficients[c]) if c in f.coefficients else "" for c in CANONICAL_COLUMNS
            ]
            w.writerow([f.station, f.mode.name, f.lead_h, f.n_train, _fmt(f.sigma)] + betas)
            n += 1
    return n


def read_fits_csv(path) -> list[EmosFit]:
    fits = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            coefs = {
                c: float(rec[k])
                for c, k in zip(CANONICAL_COLUMNS, FIT_CSV_COLUMNS[5:])
                if rec[k] != ""
            }
            fits.append(
                EmosFit(
                    coefficients=coefs,
                    sigma=float(rec["sigma"]),
                    n_train=int(rec["n_train"]),
                    lead_h=int(rec["lead_h"]),
                    mode=PredictorMode.parse(rec["mode"]),
                    station=rec["station"],
                )
            )
    return fits
