"""Command line entry point.

::

    seamless-emos synth  --config configs/default.yaml --out out/
    seamless-emos fit    --config configs/default.yaml
    seamless-emos verify --config configs/default.yaml --modes persistence,reference
    seamless-emos run    --config configs/default.yaml --seed 7 --out out/seed7
    seamless-emos plot   --out out/

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from .assembly import AssemblyError
from .config import ConfigError, RunConfig, load_config
from .emos import EmosError, write_fits_csv
from .io import DataError, write_forecasts_csv, write_observations_csv
from .synthgen import InvalidProfile
from .verification import CellError, ScoreTable, TooFewYears, VerificationError
from . import charts, pipeline

log = logging.getLogger("seamless_emos")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

OBS_CSV = "observations.csv"
FCST_CSV = "forecasts.csv"
FITS_CSV = "fits.csv"
MAE_CSV = "scores_mae.csv"
SKILL_CSV = "scores_skill.csv"
MAE_SVG = "mae_vs_lead.svg"
SKILL_SVG = "skill_vs_lead.svg"
RESOLVED_CONFIG = "run_config.yaml"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _resolve(args) -> RunConfig:
    if args.config is None:
        raise UsageError("--config is required for this command")
    modes = [m.strip() for m in args.modes.split(",") if m.strip()] if args.modes else None
    return load_config(args.config).with_overrides(seed=args.seed, out_dir=args.out, modes=modes)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(cfg: RunConfig):
    ds, reports = pipeline.build_dataset(cfg)
    for r in reports:
        print(r.summary())
        for d in r.diagnostics[:20]:
            print(f"  {d}", file=sys.stderr)
    if not ds.station_ids:
        raise DataError("no stations with observations")
    return ds


def cmd_synth(cfg: RunConfig) -> int:
    if cfg.synth is None:
        raise UsageError("synth needs a 'synth' section in the config")
    ds, _ = pipeline.build_dataset(cfg)
    out = _out_dir(cfg)
    n_obs = write_observations_csv(ds.observations, out / OBS_CSV)
    n_fc = write_forecasts_csv(ds.forecasts, out / FCST_CSV)
    print(f"wrote {n_obs} observation rows to {out / OBS_CSV}")
    print(f"wrote {n_fc} forecast rows to {out / FCST_CSV}")
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    ds = _load(cfg)
    out = _out_dir(cfg)
    n = write_fits_csv(pipeline.fit_all(cfg, ds), out / FITS_CSV)
    print(f"wrote {n} fitted cells to {out / FITS_CSV}")
    return EXIT_OK


def _verify(cfg: RunConfig, ds) -> ScoreTable:
    folds = pipeline.build_folds(cfg, ds)
    table = pipeline.score_run(cfg, ds, folds)
    out = _out_dir(cfg)
    table.write_csv(out / MAE_CSV, out / SKILL_CSV)
    print(f"wrote {len(table.mae_rows)} MAE rows to {out / MAE_CSV}")
    print(f"wrote {len(table.skill_rows)} skill rows to {out / SKILL_CSV}")
    if {"persistence", "reference"} <= set(table.mae_rows["mode"]):
        print(pipeline.transition_summary(table))
    return table


def cmd_verify(cfg: RunConfig) -> int:
    _verify(cfg, _load(cfg))
    return EXIT_OK


def _plot(out: Path, markers) -> None:
    # charts are rendered from the CSVs on disk, not from in-memory scores
    table = ScoreTable.read_csv(out / MAE_CSV, out / SKILL_CSV)
    (out / MAE_SVG).write_text(charts.mae_chart(table, markers), encoding="utf-8")
    print(f"wrote {out / MAE_SVG}")
    svg = charts.skill_chart(table, markers)
    if svg is None:
        print("skill chart omitted: persistence mode was not run, so there is nothing to compare")
        return
    (out / SKILL_SVG).write_text(svg, encoding="utf-8")
    print(f"wrote {out / SKILL_SVG}")


def _markers(cfg: RunConfig | None) -> tuple:
    hz = cfg.horizons if cfg else {"aro": 36, "det": 84, "ens_mu": 132}
    return tuple(sorted(h for h in set(hz.values()) if h < max(hz.values())))


def cmd_run(cfg: RunConfig) -> int:
    ds = _load(cfg)
    out = _out_dir(cfg)
    with open(out / RESOLVED_CONFIG, "w", encoding="utf-8") as fh:
        yaml.safe_dump(_plain(cfg.to_dict()), fh, sort_keys=True)
    n = write_fits_csv(pipeline.fit_all(cfg, ds), out / FITS_CSV)
    print(f"wrote {n} fitted cells to {out / FITS_CSV}")
    _verify(cfg, ds)
    _plot(out, _markers(cfg))
    return EXIT_OK


def cmd_plot(args) -> int:
    cfg = _resolve(args) if args.config else None
    out = Path(args.out or (cfg.out_dir if cfg else "out"))
    for name in (MAE_CSV, SKILL_CSV):
        if not (out / name).exists():
            raise DataError(f"{out / name}: not found; run 'verify' or 'run' first")
    _plot(out, _markers(cfg))
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "fit": cmd_fit, "verify": cmd_verify, "run": cmd_run}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run config")
    common.add_argument("--seed", type=int, help="override the synthetic seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--modes", help="comma-separated modes, e.g. persistence,reference")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="seamless-emos", description="Seamless multimodel EMOS postprocessing and verification")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "synth": "write a synthetic observation and forecast archive",
        "fit": "fit every (station, mode, lead) cell on all data",
        "verify": "cross-validate and write MAE and skill tables",
        "run": "fit, verify and draw charts",
        "plot": "re-render charts from existing score tables",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "plot":
            return cmd_plot(args)
        return COMMANDS[args.command](_resolve(args))
    except (UsageError, ConfigError, InvalidProfile) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA if isinstance(exc.cause, AssemblyError) else EXIT_NUMERIC
    except (DataError, TooFewYears, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EmosError, VerificationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
