#!/usr/bin/env python3
"""Full default run: MAE and skill charts for the three synthetic stations.

Writes into ``results/default`` (or ``--out``) and prints the lead-1 skill and
the MAE either side of each model horizon.

    python scripts/reproduce_figures.py [--config configs/default.yaml] [--out results/default]
"""

import argparse
from pathlib import Path

from seamless_emos import cli
from seamless_emos.verification import ScoreTable

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "default.yaml"))
    ap.add_argument("--out", default=str(ROOT / "results" / "default"))
    args = ap.parse_args()

    rc = cli.main(["run", "--config", args.config, "--out", args.out])
    if rc:
        raise SystemExit(rc)
    out = Path(args.out)
    table = ScoreTable.read_csv(out / cli.MAE_CSV, out / cli.SKILL_CSV)
    print("\npersistence-mode skill over reference (%)")
    print(f"{'station':<12} {'+1 h':>7} {'+12 h':>7} {'+36 h':>7} {'+84 h':>7} {'+132 h':>7}")
    for st in sorted(set(table.skill_rows.station)):
        s = table.skill_curve(st, "reference")
        print(f"{st:<12} " + " ".join(f"{s[lead]:7.1f}" for lead in (1, 12, 36, 84, 132)))


if __name__ == "__main__":
    main()
