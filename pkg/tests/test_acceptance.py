"""Acceptance checks on the committed default configuration.

Each check prints one ``PASS``/``FAIL`` line. Run them alone with::

    pytest tests/test_acceptance.py -v -s

or ``python tests/test_acceptance.py``, which prints the same lines after the two runs.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, normal_equations_solve
from scipy.stats import spearmanr

from seamless_emos import cli, pipeline
from seamless_emos.assembly import CANONICAL_COLUMNS, PERSISTENCE, REFERENCE, DesignMatrix, assemble
from seamless_emos.config import load_config
from seamless_emos.datamodel import Dataset, ForecastArchive
from seamless_emos.emos import fit_emos, nll
from seamless_emos.baselines import run_transitions
from seamless_emos.verification import MEAN, ScoreTable, cv_predictions, make_folds, skill_score

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = ROOT / "configs" / "default.yaml"


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


# ---------------------------------------------------------------- fixtures

def _default_run(out_root: Path):
    dirs = [out_root / "first", out_root / "second"]
    for d in dirs:
        rc = cli.main(["run", "--config", str(DEFAULT_CONFIG), "--out", str(d)])
        assert rc == 0
    return dirs


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    return _default_run(tmp_path_factory.mktemp("acceptance"))


@pytest.fixture(scope="module")
def table(runs):
    return ScoreTable.read_csv(runs[0] / cli.MAE_CSV, runs[0] / cli.SKILL_CSV)


@pytest.fixture(scope="module")
def setup():
    cfg = load_config(DEFAULT_CONFIG)
    ds, _ = pipeline.build_dataset(cfg)
    return cfg, ds, pipeline.build_folds(cfg, ds)


# ---------------------------------------------------------------- checks

def check_mle_oracle():
    rng = np.random.default_rng(20240601)
    worst_beta = worst_sigma = 0.0
    ok = True
    t0 = time.perf_counter()
    elapsed = 0.0
    for _ in range(50):
        X = np.column_stack([np.ones(200), rng.normal(size=(200, 8))])
        y = X @ rng.normal(size=9) + rng.normal(scale=rng.uniform(0.2, 3.0), size=200)
        inits = np.datetime64("2022-01-01T12") + np.arange(200) * np.timedelta64(24, "h")
        dm = DesignMatrix("oracle", 1, PERSISTENCE, CANONICAL_COLUMNS, X, y, inits)
        t1 = time.perf_counter()
        fit = fit_emos(dm)
        elapsed += time.perf_counter() - t1
        expected = normal_equations_solve(X, y)
        sigma_expected = np.sqrt(np.sum((y - X @ expected) ** 2) / len(y))
        rel = np.max(np.abs(fit.beta - expected) / np.abs(expected))
        worst_beta = max(worst_beta, rel)
        worst_sigma = max(worst_sigma, abs(fit.sigma - sigma_expected))
        ok &= bool(np.allclose(fit.beta, expected, rtol=1e-8, atol=0))
        ok &= abs(fit.sigma - sigma_expected) <= 1e-10
    total = time.perf_counter() - t0
    ok &= elapsed < 5.0
    return report(
        1, ok,
        f"50 designs 200x9: max rel coef err {worst_beta:.1e} (<=1e-8), "
        f"max |sigma err| {worst_sigma:.1e} (<=1e-10), fit time {elapsed:.2f}s, total {total:.2f}s (<5s)",
    )


def check_nesting(cfg, ds):
    t0 = time.perf_counter()
    worst = -np.inf
    bad = []
    n_cells = 0
    for station in ds.station_ids:
        inits = ds.init_times(station)
        obs, arch = ds.observations[station], ds.forecasts[station]
        for lead in cfg.grid:
            p = assemble(station, lead, PERSISTENCE, cfg.grid, obs, arch, inits)
            r = assemble(station, lead, REFERENCE, cfg.grid, obs, arch, p.inits)
            assert np.array_equal(p.inits, r.inits)
            gap = nll(fit_emos(p), p) - nll(fit_emos(r), r)
            worst = max(worst, gap)
            n_cells += 1
            if gap > 1e-9:
                bad.append((station, lead))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30.0 and n_cells == 3 * 100
    return report(
        2, ok,
        f"{n_cells} cells, max nll(persistence)-nll(reference) {worst:.3e} (<=1e-9), "
        f"violations {bad[:3]}, {elapsed:.1f}s (<30s)",
    )


def check_early_skill(table):
    skill = table.skill_curve("valley", "reference")
    s1 = skill[1]
    rho = spearmanr(np.arange(1, 13), skill.loc[1:12].to_numpy()).statistic
    return report(
        3, s1 >= 30.0 and rho <= -0.7,
        f"valley skill at +1 h {s1:.1f}% (>=30), Spearman(skill, lead 1-12) {rho:.3f} (<=-0.7)",
    )


def check_seamless(table):
    ok = True
    parts = []
    for st in ("valley", "mountain"):
        pers = table.mae_curve(st, "persistence")
        ref = table.mae_curve(st, "reference")
        inc = np.abs(np.diff(pers.loc[10:30].to_numpy()))
        limit = 3 * np.median(inc)
        j36 = abs(pers[37] - pers[36])
        j84 = abs(pers[87] - pers[84])
        margin = (ref[37] - ref[36]) - (pers[37] - pers[36])
        ok &= j36 <= limit and j84 <= limit and margin > 0
        parts.append(
            f"{st}: |jump36| {j36:.4f} |jump84| {j84:.4f} limit {limit:.4f}, ref-pers jump36 margin {margin:+.4f}"
        )
    return report(4, ok, "; ".join(parts))


def check_transitions(table, runs_predictions):
    ok = True
    parts = []
    for st in sorted(set(table.mae_rows.station)):
        pers = table.mae_curve(st, "persistence")
        t1 = table.mae_curve(st, "transition1")
        ok &= bool(all(t1[lead] > pers[lead] for lead in range(30, 36)))
        parts.append(f"{st} min(t1-pers)@30-35 {min(t1[lead] - pers[lead] for lead in range(30, 36)):+.3f}")
        t2 = table.mae_curve(st, "transition2")
        ref = table.mae_curve(st, "reference")
        beyond = [lead for lead in t2.index if lead > 39]
        ok &= bool(all(t2[lead] == ref[lead] for lead in beyond))
        # invariant: persistence within 0.02 degC of every baseline across the transition
        for base in ("reference", "transition1", "transition2"):
            b = table.mae_curve(st, base)
            ok &= bool(all(pers[lead] <= b[lead] + 0.02 for lead in range(30, 40)))
    same_preds = all(
        np.array_equal(runs_predictions[(s, "transition2", lead)].mu, runs_predictions[(s, "reference", lead)].mu)
        for (s, m, lead) in runs_predictions
        if m == "reference" and lead > 39
    )
    ok &= same_preds
    return report(
        5, ok,
        "t1 > persistence at 30-35 h (" + ", ".join(parts) + "); t2 == reference beyond +39 h "
        f"(MAE and predictions identical: {same_preds}); persistence <= baselines + 0.02 over 30-39 h",
    )


def check_identities(table, ds):
    # skill recomputed from MAE rows
    worst = 0.0
    rows = table.skill_rows
    for r in rows.itertuples():
        if r.station == MEAN:
            per = rows[(rows.lead_h == r.lead_h) & (rows.reference_mode == r.reference_mode)
                       & ~rows.station.str.startswith("ALL_")]
            expected = float(np.mean(per.skill_pct))
        else:
            expected = skill_score(
                table.mae_of(r.station, "persistence", r.lead_h),
                table.mae_of(r.station, r.reference_mode, r.lead_h),
            )
        worst = max(worst, abs(r.skill_pct - expected))
    ok_skill = worst <= 1e-12

    # folds partition the init dates into whole calendar years
    inits = np.unique(np.concatenate([ds.init_times(s) for s in ds.station_ids]))
    folds = make_folds(inits, 3)
    members = [folds.members(f) for f in range(3)]
    together = np.sort(np.concatenate(members))
    years = [set((m.astype("datetime64[Y]").astype(int) + 1970).tolist()) for m in members]
    ok_part = (
        np.array_equal(together, inits)
        and sum(len(m) for m in members) == len(inits)
        and all(not (years[a] & years[b]) for a in range(3) for b in range(a + 1, 3))
    )

    # poisoned year: shifting every forecast issued in the marker year by -40 degC
    # must not change the spread of the model that predicts that year
    st = "valley"
    marker = 2022
    one = Dataset({st: ds.stations[st]}, {st: ds.observations[st]}, {st: ds.forecasts[st]})
    poisoned_archives = {}
    for src, a in one.forecasts[st].items():
        in_marker = (a.inits.astype("datetime64[Y]").astype(int) + 1970) == marker
        table_p = a.table + np.where(in_marker[:, None], -40.0, 0.0)
        poisoned_archives[src] = ForecastArchive(a.station, src, a.horizon_h, a.inits, a.leads, table_p)
    bad = Dataset(one.stations, one.observations, {st: poisoned_archives})
    folds1 = make_folds(one.init_times(st), 3)
    grid = load_config(DEFAULT_CONFIG).grid
    leads = (1, 12, 36, 37, 84, 132)
    clean = cv_predictions(one, grid, [PERSISTENCE], folds1)
    dirty = cv_predictions(bad, grid, [PERSISTENCE], folds1)
    ok_poison = all(not (a.train_years & a.test_years) for a in clean.audit)
    changed_elsewhere = False
    for lead in leads:
        c, d = clean.predictions[(st, "persistence", lead)], dirty.predictions[(st, "persistence", lead)]
        in_y = (c.inits.astype("datetime64[Y]").astype(int) + 1970) == marker
        ok_poison &= bool(np.array_equal(c.sigma[in_y], d.sigma[in_y]))
        changed_elsewhere |= bool(np.any(c.sigma[~in_y] != d.sigma[~in_y]))
    ok_poison &= changed_elsewhere
    return report(
        6, ok_skill and ok_part and ok_poison,
        f"max |skill - recomputed| {worst:.1e} (<=1e-12); folds partition {len(inits)} inits "
        f"into year blocks {[sorted(y) for y in years]}: {ok_part}; poisoned {marker} never in its own "
        f"training set (held-out spread unchanged, other folds affected): {ok_poison}",
    )


def check_determinism(runs):
    same = all(
        (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes()
        for name in (cli.MAE_CSV, cli.SKILL_CSV)
    )
    return report(7, same, f"two runs of {DEFAULT_CONFIG.name}: score CSVs byte-identical: {same}")


# ---------------------------------------------------------------- tests

@pytest.fixture(scope="module")
def transition_predictions(setup):
    cfg, ds, folds = setup
    ref = cv_predictions(ds, cfg.grid, [REFERENCE], folds).predictions
    cells = run_transitions(ds, cfg.grid, folds, cfg.transition, predictions=ref)
    return {**ref, **cells}


def test_criterion_1_mle_oracle():
    assert check_mle_oracle()


def test_criterion_2_likelihood_nesting(setup):
    cfg, ds, _ = setup
    assert check_nesting(cfg, ds)


def test_criterion_3_early_lead_skill(table):
    assert check_early_skill(table)


def test_criterion_4_seamless_horizons(table):
    assert check_seamless(table)


def test_criterion_5_transition_baselines(table, transition_predictions):
    assert check_transitions(table, transition_predictions)


def test_criterion_6_verification_identities(table, setup):
    assert check_identities(table, setup[1])


def test_criterion_7_determinism(runs):
    assert check_determinism(runs)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        dirs = _default_run(Path(tmp))
        tab = ScoreTable.read_csv(dirs[0] / cli.MAE_CSV, dirs[0] / cli.SKILL_CSV)
        cfg = load_config(DEFAULT_CONFIG)
        ds, _ = pipeline.build_dataset(cfg)
        folds = pipeline.build_folds(cfg, ds)

        ref = cv_predictions(ds, cfg.grid, [REFERENCE], folds).predictions
        preds = {**ref, **run_transitions(ds, cfg.grid, folds, cfg.transition, predictions=ref)}
        check_mle_oracle()
        check_nesting(cfg, ds)
        check_early_skill(tab)
        check_seamless(tab)
        check_transitions(tab, preds)
        check_identities(tab, ds)
        check_determinism(dirs)
