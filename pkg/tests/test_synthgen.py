import numpy as np
import pytest

from seamless_emos.synthgen import (
    DEFAULT_PROFILES,
    InvalidProfile,
    SourceProfile,
    SynthProfile,
    climatology,
    generate_dataset,
    generate_world,
)


def test_same_seed_bit_identical():
    a = generate_world(42, DEFAULT_PROFILES["plain"], n_days=400)
    b = generate_world(42, DEFAULT_PROFILES["plain"], n_days=400)
    assert a.observations == b.observations
    assert all(a.archives[s] == b.archives[s] for s in a.archives)
    c = generate_world(43, DEFAULT_PROFILES["plain"], n_days=400)
    assert not np.array_equal(a.observations.values, c.observations.values)


def test_horizons_respected():
    w = generate_world(1, DEFAULT_PROFILES["valley"], n_days=400)
    assert w.archives["aro"].leads.max() == 36
    assert w.archives["det"].leads.max() == 84
    assert w.archives["ens_mu"].leads.max() == 132
    assert len(w.archives["ens_mu"].leads) == 100


def test_shared_valid_time_indexing_without_gaps():
    w = generate_world(1, DEFAULT_PROFILES["valley"], n_days=400)
    inits = w.archives["ens_mu"].inits
    assert np.all(np.diff(inits) == np.timedelta64(24, "h"))
    assert np.all(inits.astype(np.int64) % 24 == 12)
    assert np.array_equal(w.observations.times, w.times)
    for a in w.archives.values():
        assert len(a) == a.table.size


def test_lag1_autocorrelation_of_obs_anomalies():
    prof = DEFAULT_PROFILES["valley"]
    w = generate_world(2024, prof, n_days=1100)
    anom = w.observations.values - climatology(w.observations.times, prof)
    anom = anom - anom.mean()
    r1 = np.sum(anom[1:] * anom[:-1]) / np.sum(anom**2)
    assert abs(r1 - prof.obs_ar1_rho) <= 0.05


def test_no_growth_no_bias_gives_lead_constant_error():
    src = SourceProfile(0.0, 0.0, 0.0, 1.0, 0.0, 0.9)
    prof = SynthProfile(sources={"aro": src, "det": src, "ens_mu": src})
    w = generate_world(3, prof, n_days=2000)
    ens = w.archives["ens_mu"]
    t0 = np.datetime64("2021-01-01T00", "h")
    maes = []
    for lead in (1, 40, 132):
        idx = ((ens.inits - t0).astype(np.int64) + lead)
        err = ens.lookup(ens.inits, lead) - w.truth[idx]
        maes.append(np.mean(np.abs(err)))
    # sd 1 everywhere: MAE = sqrt(2/pi) ~ 0.798 up to rounding and sampling
    np.testing.assert_allclose(maes, np.sqrt(2 / np.pi), atol=0.05)


def test_missing_rate_injects_gaps():
    w = generate_world(4, DEFAULT_PROFILES["valley"], n_days=400, missing_rate=0.05)
    assert len(w.observations) < len(w.times)
    frac = 1 - len(w.archives["det"]) / w.archives["det"].table.size
    assert 0.03 < frac < 0.07


@pytest.mark.parametrize(
    "override",
    [{"obs_ar1_rho": 1.0}, {"anomaly_sd": 0.0}, {"sources": {"aro": {"error_ar1_rho": -0.1}}}, {"bogus": 1}],
)
def test_invalid_profiles(override):
    with pytest.raises(InvalidProfile):
        SynthProfile.from_dict({"archetype": "valley", **override})


def test_profile_dict_round_trip():
    p = DEFAULT_PROFILES["mountain"]
    assert SynthProfile.from_dict(p.to_dict()) == p


def test_too_short_world():
    with pytest.raises(InvalidProfile):
        generate_world(1, DEFAULT_PROFILES["valley"], n_days=399)


def test_dataset_station_ids_and_independence():
    ds, worlds = generate_dataset(9, n_days=400)
    assert ds.station_ids == ["mountain", "plain", "valley"]
    assert ds.stations["valley"].archetype == "valley"
