from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seamless_emos.datamodel import (
    ForecastArchive,
    LeadTimeGrid,
    ObservationSeries,
    StationMeta,
    day_of_year,
    to_hour,
    valid_time,
)


@pytest.mark.parametrize(
    "t, expected",
    [("2022-01-01T12:00:00Z", 1), ("2022-12-31T12:00:00Z", 365), ("2024-12-31T12:00:00Z", 366)],
)
def test_day_of_year(t, expected):
    assert day_of_year(to_hour(t)) == expected


@given(st.datetimes(min_value=datetime(1970, 1, 1), max_value=datetime(2100, 1, 1)))
def test_day_of_year_matches_stdlib(dt):
    dt = dt.replace(minute=0, second=0, microsecond=0)
    assert day_of_year(to_hour(dt)) == dt.timetuple().tm_yday


def test_day_of_year_vectorised():
    t = np.array(["2023-03-01T00", "2024-03-01T00"], dtype="datetime64[h]")
    assert day_of_year(t).tolist() == [60, 61]


@pytest.mark.parametrize(
    "lead, expected",
    [(0, "2022-07-01T12"), (36, "2022-07-03T00"), (132, "2022-07-07T00")],
)
def test_valid_time(lead, expected):
    assert valid_time(to_hour("2022-07-01T12:00:00Z"), lead) == np.datetime64(expected, "h")


@given(st.integers(0, 500), st.integers(0, 500))
def test_valid_time_composes(a, b):
    init = to_hour("2022-07-01T12:00:00Z")
    assert valid_time(init, a + b) == valid_time(valid_time(init, a), b)


def test_valid_time_rejects_negative_lead():
    with pytest.raises(ValueError):
        valid_time(to_hour("2022-07-01T12:00:00Z"), -1)


def test_to_hour_accepts_aware_datetimes_and_rejects_minutes():
    cet = timezone(timedelta(hours=1))
    assert to_hour(datetime(2022, 1, 1, 13, tzinfo=cet)) == np.datetime64("2022-01-01T12", "h")
    with pytest.raises(ValueError):
        to_hour("2022-01-01T12:30:00Z")


def test_grid_has_100_leads():
    grid = LeadTimeGrid()
    assert len(grid) == 100
    assert grid.leads[-1] == 132
    assert list(grid.leads[:84]) == list(range(1, 85))
    assert np.all(np.diff(grid.leads[83:]) == 3)


@pytest.mark.parametrize("lead", range(0, 140))
def test_grid_membership_two_segment_rule(lead):
    expected = (1 <= lead <= 84) or (84 < lead <= 132 and (lead - 84) % 3 == 0)
    assert (lead in LeadTimeGrid()) == expected


def test_station_meta_validation():
    with pytest.raises(ValueError):
        StationMeta("")
    with pytest.raises(ValueError):
        StationMeta("x", "coast")


def test_observation_series_lookup_and_absence():
    obs = ObservationSeries.from_mapping(
        "vie", {"2022-07-01T12:00:00Z": 18.2, "2022-07-01T13:00:00Z": 19.0}
    )
    assert obs.get("2022-07-01T12:00:00Z") == 18.2
    assert obs.get("2022-07-01T14:00:00Z") is None
    got = obs.lookup(np.array(["2022-07-01T13", "2022-07-02T00"], dtype="datetime64[h]"))
    assert got[0] == 19.0 and np.isnan(got[1])
    assert len(obs) == 2


@pytest.mark.parametrize("bad", [-90.5, 60.1, float("nan")])
def test_observation_series_rejects_implausible(bad):
    with pytest.raises(ValueError):
        ObservationSeries("vie", ["2022-07-01T12"], [bad])


def test_observation_series_rejects_duplicates():
    with pytest.raises(ValueError):
        ObservationSeries("vie", ["2022-07-01T12", "2022-07-01T12"], [1.0, 2.0])


def test_forecast_archive_invariants():
    inits = ["2022-07-01T12", "2022-07-02T12"]
    arch = ForecastArchive.from_records("vie", "aro", 36, inits, [1, 36], [10.0, 11.0])
    assert arch.get("2022-07-01T12:00:00Z", 1) == 10.0
    assert arch.get("2022-07-01T12:00:00Z", 36) is None
    assert arch.get("2022-07-02T12:00:00Z", 36) == 11.0
    assert len(arch) == 2
    with pytest.raises(ValueError, match="leads"):
        ForecastArchive.from_records("vie", "aro", 36, inits, [1, 37], [10.0, 11.0])
    with pytest.raises(ValueError, match="hour"):
        ForecastArchive.from_records(
            "vie", "aro", 36, ["2022-07-01T12", "2022-07-02T00"], [1, 1], [10.0, 11.0]
        )
    with pytest.raises(ValueError):
        ForecastArchive.from_records("vie", "icon", 36, inits, [1, 1], [10.0, 11.0])


def test_containers_are_immutable():
    obs = ObservationSeries("vie", ["2022-07-01T12"], [1.0])
    with pytest.raises(ValueError):
        obs.values[0] = 2.0
