import math
from datetime import date

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermal_displacement.config import Config
from thermal_displacement.data import (
    PlantMeta,
    aggregate_units_to_plant,
    align_calendars,
    egrid_entry,
    fill_series_gaps,
    parse_plants,
    parse_region_hours,
    parse_unit_hours,
    standard_tz,
    write_region_hours,
    write_unit_hours,
)
from thermal_displacement.errors import (
    ConfigError,
    DataQualityError,
    DomainError,
    IntegrityError,
    MissingInputError,
    SchemaError,
)

from .conftest import csv_bytes

HEADER = "plant_id,unit_id,timestamp,gross_load_mwh,co2_tonnes,heat_input_mmbtu,operating"


def units_csv(*rows):
    return csv_bytes("\n".join([HEADER, *rows]))


class TestParseUnitHours:
    def test_direct_field_mapping(self):
        units, rejects = parse_unit_hours(units_csv("1,A,2021-03-04T07:00:00-08:00,500.0,180.0,3400,1"))
        assert len(rejects) == 0
        row = units.iloc[0]
        assert (row.gross_load, row.co2_mass, row.heat_input) == (500.0, 180.0, 3400.0)
        assert bool(row.operating)
        assert row.timestamp == pd.Timestamp("2021-03-04T15:00:00Z")

    def test_offline_empty_values_become_zero(self):
        units, rejects = parse_unit_hours(units_csv("1,A,2021-03-04T07:00:00-08:00,,,,0"))
        assert len(rejects) == 0
        row = units.iloc[0]
        assert (row.gross_load, row.co2_mass, row.heat_input, bool(row.operating)) == (0.0, 0.0, 0.0, False)

    def test_duplicate_key_is_fatal_and_listed(self):
        src = units_csv(
            "1,A,2021-03-04T07:00:00-08:00,1,1,1,1",
            "1,A,2021-03-04T07:00:00-08:00,2,2,2,1",
            "1,B,2021-03-04T07:00:00-08:00,2,2,2,1",
        )
        with pytest.raises(IntegrityError) as exc:
            parse_unit_hours(src)
        assert exc.value.duplicates == [("1", "A", "2021-03-04T15:00:00+00:00")]

    def test_same_instant_written_with_different_offsets_is_duplicate(self):
        src = units_csv("1,A,2021-03-04T07:00:00-08:00,1,1,1,1", "1,A,2021-03-04T09:00:00-06:00,1,1,1,1")
        with pytest.raises(IntegrityError):
            parse_unit_hours(src)

    def test_missing_column_is_schema_error(self):
        src = csv_bytes("plant_id,unit_id,timestamp,gross_load_mwh,operating\n1,A,2021-03-04T07:00:00-08:00,1,1")
        with pytest.raises(SchemaError, match="co2_mass"):
            parse_unit_hours(src)

    def test_schema_override(self):
        src = csv_bytes(
            "ORISPL,UNIT,ts,load,co2,heat,op\n"
            "7,1,2021-03-04T07:00:00-08:00,10,4,50,1"
        )
        schema = {"plant_id": "ORISPL", "unit_id": "UNIT", "timestamp": "ts", "gross_load": "load",
                  "co2_mass": "co2", "heat_input": "heat", "operating": "op"}
        units, _ = parse_unit_hours(src, schema)
        assert units.iloc[0].gross_load == 10.0

    @pytest.mark.parametrize(
        "row, reason",
        [
            ("1,A,2021-03-04T07:00:00-08:00,abc,1,1,1", "unparseable gross_load"),
            ("1,A,2021-03-04T07:00:00,1,1,1,1", "timestamp lacks an explicit UTC offset"),
            ("1,A,2021-03-04T07:30:00-08:00,1,1,1,1", "timestamp not on an hour boundary"),
            ("1,A,not-a-time-08:00,1,1,1,1", "unparseable timestamp"),
            ("1,A,2021-03-04T07:00:00-08:00,-1,1,1,1", "negative gross_load"),
            ("1,A,2021-03-04T07:00:00-08:00,,1,1,1", "missing gross_load for operating unit"),
            ("1,A,2021-03-04T07:00:00-08:00,5,1,1,0", "offline unit reports positive gross load"),
            ("1,A,2021-03-04T07:00:00-08:00,5,1,1,maybe", "unparseable operating flag"),
            (",A,2021-03-04T07:00:00-08:00,5,1,1,1", "empty plant or unit identifier"),
            ("1,A,2021-03-04T07:00:00-08:00,inf,1,1,1", "unparseable gross_load"),
        ],
    )
    def test_bad_rows_are_rejected_with_reason(self, row, reason):
        units, rejects = parse_unit_hours(units_csv("1,A,2021-03-04T06:00:00-08:00,1,1,1,1", row))
        assert len(units) == 1
        assert rejects["reason"].tolist() == [reason]
        assert rejects["line"].tolist() == [3]

    def test_padded_fields(self):
        units, rejects = parse_unit_hours(units_csv("1,A,2021-03-04T07:00:00-08:00, 12.5 ,1,1, true"))
        assert len(rejects) == 0
        assert units.iloc[0].gross_load == 12.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingInputError):
            parse_unit_hours(tmp_path / "nope.csv")

    def test_empty_source(self):
        with pytest.raises(SchemaError):
            parse_unit_hours(b"")


class TestRoundTrip:
    @settings(max_examples=50, deadline=None)
    @given(loads=st.lists(st.floats(min_value=0, max_value=1e6, allow_nan=False), min_size=1, max_size=30))
    def test_unit_table_round_trip_is_bit_exact(self, tmp_path_factory, loads):
        n = len(loads)
        ts = pd.date_range(pd.Timestamp("2021-01-01").tz_localize(standard_tz(-6)), periods=n, freq="h")
        units = pd.DataFrame(
            {
                "plant_id": "9",
                "unit_id": "1",
                "timestamp": ts,
                "gross_load": loads,
                "co2_mass": [x / 3 for x in loads],
                "heat_input": [x * 7.1 for x in loads],
                "operating": [x > 0 for x in loads],
            }
        )
        path = tmp_path_factory.mktemp("rt") / "u.csv"
        write_unit_hours(units, path)
        back, rejects = parse_unit_hours(path)
        assert len(rejects) == 0
        for col in ("gross_load", "co2_mass", "heat_input"):
            assert back[col].tolist() == units[col].tolist()
        assert (back["timestamp"] == units["timestamp"].dt.tz_convert("UTC")).all()

    def test_region_table_round_trip(self, tmp_path):
        ts = pd.date_range(pd.Timestamp("2021-01-01").tz_localize(standard_tz(-8)), periods=5, freq="h")
        rng = np.random.default_rng(0)
        table = pd.DataFrame({"region_id": "CAISO", "timestamp": ts} | {
            k: rng.random(5) * 1000 for k in ("wind", "solar", "hydro", "demand")
        })
        table["net_imports"] = rng.normal(0, 500, 5)
        write_region_hours(table, tmp_path / "r.csv")
        back, rejects = parse_region_hours(tmp_path / "r.csv")
        assert len(rejects) == 0
        for col in ("wind", "solar", "hydro", "demand", "net_imports"):
            assert back[col].tolist() == table[col].tolist()


class TestRegionParse:
    def test_negative_imports_allowed_negative_wind_rejected(self):
        src = csv_bytes(
            "region_id,timestamp,wind_mwh,solar_mwh,hydro_mwh,demand_mwh,net_imports_mwh\n"
            "CAISO,2021-01-01T00:00:00-08:00,10,0,5,100,-20\n"
            "CAISO,2021-01-01T01:00:00-08:00,-10,0,5,100,20\n"
        )
        table, rejects = parse_region_hours(src)
        assert table["net_imports"].tolist() == [-20.0]
        assert rejects["reason"].tolist() == ["negative wind"]


class TestPlants:
    def test_multi_year_egrid(self):
        src = csv_bytes(
            "plant_id,region,fuel,nameplate_mw,year,egrid_gen_mwh,egrid_co2_t\n"
            "1,CAISO,natural gas,500,2019,1000,400\n"
            "1,CAISO,natural gas,500,2020,2000,900\n"
            "2,ERCOT,Coal,800,,,\n"
        )
        metas = parse_plants(src)
        assert metas["1"].fuel == "NaturalGas"
        assert metas["1"].egrid_annual[2020].intensity == 0.45
        assert metas["2"].egrid_annual == {}

    def test_conflicting_rows(self):
        src = csv_bytes(
            "plant_id,region,fuel,nameplate_mw\n1,CAISO,Coal,500\n1,CAISO,Coal,600\n"
        )
        with pytest.raises(IntegrityError):
            parse_plants(src)

    @pytest.mark.parametrize("kw", [dict(nameplate_mw=0.0), dict(region="PJM"), dict(fuel="Nuclear")])
    def test_meta_domain(self, kw):
        base = dict(plant_id="1", region="CAISO", fuel="Coal", nameplate_mw=10.0) | kw
        with pytest.raises(DomainError):
            PlantMeta(**base)

    def test_egrid_intensity_consistent(self):
        e = egrid_entry(123456.7, 54321.9)
        assert math.isclose(e.intensity, e.emissions_t / e.generation_mwh, rel_tol=1e-6)


def unit_frame(rows):
    return pd.DataFrame(rows, columns=["plant_id", "unit_id", "timestamp", "gross_load", "co2_mass", "heat_input", "operating"])


T0 = pd.Timestamp("2021-01-01T00:00:00Z")


class TestAggregate:
    def test_two_units_sum(self):
        meta = PlantMeta("1", "CAISO", "Coal", 1020.0)
        units = unit_frame([("1", "A", T0, 255.0, 100.0, 1, True), ("1", "B", T0, 255.0, 90.0, 1, True)])
        out = aggregate_units_to_plant(units, meta)
        assert out["generation"].tolist() == [510.0]
        assert out["capacity_factor"].tolist() == [0.5]
        assert out["emissions"].tolist() == [190.0]

    def test_zero_generation_has_undefined_intensity(self):
        meta = PlantMeta("1", "CAISO", "Coal", 100.0)
        out = aggregate_units_to_plant(unit_frame([("1", "A", T0, 0.0, 0.0, 0.0, False)]), meta)
        assert math.isnan(out["emissions_intensity"].iloc[0])

    def test_over_capacity_flagged_not_clipped(self):
        meta = PlantMeta("1", "CAISO", "Coal", 1000.0)
        out = aggregate_units_to_plant(unit_frame([("1", "A", T0, 1100.0, 1.0, 1.0, True)]), meta)
        assert out["capacity_factor"].iloc[0] == 1.1
        assert bool(out["over_capacity"].iloc[0])

    def test_empty_input_gives_empty_series(self):
        meta = PlantMeta("1", "CAISO", "Coal", 1000.0)
        assert len(aggregate_units_to_plant(unit_frame([]), meta)) == 0

    def test_standard_time_conversion(self):
        meta = PlantMeta("1", "CAISO", "Coal", 1000.0)
        out = aggregate_units_to_plant(unit_frame([("1", "A", T0, 1.0, 1.0, 1.0, True)]), meta, offset_hours=-8)
        assert out["timestamp"].iloc[0].isoformat() == "2020-12-31T16:00:00-08:00"

    def test_foreign_units_rejected(self):
        meta = PlantMeta("1", "CAISO", "Coal", 1000.0)
        with pytest.raises(DomainError):
            aggregate_units_to_plant(unit_frame([("2", "A", T0, 1.0, 1.0, 1.0, True)]), meta)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.lists(st.decimals(min_value=0, max_value=10000, places=3), min_size=1, max_size=6), min_size=1, max_size=10))
    def test_conservation_is_exact(self, per_hour):
        meta = PlantMeta("1", "CAISO", "Coal", 1000.0)
        rows = []
        for h, loads in enumerate(per_hour):
            for u, x in enumerate(loads):
                v = float(str(x))
                rows.append(("1", f"U{u}", T0 + pd.Timedelta(hours=h), v, v / 2, v, True))
        out = aggregate_units_to_plant(unit_frame(rows), meta)
        expected = [math.fsum(float(str(x)) for x in loads) for loads in per_hour]
        assert out["generation"].tolist() == expected


def region_rows(rid, start, values, offset=-8, drop=()):
    ts = pd.date_range(pd.Timestamp(start).tz_localize(standard_tz(offset)), periods=len(values), freq="h")
    df = pd.DataFrame({"region_id": rid, "timestamp": ts, "wind": values, "solar": 1.0, "hydro": 1.0,
                       "demand": 10.0, "net_imports": 0.0})
    return df.drop(index=list(drop)).reset_index(drop=True)


def one_plant_region(n_days=3, drop_region=(), partners=True):
    metas = {"P": PlantMeta("P", "CAISO", "Coal", 100.0)}
    start = "2021-03-03"
    wind = np.arange(24 * n_days, dtype=float) + 100
    parts = [region_rows("CAISO", start, wind, drop=drop_region)]
    if partners:
        parts += [region_rows("NW", start, wind), region_rows("SW", start + " 01:00", wind, offset=-7)]
    rh = pd.concat(parts, ignore_index=True)
    ts = pd.date_range(pd.Timestamp(start).tz_localize(standard_tz(-8)), periods=24 * n_days, freq="h")
    ph = pd.DataFrame({"plant_id": "P", "timestamp": ts, "generation": 50.0, "emissions": 20.0})
    span = (date(2021, 3, 3), date(2021, 3, 2 + n_days))
    return ph, rh, span, metas


class TestAlign:
    def test_midpoint_interpolation(self):
        filled, bad = fill_series_gaps(np.array([100.0, np.nan, 120.0]), 3)
        assert filled.tolist() == [100.0, 110.0, 120.0]
        assert bad == []

    def test_three_hour_gap_interpolated(self):
        ph, rh, span, metas = one_plant_region(drop_region=(30, 31, 32))
        ds = align_calendars(ph, rh, "CAISO", span, metas)
        own = ds.region_hours[ds.region_hours["region_id"] == "CAISO"]
        assert len(own) == 72
        assert own["wind"].tolist() == (np.arange(72) + 100.0).tolist()
        assert own["interpolated"].sum() == 3
        assert ds.excluded_days == []

    def test_five_hour_gap_excludes_day(self):
        ph, rh, span, metas = one_plant_region(drop_region=range(28, 33))
        ds = align_calendars(ph, rh, "CAISO", span, metas)
        assert ds.excluded_days == [date(2021, 3, 4)]
        assert ds.ledger.to_dict("records") == [
            {"region_id": "CAISO", "date": "2021-03-04", "reason": "gap of 5 hours", "missing_hours": 5}
        ]
        assert date(2021, 3, 4) not in set(ds.region_hours["timestamp"].dt.date)
        assert ds.included_days() == [date(2021, 3, 3), date(2021, 3, 5)]

    def test_absent_plant_hour_is_offline(self):
        ph, rh, span, metas = one_plant_region()
        ph = ph.drop(index=7)
        ds = align_calendars(ph, rh, "CAISO", span, metas)
        row = ds.plant_hours.iloc[7]
        assert row["timestamp"].hour == 7
        assert (row["generation"], row["emissions"], bool(row["filled"])) == (0.0, 0.0, True)

    def test_too_many_missing_hours_is_fatal(self):
        ph, rh, span, metas = one_plant_region(drop_region=range(0, 8))
        with pytest.raises(DataQualityError):
            align_calendars(ph, rh, "CAISO", span, metas)

    def test_missing_partner_is_config_error(self):
        ph, rh, span, metas = one_plant_region(partners=False)
        with pytest.raises(ConfigError, match="NW"):
            align_calendars(ph, rh, "CAISO", span, metas)

    def test_partner_on_other_offset_lands_on_same_clock(self):
        ph, rh, span, metas = one_plant_region()
        ds = align_calendars(ph, rh, "CAISO", span, metas)
        sw = ds.region_hours[ds.region_hours["region_id"] == "SW"]
        own = ds.region_hours[ds.region_hours["region_id"] == "CAISO"]
        assert sw["wind"].tolist() == own["wind"].tolist()
        assert str(sw["timestamp"].iloc[0].tz) == str(standard_tz(-8))

    def test_monotone_calendar(self, small_aligned):
        for ds in small_aligned.values():
            for _, grp in ds.region_hours.groupby("region_id"):
                step = grp["timestamp"].diff().dropna()
                assert (step == pd.Timedelta(hours=1)).all()
            for _, grp in ds.plant_hours.groupby("plant_id"):
                assert (grp["timestamp"].diff().dropna() == pd.Timedelta(hours=1)).all()

    def test_config_thresholds(self):
        ph, rh, span, metas = one_plant_region(drop_region=range(28, 33))
        ds = align_calendars(ph, rh, "CAISO", span, metas, Config(max_interp_gap_hours=5))
        assert ds.excluded_days == []
