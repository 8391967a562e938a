import filecmp
import json

import pytest

from thermal_displacement.data import parse_region_hours, parse_unit_hours
from thermal_displacement.errors import ConfigError
from thermal_displacement.synth import DgpConfig, generate, simulate

from .conftest import bundle_fits

FILES = ("units.csv", "plants.csv", "region.csv", "planted.json", "truth_daily.csv")


def test_same_seed_byte_identical(tmp_path):
    cfg = DgpConfig(seed=11, n_plants=3, days=30)
    generate(cfg, tmp_path / "a")
    generate(cfg, tmp_path / "b")
    for f in FILES:
        assert filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False), f


def test_different_seed_differs(tmp_path):
    generate(DgpConfig(seed=1, n_plants=2, days=28), tmp_path / "a")
    generate(DgpConfig(seed=2, n_plants=2, days=28), tmp_path / "b")
    assert not filecmp.cmp(tmp_path / "a" / "units.csv", tmp_path / "b" / "units.csv", shallow=False)


def test_outputs_parse_cleanly(small_bundle):
    _, rejects = parse_unit_hours(small_bundle / "units.csv")
    assert len(rejects) == 0
    series, rejects = parse_region_hours(small_bundle / "region.csv")
    assert len(rejects) == 0
    assert {"CAISO", "ERCOT", "NW", "SW", "SWPP"} <= set(series["region_id"])


def test_solar_zero_at_night(small_bundle):
    series, _ = parse_region_hours(small_bundle / "region.csv")
    # partner series are generated on their analysis region's clock
    offsets = {"CAISO": -8, "NW": -8, "SW": -8, "ERCOT": -6, "SWPP": -6}
    for rid, off in offsets.items():
        s = series[series["region_id"] == rid]
        local_hour = (s["timestamp"].dt.hour + off) % 24
        night = (local_hour <= 6) | (local_hour >= 20)
        assert (s.loc[night, "solar"] == 0).all()
        assert (s.loc[~night, "solar"] > 0).any()


def test_planted_record(small_bundle):
    planted = json.loads((small_bundle / "planted.json").read_text())
    for region in ("CAISO", "ERCOT"):
        c = planted["regions"][region]["coefficients"]
        for k, v in c["emissions"].items():
            assert v == c["generation"][k] + c["intensity"][k]


@pytest.mark.parametrize(
    "kw",
    [dict(n_plants=0), dict(days=27), dict(noise_sigma=-0.1), dict(wind_ar=1.0), dict(regions=["PJM"])],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        DgpConfig(**kw)


def test_from_json(tmp_path):
    p = tmp_path / "dgp.json"
    p.write_text(json.dumps({"seed": 3, "n_plants": 4, "planted": {"CAISO": {"generation": {"S": -0.5}}}}))
    cfg = DgpConfig.from_json(p)
    assert cfg.seed == 3 and cfg.planted["CAISO"]["generation"]["S"] == -0.5
    assert cfg.planted["CAISO"]["generation"]["W"] == DgpConfig().planted["CAISO"]["generation"]["W"]
    p.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ConfigError):
        DgpConfig.from_json(p)


def test_panel_share_bounded():
    b = simulate(DgpConfig(seed=4, n_plants=5, days=28))
    units = b.units
    other = units["plant_id"].str.contains("X")
    share = units.loc[~other, "gross_load"].sum() / units["gross_load"].sum()
    assert share <= 0.8 + 1e-9


def test_zero_noise_recovery_small(tmp_path):
    cfg = DgpConfig(seed=8, n_plants=10, days=120, noise_sigma=0.0)
    generate(cfg, tmp_path)
    planted = json.loads((tmp_path / "planted.json").read_text())["regions"]
    fits = bundle_fits(tmp_path, regions=("CAISO",))
    for dep in ("generation", "emissions", "intensity"):
        truth = planted["CAISO"]["coefficients"][dep]
        got = fits[("CAISO", "M1", dep)].coefficients
        for k, v in truth.items():
            assert got[k] == pytest.approx(v, rel=1e-8, abs=1e-12), (dep, k)
