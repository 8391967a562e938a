import io
import time
from contextlib import contextmanager
from datetime import date

import numpy as np
import pandas as pd
import pytest

from thermal_displacement.config import Config
from thermal_displacement.data import (
    PlantMeta,
    aggregate_fleet,
    align_calendars,
    parse_plants,
    parse_region_hours,
    parse_unit_hours,
    standard_tz,
)
from thermal_displacement.synth import DgpConfig, generate


def hours(start="2021-01-01", n=24, offset=-8):
    t0 = pd.Timestamp(start).tz_localize(standard_tz(offset))
    return pd.Series(pd.date_range(t0, periods=n, freq="h"))


def plant_series(gen, em=None, nameplate=100.0, pid="P1", start="2021-01-01", offset=-8, timestamps=None):
    """Plant-hour frame from generation (and emissions) arrays."""
    gen = np.asarray(gen, dtype=float)
    em = gen * 0.5 if em is None else np.asarray(em, dtype=float)
    ts = hours(start, len(gen), offset) if timestamps is None else pd.Series(list(timestamps))
    with np.errstate(divide="ignore", invalid="ignore"):
        ei = np.where(gen > 0, em / np.where(gen > 0, gen, 1), np.nan)
    return pd.DataFrame(
        {
            "plant_id": pid,
            "timestamp": ts.reset_index(drop=True),
            "generation": gen,
            "emissions": em,
            "capacity_factor": gen / nameplate,
            "emissions_intensity": ei,
            "over_capacity": gen / nameplate > 1,
        }
    )


def csv_bytes(text):
    return io.BytesIO(text.strip().encode() + b"\n")


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory):
    """Synthetic bundle: 6 plants per region, 62 days, modest noise."""
    out = tmp_path_factory.mktemp("bundle")
    generate(DgpConfig(seed=5, n_plants=6, days=62, noise_sigma=0.02), out)
    return out


@pytest.fixture(scope="session")
def small_aligned(small_bundle):
    cfg = Config()
    metas = parse_plants(small_bundle / "plants.csv")
    units, _ = parse_unit_hours(small_bundle / "units.csv")
    series, _ = parse_region_hours(small_bundle / "region.csv")
    ph = aggregate_fleet(units, metas, cfg)
    span = (date(2019, 1, 1), date(2019, 3, 3))
    return {r: align_calendars(ph, series, r, span, metas, cfg) for r in ("CAISO", "ERCOT")}


@pytest.fixture
def meta():
    return PlantMeta("P1", "CAISO", "NaturalGas", 100.0)


def bundle_levels(bundle_dir, regions=("CAISO", "ERCOT")):
    """Parse a synthetic bundle into daily panels (levels) per region."""
    from thermal_displacement.data import infer_span
    from thermal_displacement.panel import build_daily_panel

    cfg = Config()
    metas = parse_plants(bundle_dir / "plants.csv")
    units, _ = parse_unit_hours(bundle_dir / "units.csv")
    series, _ = parse_region_hours(bundle_dir / "region.csv")
    ph = aggregate_fleet(units, metas, cfg)
    panels = {}
    for region in regions:
        pids = {p for p, m in metas.items() if m.region == region}
        own = ph[ph["plant_id"].isin(pids)]
        span = infer_span(own, series[series["region_id"] == cfg.ba_id(region)], cfg.offset_hours(region))
        ds = align_calendars(own, series, region, span, metas, cfg)
        panels[region] = build_daily_panel(ds, config=cfg)
    return panels


def bundle_panels(bundle_dir, regions=("CAISO", "ERCOT"), policy="drop"):
    """Log-transformed daily panels per region."""
    from thermal_displacement.panel import log_transform

    return {r: log_transform(p, policy)[0] for r, p in bundle_levels(bundle_dir, regions).items()}


def bundle_fits(bundle_dir, spec_ids=("M1",), deps=("generation", "emissions", "intensity"), regions=("CAISO", "ERCOT")):
    """Fit every (region, spec, dependent) on a synthetic bundle."""
    from thermal_displacement.fe import design_spec, fit_panel

    fits = {}
    for region, logged in bundle_panels(bundle_dir, regions).items():
        for sid in spec_ids:
            for dep in deps:
                fits[(region, sid, dep)] = fit_panel(logged, design_spec(sid, dep), region=region)
    return fits


# acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary

ACCEPTANCE: list[dict] = []
NOTES: list[str] = []


@contextmanager
def criterion(number, title):
    entry = {"n": number, "title": title, "ok": False, "detail": ""}
    t0 = time.perf_counter()
    try:
        yield entry
        entry["ok"] = True
    finally:
        entry["seconds"] = time.perf_counter() - t0
        ACCEPTANCE.append(entry)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(ACCEPTANCE, key=lambda e: e["n"]):
        status = "PASS" if e["ok"] else "FAIL"
        detail = f" [{e['detail']}]" if e["detail"] else ""
        terminalreporter.write_line(f"criterion {e['n']}: {status} {e['title']} ({e['seconds']:.1f}s){detail}")
    for line in NOTES:
        terminalreporter.write_line(f"note: {line}")
