"""Daily plant panel and hourly plant designs for the log-log regressions.

Column roles (levels, before :func:`log_transform`):

=============  ============================================================
y_generation   plant generation, MWh
y_emissions    plant CO2, t
y_ei           plant emissions intensity, t/MWh (NaN on zero generation)
G              thermal generation of the region's ingested fleet, MWh
S, W           region solar and wind, MWh
W_ramp         daily: sum of |hourly wind differences| within the day;
               hourly: |W(t) - W(t-1)|
X_*_ext        solar / wind / demand summed over trading partners
Y_hydro        region hydro
Y_imports      region net imports (signed)
D, D_resid     region demand and residual demand D - hydro + imports
=============  ============================================================
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from .config import Config
from .data import AlignedDataset, exact_group_sum, plants_in
from .errors import ConfigError, DomainError

DEPENDENTS = {"generation": "y_generation", "emissions": "y_emissions", "intensity": "y_ei"}

LEVEL_VARS = [
    "y_generation",
    "y_emissions",
    "y_ei",
    "G",
    "S",
    "W",
    "W_ramp",
    "X_solar_ext",
    "X_wind_ext",
    "X_demand_ext",
    "Y_hydro",
    "Y_imports",
    "D",
    "D_resid",
]

PANEL_COLUMNS = ["plant_id", "date", *LEVEL_VARS, "zero_generation", "month_index", "year_index"]


def wind_ramp(hourly_wind: Iterable[float]) -> float:
    """Sum of absolute consecutive differences, correctly rounded."""
    w = np.asarray(list(hourly_wind), dtype=float)
    return math.fsum(np.abs(np.diff(w)))


def region_daily(region_hours: pd.DataFrame) -> pd.DataFrame:
    """Daily totals per region series, plus the within-day wind ramp.

    Indexed by ``(region_id, date)``. Hours are grouped by their local
    standard-time date; the ramp only uses pairs of rows exactly one hour apart
    inside the same day.
    """
    rows = []
    for (rid, day), grp in region_hours.groupby(["region_id", region_hours["timestamp"].dt.date], sort=True):
        grp = grp.sort_values("timestamp")
        w = grp["wind"].to_numpy(float)
        step = (grp["timestamp"].diff() == pd.Timedelta(hours=1)).to_numpy()[1:]
        rows.append(
            {
                "region_id": rid,
                "date": day,
                "hours": len(grp),
                "wind": math.fsum(w),
                "solar": math.fsum(grp["solar"]),
                "hydro": math.fsum(grp["hydro"]),
                "demand": math.fsum(grp["demand"]),
                "net_imports": math.fsum(grp["net_imports"]),
                "wind_ramp": math.fsum(np.abs(np.diff(w))[step]),
            }
        )
    return pd.DataFrame(rows).set_index(["region_id", "date"])


def external_controls(region: str, daily: pd.DataFrame, partners: Mapping[str, list[str]]) -> pd.DataFrame:
    """Partner sums of solar, wind and demand per date.

    Parameters
    ----------
    region : analysis region name
    daily : frame indexed by ``(region_id, date)`` as from :func:`region_daily`
        (hourly frames indexed the same way with timestamps also work)
    partners : analysis region -> list of partner region ids
    """
    ids = list(partners.get(region, []))
    if not ids:
        raise ConfigError(f"no trading partners configured for {region}")
    present = set(daily.index.get_level_values(0))
    for pid in ids:
        if pid not in present:
            raise ConfigError(f"trading partner series {pid!r} missing for {region}")
    parts = [daily.xs(pid, level=0) for pid in ids]
    idx = parts[0].index
    for p in parts[1:]:
        idx = idx.intersection(p.index)
    out = pd.DataFrame(index=idx)
    for col, name in (("solar", "X_solar_ext"), ("wind", "X_wind_ext"), ("demand", "X_demand_ext")):
        stacked = np.column_stack([p.loc[idx, col].to_numpy(float) for p in parts])
        out[name] = [math.fsum(r) for r in stacked] if len(parts) > 1 else stacked[:, 0]
    return out


def _panel_plants(ds: AlignedDataset, plants, config: Config) -> list[str]:
    if plants is None:
        return plants_in(ds.metas, ds.region, config.panel_fuels)
    unknown = sorted(set(plants) - set(ds.metas))
    if unknown:
        raise DomainError(f"plants not in region {ds.region}: {unknown}")
    return sorted(plants)


def build_daily_panel(
    ds: AlignedDataset,
    plants: Iterable[str] | None = None,
    config: Config | None = None,
    leave_one_out: bool | None = None,
) -> pd.DataFrame:
    """One level-form row per (plant, included day), ordered by plant then date.

    ``G`` sums every ingested plant of the region (all fuels), so it includes
    the plant itself unless ``leave_one_out`` is set.
    """
    config = config or Config()
    loo = config.leave_one_out if leave_one_out is None else leave_one_out
    chosen = _panel_plants(ds, plants, config)
    days = ds.included_days()
    daily = region_daily(ds.region_hours)
    own = daily.xs(ds.own_id, level=0).reindex(days)
    ext = external_controls(ds.region, daily, {ds.region: ds.partner_ids}).reindex(days)

    ph = ds.plant_hours
    day_of = ph["timestamp"].dt.date
    ph = ph[day_of.isin(set(days))]
    day_codes, day_uniq = pd.factorize(ph["timestamp"].dt.date, sort=True)
    order = np.argsort(day_codes, kind="stable")
    fleet = exact_group_sum(day_codes[order], ph["generation"].to_numpy(float)[order], len(day_uniq))
    G = pd.Series(fleet, index=day_uniq).reindex(days).fillna(0.0)

    sel = ph[ph["plant_id"].isin(chosen)]
    key = pd.MultiIndex.from_arrays([sel["plant_id"], sel["timestamp"].dt.date])
    codes, uniq = pd.factorize(key, sort=True)
    order = np.argsort(codes, kind="stable")
    gen = exact_group_sum(codes[order], sel["generation"].to_numpy(float)[order], len(uniq))
    em = exact_group_sum(codes[order], sel["emissions"].to_numpy(float)[order], len(uniq))
    pdays = pd.DataFrame({"y_generation": gen, "y_emissions": em}, index=pd.MultiIndex.from_tuples(list(uniq), names=["plant_id", "date"]))

    full = pd.MultiIndex.from_product([chosen, days], names=["plant_id", "date"])
    panel = pdays.reindex(full).fillna(0.0).reset_index()
    gen = panel["y_generation"].to_numpy()
    with np.errstate(divide="ignore", invalid="ignore"):
        panel["y_ei"] = np.where(gen > 0, panel["y_emissions"].to_numpy() / np.where(gen > 0, gen, 1.0), np.nan)
    dates = panel["date"]
    g = G.loc[dates].to_numpy()
    panel["G"] = g - gen if loo else g
    panel["S"] = own.loc[dates, "solar"].to_numpy()
    panel["W"] = own.loc[dates, "wind"].to_numpy()
    panel["W_ramp"] = own.loc[dates, "wind_ramp"].to_numpy()
    for c in ("X_solar_ext", "X_wind_ext", "X_demand_ext"):
        panel[c] = ext.loc[dates, c].to_numpy()
    panel["Y_hydro"] = own.loc[dates, "hydro"].to_numpy()
    panel["Y_imports"] = own.loc[dates, "net_imports"].to_numpy()
    panel["D"] = own.loc[dates, "demand"].to_numpy()
    panel["D_resid"] = panel["D"] - panel["Y_hydro"] + panel["Y_imports"]
    panel["zero_generation"] = gen <= 0
    panel["month_index"] = [d.month for d in dates]
    panel["year_index"] = [d.year for d in dates]
    return panel[PANEL_COLUMNS]


def build_hourly_design(
    ds: AlignedDataset,
    plant_id: str,
    config: Config | None = None,
    leave_one_out: bool | None = None,
) -> pd.DataFrame:
    """Hourly level-form design for one plant.

    The ramp covariate is ``|W(t) - W(t-1)|``; it is undefined (and the row
    omitted) for the first hour of each contiguous block of region data.
    """
    config = config or Config()
    loo = config.leave_one_out if leave_one_out is None else leave_one_out
    if plant_id not in ds.metas:
        raise DomainError(f"plant {plant_id} not in region {ds.region}")
    rh = ds.region_hours.set_index(["region_id", "timestamp"]).sort_index()
    own = rh.xs(ds.own_id, level=0)
    ext = external_controls(ds.region, rh, {ds.region: ds.partner_ids})
    ts = own.index
    prev_ok = np.r_[False, (np.diff(ts.asi8) == 3_600 * 10**9)]
    ramp = np.full(len(own), np.nan)
    w = own["wind"].to_numpy(float)
    ramp[1:] = np.abs(np.diff(w))
    ramp[~prev_ok] = np.nan

    ph = ds.plant_hours
    fleet = ph.groupby("timestamp")["generation"].agg(math.fsum)
    plant = ph[ph["plant_id"] == plant_id].set_index("timestamp")
    plant = plant.reindex(ts)
    gen = plant["generation"].to_numpy(float)
    em = plant["emissions"].to_numpy(float)
    g = fleet.reindex(ts).to_numpy(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ei = np.where(gen > 0, em / np.where(gen > 0, gen, 1.0), np.nan)
    out = pd.DataFrame(
        {
            "plant_id": plant_id,
            "timestamp": ts,
            "y_generation": gen,
            "y_emissions": em,
            "y_ei": ei,
            "G": g - gen if loo else g,
            "S": own["solar"].to_numpy(),
            "W": w,
            "W_ramp": ramp,
            "X_solar_ext": ext.reindex(ts)["X_solar_ext"].to_numpy(),
            "X_wind_ext": ext.reindex(ts)["X_wind_ext"].to_numpy(),
            "X_demand_ext": ext.reindex(ts)["X_demand_ext"].to_numpy(),
            "Y_hydro": own["hydro"].to_numpy(),
            "Y_imports": own["net_imports"].to_numpy(),
            "D": own["demand"].to_numpy(),
        }
    )
    out["D_resid"] = out["D"] - out["Y_hydro"] + out["Y_imports"]
    out["zero_generation"] = ~(gen > 0)
    out["month_index"] = out["timestamp"].dt.month
    out["year_index"] = out["timestamp"].dt.year
    return out[~np.isnan(ramp)].reset_index(drop=True)


def log_transform(
    rows: pd.DataFrame,
    policy: str = "drop",
    floor: float = 1.0,
    ramp_floor: float = 1.0,
) -> tuple[pd.DataFrame, dict]:
    """Natural log of every level variable present in ``rows``.

    ``drop`` removes rows where any logged variable is <= 0 or undefined.
    ``floor`` replaces such values with ``floor`` (native units) and recomputes
    intensity from the floored emissions and generation. Under both policies
    the wind ramp is floored at ``ramp_floor`` and net imports are shifted by
    ``1 - min`` when their minimum is <= 0; the shift is returned in the report.

    Returns the transformed frame (same column names, log values) and a report
    with removal counts.
    """
    if policy not in ("drop", "floor"):
        raise DomainError(f"unknown zero policy {policy!r}")
    df = rows.copy()
    logged = [c for c in LEVEL_VARS if c in df.columns]
    report: dict = {"policy": policy, "rows_in": len(df), "imports_shift": 0.0, "removed_by_variable": {}, "floored": {}}

    if "W_ramp" in df:
        n = int((df["W_ramp"] < ramp_floor).sum())
        report["floored"]["W_ramp"] = n
        df["W_ramp"] = np.maximum(df["W_ramp"].to_numpy(float), ramp_floor)
    if "Y_imports" in df and len(df):
        lo = float(df["Y_imports"].min())
        if lo <= 0:
            shift = 1.0 - lo
            report["imports_shift"] = shift
            df["Y_imports"] = df["Y_imports"] + shift

    if policy == "floor":
        for c in logged:
            if c == "y_ei":
                continue
            bad = ~(df[c] > 0)
            if bad.any():
                report["floored"][c] = report["floored"].get(c, 0) + int(bad.sum())
                df.loc[bad, c] = floor
        if "y_ei" in df and {"y_generation", "y_emissions"} <= set(df.columns):
            df["y_ei"] = df["y_emissions"] / df["y_generation"]

    bad_any = np.zeros(len(df), dtype=bool)
    for c in logged:
        bad = ~(df[c].to_numpy(float) > 0)
        if bad.any():
            report["removed_by_variable"][c] = int(bad.sum())
        bad_any |= bad
    df = df[~bad_any].copy()
    for c in logged:
        df[c] = np.log(df[c].to_numpy(float))
    df = df.reset_index(drop=True)
    report["removed"] = int(bad_any.sum())
    report["rows_out"] = len(df)
    return df, report
