"""Descriptive operating statistics for thermal plants.

All functions take plant-hour frames as produced by
:func:`thermal_displacement.data.aggregate_units_to_plant` (or the
``plant_hours`` table of an aligned dataset). Hourly MWh is read as average MW
for ramp purposes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import pandas as pd

from .data import PlantMeta
from .errors import DomainError, EmptyDomainError
from .scenarios import quantile


@dataclass
class EiCfCurve:
    plant_id: str
    points: pd.DataFrame  # capacity_factor, emissions_intensity
    binned: pd.DataFrame  # bin_left, bin_right, bin_center, mean_ei, count
    p10_cf: float
    diagnostic: str | None = None


@dataclass
class RampReport:
    plant_id: str
    daily_ramp: pd.Series
    intra_hour_ramp: pd.Series


@dataclass
class FleetSummary:
    region: str
    fuel: str
    year: int
    plant_count: int
    installed_gw: float
    generation_share_pct: float | None
    emissions_share_pct: float | None
    mean_ei: float
    sd_ei: float
    mean_cf: float
    sd_cf: float
    notes: list[str] = field(default_factory=list)


def cf_bin_edges(width: float = 0.05) -> np.ndarray:
    n = int(round(1.0 / width))
    # rounded so that edges are the floats nearest the decimal bin boundaries
    return np.round(np.arange(n + 1) * width, 12)


def bin_capacity_factors(cf: np.ndarray, width: float = 0.05) -> np.ndarray:
    """Bin index per value for left-closed bins ``[k*w, (k+1)*w)``.

    Values >= 1 share the terminal overflow bin, index ``1/w``.
    """
    edges = cf_bin_edges(width)
    idx = np.searchsorted(edges, cf, side="right") - 1
    return np.clip(idx, 0, len(edges) - 1)


def ei_cf_curve(series: pd.DataFrame, width: float = 0.05) -> EiCfCurve:
    """Hourly (CF, EI) scatter, CF-binned mean intensity and the P10 capacity factor."""
    if len(series) == 0:
        raise DomainError("ei_cf_curve needs a non-empty series")
    pid = str(series["plant_id"].iloc[0])
    op = series[series["generation"] > 0]
    points = op[["capacity_factor", "emissions_intensity"]].reset_index(drop=True)
    cols = ["bin_left", "bin_right", "bin_center", "mean_ei", "count"]
    if op.empty:
        return EiCfCurve(pid, points, pd.DataFrame(columns=cols), math.nan, "no operating hours")
    cf = points["capacity_factor"].to_numpy(float)
    ei = points["emissions_intensity"].to_numpy(float)
    edges = cf_bin_edges(width)
    idx = bin_capacity_factors(cf, width)
    rows = []
    for k in np.unique(idx):
        sel = idx == k
        overflow = k == len(edges) - 1
        left = edges[k]
        right = math.inf if overflow else edges[k + 1]
        center = math.nan if overflow else round(left + width / 2, 12)
        rows.append((left, right, center, math.fsum(ei[sel]) / sel.sum(), int(sel.sum())))
    binned = pd.DataFrame(rows, columns=cols)
    return EiCfCurve(pid, points, binned, quantile(cf, 0.10))


def conditional_mean_ei(series: pd.DataFrame, threshold: float, direction: str = ">") -> float:
    """Mean hourly intensity over operating hours with CF above/below ``threshold``."""
    cf = series["capacity_factor"].to_numpy(float)
    op = series["generation"].to_numpy(float) > 0
    if direction == ">":
        sel = op & (cf > threshold)
    elif direction == "<":
        sel = op & (cf < threshold)
    else:
        raise DomainError(f"direction must be '>' or '<', got {direction!r}")
    if not sel.any():
        raise EmptyDomainError(f"no operating hours with CF {direction} {threshold}")
    ei = series["emissions_intensity"].to_numpy(float)[sel]
    return math.fsum(ei) / len(ei)


def daily_ramp(series: pd.DataFrame) -> pd.Series:
    """Max minus min hourly output per local day (MW). Days without rows are absent."""
    if series.empty:
        return pd.Series(dtype=float, name="daily_ramp")
    day = series["timestamp"].dt.date
    g = series.groupby(day, sort=True)["generation"]
    out = g.max() - g.min()
    out.index.name = "date"
    return out.rename("daily_ramp")


def intra_hour_ramp(series: pd.DataFrame) -> pd.Series:
    """Signed hour-over-hour change in output (MW/h), NaN at the start of each
    contiguous block of hourly rows."""
    s = series.sort_values("timestamp")
    ts = s["timestamp"]
    gen = s["generation"].to_numpy(float)
    diff = np.full(len(gen), np.nan)
    if len(gen) > 1:
        contiguous = (ts.diff() == pd.Timedelta(hours=1)).to_numpy()[1:]
        step = gen[1:] - gen[:-1]
        diff[1:] = np.where(contiguous, step, np.nan)
    return pd.Series(diff, index=pd.Index(ts.values, name="timestamp"), name="intra_hour_ramp")


def ramp_report(series: pd.DataFrame) -> RampReport:
    pid = str(series["plant_id"].iloc[0]) if len(series) else ""
    return RampReport(pid, daily_ramp(series), intra_hour_ramp(series))


def hourly_profile(
    plant_hours: pd.DataFrame, metas: Mapping[str, PlantMeta], region: str, fuel: str
) -> pd.DataFrame:
    """Mean generation and emissions by hour of day across all plant-days of a group.

    The intensity profile is mean emissions over mean generation for each hour
    (ratio of means), so near-zero-output hours do not dominate it.
    """
    members = [pid for pid, m in metas.items() if m.region == region and m.fuel == fuel]
    sel = plant_hours[plant_hours["plant_id"].isin(members)]
    if sel.empty:
        raise DomainError(f"no plants for region {region!r} and fuel {fuel!r}")
    hour = sel["timestamp"].dt.hour
    g = sel.groupby(hour)
    gen = g["generation"].agg(lambda x: math.fsum(x) / len(x))
    em = g["emissions"].agg(lambda x: math.fsum(x) / len(x))
    out = pd.DataFrame({"hour": gen.index.astype(int), "mean_generation": gen.values, "mean_emissions": em.values})
    with np.errstate(divide="ignore", invalid="ignore"):
        out["mean_ei"] = np.where(out["mean_generation"] > 0, out["mean_emissions"] / out["mean_generation"], np.nan)
    out = out.set_index("hour").reindex(range(24)).reset_index()
    out.attrs["ei_method"] = "ratio of means"
    return out


def _mean_sd(x: list[float]) -> tuple[float, float]:
    if not x:
        return math.nan, math.nan
    mean = math.fsum(x) / len(x)
    if len(x) < 2:
        return mean, math.nan
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in x) / (len(x) - 1))


def plant_annual(plant_hours: pd.DataFrame, metas: Mapping[str, PlantMeta], year: int) -> pd.DataFrame:
    """Annual generation, emissions, intensity and capacity factor per plant."""
    ys = plant_hours[plant_hours["timestamp"].dt.year == year]
    rows = []
    for pid, grp in ys.groupby("plant_id", sort=True):
        m = metas[pid]
        gen = math.fsum(grp["generation"])
        em = math.fsum(grp["emissions"])
        rows.append(
            {
                "plant_id": pid,
                "region": m.region,
                "fuel": m.fuel,
                "nameplate_mw": m.nameplate_mw,
                "hours": len(grp),
                "generation_mwh": gen,
                "emissions_t": em,
                "ei": em / gen if gen > 0 else math.nan,
                "cf": gen / (m.nameplate_mw * len(grp)),
            }
        )
    return pd.DataFrame(rows, columns=["plant_id", "region", "fuel", "nameplate_mw", "hours", "generation_mwh", "emissions_t", "ei", "cf"])


def fleet_summary(
    plant_hours: pd.DataFrame,
    metas: Mapping[str, PlantMeta],
    region: str,
    fuel: str,
    year: int,
    region_totals: Mapping[str, float] | None = None,
) -> FleetSummary:
    """Fleet row of the regional summary table for one region, fuel and year.

    Shares are relative to ``region_totals`` (``generation_mwh``,
    ``emissions_t``) when supplied, else to all ingested plants of the region.
    Capacity factors are fractions, not percentages. Standard deviations use
    ``n - 1`` and are NaN for fewer than two plants.
    """
    if not (plant_hours["timestamp"].dt.year == year).any():
        raise DomainError(f"year {year} not present in plant data")
    annual = plant_annual(plant_hours, metas, year)
    in_region = annual[annual["region"] == region]
    group = in_region[in_region["fuel"] == fuel]
    notes = []
    if region_totals is not None:
        tot_gen = region_totals.get("generation_mwh")
        tot_em = region_totals.get("emissions_t")
    else:
        tot_gen = math.fsum(in_region["generation_mwh"])
        tot_em = math.fsum(in_region["emissions_t"])
        notes.append("shares relative to ingested plants of the region")
    gen = math.fsum(group["generation_mwh"])
    em = math.fsum(group["emissions_t"])
    eis = [v for v in group["ei"] if not math.isnan(v)]
    if len(eis) < len(group):
        notes.append(f"{len(group) - len(eis)} plants with zero annual generation excluded from intensity statistics")
    mean_ei, sd_ei = _mean_sd(eis)
    mean_cf, sd_cf = _mean_sd(list(group["cf"]))
    return FleetSummary(
        region=region,
        fuel=fuel,
        year=year,
        plant_count=len(group),
        installed_gw=math.fsum(group["nameplate_mw"]) / 1000.0,
        generation_share_pct=100.0 * gen / tot_gen if tot_gen else None,
        emissions_share_pct=100.0 * em / tot_em if tot_em else None,
        mean_ei=mean_ei,
        sd_ei=sd_ei,
        mean_cf=mean_cf,
        sd_cf=sd_cf,
        notes=notes,
    )
