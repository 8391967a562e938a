"""Bounding emissions scenarios per plant-year.

Each plant's observed annual generation is re-priced at three constant
emissions intensities: its own 90th-percentile hourly intensity (high), its
10th-percentile hourly intensity (low), and its eGRID annual intensity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .data import PlantMeta
from .errors import DomainError, EmptyDomainError

log = logging.getLogger(__name__)


def quantile(values: Sequence[float], q: float) -> float:
    """Quantile by linear interpolation between order statistics.

    The target position is ``(n - 1) * q`` in the ascending sort; the result
    is ``v[i] + f * (v[i + 1] - v[i])`` with ``i`` its floor and ``f`` its
    fractional part, evaluated in exact rational arithmetic and rounded once,
    so it never leaves ``[v[i], v[i + 1]]``.

    >>> quantile(range(1, 11), 0.1)
    1.9
    """
    if not 0.0 <= q <= 1.0 or math.isnan(q):
        raise DomainError(f"q must lie in [0, 1], got {q}")
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise EmptyDomainError("quantile of an empty sequence")
    if np.isnan(v).any():
        raise DomainError("quantile input contains NaN")
    h = (v.size - 1) * q
    i = int(math.floor(h))
    f = h - i
    if f == 0.0 or i + 1 >= v.size:
        return float(v[i])
    a, b = Fraction(float(v[i])), Fraction(float(v[i + 1]))
    return float(a + Fraction(f) * (b - a))


@dataclass
class ScenarioResult:
    plant_id: str
    year: int
    generation_mwh: float
    observed_t: float
    high_t: float
    low_t: float
    egrid_t: float | None
    ei_p10: float
    ei_p90: float
    operating_hours: int
    observed_outside_bounds: bool = False
    diagnostics: list[str] = field(default_factory=list)

    def to_row(self) -> dict:
        d = asdict(self)
        d["diagnostics"] = "; ".join(self.diagnostics)
        return d


def _year_slice(series: pd.DataFrame, year: int) -> pd.DataFrame:
    return series[series["timestamp"].dt.year == year]


def category_egrid_intensity(metas: Iterable[PlantMeta], region: str, fuel: str, year: int) -> float | None:
    """Generation-weighted eGRID intensity of all plants sharing region and fuel."""
    gen, co2 = [], []
    for m in metas:
        if m.region == region and m.fuel == fuel and year in m.egrid_annual:
            gen.append(m.egrid_annual[year].generation_mwh)
            co2.append(m.egrid_annual[year].emissions_t)
    total = math.fsum(gen)
    return math.fsum(co2) / total if total > 0 else None


def scenario_emissions(
    series: pd.DataFrame,
    meta: PlantMeta,
    year: int,
    egrid_intensity: float | None = None,
) -> ScenarioResult:
    """Observed, high (P90), low (P10) and eGRID annual emissions for one plant.

    ``egrid_intensity`` overrides the plant's own eGRID value (used for the
    per-category variant). Intensity percentiles use only hours with positive
    generation in ``year``.
    """
    ys = _year_slice(series, year)
    gen = ys["generation"].to_numpy(float)
    em = ys["emissions"].to_numpy(float)
    operating = gen > 0
    total_gen = math.fsum(gen)
    observed = math.fsum(em)
    if egrid_intensity is None and year in meta.egrid_annual:
        egrid_intensity = meta.egrid_annual[year].intensity
    if egrid_intensity is not None and math.isnan(egrid_intensity):
        egrid_intensity = None
    if not operating.any():
        msg = f"plant {meta.plant_id} has no operating hours in {year}"
        log.info(msg)
        return ScenarioResult(meta.plant_id, year, 0.0, observed, 0.0, 0.0, 0.0 if egrid_intensity is not None else None, 0.0, 0.0, 0, False, [msg])
    ei = em[operating] / gen[operating]
    p10 = quantile(ei, 0.10)
    p90 = quantile(ei, 0.90)
    high = p90 * total_gen
    low = p10 * total_gen
    egrid_t = egrid_intensity * total_gen if egrid_intensity is not None else None
    diagnostics = []
    outside = not (low <= observed <= high)
    if outside:
        diagnostics.append("observed emissions fall outside the P10-P90 bounds (generation weighting)")
    return ScenarioResult(meta.plant_id, year, total_gen, observed, high, low, egrid_t, p10, p90, int(operating.sum()), outside, diagnostics)


def fleet_scenarios(
    plant_hours: pd.DataFrame,
    metas: Mapping[str, PlantMeta],
    year: int,
    egrid_mode: str = "plant",
) -> list[ScenarioResult]:
    """Run :func:`scenario_emissions` for every plant in ``plant_hours``."""
    out = []
    for pid, grp in plant_hours.groupby("plant_id", sort=True):
        meta = metas[pid]
        override = None
        if egrid_mode == "category":
            override = category_egrid_intensity(metas.values(), meta.region, meta.fuel, year)
        out.append(scenario_emissions(grp, meta, year, override))
    return out


def _pct(x: float, base: float) -> float | None:
    return 100.0 * (x - base) / base if base > 0 else None


def region_scenario_rollup(results: Iterable[ScenarioResult], region: str, year: int) -> dict:
    """Region-year totals and percentage deviations from observed emissions."""
    rs = [r for r in results if r.year == year]
    observed = math.fsum(r.observed_t for r in rs)
    high = math.fsum(r.high_t for r in rs)
    low = math.fsum(r.low_t for r in rs)
    with_egrid = [r for r in rs if r.egrid_t is not None]
    egrid = math.fsum(r.egrid_t for r in with_egrid) if with_egrid else None
    return {
        "region": region,
        "year": year,
        "plants": len(rs),
        "plants_with_egrid": len(with_egrid),
        "observed_t": observed,
        "high_t": high,
        "low_t": low,
        "egrid_t": egrid,
        "high_deviation_pct": _pct(high, observed),
        "low_deviation_pct": _pct(low, observed),
        # eGRID coverage can be partial; deviation is against the covered plants only
        "egrid_deviation_pct": _pct(egrid, math.fsum(r.observed_t for r in with_egrid)) if with_egrid else None,
        "plants_outside_bounds": sum(r.observed_outside_bounds for r in rs),
    }


def compare_annual_cems_egrid(
    plant_hours: pd.DataFrame, metas: Mapping[str, PlantMeta], year: int
) -> tuple[pd.DataFrame, list[str]]:
    """Paired annual CEMS vs eGRID generation, CO2 and intensity per plant.

    Plants without eGRID data for ``year`` are skipped and named in the
    returned diagnostics.
    """
    rows, diagnostics = [], []
    for pid, grp in plant_hours.groupby("plant_id", sort=True):
        meta = metas[pid]
        if year not in meta.egrid_annual:
            diagnostics.append(f"plant {pid}: no eGRID data for {year}")
            continue
        ys = _year_slice(grp, year)
        gen = math.fsum(ys["generation"])
        co2 = math.fsum(ys["emissions"])
        e = meta.egrid_annual[year]
        cems_ei = co2 / gen if gen > 0 else math.nan
        rows.append(
            {
                "plant_id": pid,
                "year": year,
                "cems_gen_mwh": gen,
                "egrid_gen_mwh": e.generation_mwh,
                "cems_co2_t": co2,
                "egrid_co2_t": e.emissions_t,
                "cems_ei": cems_ei,
                "egrid_ei": e.intensity,
                "gen_ratio": gen / e.generation_mwh if e.generation_mwh > 0 else math.nan,
                "co2_ratio": co2 / e.emissions_t if e.emissions_t > 0 else math.nan,
                "ei_ratio": cems_ei / e.intensity if e.intensity > 0 else math.nan,
            }
        )
    for d in diagnostics:
        log.info(d)
    cols = ["plant_id", "year", "cems_gen_mwh", "egrid_gen_mwh", "cems_co2_t", "egrid_co2_t", "cems_ei", "egrid_ei", "gen_ratio", "co2_ratio", "ei_ratio"]
    return pd.DataFrame(rows, columns=cols), diagnostics
