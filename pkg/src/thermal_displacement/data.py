"""Input schemas, CSV ingestion and calendar alignment.

Three inputs are supported:

* ``units.csv``  -- hourly unit-level gross load / CO2 / heat input (CEMS style)
* ``plants.csv`` -- plant region, fuel, nameplate and optional annual eGRID totals
* ``region.csv`` -- hourly balancing-authority wind/solar/hydro/demand/net imports

Hour-level tables are kept as pandas DataFrames. Timestamps are tz-aware;
after parsing they are in UTC and :func:`to_standard_time` moves them onto a
region's fixed standard-time clock (no daylight saving).
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from datetime import date, timedelta, timezone
from pathlib import Path
from typing import IO, Iterable, Mapping, NamedTuple

import numpy as np
import pandas as pd

from .config import Config
from .errors import (
    ConfigError,
    DataQualityError,
    DomainError,
    IntegrityError,
    MissingInputError,
    SchemaError,
)

log = logging.getLogger(__name__)

REGIONS = ("CAISO", "ERCOT", "OTHER")
FUELS = ("NaturalGas", "Coal", "Other")

_FUEL_ALIASES = {
    "naturalgas": "NaturalGas",
    "natural gas": "NaturalGas",
    "gas": "NaturalGas",
    "ng": "NaturalGas",
    "coal": "Coal",
    "other": "Other",
}

UNIT_SCHEMA = {
    "plant_id": "plant_id",
    "unit_id": "unit_id",
    "timestamp": "timestamp",
    "gross_load": "gross_load_mwh",
    "co2_mass": "co2_tonnes",
    "heat_input": "heat_input_mmbtu",
    "operating": "operating",
}

REGION_SCHEMA = {
    "region_id": "region_id",
    "timestamp": "timestamp",
    "wind": "wind_mwh",
    "solar": "solar_mwh",
    "hydro": "hydro_mwh",
    "demand": "demand_mwh",
    "net_imports": "net_imports_mwh",
}

PLANT_HOUR_COLUMNS = [
    "plant_id",
    "timestamp",
    "generation",
    "emissions",
    "capacity_factor",
    "emissions_intensity",
    "over_capacity",
]

REGION_SERIES = ["wind", "solar", "hydro", "demand", "net_imports"]

_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}
_OFFSET_RE = r"(?:Z|[+-]\d{2}:?\d{2})$"


@dataclass(frozen=True)
class UnitHourRecord:
    plant_id: str
    unit_id: str
    timestamp: pd.Timestamp
    gross_load: float
    co2_mass: float
    heat_input: float
    operating: bool


@dataclass(frozen=True)
class RegionHourRecord:
    region_id: str
    timestamp: pd.Timestamp
    wind: float
    solar: float
    hydro: float
    demand: float
    net_imports: float


class EgridAnnual(NamedTuple):
    generation_mwh: float
    emissions_t: float
    intensity: float


@dataclass(frozen=True)
class PlantMeta:
    plant_id: str
    region: str
    fuel: str
    nameplate_mw: float
    egrid_annual: Mapping[int, EgridAnnual] = field(default_factory=dict)

    def __post_init__(self):
        if not self.nameplate_mw > 0:
            raise DomainError(f"plant {self.plant_id}: nameplate_mw must be > 0, got {self.nameplate_mw}")
        if self.region not in REGIONS:
            raise DomainError(f"plant {self.plant_id}: unknown region {self.region!r}")
        if self.fuel not in FUELS:
            raise DomainError(f"plant {self.plant_id}: unknown fuel {self.fuel!r}")


def egrid_entry(generation_mwh: float, emissions_t: float) -> EgridAnnual:
    ei = emissions_t / generation_mwh if generation_mwh > 0 else math.nan
    return EgridAnnual(float(generation_mwh), float(emissions_t), ei)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _read_text_table(source) -> pd.DataFrame:
    if isinstance(source, (str, Path)):
        p = Path(source)
        if not p.exists():
            raise MissingInputError(f"input file not found: {p}")
        handle: IO = p.open("rb")
    elif isinstance(source, (bytes, bytearray)):
        handle = io.BytesIO(source)
    else:
        handle = source
    try:
        return pd.read_csv(handle, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise SchemaError("input has no header row") from None
    finally:
        if isinstance(source, (str, Path)):
            handle.close()


def _check_columns(raw: pd.DataFrame, schema: Mapping[str, str], what: str):
    missing = [f"{logical} (column {col!r})" for logical, col in schema.items() if col not in raw.columns]
    if missing:
        raise SchemaError(f"{what}: missing required columns: {', '.join(missing)}")


def _by_unique(text: pd.Series, func) -> pd.Series:
    """Apply ``func`` to the distinct values of ``text`` and broadcast back."""
    codes, uniq = pd.factorize(text)
    out = func(pd.Series(uniq, dtype=object))
    return pd.Series(np.asarray(out)[codes], index=text.index)


def _parse_timestamps_unique(text: pd.Series) -> pd.DataFrame:
    stripped = text.str.strip()
    has_offset = stripped.str.contains(_OFFSET_RE, regex=True)
    ts = pd.to_datetime(stripped.where(has_offset), format="ISO8601", utc=True, errors="coerce")
    reason = pd.Series(None, index=text.index, dtype=object)
    reason[~has_offset] = "timestamp lacks an explicit UTC offset"
    reason[has_offset & ts.isna()] = "unparseable timestamp"
    ok = ts.notna()
    off_hour = ok & ((ts.dt.minute != 0) | (ts.dt.second != 0) | (ts.dt.microsecond != 0) | (ts.dt.nanosecond != 0))
    reason[off_hour] = "timestamp not on an hour boundary"
    return ts, reason


def _parse_timestamps(text: pd.Series):
    """Return (utc timestamps, reason-per-row or None)."""
    codes, uniq = pd.factorize(text)
    ts_u, reason_u = _parse_timestamps_unique(pd.Series(uniq, dtype=object))
    ts = pd.Series(ts_u.array.take(codes), index=text.index)
    reason = pd.Series(reason_u.to_numpy()[codes], index=text.index, dtype=object)
    return ts, reason


def _to_float(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        return math.nan


def _parse_numeric(text: pd.Series):
    """Return (values, is_empty, is_bad).

    numpy's string-to-float cast is correctly rounded (``pd.to_numeric`` is
    not), so written repr values read back bit-identical.
    """
    raw = text.to_numpy(dtype=object)
    empty = np.array([t.strip() == "" for t in raw], dtype=bool) if len(raw) else np.zeros(0, bool)
    tokens = np.where(empty, "nan", raw)
    try:
        values = tokens.astype(float)
    except ValueError:
        values = _by_unique(pd.Series(tokens, index=text.index), lambda u: u.map(_to_float)).to_numpy(float)
    bad = ~empty & ~np.isfinite(values)
    idx = text.index
    return pd.Series(values, index=idx), pd.Series(empty, index=idx), pd.Series(bad, index=idx)


def _first_reason(reasons: list[pd.Series]) -> pd.Series:
    out = reasons[0].copy()
    for r in reasons[1:]:
        out = out.where(out.notna(), r)
    return out


def _rejects_frame(raw: pd.DataFrame, reason: pd.Series) -> pd.DataFrame:
    bad = reason.notna()
    rows = raw[bad]
    return pd.DataFrame(
        {
            "line": (rows.index + 2).astype(int),
            "reason": reason[bad].astype(str).values,
            "raw": rows.apply(lambda r: ",".join(r.values.astype(str)), axis=1).values
            if len(rows)
            else [],
        }
    )


def parse_unit_hours(source, schema: Mapping[str, str] | None = None):
    """Parse a CEMS-style unit-hour CSV.

    Parameters
    ----------
    source : path, bytes or binary file object
        CSV with a header row.
    schema : mapping, optional
        Logical field -> column name. Defaults to :data:`UNIT_SCHEMA`.

    Returns
    -------
    units : DataFrame
        Columns ``plant_id, unit_id, timestamp (UTC), gross_load, co2_mass,
        heat_input, operating``, sorted by plant, unit and time.
    rejects : DataFrame
        ``line, reason, raw`` for every row that did not yield a record.
    """
    schema = {**UNIT_SCHEMA, **(schema or {})}
    raw = _read_text_table(source)
    _check_columns(raw, schema, "unit-hour table")

    ts, ts_reason = _parse_timestamps(raw[schema["timestamp"]])

    op_text = _by_unique(raw[schema["operating"]], lambda u: u.str.strip().str.lower())
    operating = op_text.isin(_TRUE)
    op_reason = pd.Series(None, index=raw.index, dtype=object)
    op_reason[~(op_text.isin(_TRUE) | op_text.isin(_FALSE))] = "unparseable operating flag"

    id_reason = pd.Series(None, index=raw.index, dtype=object)
    plant_ids = _by_unique(raw[schema["plant_id"]], lambda u: u.str.strip())
    unit_ids = _by_unique(raw[schema["unit_id"]], lambda u: u.str.strip())
    blank_id = (plant_ids == "") | (unit_ids == "")
    id_reason[blank_id] = "empty plant or unit identifier"

    values = {}
    reasons = [id_reason, ts_reason, op_reason]
    for logical in ("gross_load", "co2_mass", "heat_input"):
        v, empty, bad = _parse_numeric(raw[schema[logical]])
        r = pd.Series(None, index=raw.index, dtype=object)
        r[bad] = f"unparseable {logical}"
        r[empty & operating] = f"missing {logical} for operating unit"
        r[~bad & ~empty & (v < 0)] = f"negative {logical}"
        reasons.append(r)
        # offline convention: empty value on a non-operating unit is zero
        values[logical] = v.where(~empty, 0.0)
    r = pd.Series(None, index=raw.index, dtype=object)
    r[~operating & (values["gross_load"] > 0)] = "offline unit reports positive gross load"
    reasons.append(r)

    reason = _first_reason(reasons)
    ok = reason.isna()
    units = pd.DataFrame(
        {
            "plant_id": plant_ids[ok],
            "unit_id": unit_ids[ok],
            "timestamp": ts[ok],
            "gross_load": values["gross_load"][ok],
            "co2_mass": values["co2_mass"][ok],
            "heat_input": values["heat_input"][ok],
            "operating": operating[ok],
        }
    )
    dup = units.duplicated(["plant_id", "unit_id", "timestamp"], keep=False)
    if dup.any():
        keys = units.loc[dup, ["plant_id", "unit_id", "timestamp"]].drop_duplicates()
        listed = [(p, u, t.isoformat()) for p, u, t in keys.itertuples(index=False)]
        shown = "; ".join(f"{p}/{u}@{t}" for p, u, t in listed[:10])
        more = f" (+{len(listed) - 10} more)" if len(listed) > 10 else ""
        raise IntegrityError(f"duplicate (plant, unit, timestamp) keys: {shown}{more}", listed)

    rejects = _rejects_frame(raw, reason)
    if len(rejects):
        log.warning("unit-hour table: %d rows rejected", len(rejects))
    units = units.sort_values(["plant_id", "unit_id", "timestamp"], kind="mergesort").reset_index(drop=True)
    return units, rejects


def unit_records(units: pd.DataFrame) -> list[UnitHourRecord]:
    return [UnitHourRecord(*row) for row in units[list(UNIT_SCHEMA)].itertuples(index=False)]


def parse_region_hours(source, schema: Mapping[str, str] | None = None):
    """Parse an EIA-930-style region-hour CSV; returns ``(table, rejects)``."""
    schema = {**REGION_SCHEMA, **(schema or {})}
    raw = _read_text_table(source)
    _check_columns(raw, schema, "region-hour table")
    ts, ts_reason = _parse_timestamps(raw[schema["timestamp"]])
    id_reason = pd.Series(None, index=raw.index, dtype=object)
    id_reason[raw[schema["region_id"]].str.strip() == ""] = "empty region identifier"
    reasons = [id_reason, ts_reason]
    values = {}
    for logical in REGION_SERIES:
        v, empty, bad = _parse_numeric(raw[schema[logical]])
        r = pd.Series(None, index=raw.index, dtype=object)
        r[bad] = f"unparseable {logical}"
        r[empty] = f"missing {logical}"
        if logical != "net_imports":
            r[~bad & ~empty & (v < 0)] = f"negative {logical}"
        reasons.append(r)
        values[logical] = v
    reason = _first_reason(reasons)
    ok = reason.isna()
    table = pd.DataFrame(
        {"region_id": raw.loc[ok, schema["region_id"]].str.strip(), "timestamp": ts[ok]}
        | {k: v[ok] for k, v in values.items()}
    )
    dup = table.duplicated(["region_id", "timestamp"], keep=False)
    if dup.any():
        keys = table.loc[dup, ["region_id", "timestamp"]].drop_duplicates()
        listed = [(r, t.isoformat()) for r, t in keys.itertuples(index=False)]
        raise IntegrityError(
            "duplicate (region, timestamp) keys: " + "; ".join(f"{r}@{t}" for r, t in listed[:10]), listed
        )
    rejects = _rejects_frame(raw, reason)
    if len(rejects):
        log.warning("region-hour table: %d rows rejected", len(rejects))
    table = table.sort_values(["region_id", "timestamp"], kind="mergesort").reset_index(drop=True)
    return table, rejects


def _normalize_fuel(text: str) -> str:
    key = text.strip().lower()
    if key in _FUEL_ALIASES:
        return _FUEL_ALIASES[key]
    raise SchemaError(f"unknown fuel category {text!r}")


def parse_plants(source) -> dict[str, PlantMeta]:
    """Parse ``plants.csv`` into ``{plant_id: PlantMeta}``.

    A plant may appear on several rows, one per eGRID year; identity columns
    must agree across its rows.
    """
    raw = _read_text_table(source)
    _check_columns(raw, {k: k for k in ("plant_id", "region", "fuel", "nameplate_mw")}, "plant table")
    has_egrid = {"year", "egrid_gen_mwh", "egrid_co2_t"} <= set(raw.columns)
    plants: dict[str, dict] = {}
    for i, row in raw.iterrows():
        pid = row["plant_id"].strip()
        try:
            nameplate = float(row["nameplate_mw"])
        except ValueError:
            raise SchemaError(f"line {i + 2}: unparseable nameplate_mw {row['nameplate_mw']!r}") from None
        region = row["region"].strip().upper()
        ident = (region, _normalize_fuel(row["fuel"]), nameplate)
        entry = plants.setdefault(pid, {"ident": ident, "egrid": {}})
        if entry["ident"] != ident:
            raise IntegrityError(f"plant {pid}: conflicting region/fuel/nameplate across rows", [pid])
        if has_egrid and row["year"].strip():
            try:
                year = int(row["year"])
                gen = float(row["egrid_gen_mwh"])
                co2 = float(row["egrid_co2_t"])
            except ValueError:
                raise SchemaError(f"line {i + 2}: unparseable eGRID fields") from None
            if year in entry["egrid"]:
                raise IntegrityError(f"plant {pid}: duplicate eGRID year {year}", [(pid, year)])
            entry["egrid"][year] = egrid_entry(gen, co2)
    return {
        pid: PlantMeta(pid, *e["ident"], egrid_annual=dict(sorted(e["egrid"].items())))
        for pid, e in sorted(plants.items())
    }


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def format_timestamps(ts: pd.Series) -> pd.Series:
    """ISO-8601 text with explicit offset, e.g. ``2019-01-01T00:00:00-08:00``.

    Accepts a tz-aware series, an object series of tz-aware timestamps (mixed
    offsets allowed) or already formatted text, which passes through.
    """
    ts = pd.Series(ts)
    if isinstance(ts.dtype, pd.DatetimeTZDtype):
        codes, uniq = pd.factorize(ts)
        text = np.array([t.isoformat() for t in uniq], dtype=object)
        return pd.Series(text[codes], index=ts.index)
    return pd.Series([t if isinstance(t, str) else t.isoformat() for t in ts], index=ts.index, dtype=object)


def float_text(values) -> np.ndarray:
    """Shortest round-trip decimal text per value; NaN becomes an empty field."""
    v = np.asarray(values, dtype=float)
    text = np.array(list(map(float.__repr__, v.tolist())), dtype=object)
    text[np.isnan(v)] = ""
    return text


def _write_text_table(columns: Mapping[str, np.ndarray], path) -> None:
    """Write already formatted text columns as CSV (fields must not need quoting)."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for fields in zip(*columns.values()):
            fh.write(",".join(fields))
            fh.write("\n")


def write_unit_hours(units: pd.DataFrame, path) -> None:
    _write_text_table(
        {
            "plant_id": units["plant_id"].astype(str).to_numpy(object),
            "unit_id": units["unit_id"].astype(str).to_numpy(object),
            "timestamp": format_timestamps(units["timestamp"]).to_numpy(object),
            "gross_load_mwh": float_text(units["gross_load"]),
            "co2_tonnes": float_text(units["co2_mass"]),
            "heat_input_mmbtu": float_text(units["heat_input"]),
            "operating": np.where(units["operating"].to_numpy(bool), "1", "0").astype(object),
        },
        path,
    )


def write_region_hours(table: pd.DataFrame, path) -> None:
    cols = {
        "region_id": table["region_id"].astype(str).to_numpy(object),
        "timestamp": format_timestamps(table["timestamp"]).to_numpy(object),
    }
    for k in REGION_SERIES:
        cols[REGION_SCHEMA[k]] = float_text(table[k])
    _write_text_table(cols, path)


def write_plants(metas: Mapping[str, PlantMeta], path) -> None:
    rows = []
    for m in metas.values():
        base = {"plant_id": m.plant_id, "region": m.region, "fuel": m.fuel, "nameplate_mw": m.nameplate_mw}
        if not m.egrid_annual:
            rows.append(base | {"year": "", "egrid_gen_mwh": "", "egrid_co2_t": ""})
        for year, e in m.egrid_annual.items():
            rows.append(base | {"year": year, "egrid_gen_mwh": e.generation_mwh, "egrid_co2_t": e.emissions_t})
    pd.DataFrame(rows, columns=["plant_id", "region", "fuel", "nameplate_mw", "year", "egrid_gen_mwh", "egrid_co2_t"]).to_csv(
        path, index=False, lineterminator="\n"
    )


# ---------------------------------------------------------------------------
# plant aggregation
# ---------------------------------------------------------------------------


def standard_tz(offset_hours: int) -> timezone:
    return timezone(timedelta(hours=offset_hours))


def to_standard_time(ts: pd.Series, offset_hours: int) -> pd.Series:
    """Convert aware timestamps (possibly mixed-offset objects) to a fixed standard offset."""
    if not isinstance(ts.dtype, pd.DatetimeTZDtype):
        ts = pd.to_datetime(ts, utc=True)
    return ts.dt.tz_convert(standard_tz(offset_hours))


def exact_group_sum(codes: np.ndarray, values: np.ndarray, n_groups: int) -> np.ndarray:
    """Correctly rounded per-group sums (result independent of row order).

    ``codes`` must be sorted. Groups of one or two values need at most one
    floating-point addition and are already correctly rounded; larger groups
    go through :func:`math.fsum`.
    """
    out = np.zeros(n_groups)
    if len(codes) == 0:
        return out
    starts = np.flatnonzero(np.r_[True, codes[1:] != codes[:-1]])
    sizes = np.diff(np.r_[starts, len(codes)])
    sums = np.add.reduceat(values, starts)
    for j in np.flatnonzero(sizes > 2):
        s = starts[j]
        sums[j] = math.fsum(values[s : s + sizes[j]])
    out[codes[starts]] = sums
    return out


def _plant_frame(plant_id, timestamps, gen, em, nameplate) -> pd.DataFrame:
    cf = gen / nameplate
    with np.errstate(divide="ignore", invalid="ignore"):
        ei = np.where(gen > 0, em / np.where(gen > 0, gen, 1.0), np.nan)
    return pd.DataFrame(
        {
            "plant_id": plant_id,
            "timestamp": timestamps,
            "generation": gen,
            "emissions": em,
            "capacity_factor": cf,
            "emissions_intensity": ei,
            "over_capacity": cf > 1.0,
        },
        columns=PLANT_HOUR_COLUMNS,
    )


def aggregate_units_to_plant(units: pd.DataFrame, meta: PlantMeta, offset_hours: int | None = None) -> pd.DataFrame:
    """Sum unit rows into one plant-hour series.

    Capacity factor is generation over nameplate x 1 h. Values above 1 are kept
    and flagged in ``over_capacity``. Emissions intensity is NaN when
    generation is zero. If ``offset_hours`` is given, timestamps are moved to
    that fixed standard-time offset.
    """
    if not meta.nameplate_mw > 0:
        raise DomainError(f"plant {meta.plant_id}: nameplate_mw must be > 0")
    if len(units) and not (units["plant_id"] == meta.plant_id).all():
        raise DomainError(f"unit rows do not all belong to plant {meta.plant_id}")
    if len(units) == 0:
        return _plant_frame(meta.plant_id, pd.Series([], dtype="datetime64[ns, UTC]"), np.array([]), np.array([]), meta.nameplate_mw)
    u = units.sort_values(["timestamp", "unit_id"], kind="mergesort")
    codes, uniq = pd.factorize(u["timestamp"], sort=True)
    gen = exact_group_sum(codes, u["gross_load"].to_numpy(float), len(uniq))
    em = exact_group_sum(codes, u["co2_mass"].to_numpy(float), len(uniq))
    ts = pd.Series(uniq)
    if offset_hours is not None:
        ts = to_standard_time(ts, offset_hours)
    return _plant_frame(meta.plant_id, ts.array, gen, em, meta.nameplate_mw)


def aggregate_fleet(units: pd.DataFrame, metas: Mapping[str, PlantMeta], config: Config | None = None) -> pd.DataFrame:
    """Aggregate every plant present in ``units``.

    Timestamps are in the plants' regional standard time when all plants share
    one offset, else in UTC. Units of plants absent from ``metas`` raise.
    """
    config = config or Config()
    unknown = sorted(set(units["plant_id"]) - set(metas))
    if unknown:
        raise IntegrityError(f"unit rows reference plants missing from plant table: {unknown[:10]}", unknown)
    present = sorted(set(units["plant_id"]))
    offsets = {config.offset_hours(metas[p].region) for p in present}
    offset = offsets.pop() if len(offsets) == 1 else 0
    frames = []
    for pid, grp in units.groupby("plant_id", sort=True):
        frames.append(aggregate_units_to_plant(grp, metas[pid], offset))
    if not frames:
        return pd.DataFrame(columns=PLANT_HOUR_COLUMNS)
    return pd.concat(frames, ignore_index=True)


# ---------------------------------------------------------------------------
# calendar alignment
# ---------------------------------------------------------------------------


@dataclass
class AlignedDataset:
    """Plant and region hour tables for one analysis region, on its standard-time clock.

    ``region_hours`` holds the region's own series and its trading partners'
    series (long format, keyed by ``region_id``); hours of excluded days are
    removed from it. ``plant_hours`` covers every hour of the span for every
    plant in the region.
    """

    region: str
    offset_hours: int
    span: tuple[date, date]
    plant_hours: pd.DataFrame
    region_hours: pd.DataFrame
    excluded_days: list[date]
    ledger: pd.DataFrame
    metas: dict[str, PlantMeta]
    own_id: str
    partner_ids: list[str]

    def included_days(self) -> list[date]:
        excluded = set(self.excluded_days)
        n = (self.span[1] - self.span[0]).days + 1
        return [d for d in (self.span[0] + timedelta(days=i) for i in range(n)) if d not in excluded]


def hour_grid(span: tuple[date, date], offset_hours: int) -> pd.DatetimeIndex:
    start = pd.Timestamp(span[0]).tz_localize(standard_tz(offset_hours))
    end = pd.Timestamp(span[1]).tz_localize(standard_tz(offset_hours)) + pd.Timedelta(hours=23)
    return pd.date_range(start, end, freq="h")


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges of consecutive True values."""
    padded = np.r_[False, mask, False].astype(int)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2], edges[1::2]))


def fill_series_gaps(values: np.ndarray, max_gap: int):
    """Linearly interpolate NaN runs of length <= ``max_gap`` bounded on both sides.

    Returns ``(filled, unfillable_runs)``; unfillable runs stay NaN.
    """
    out = values.astype(float).copy()
    bad = []
    for a, b in _runs(np.isnan(out)):
        if b - a <= max_gap and a > 0 and b < len(out):
            left, right = out[a - 1], out[b]
            steps = b - a + 1
            for k in range(a, b):
                out[k] = left + (right - left) * (k - a + 1) / steps
        else:
            bad.append((a, b))
    return out, bad


def align_calendars(
    plant_hours: pd.DataFrame,
    region_hours: pd.DataFrame,
    region: str,
    span: tuple[date, date],
    metas: Mapping[str, PlantMeta],
    config: Config | None = None,
) -> AlignedDataset:
    """Restrict, regularize and gap-fill data for one analysis region.

    Region series: gaps up to ``max_interp_gap_hours`` are linearly
    interpolated; longer (or unbounded) gaps exclude every day they touch; a
    series missing more than ``max_missing_fraction`` of the span's hours is
    fatal. Plant hours not reported are treated as offline (zero generation
    and emissions).
    """
    config = config or Config()
    if span[1] < span[0]:
        raise DomainError(f"empty span {span}")
    offset = config.offset_hours(region)
    grid = hour_grid(span, offset)
    own_id = config.ba_id(region)
    partner_ids = list(config.partners.get(region, []))

    rh = region_hours.copy()
    rh["timestamp"] = to_standard_time(rh["timestamp"], offset)
    available = set(rh["region_id"])
    if own_id not in available:
        raise DataQualityError(f"region series {own_id!r} absent: 100% of hours missing in span")
    for pid in partner_ids:
        if pid not in available:
            raise ConfigError(f"trading partner series {pid!r} for {region} not found in region table")

    ledger_rows = []
    excluded: set[date] = set()
    filled_frames = []
    for rid in [own_id, *partner_ids]:
        s = rh[rh["region_id"] == rid].set_index("timestamp")[REGION_SERIES].reindex(grid)
        missing = s.isna().any(axis=1).to_numpy()
        frac = missing.mean()
        if frac > config.max_missing_fraction:
            raise DataQualityError(
                f"region series {rid!r} is missing {frac:.1%} of hours in span "
                f"(limit {config.max_missing_fraction:.0%})"
            )
        # a row rejected at parse time is missing as a whole hour
        s.loc[missing] = np.nan
        filled = {}
        for col in REGION_SERIES:
            filled[col], bad = fill_series_gaps(s[col].to_numpy(), config.max_interp_gap_hours)
        interpolated = missing.copy()
        for a, b in _runs(missing):
            if b - a <= config.max_interp_gap_hours and a > 0 and b < len(grid):
                continue
            interpolated[a:b] = False
            days = sorted({t.date() for t in grid[a:b]})
            reason = "gap at span edge" if a == 0 or b == len(grid) else f"gap of {b - a} hours"
            for d in days:
                excluded.add(d)
                ledger_rows.append({"region_id": rid, "date": d.isoformat(), "reason": reason, "missing_hours": int(b - a)})
        frame = pd.DataFrame({"region_id": rid, "timestamp": grid} | filled)
        frame["interpolated"] = interpolated
        filled_frames.append(frame)

    region_out = pd.concat(filled_frames, ignore_index=True)
    if excluded:
        keep = ~region_out["timestamp"].dt.date.isin(excluded)
        region_out = region_out[keep].reset_index(drop=True)

    region_metas = {pid: m for pid, m in metas.items() if m.region == region}
    ph = plant_hours[plant_hours["plant_id"].isin(region_metas)].copy()
    ph["timestamp"] = to_standard_time(ph["timestamp"], offset)
    frames = []
    for pid, meta in sorted(region_metas.items()):
        p = ph[ph["plant_id"] == pid].set_index("timestamp").reindex(grid)
        gen = p["generation"].fillna(0.0).to_numpy(float)
        em = p["emissions"].fillna(0.0).to_numpy(float)
        f = _plant_frame(pid, grid, gen, em, meta.nameplate_mw)
        f["filled"] = p["generation"].isna().to_numpy()
        frames.append(f)
    plants_out = (
        pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=PLANT_HOUR_COLUMNS + ["filled"])
    )
    ledger = pd.DataFrame(ledger_rows, columns=["region_id", "date", "reason", "missing_hours"])
    ledger = ledger.sort_values(["date", "region_id"], kind="mergesort").reset_index(drop=True)
    return AlignedDataset(
        region=region,
        offset_hours=offset,
        span=span,
        plant_hours=plants_out,
        region_hours=region_out,
        excluded_days=sorted(excluded),
        ledger=ledger,
        metas=dict(region_metas),
        own_id=own_id,
        partner_ids=partner_ids,
    )


def infer_span(plant_hours: pd.DataFrame, region_hours: pd.DataFrame, offset_hours: int) -> tuple[date, date]:
    ts = pd.concat(
        [to_standard_time(plant_hours["timestamp"], offset_hours), to_standard_time(region_hours["timestamp"], offset_hours)]
    )
    if ts.empty:
        raise DataQualityError("no timestamps to infer a span from")
    return ts.min().date(), ts.max().date()


# ---------------------------------------------------------------------------
# persistence of aligned datasets
# ---------------------------------------------------------------------------


def save_aligned(ds: AlignedDataset, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    ph = ds.plant_hours.copy()
    ph["timestamp"] = format_timestamps(ph["timestamp"])
    rh = ds.region_hours.copy()
    rh["timestamp"] = format_timestamps(rh["timestamp"])
    paths = [d / "plant_hours.csv", d / "region_hours.csv", d / "exclusions.csv"]
    ph.to_csv(paths[0], index=False, lineterminator="\n")
    rh.to_csv(paths[1], index=False, lineterminator="\n")
    ds.ledger.to_csv(paths[2], index=False, lineterminator="\n")
    return paths


def load_aligned(directory, region: str, metas: Mapping[str, PlantMeta], config: Config | None = None) -> AlignedDataset:
    config = config or Config()
    d = Path(directory)
    for name in ("plant_hours.csv", "region_hours.csv", "exclusions.csv"):
        if not (d / name).exists():
            raise MissingInputError(f"aligned dataset incomplete: {d / name} not found")
    offset = config.offset_hours(region)
    tz = standard_tz(offset)
    ph = pd.read_csv(d / "plant_hours.csv", dtype={"plant_id": str}, float_precision="round_trip")
    ph["timestamp"] = pd.to_datetime(ph["timestamp"], format="ISO8601", utc=True).dt.tz_convert(tz)
    rh = pd.read_csv(d / "region_hours.csv", dtype={"region_id": str}, float_precision="round_trip")
    rh["timestamp"] = pd.to_datetime(rh["timestamp"], format="ISO8601", utc=True).dt.tz_convert(tz)
    ledger = pd.read_csv(d / "exclusions.csv", dtype=str, keep_default_na=False)
    excluded = sorted({date.fromisoformat(x) for x in ledger["date"]}) if len(ledger) else []
    ts = pd.concat([ph["timestamp"], rh["timestamp"]])
    if ts.empty:
        raise DataQualityError(f"aligned dataset {d} is empty")
    span = (ts.min().date(), ts.max().date())
    if excluded:
        span = (min(span[0], excluded[0]), max(span[1], excluded[-1]))
    own_id = config.ba_id(region)
    return AlignedDataset(
        region=region,
        offset_hours=offset,
        span=span,
        plant_hours=ph,
        region_hours=rh,
        excluded_days=excluded,
        ledger=ledger,
        metas={k: m for k, m in metas.items() if m.region == region},
        own_id=own_id,
        partner_ids=list(config.partners.get(region, [])),
    )


def plants_in(metas: Mapping[str, PlantMeta], region: str, fuels: Iterable[str] | None = None) -> list[str]:
    fuels = set(fuels) if fuels is not None else None
    return sorted(pid for pid, m in metas.items() if m.region == region and (fuels is None or m.fuel in fuels))
