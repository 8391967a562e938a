"""Command-line entry point.

Each subcommand reads files, writes files and a manifest next to them, and
exits 0 on success. Failures print one line ``ErrorClass: message`` on stderr
and exit with the code of the error class (see ``--help``).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from datetime import date
from pathlib import Path

import pandas as pd

from . import __version__
from .config import Config, load_config
from .data import (
    AlignedDataset,
    aggregate_fleet,
    align_calendars,
    infer_span,
    load_aligned,
    parse_plants,
    parse_region_hours,
    parse_unit_hours,
    plants_in,
    save_aligned,
    write_plants,
)
from .displacement import displacement_reports
from .errors import EXIT_CODES, ConfigError, MissingInputError, PipelineError, SchemaError
from .fe import SPEC_IDS, FitResult, coefficient_distribution, design_spec, fit_panel, fit_plants_hourly
from .metrics import (
    conditional_mean_ei,
    ei_cf_curve,
    fleet_summary,
    hourly_profile,
    intra_hour_ramp,
    daily_ramp,
    plant_annual,
)
from .panel import build_daily_panel, build_hourly_design, log_transform
from .report import RunManifest, fit_long, fit_table, write_csv, write_json
from .scenarios import compare_annual_cems_egrid, fleet_scenarios, region_scenario_rollup
from .synth import DgpConfig, generate

log = logging.getLogger("thermal_displacement")

DEPENDENT_CHOICES = ("generation", "emissions", "intensity")
ANALYSIS_REGIONS = ("CAISO", "ERCOT")


def _manifest(command: str, config: Config) -> RunManifest:
    cfg = config.to_dict()
    cfg.pop("threads", None)
    return RunManifest(command=command, config_digest=config.digest(), config=cfg)


def _csv_list(text: str | None, allowed=None) -> list[str]:
    items = [t.strip() for t in (text or "").split(",") if t.strip()]
    if allowed is not None:
        bad = [t for t in items if t not in allowed]
        if bad:
            raise ConfigError(f"unknown values {bad}; expected any of {list(allowed)}")
    return items


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingInputError(f"required input not found: {path}")
    return path


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(out: Path, dgp: DgpConfig, config: Config) -> RunManifest:
    m = _manifest("synth", config)
    m.counters["dgp"] = {"seed": dgp.seed, "n_plants": dgp.n_plants, "days": dgp.days, "noise_sigma": dgp.noise_sigma}
    with m.stage("generate"):
        for p in generate(dgp, out):
            m.add_output(p)
    m.write(out / "manifest_synth.json")
    return m


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


def _region_span(plant_hours, region_hours, region, metas, config) -> tuple[date, date]:
    if config.span_start and config.span_end:
        return date.fromisoformat(config.span_start), date.fromisoformat(config.span_end)
    ids = {config.ba_id(region), *config.partners.get(region, [])}
    ph = plant_hours[plant_hours["plant_id"].isin(plants_in(metas, region))]
    rh = region_hours[region_hours["region_id"].isin(ids)]
    lo, hi = infer_span(ph if len(ph) else plant_hours.iloc[:0], rh, config.offset_hours(region))
    if config.span_start:
        lo = date.fromisoformat(config.span_start)
    if config.span_end:
        hi = date.fromisoformat(config.span_end)
    return lo, hi


def cmd_ingest(units_path: Path, plants_path: Path, series_path: Path, out: Path, config: Config, regions=None) -> RunManifest:
    m = _manifest("ingest", config)
    out.mkdir(parents=True, exist_ok=True)
    for p in (units_path, plants_path, series_path):
        m.add_input(_require(p))
    with m.stage("parse"):
        metas = parse_plants(plants_path)
        units, unit_rejects = parse_unit_hours(units_path)
        series, series_rejects = parse_region_hours(series_path)
    with m.stage("aggregate"):
        plant_hours = aggregate_fleet(units, metas, config)
    m.add_output(write_csv(unit_rejects, out / "rejects_units.csv"))
    m.add_output(write_csv(series_rejects, out / "rejects_region.csv"))
    write_plants(metas, out / "plants.csv")
    m.add_output(out / "plants.csv")
    m.counters.update(
        {
            "unit_rows": len(units),
            "unit_rows_rejected": len(unit_rejects),
            "region_rows": len(series),
            "region_rows_rejected": len(series_rejects),
            "plants": len(metas),
            "over_capacity_hours": int(plant_hours["over_capacity"].sum()) if len(plant_hours) else 0,
        }
    )
    if regions is None:
        regions = [r for r in ANALYSIS_REGIONS if plants_in(metas, r)]
    for region in regions:
        with m.stage(f"align_{region}"):
            span = _region_span(plant_hours, series, region, metas, config)
            ds = align_calendars(plant_hours, series, region, span, metas, config)
            for p in save_aligned(ds, out / region):
                m.add_output(p)
        m.counters[region] = {
            "span": [span[0].isoformat(), span[1].isoformat()],
            "plants": len(ds.metas),
            "excluded_days": len(ds.excluded_days),
            "interpolated_hours": int(ds.region_hours["interpolated"].sum()),
            "plant_hours_filled": int(ds.plant_hours["filled"].sum()) if len(ds.plant_hours) else 0,
        }
    m.write(out / "manifest_ingest.json")
    return m


def _load_dataset(data_dir: Path, region: str, config: Config) -> AlignedDataset:
    metas = parse_plants(_require(data_dir / "plants.csv"))
    return load_aligned(_require(data_dir / region), region, metas, config)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def cmd_metrics(data_dir: Path, region: str, out: Path, config: Config, years=None, fuels=None) -> RunManifest:
    m = _manifest(f"metrics {region}", config)
    out.mkdir(parents=True, exist_ok=True)
    ds = _load_dataset(data_dir, region, config)
    for f in ("plant_hours.csv", "region_hours.csv", "exclusions.csv"):
        m.add_input(data_dir / region / f)
    ph = ds.plant_hours
    years = years or sorted(set(ph["timestamp"].dt.year))
    fuels = fuels or [f for f in ("NaturalGas", "Coal") if plants_in(ds.metas, region, [f])]
    width = config.cf_bin_width

    binned, p10, ramps, steps = [], [], [], []
    with m.stage("plants"):
        for pid, s in ph.groupby("plant_id", sort=True):
            curve = ei_cf_curve(s, width)
            b = curve.binned.copy()
            b.insert(0, "plant_id", pid)
            binned.append(b)
            row = {"plant_id": pid, "fuel": ds.metas[pid].fuel, "p10_cf": curve.p10_cf, "operating_hours": len(curve.points)}
            for thr, direction, key in ((0.3, ">", "mean_ei_cf_above_0.3"), (0.05, "<", "mean_ei_cf_below_0.05")):
                try:
                    row[key] = conditional_mean_ei(s, thr, direction)
                except PipelineError:
                    row[key] = math.nan
            p10.append(row)
            dr = daily_ramp(s).reset_index()
            dr.insert(0, "plant_id", pid)
            dr["date"] = dr["date"].astype(str)
            ramps.append(dr)
            ih = intra_hour_ramp(s)
            steps.append(pd.DataFrame({"plant_id": pid, "timestamp": ih.index, "intra_hour_ramp": ih.to_numpy()}))
    outputs = {
        f"ei_cf_binned_{region}.csv": pd.concat(binned, ignore_index=True) if binned else pd.DataFrame(),
        f"ei_cf_summary_{region}.csv": pd.DataFrame(p10),
        f"daily_ramp_{region}.csv": pd.concat(ramps, ignore_index=True) if ramps else pd.DataFrame(),
    }
    if steps:
        st = pd.concat(steps, ignore_index=True)
        st["timestamp"] = st["timestamp"].map(lambda t: t.isoformat())
        outputs[f"intra_hour_ramp_{region}.csv"] = st
    with m.stage("fleet"):
        for fuel in fuels:
            prof = hourly_profile(ph, ds.metas, region, fuel)
            prof["ei_method"] = prof.attrs.get("ei_method", "")
            outputs[f"hourly_profile_{region}_{fuel}.csv"] = prof
        summaries = []
        for year in years:
            outputs[f"plant_annual_{region}_{year}.csv"] = plant_annual(ph, ds.metas, year)
            for fuel in fuels:
                fs = fleet_summary(ph, ds.metas, region, fuel, year)
                d = fs.__dict__.copy()
                d["notes"] = "; ".join(fs.notes)
                summaries.append(d)
        outputs[f"fleet_summary_{region}.csv"] = pd.DataFrame(summaries)
    for name, df in outputs.items():
        m.add_output(write_csv(df, out / name))
    m.counters["plants"] = len(p10)
    m.write(out / f"manifest_metrics_{region}.json")
    return m


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


def cmd_scenarios(data_dir: Path, region: str, out: Path, config: Config, years=None) -> RunManifest:
    m = _manifest(f"scenarios {region}", config)
    out.mkdir(parents=True, exist_ok=True)
    ds = _load_dataset(data_dir, region, config)
    m.add_input(data_dir / region / "plant_hours.csv")
    ph = ds.plant_hours
    years = years or sorted(set(ph["timestamp"].dt.year))
    rollups = []
    for year in years:
        with m.stage(f"year_{year}"):
            results = fleet_scenarios(ph, ds.metas, year, config.egrid_mode)
            m.add_output(write_csv(pd.DataFrame([r.to_row() for r in results]), out / f"scenarios_{region}_{year}.csv"))
            roll = region_scenario_rollup(results, region, year)
            roll["egrid_mode"] = config.egrid_mode
            rollups.append(roll)
            m.add_output(write_json(roll, out / f"rollup_{region}_{year}.json"))
            cmp_df, diags = compare_annual_cems_egrid(ph, ds.metas, year)
            m.add_output(write_csv(cmp_df, out / f"cems_egrid_{region}_{year}.csv"))
            m.counters[str(year)] = {"plants": len(results), "egrid_missing": len(diags)}
    m.write(out / f"manifest_scenarios_{region}.json")
    return m


# ---------------------------------------------------------------------------
# panel
# ---------------------------------------------------------------------------


def _date_text(df: pd.DataFrame) -> pd.DataFrame:
    df = df.copy()
    if "date" in df:
        df["date"] = df["date"].astype(str)
    if "timestamp" in df:
        df["timestamp"] = df["timestamp"].map(lambda t: t.isoformat())
    return df


def cmd_panel(data_dir: Path, region: str, out: Path, config: Config, hourly_plants=None) -> RunManifest:
    m = _manifest(f"panel {region}", config)
    out.mkdir(parents=True, exist_ok=True)
    ds = _load_dataset(data_dir, region, config)
    for f in ("plant_hours.csv", "region_hours.csv", "exclusions.csv"):
        m.add_input(data_dir / region / f)
    with m.stage("daily"):
        panel = build_daily_panel(ds, config=config)
    m.add_output(write_csv(_date_text(panel), out / f"panel_{region}_daily.csv"))
    m.counters["rows"] = len(panel)
    m.counters["plants"] = int(panel["plant_id"].nunique())
    m.counters["zero_generation_rows"] = int(panel["zero_generation"].sum())
    m.counters["excluded_days"] = len(ds.excluded_days)
    for policy in ("drop", "floor"):
        _, rep = log_transform(panel, policy, config.log_floor)
        m.counters[f"log_transform_{policy}"] = rep
    if hourly_plants:
        pids = plants_in(ds.metas, region, config.panel_fuels) if hourly_plants == ["all"] else hourly_plants
        with m.stage("hourly"):
            for pid in pids:
                d = build_hourly_design(ds, pid, config)
                m.add_output(write_csv(_date_text(d), out / f"design_{pid}_hourly.csv"))
        m.counters["hourly_designs"] = len(pids)
    m.write(out / f"manifest_panel_{region}.json")
    return m


def _read_panel(path: Path) -> pd.DataFrame:
    return pd.read_csv(_require(path), dtype={"plant_id": str}, float_precision="round_trip")


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def cmd_fit(panel_dir: Path, region: str, specs, dependents, out: Path, config: Config) -> RunManifest:
    m = _manifest(f"fit {region}", config)
    out.mkdir(parents=True, exist_ok=True)
    path = panel_dir / f"panel_{region}_daily.csv"
    m.add_input(_require(path))
    rows, rep = log_transform(_read_panel(path), config.zero_policy, config.log_floor)
    m.counters["log_transform"] = rep
    long_rows = []
    for spec_id in specs:
        fits = []
        for dep in dependents:
            with m.stage(f"{spec_id}_{dep}"):
                fit = fit_panel(
                    rows,
                    design_spec(spec_id, dep),
                    region,
                    se=config.se,
                    tol=config.absorb_tol,
                    max_sweeps=config.absorb_max_sweeps,
                    collinear_tol=config.collinear_tol,
                )
            fits.append(fit)
            m.add_output(write_json(fit.to_dict(), out / f"fit_{region}_{spec_id}_{dep}.json"))
            if fit.collinear_dropped:
                m.notes.append(f"{spec_id}/{dep}: collinear regressors reported as NaN: {fit.collinear_dropped}")
        m.add_output(write_csv(fit_table(fits), out / f"table_{region}_{spec_id}.csv"))
        long_rows.append(fit_long(fits))
    m.add_output(write_csv(pd.concat(long_rows, ignore_index=True), out / f"coefficients_{region}.csv"))
    m.write(out / f"manifest_fit_{region}.json")
    return m


def cmd_fit_hourly(panel_dir: Path, region: str, specs, dependents, out: Path, config: Config) -> RunManifest:
    m = _manifest(f"fit-hourly {region}", config)
    out.mkdir(parents=True, exist_ok=True)
    files = sorted(panel_dir.glob("design_*_hourly.csv"))
    if not files:
        raise MissingInputError(f"no hourly designs (design_<plant>_hourly.csv) in {panel_dir}")
    designs, reports = {}, {}
    for f in files:
        m.add_input(f)
        raw = _read_panel(f)
        if raw.empty:
            continue
        pid = str(raw["plant_id"].iloc[0])
        designs[pid], reports[pid] = log_transform(raw, config.zero_policy, config.log_floor)
    m.counters["plants"] = len(designs)
    m.counters["rows_removed"] = {p: r["removed"] for p, r in sorted(reports.items())}
    for spec_id in specs:
        for dep in dependents:
            spec = design_spec(spec_id, dep)
            with m.stage(f"{spec_id}_{dep}"):
                fits, skipped = fit_plants_hourly(
                    designs,
                    spec,
                    region,
                    config.min_plant_hours,
                    threads=config.n_threads(),
                    tol=config.absorb_tol,
                    max_sweeps=config.absorb_max_sweeps,
                    collinear_tol=config.collinear_tol,
                )
            m.counters[f"{spec_id}_{dep}_skipped"] = skipped
            m.add_output(write_csv(fit_long(fits), out / f"plant_fits_{region}_{spec_id}_{dep}.csv"))
            if not fits:
                continue
            for reg in ("G", "S", "W"):
                if reg not in spec.regressors:
                    continue
                dist = coefficient_distribution(fits, reg, references=config.reference_fractions)
                stem = f"coef_dist_{region}_{spec_id}_{dep}_{reg}"
                m.add_output(write_csv(dist.histogram, out / f"{stem}_hist.csv"))
                m.add_output(write_csv(dist.kde, out / f"{stem}_kde.csv"))
                summary = {
                    "regressor": reg,
                    "n": dist.n,
                    "mean": dist.mean,
                    "sd": dist.sd,
                    "quantiles": {f"{q:g}": v for q, v in dist.quantiles.items()},
                    "references": dist.references,
                }
                m.add_output(write_json(summary, out / f"{stem}_summary.json"))
    m.write(out / f"manifest_fit_hourly_{region}.json")
    return m


# ---------------------------------------------------------------------------
# displace
# ---------------------------------------------------------------------------


def _read_fit(path: Path) -> FitResult:
    try:
        return FitResult.from_dict(json.loads(_require(path).read_text()))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from None


def cmd_displace(emissions: Path, intensity: Path, out: Path, config: Config, resources=None) -> tuple[RunManifest, list]:
    m = _manifest("displace", config)
    out.mkdir(parents=True, exist_ok=True)
    m.add_input(emissions)
    m.add_input(intensity)
    em, ei = _read_fit(emissions), _read_fit(intensity)
    reports = displacement_reports(em, ei)
    if resources:
        reports = [r for r in reports if r.resource in resources]
    doc = {
        "region": em.region,
        "spec_id": em.spec_id,
        "reports": [r.to_dict() for r in reports],
    }
    if config.reference_fractions:
        doc["reference_fractions"] = config.reference_fractions
    stem = f"displacement_{em.region or 'region'}_{em.spec_id}"
    m.add_output(write_json(doc, out / f"{stem}.json"))
    m.write(out / f"manifest_{stem}.json")
    return m, reports


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(out: Path, config: Config, data_dir: Path | None, dgp: DgpConfig | None, specs, dependents, hourly: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if data_dir is None:
        data_dir = out / "synth"
        cmd_synth(data_dir, dgp or DgpConfig(), config)
    ingest = out / "ingest"
    cmd_ingest(data_dir / "units.csv", data_dir / "plants.csv", data_dir / "region.csv", ingest, config)
    metas = parse_plants(ingest / "plants.csv")
    regions = [r for r in ANALYSIS_REGIONS if plants_in(metas, r, config.panel_fuels)]
    for region in regions:
        cmd_metrics(ingest, region, out / "metrics", config)
        cmd_scenarios(ingest, region, out / "scenarios", config)
        cmd_panel(ingest, region, out / "panel", config, ["all"] if hourly else None)
        cmd_fit(out / "panel", region, specs, dependents, out / "fits", config)
        if hourly:
            cmd_fit_hourly(out / "panel", region, ["M1"], dependents, out / "fits_hourly" / region, config)
        if {"emissions", "intensity"} <= set(dependents):
            for spec_id in specs:
                fits = out / "fits"
                cmd_displace(
                    fits / f"fit_{region}_{spec_id}_emissions.json",
                    fits / f"fit_{region}_{spec_id}_intensity.json",
                    out / "displacement",
                    config,
                )


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _exit_code_table() -> str:
    return "exit codes:\n" + "\n".join(f"  {k:>2}  {v}" for k, v in EXIT_CODES.items())


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(
        prog="thermal-displacement",
        description="Thermal-plant emissions under variable renewables: ingest, metrics, scenarios, panel fits, displacement.",
        epilog=_exit_code_table(),
        formatter_class=fmt,
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", type=Path, help="JSON configuration file; flags override its values")
    p.add_argument("--threads", type=int, help="worker threads for per-plant work (default: all cores)")
    p.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_, epilog=_exit_code_table(), formatter_class=fmt)

    s = add("synth", "write a synthetic input bundle with planted coefficients")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--dgp-config", type=Path, help="JSON file of generator settings")
    s.add_argument("--seed", type=int)
    s.add_argument("--plants", type=int, help="modelled plants per region")
    s.add_argument("--days", type=int)
    s.add_argument("--noise", type=float, help="log-noise standard deviation")

    s = add("ingest", "parse, aggregate and align units.csv, plants.csv and region.csv")
    s.add_argument("inputs", nargs="?", type=Path, help="directory holding units.csv, plants.csv, region.csv")
    s.add_argument("--units", type=Path)
    s.add_argument("--plants", type=Path)
    s.add_argument("--series", type=Path, help="region-hour CSV")
    s.add_argument("--region", help="comma-separated analysis regions (default: all with plants)")
    s.add_argument("--out", type=Path, required=True)

    for name, help_ in (("metrics", "EI-vs-CF curves, ramps, hourly profiles and fleet summaries"),
                        ("scenarios", "high/low/eGRID bounding emissions scenarios")):
        s = add(name, help_)
        s.add_argument("--data", type=Path, required=True, help="ingest output directory")
        s.add_argument("--region", required=True)
        s.add_argument("--years", help="comma-separated years (default: all)")
        s.add_argument("--out", type=Path, required=True)

    s = add("panel", "daily plant panel and optional hourly plant designs (levels)")
    s.add_argument("--data", type=Path, required=True, help="ingest output directory")
    s.add_argument("--region", required=True)
    s.add_argument("--hourly", help="comma-separated plant ids for hourly designs, or 'all'")
    s.add_argument("--leave-one-out", action="store_true", help="exclude each plant from its own G")
    s.add_argument("--out", type=Path, required=True)

    s = add("fit", "fixed-effects log-log regressions on a panel")
    s.add_argument("--panel", type=Path, required=True, help="panel output directory")
    s.add_argument("--region", required=True)
    s.add_argument("--spec", default="M1", help="comma-separated spec ids M1..M9 or 'all'")
    s.add_argument("--dep", default="generation,emissions,intensity", help="comma-separated dependents")
    s.add_argument("--se", choices=("hc1", "cluster"), help="primary standard errors (both are reported)")
    s.add_argument("--zero-policy", choices=("drop", "floor"))
    s.add_argument("--hourly", action="store_true", help="per-plant hourly fits from design_<plant>_hourly.csv")
    s.add_argument("--out", type=Path, required=True)

    s = add("displace", "displacement fractions from an emissions fit and an intensity fit")
    s.add_argument("--emissions", type=Path, required=True)
    s.add_argument("--intensity", type=Path, required=True)
    s.add_argument("--resource", help="Solar, Wind or both (default)")
    s.add_argument("--out", type=Path, required=True)

    s = add("run", "full pipeline (synthetic data unless --data is given)")
    s.add_argument("--data", type=Path, help="directory holding units.csv, plants.csv, region.csv")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--plants", type=int)
    s.add_argument("--days", type=int)
    s.add_argument("--dgp-config", type=Path)
    s.add_argument("--spec", default="all")
    s.add_argument("--dep", default="generation,emissions,intensity")
    s.add_argument("--se", choices=("hc1", "cluster"))
    s.add_argument("--zero-policy", choices=("drop", "floor"))
    s.add_argument("--hourly", action="store_true", help="also build hourly designs and per-plant fits")
    s.add_argument("--out", type=Path, required=True)
    return p


def _dgp_from_args(args) -> DgpConfig:
    base = DgpConfig.from_json(args.dgp_config) if getattr(args, "dgp_config", None) else DgpConfig()
    over = {}
    for attr, key in (("seed", "seed"), ("plants", "n_plants"), ("days", "days"), ("noise", "noise_sigma")):
        v = getattr(args, attr, None)
        if v is not None:
            over[key] = v
    if over:
        base = DgpConfig(**{**base.__dict__, **over})
    return base


def _specs(text: str) -> list[str]:
    if text.strip().lower() == "all":
        return list(SPEC_IDS)
    return _csv_list(text, SPEC_IDS)


def _years(text) -> list[int] | None:
    years = [int(y) for y in _csv_list(text)]
    return years or None


def dispatch(args) -> int:
    config = load_config(
        args.config,
        threads=args.threads,
        se=getattr(args, "se", None),
        zero_policy=getattr(args, "zero_policy", None),
        leave_one_out=True if getattr(args, "leave_one_out", False) else None,
    )
    cmd = args.command
    if cmd == "synth":
        cmd_synth(args.out, _dgp_from_args(args), config)
    elif cmd == "ingest":
        d = args.inputs
        units = args.units or (d / "units.csv" if d else None)
        plants = args.plants or (d / "plants.csv" if d else None)
        series = args.series or (d / "region.csv" if d else None)
        if not (units and plants and series):
            raise MissingInputError("ingest needs an input directory or --units, --plants and --series")
        regions = _csv_list(args.region, ANALYSIS_REGIONS) or None
        cmd_ingest(units, plants, series, args.out, config, regions)
    elif cmd == "metrics":
        cmd_metrics(args.data, args.region, args.out, config, _years(args.years))
    elif cmd == "scenarios":
        cmd_scenarios(args.data, args.region, args.out, config, _years(args.years))
    elif cmd == "panel":
        hourly = _csv_list(args.hourly) if args.hourly else None
        cmd_panel(args.data, args.region, args.out, config, hourly)
    elif cmd == "fit":
        deps = _csv_list(args.dep, DEPENDENT_CHOICES)
        if args.hourly:
            cmd_fit_hourly(args.panel, args.region, _specs(args.spec), deps, args.out, config)
        else:
            cmd_fit(args.panel, args.region, _specs(args.spec), deps, args.out, config)
    elif cmd == "displace":
        _, reports = cmd_displace(args.emissions, args.intensity, args.out, config, _csv_list(args.resource) or None)
        for r in reports:
            print(f"{r.region or '-'} {r.resource}: fraction {r.fraction:.4f} (emissions {r.beta_emissions}, intensity {r.beta_intensity})")
    elif cmd == "run":
        dgp = _dgp_from_args(args) if args.data is None else None
        cmd_run(args.out, config, args.data, dgp, _specs(args.spec), _csv_list(args.dep, DEPENDENT_CHOICES), args.hourly)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    try:
        return dispatch(args)
    except PipelineError as exc:
        msg = " ".join(str(exc).split())
        print(f"{type(exc).__name__}: {msg}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
