"""Synthetic regions and fleets with planted log-log coefficients.

Daily outcomes follow the panel model exactly::

    ln y[p, d] = c + a[p] + m[month] + t[year] + am[p, month]
                 + sum_k beta[k] * ln x[k, d] + e[p, d]

for generation and for intensity (emissions = generation x intensity, so
its coefficients are the sum of the two). Region series are drawn hourly
first and their daily sums fixed before outcomes are computed, so the daily
covariates the panel builder recomputes from the CSV files equal the ones the
outcomes were built from.

Fleet thermal generation ``G`` is drawn exogenously; the part not produced by
the modelled (gas and coal) plants is assigned to a few plants of fuel
``Other`` that count towards ``G`` but are not in the panel.

Randomness comes from numpy's PCG64 bit generator seeded with ``seed``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from .config import DEFAULT_PARTNERS, DEFAULT_STANDARD_OFFSETS
from .data import (
    PlantMeta,
    egrid_entry,
    format_timestamps,
    standard_tz,
    write_plants,
    write_region_hours,
    write_unit_hours,
)
from .errors import ConfigError, MissingInputError
from .panel import wind_ramp

REGRESSORS = ("G", "S", "W", "W_ramp", "X_solar_ext", "X_wind_ext", "X_demand_ext", "Y_hydro", "Y_imports")

# Generation and intensity elasticities. Thermal, solar, wind, ramp and
# partner solar/wind values follow reference CAISO/ERCOT magnitudes; the
# partner-demand, hydro and import values are small invented numbers.
DEFAULT_PLANTED = {
    "CAISO": {
        "generation": {"G": 2.80, "S": -0.22, "W": -0.20, "W_ramp": 0.12, "X_solar_ext": 0.004,
                       "X_wind_ext": -0.02, "X_demand_ext": 0.05, "Y_hydro": -0.03, "Y_imports": -0.04},
        "intensity": {"G": -0.14, "S": 0.02, "W": 0.01, "W_ramp": -0.004, "X_solar_ext": -0.001,
                      "X_wind_ext": 0.002, "X_demand_ext": 0.01, "Y_hydro": 0.005, "Y_imports": 0.003},
    },
    "ERCOT": {
        "generation": {"G": 1.78, "S": -0.03, "W": -0.33, "W_ramp": 0.07, "X_solar_ext": 0.05,
                       "X_wind_ext": -0.03, "X_demand_ext": 0.04, "Y_hydro": -0.02, "Y_imports": -0.03},
        "intensity": {"G": -0.11, "S": 0.003, "W": 0.03, "W_ramp": 0.001, "X_solar_ext": -0.001,
                      "X_wind_ext": -0.002, "X_demand_ext": 0.008, "Y_hydro": 0.004, "Y_imports": 0.002},
    },
}

# rough daily-scale levels (MWh per hour) for the region series
_LEVELS = {
    "CAISO": {"solar": 1500.0, "wind": 600.0, "demand": 26000.0, "hydro": 2500.0, "imports": 7000.0, "G": 12000.0},
    "ERCOT": {"solar": 400.0, "wind": 2500.0, "demand": 45000.0, "hydro": 60.0, "imports": 500.0, "G": 35000.0},
    "NW": {"solar": 200.0, "wind": 1200.0, "demand": 30000.0, "hydro": 15000.0, "imports": 2000.0},
    "SW": {"solar": 900.0, "wind": 300.0, "demand": 12000.0, "hydro": 800.0, "imports": 1000.0},
    "SWPP": {"solar": 100.0, "wind": 5000.0, "demand": 30000.0, "hydro": 500.0, "imports": 1500.0},
}

SOLAR_HOURS = np.arange(7, 20)  # zero for hours <= 6 and >= 20

FUEL_EI = {"NaturalGas": 0.45, "Coal": 1.0, "Other": 0.3}


@dataclass
class DgpConfig:
    seed: int = 42
    n_plants: int = 20
    days: int = 365
    start: str = "2019-01-01"
    regions: list[str] = field(default_factory=lambda: ["CAISO", "ERCOT"])
    planted: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_PLANTED)))
    fe_scale: float = 0.2
    noise_sigma: float = 0.05
    solar_amplitude: float = 0.4
    wind_ar: float = 0.9
    wind_sigma: float = 0.5
    n_other: int = 3
    coal_share: float = 0.3
    peaker_share: float = 0.2
    duck_share: float = 0.3
    two_unit_share: float = 0.5
    max_panel_share: float = 0.8
    egrid_noise: float = 0.05

    def __post_init__(self):
        if self.n_plants < 1:
            raise ConfigError("n_plants must be >= 1")
        if self.days < 28:
            raise ConfigError("days must be >= 28")
        if self.noise_sigma < 0 or self.fe_scale < 0:
            raise ConfigError("noise_sigma and fe_scale must be >= 0")
        if not 0 <= self.wind_ar < 1:
            raise ConfigError("wind_ar must lie in [0, 1)")
        if self.n_other < 1:
            raise ConfigError("n_other must be >= 1 (residual fleet generation needs a home)")
        for r in self.regions:
            if r not in DEFAULT_PARTNERS:
                raise ConfigError(f"no synthetic template for region {r!r}")
            if r not in self.planted:
                raise ConfigError(f"no planted coefficients for region {r!r}")
            for dep in ("generation", "intensity"):
                missing = set(REGRESSORS) - set(self.planted[r].get(dep, {}))
                if missing:
                    raise ConfigError(f"planted {r}/{dep} lacks {sorted(missing)}")

    @classmethod
    def from_json(cls, path) -> "DgpConfig":
        p = Path(path)
        if not p.exists():
            raise MissingInputError(f"DGP config {p} not found")
        raw = json.loads(p.read_text())
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown DGP config keys: {unknown}")
        if "planted" in raw:
            merged = json.loads(json.dumps(DEFAULT_PLANTED))
            for r, deps in raw["planted"].items():
                for dep, coefs in deps.items():
                    merged.setdefault(r, {}).setdefault(dep, {}).update(coefs)
            raw["planted"] = merged
        return cls(**raw)

    def planted_emissions(self, region: str) -> dict[str, float]:
        g, i = self.planted[region]["generation"], self.planted[region]["intensity"]
        return {k: g[k] + i[k] for k in REGRESSORS}


# ---------------------------------------------------------------------------
# region series
# ---------------------------------------------------------------------------


def _seasonal(n_days: int, start: date, phase_days: float = 172.0) -> np.ndarray:
    doy = np.array([(start + timedelta(days=i)).timetuple().tm_yday for i in range(n_days)], dtype=float)
    return np.cos(2 * math.pi * (doy - phase_days) / 365.25)


def _solar_profile() -> np.ndarray:
    prof = np.zeros(24)
    h = SOLAR_HOURS.astype(float)
    prof[SOLAR_HOURS] = np.sin(math.pi * (h - 6) / 14)
    return prof / prof.sum()


def _region_hourly(rng, level: dict, n_days: int, start: date, cfg: DgpConfig) -> dict[str, np.ndarray]:
    """Hourly (n_days, 24) arrays of solar, wind, demand, hydro and net imports."""
    season = _seasonal(n_days, start)
    hours = np.arange(24)
    solar_daily = 24 * level["solar"] * (1 + cfg.solar_amplitude * season) * np.exp(rng.normal(0, 0.2, n_days))
    solar = solar_daily[:, None] * _solar_profile()[None, :] * np.exp(rng.normal(0, 0.05, (n_days, 24)))
    solar[:, ~np.isin(hours, SOLAR_HOURS)] = 0.0

    n = n_days * 24
    eps = rng.normal(0, cfg.wind_sigma * math.sqrt(1 - cfg.wind_ar**2), n)
    lw = np.empty(n)
    lw[0] = rng.normal(0, cfg.wind_sigma)
    for t in range(1, n):
        lw[t] = cfg.wind_ar * lw[t - 1] + eps[t]
    wind = (level["wind"] * np.exp(lw)).reshape(n_days, 24)

    diurnal = 1 + 0.15 * np.sin(2 * math.pi * (hours - 11) / 24)
    demand = (
        level["demand"]
        * (1 + 0.1 * season)[:, None]
        * diurnal[None, :]
        * np.exp(rng.normal(0, 0.08, n_days))[:, None]
        * np.exp(rng.normal(0, 0.02, (n_days, 24)))
    )
    hydro = level["hydro"] * (1 + 0.3 * season)[:, None] * np.exp(rng.normal(0, 0.15, n_days))[:, None] * np.exp(
        rng.normal(0, 0.05, (n_days, 24))
    )
    imports = level["imports"] * np.exp(rng.normal(0, 0.15, n_days))[:, None] * np.exp(rng.normal(0, 0.1, (n_days, 24)))
    return {"solar": solar, "wind": wind, "demand": demand, "hydro": hydro, "net_imports": imports}


def _daily(series: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    out = {k: np.array([math.fsum(row) for row in v]) for k, v in series.items()}
    out["wind_ramp"] = np.array([wind_ramp(row) for row in series["wind"]])
    return out


# ---------------------------------------------------------------------------
# hourly shapes
# ---------------------------------------------------------------------------


def _shape(kind: str, rng, n_days: int) -> np.ndarray:
    h = np.arange(24, dtype=float)
    if kind == "baseload":
        base = 1 + 0.15 * np.sin(2 * math.pi * (h - 10) / 24)
    elif kind == "duck":
        base = 1 + 0.6 * np.exp(-0.5 * ((h - 19) / 2) ** 2) - 0.5 * np.exp(-0.5 * ((h - 12.5) / 2.5) ** 2)
    elif kind == "peaker":
        base = np.where((h >= 14) & (h <= 21), np.exp(-0.5 * ((h - 18) / 2) ** 2), 0.0)
    else:
        raise ValueError(kind)
    w = base[None, :] * np.exp(rng.normal(0, 0.1, (n_days, 24)))
    return w / w.sum(axis=1, keepdims=True)


def _emission_weights(gen_h: np.ndarray, cf_h: np.ndarray) -> np.ndarray:
    # hourly intensity rises at low load: ei ~ 1 + 0.08 / (cf + 0.05)
    w = gen_h * (1 + 0.08 / (cf_h + 0.05))
    s = w.sum(axis=1, keepdims=True)
    return np.divide(w, s, out=np.zeros_like(w), where=s > 0)


# ---------------------------------------------------------------------------
# generator
# ---------------------------------------------------------------------------


@dataclass
class SynthBundle:
    units: pd.DataFrame
    plants: dict[str, PlantMeta]
    region: pd.DataFrame
    planted: dict
    truth_daily: pd.DataFrame


def _local_grid(start: date, n_days: int, offset: int) -> pd.DatetimeIndex:
    t0 = pd.Timestamp(start).tz_localize(standard_tz(offset))
    return pd.date_range(t0, periods=n_days * 24, freq="h")


def simulate(config: DgpConfig) -> SynthBundle:
    """Draw one synthetic bundle in memory (see :func:`generate` to write it)."""
    cfg = config
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    start = date.fromisoformat(cfg.start)
    n_days = cfg.days
    days = [start + timedelta(days=i) for i in range(n_days)]
    month = np.array([d.month for d in days])
    year = np.array([d.year for d in days])
    years = sorted(set(year.tolist()))

    unit_frames, region_frames, truth_frames = [], [], []
    metas: dict[str, PlantMeta] = {}
    planted_out: dict = {"regions": {}}

    for region in cfg.regions:
        offset = DEFAULT_STANDARD_OFFSETS[region]
        grid = _local_grid(start, n_days, offset)
        partners = DEFAULT_PARTNERS[region]
        hourly = {rid: _region_hourly(rng, _LEVELS[rid], n_days, start, cfg) for rid in [region, *partners]}
        daily = {rid: _daily(h) for rid, h in hourly.items()}
        own = daily[region]

        for rid, h in hourly.items():
            rid_grid = grid.tz_convert(standard_tz(DEFAULT_STANDARD_OFFSETS[rid]))
            region_frames.append(
                pd.DataFrame({"region_id": rid, "timestamp": format_timestamps(pd.Series(rid_grid)).to_numpy()} | {k: v.ravel() for k, v in h.items()})
            )
            truth_frames.append(
                pd.DataFrame(
                    {"analysis_region": region, "region_id": rid, "date": [d.isoformat() for d in days]}
                    | {k: daily[rid][k] for k in ("solar", "wind", "wind_ramp", "demand", "hydro", "net_imports")}
                )
            )

        # exogenous fleet generation, loosely tied to demand and renewables
        lvl = _LEVELS[region]
        lnG = (
            math.log(24 * lvl["G"])
            + 0.5 * np.log(own["demand"] / own["demand"].mean())
            - 0.05 * np.log(own["solar"] / own["solar"].mean())
            - 0.05 * np.log(own["wind"] / own["wind"].mean())
            + rng.normal(0, 0.05, n_days)
        )
        G_target = np.exp(lnG)
        x = {
            "G": G_target,
            "S": own["solar"],
            "W": own["wind"],
            "W_ramp": own["wind_ramp"],
            "X_solar_ext": np.array([math.fsum(daily[p]["solar"][i] for p in partners) for i in range(n_days)]),
            "X_wind_ext": np.array([math.fsum(daily[p]["wind"][i] for p in partners) for i in range(n_days)]),
            "X_demand_ext": np.array([math.fsum(daily[p]["demand"][i] for p in partners) for i in range(n_days)]),
            "Y_hydro": own["hydro"],
            "Y_imports": own["net_imports"],
        }
        lnx = {k: np.log(v) for k, v in x.items()}

        n = cfg.n_plants
        prefix = region[0]
        pids = [f"{prefix}{i + 1:04d}" for i in range(n)]
        fuels = np.where(rng.random(n) < cfg.coal_share, "Coal", "NaturalGas")
        kinds = rng.choice(["baseload", "peaker", "duck"], size=n, p=[1 - cfg.peaker_share - cfg.duck_share, cfg.peaker_share, cfg.duck_share])
        kinds[fuels == "Coal"] = "baseload"

        s = cfg.fe_scale
        fe = {}
        lin = {}
        for dep in ("generation", "intensity"):
            a = rng.normal(0, s, n)
            mo = rng.normal(0, s, 12)
            yr = {y: rng.normal(0, s) for y in years}
            am = rng.normal(0, s, (n, 12))
            fe[dep] = {"entity": a, "month": mo, "year": yr, "entity_month": am}
            beta = cfg.planted[region][dep]
            xb = sum(beta[k] * lnx[k] for k in REGRESSORS)
            yr_eff = np.array([yr[y] for y in year])
            lin[dep] = a[:, None] + mo[month - 1][None, :] + yr_eff[None, :] + am[:, month - 1] + xb[None, :]
            lin[dep] = lin[dep] + rng.normal(0, cfg.noise_sigma, (n, n_days))
        fuel_shift = np.log([FUEL_EI[f] for f in fuels])[:, None]
        ln_ei = lin["intensity"] + fuel_shift
        # global constant so the modelled plants produce at most max_panel_share of G
        share = np.log(np.exp(lin["generation"]).sum(axis=0))
        const = float(np.min(np.log(cfg.max_panel_share) + lnG - share))
        gen_d = np.exp(const + lin["generation"])
        em_d = gen_d * np.exp(ln_ei)

        gen_h = np.empty((n, n_days, 24))
        em_h = np.empty((n, n_days, 24))
        nameplate = np.empty(n)
        for i in range(n):
            gen_h[i] = gen_d[i][:, None] * _shape(kinds[i], rng, n_days)
            nameplate[i] = float(gen_h[i].max() / rng.uniform(0.8, 0.95))
            em_h[i] = em_d[i][:, None] * _emission_weights(gen_h[i], gen_h[i] / nameplate[i])

        # residual fleet generation goes to the Other plants
        panel_daily = np.array([[math.fsum(gen_h[i, d]) for d in range(n_days)] for i in range(n)])
        other = G_target - np.array([math.fsum(panel_daily[:, d]) for d in range(n_days)])
        if (other <= 0).any():
            raise RuntimeError("residual generation non-positive; lower max_panel_share")
        split = rng.dirichlet(np.ones(cfg.n_other))
        other_ids = [f"{prefix}X{j + 1:02d}" for j in range(cfg.n_other)]
        o_gen = np.empty((cfg.n_other, n_days, 24))
        for j in range(cfg.n_other):
            o_gen[j] = (other * split[j])[:, None] * _shape("baseload", rng, n_days)
        o_np = o_gen.reshape(cfg.n_other, -1).max(axis=1) / 0.9

        all_ids = pids + other_ids
        all_gen = np.concatenate([gen_h, o_gen]).reshape(len(all_ids), -1)
        all_em = np.concatenate([em_h, o_gen * FUEL_EI["Other"]]).reshape(len(all_ids), -1)
        all_fuel = list(fuels) + ["Other"] * cfg.n_other
        all_np = np.r_[nameplate, o_np]
        ts_text = format_timestamps(pd.Series(grid)).to_numpy()  # region's standard clock

        for k, pid in enumerate(all_ids):
            g, e = all_gen[k], all_em[k]
            n_units = 2 if (k < n and rng.random() < cfg.two_unit_share) else 1
            frac = [1.0] if n_units == 1 else [float(rng.uniform(0.4, 0.6))]
            parts_g = [g] if n_units == 1 else [g * frac[0], g - g * frac[0]]
            parts_e = [e] if n_units == 1 else [e * frac[0], e - e * frac[0]]
            for u, (ug, ue) in enumerate(zip(parts_g, parts_e)):
                on = ug > 0
                unit_frames.append(
                    pd.DataFrame(
                        {
                            "plant_id": pid,
                            "unit_id": str(u + 1),
                            "timestamp": ts_text,
                            "gross_load": np.where(on, ug, np.nan),
                            "co2_mass": np.where(on, ue, np.nan),
                            "heat_input": np.where(on, ue / 0.0531, np.nan),
                            "operating": on,
                        }
                    )
                )
            egrid = {}
            for y in years:
                sel = year.repeat(24) == y
                gy, ey = math.fsum(g[sel]), math.fsum(e[sel])
                egrid[y] = egrid_entry(
                    gy * (1 + rng.uniform(-cfg.egrid_noise, cfg.egrid_noise)),
                    ey * (1 + rng.uniform(-cfg.egrid_noise, cfg.egrid_noise)),
                )
            metas[pid] = PlantMeta(pid, region, all_fuel[k], float(all_np[k]), egrid)

        planted_out["regions"][region] = {
            "coefficients": {
                "generation": dict(cfg.planted[region]["generation"]),
                "intensity": dict(cfg.planted[region]["intensity"]),
                "emissions": cfg.planted_emissions(region),
            },
            "constant": const,
            "panel_plants": pids,
            "other_plants": other_ids,
            "plant_kind": dict(zip(pids, kinds.tolist())),
            "fixed_effects": {
                dep: {
                    "entity": dict(zip(pids, v["entity"].tolist())),
                    "month": v["month"].tolist(),
                    "year": {str(y): float(val) for y, val in v["year"].items()},
                }
                for dep, v in fe.items()
            },
        }

    planted_out["config"] = asdict(cfg)
    planted_out["rng"] = "numpy PCG64"
    units = pd.concat(unit_frames, ignore_index=True)
    region_df = pd.concat(region_frames, ignore_index=True)
    truth = pd.concat(truth_frames, ignore_index=True)
    return SynthBundle(units, dict(sorted(metas.items())), region_df, planted_out, truth)


def generate(config: DgpConfig, out_dir) -> list[Path]:
    """Write ``units.csv``, ``plants.csv``, ``region.csv``, ``planted.json`` and
    ``truth_daily.csv`` (the generator's own daily sums and wind ramps)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    b = simulate(config)
    paths = {k: out / k for k in ("units.csv", "plants.csv", "region.csv", "planted.json", "truth_daily.csv")}
    write_unit_hours(b.units, paths["units.csv"])
    write_plants(b.plants, paths["plants.csv"])
    write_region_hours(b.region, paths["region.csv"])
    paths["planted.json"].write_text(json.dumps(b.planted, indent=2, sort_keys=True) + "\n")
    b.truth_daily.to_csv(paths["truth_daily.csv"], index=False, lineterminator="\n")
    return list(paths.values())


# ---------------------------------------------------------------------------
# hourly single-plant fleets
# ---------------------------------------------------------------------------


def hourly_fleet(
    seed: int,
    n_plants: int = 20,
    days: int = 60,
    planted_mean: dict[str, float] | None = None,
    planted_sd: float = 0.1,
    noise_sigma: float = 0.01,
    start: str = "2021-01-01",
) -> tuple[dict[str, pd.DataFrame], dict[str, dict[str, float]]]:
    """Level-form hourly designs for a fleet with per-plant planted coefficients.

    Every plant shares the region covariates; plant ``p``'s generation is
    ``exp(month + year + sum_k b[p, k] ln x[k] + noise)``. Returns the designs
    keyed by plant id and the planted coefficients per plant.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    mean = planted_mean or {"G": 1.0, "S": -0.41, "W": -0.2, "W_ramp": 0.05, "X_solar_ext": 0.0,
                            "X_wind_ext": -0.02, "X_demand_ext": 0.05, "Y_hydro": -0.03, "Y_imports": -0.02}
    n = days * 24
    ts = pd.date_range(pd.Timestamp(start).tz_localize(standard_tz(-6)), periods=n, freq="h")
    x = {
        "G": np.exp(rng.normal(math.log(30000), 0.2, n)),
        "S": np.exp(rng.normal(math.log(300), 0.6, n)),
        "W": np.exp(rng.normal(math.log(2500), 0.5, n)),
        "W_ramp": np.exp(rng.normal(math.log(200), 0.8, n)),
        "X_solar_ext": np.exp(rng.normal(math.log(100), 0.5, n)),
        "X_wind_ext": np.exp(rng.normal(math.log(5000), 0.5, n)),
        "X_demand_ext": np.exp(rng.normal(math.log(30000), 0.1, n)),
        "Y_hydro": np.exp(rng.normal(math.log(60), 0.3, n)),
        "Y_imports": np.exp(rng.normal(math.log(500), 0.3, n)),
    }
    lnx = {k: np.log(v) for k, v in x.items()}
    month_fe = rng.normal(0, 0.2, 12)
    designs, planted = {}, {}
    for i in range(n_plants):
        pid = f"H{i + 1:04d}"
        b = {k: float(mean[k] + rng.normal(0, planted_sd)) for k in REGRESSORS}
        lin = math.log(200.0) + month_fe[ts.month - 1] + sum(b[k] * (lnx[k] - lnx[k].mean()) for k in REGRESSORS)
        gen = np.exp(lin + rng.normal(0, noise_sigma, n))
        em = gen * 0.5
        df = pd.DataFrame({"plant_id": pid, "timestamp": ts, "y_generation": gen, "y_emissions": em, "y_ei": em / gen} | x)
        df["D"] = x["X_demand_ext"]
        df["D_resid"] = df["D"] - df["Y_hydro"] + df["Y_imports"]
        df["zero_generation"] = False
        df["month_index"] = ts.month
        df["year_index"] = ts.year
        designs[pid] = df
        planted[pid] = b
    return designs, planted


# ---------------------------------------------------------------------------
# constructed EI-vs-CF fixtures
# ---------------------------------------------------------------------------

EI_CF_TARGETS = {
    "gas_peaking": {"fuel": "NaturalGas", "region": "CAISO", "high_cf_ei": 0.36, "low_cf_ei": 0.84},
    "coal_baseload": {"fuel": "Coal", "region": "ERCOT", "high_cf_ei": 0.94, "low_cf_ei": 1.426},
}


def ei_cf_fixture(kind: str, seed: int = 7, hours: int = 2000, nameplate: float = 1000.0) -> pd.DataFrame:
    """Plant-hour series whose mean intensity over CF > 0.3 hours and over
    CF < 0.05 hours equals the targets in :data:`EI_CF_TARGETS`.

    Intensities in each regime are drawn around the target and then shifted
    so the regime mean is exact; hours with CF in [0.05, 0.3] interpolate.
    """
    t = EI_CF_TARGETS[kind]
    rng = np.random.Generator(np.random.PCG64(seed))
    cf = np.concatenate(
        [
            rng.uniform(0.31, 0.98, hours // 2),
            rng.uniform(0.005, 0.049, hours // 4),
            rng.uniform(0.05, 0.30, hours - hours // 2 - hours // 4),
        ]
    )
    cf = rng.permutation(cf)
    hi, lo = cf > 0.3, cf < 0.05
    ei = np.empty_like(cf)
    for mask, target in ((hi, t["high_cf_ei"]), (lo, t["low_cf_ei"])):
        draw = target + rng.normal(0, 0.03 * target, mask.sum())
        ei[mask] = draw - (math.fsum(draw) / len(draw) - target)
    mid = ~(hi | lo)
    ei[mid] = t["low_cf_ei"] + (t["high_cf_ei"] - t["low_cf_ei"]) * (cf[mid] - 0.05) / 0.25
    gen = cf * nameplate
    ts = pd.date_range(pd.Timestamp("2020-01-01").tz_localize(standard_tz(-8)), periods=hours, freq="h")
    return pd.DataFrame(
        {
            "plant_id": kind,
            "timestamp": ts,
            "generation": gen,
            "emissions": gen * ei,
            "capacity_factor": cf,
            "emissions_intensity": ei,
            "over_capacity": False,
        }
    )
