"""Output writers: deterministic JSON/CSV, regression tables and run manifests."""

from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd
import scipy

from . import __version__
from .fe import REGRESSOR_LABELS, FitResult

DEPENDENT_LABELS = {"generation": "Generation", "emissions": "Emissions", "intensity": "Intensity"}


def _clean(obj):
    """JSON-safe copy: NaN/inf -> None, numpy scalars -> Python, dict keys -> str."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(obj, path) -> Path:
    p = Path(path)
    p.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return p


def write_csv(df: pd.DataFrame, path) -> Path:
    p = Path(path)
    df.to_csv(p, index=False, lineterminator="\n")
    return p


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# regression tables
# ---------------------------------------------------------------------------


def p_value(coef: float, se: float) -> float:
    """Two-sided p-value of ``coef / se`` under a standard normal."""
    if se is None or coef is None or not (se > 0) or math.isnan(coef):
        return math.nan
    return math.erfc(abs(coef / se) / math.sqrt(2.0))


def stars(p: float) -> str:
    if math.isnan(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def fit_table(fits: Iterable[FitResult]) -> pd.DataFrame:
    """Coefficient table with paired standard-error and significance columns.

    One row per regressor plus ``R-squared`` and ``No. of obs`` rows; for each
    dependent a coefficient column, the paired standard-error column and a
    significance-star column (0.05 / 0.01 / 0.001, two-sided normal). Fits
    must share a specification and region.
    """
    fits = list(fits)
    if not fits:
        return pd.DataFrame(columns=["regressor", "label"])
    regs: list[str] = []
    for f in fits:
        regs += [r for r in f.coefficients if r not in regs]
    rows = []
    for r in regs:
        row = {"regressor": r, "label": REGRESSOR_LABELS.get(r, r)}
        for f in fits:
            d = f.dependent
            c, s = f.coefficients.get(r, math.nan), f.std_errors.get(r, math.nan)
            row[f"{d}_coef"] = c
            row[f"{d}_se"] = s
            row[f"{d}_stars"] = stars(p_value(c, s))
        rows.append(row)
    for key, label in (("r_squared", "R-squared"), ("n_obs", "No. of obs")):
        row = {"regressor": key, "label": label}
        for f in fits:
            row[f"{f.dependent}_coef"] = getattr(f, key)
            row[f"{f.dependent}_se"] = math.nan
            row[f"{f.dependent}_stars"] = ""
        rows.append(row)
    return pd.DataFrame(rows)


def fit_long(fits: Iterable[FitResult]) -> pd.DataFrame:
    """Tidy one-row-per-coefficient view with both standard-error modes."""
    rows = []
    for f in fits:
        for r, c in f.coefficients.items():
            s = f.std_errors.get(r, math.nan)
            alt = (f.alt_std_errors or {}).get(r, math.nan)
            p = p_value(c, s)
            rows.append(
                {
                    "region": f.region,
                    "spec_id": f.spec_id,
                    "dependent": f.dependent,
                    "plant_id": f.plant_id or "",
                    "regressor": r,
                    "coef": c,
                    "se": s,
                    "se_mode": f.se_mode,
                    "alt_se": alt,
                    "alt_se_mode": f.alt_se_mode or "",
                    "p_value": p,
                    "stars": stars(p),
                    "r_squared": f.r_squared,
                    "n_obs": f.n_obs,
                }
            )
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------


def versions() -> dict[str, str]:
    return {
        "thermal_displacement": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "scipy": scipy.__version__,
    }


@dataclass
class RunManifest:
    """Provenance of one command: config digest, inputs, outputs, counters and timings.

    Paths are stored relative to the manifest's directory.
    ``timings`` is the only field that changes between identical reruns.
    """

    command: str
    config_digest: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    counters: dict = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - t0, 6)

    def add_input(self, path) -> None:
        p = Path(path)
        if p.is_file():
            self.inputs[str(p)] = sha256_file(p)

    def add_output(self, path) -> Path:
        p = Path(path)
        self.outputs[str(p)] = ""
        return p

    def write(self, path) -> Path:
        path = Path(path)
        base = path.parent.resolve()

        def rel(p):
            return os.path.relpath(Path(p).resolve(), base)

        doc = {
            "command": self.command,
            "config_digest": self.config_digest,
            "config": self.config,
            "inputs": {rel(k): v for k, v in sorted(self.inputs.items())},
            "outputs": {rel(p): sha256_file(p) for p in sorted(self.outputs)},
            "versions": versions(),
            "counters": self.counters,
            "timings": self.timings,
            "notes": self.notes,
        }
        return write_json(doc, path)


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def manifest_without_timings(path) -> dict:
    d = load_manifest(path)
    d.pop("timings", None)
    return d
