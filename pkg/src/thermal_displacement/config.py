"""Run configuration: one JSON-serializable object, with flag overrides on top."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, MissingInputError

# Standard-time UTC offsets (hours), no daylight saving.
DEFAULT_STANDARD_OFFSETS = {
    "CAISO": -8,
    "ERCOT": -6,
    "OTHER": 0,
    "NW": -8,
    "SW": -7,
    "SWPP": -6,
}

DEFAULT_PARTNERS = {
    "CAISO": ["NW", "SW"],
    "ERCOT": ["SWPP"],
}


@dataclass
class Config:
    standard_offsets: dict[str, int] = field(
        default_factory=lambda: dict(DEFAULT_STANDARD_OFFSETS)
    )
    # analysis region -> region_id used in region.csv
    ba_ids: dict[str, str] = field(default_factory=dict)
    partners: dict[str, list[str]] = field(
        default_factory=lambda: {k: list(v) for k, v in DEFAULT_PARTNERS.items()}
    )
    span_start: str | None = None
    span_end: str | None = None
    max_interp_gap_hours: int = 3
    max_missing_fraction: float = 0.10
    cf_bin_width: float = 0.05
    panel_fuels: list[str] = field(default_factory=lambda: ["NaturalGas", "Coal"])
    leave_one_out: bool = False
    zero_policy: str = "drop"
    log_floor: float = 1.0
    absorb_tol: float = 1e-10
    absorb_max_sweeps: int = 500
    collinear_tol: float = 1e-8
    se: str = "hc1"
    min_plant_hours: int = 100
    egrid_mode: str = "plant"
    threads: int | None = None
    reference_fractions: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.zero_policy not in ("drop", "floor"):
            raise ConfigError(f"zero_policy must be 'drop' or 'floor', got {self.zero_policy!r}")
        if self.se not in ("hc1", "cluster"):
            raise ConfigError(f"se must be 'hc1' or 'cluster', got {self.se!r}")
        if self.egrid_mode not in ("plant", "category"):
            raise ConfigError(f"egrid_mode must be 'plant' or 'category', got {self.egrid_mode!r}")
        if self.max_interp_gap_hours < 0 or not 0 <= self.max_missing_fraction <= 1:
            raise ConfigError("gap thresholds out of range")
        if self.absorb_tol <= 0 or self.absorb_max_sweeps < 1:
            raise ConfigError("absorption constants must be positive")

    def ba_id(self, region: str) -> str:
        return self.ba_ids.get(region, region)

    def offset_hours(self, region: str) -> int:
        try:
            return int(self.standard_offsets[region])
        except KeyError:
            raise ConfigError(f"no standard-time offset configured for region {region!r}") from None

    def n_threads(self) -> int:
        return self.threads or os.cpu_count() or 1

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        # thread count never changes results, so it is left out of the digest
        d = self.to_dict()
        d.pop("threads")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path: str | Path | None = None, **overrides) -> Config:
    """Read a JSON config file (optional) and apply non-None overrides."""
    data: dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise MissingInputError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {p} is not valid JSON: {exc}") from None
    known = {f.name for f in dataclasses.fields(Config)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return Config(**data)
