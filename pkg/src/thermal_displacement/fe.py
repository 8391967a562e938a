"""Fixed-effects log-log OLS.

Fixed effects are absorbed by alternating within-group demeaning (the
method of alternating projections), after which the slope coefficients are an
ordinary least-squares fit on the demeaned data (Frisch-Waugh-Lovell).

Specifications M1-M9 share the daily panel; M1 is the full model with plant,
month, year and plant x month effects, and each of M2-M9 removes one
ingredient.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    AbsorptionError,
    ConsistencyError,
    DomainError,
    EstimationError,
    InsufficientDataError,
    RankDeficiencyError,
)
from .panel import DEPENDENTS

log = logging.getLogger(__name__)

CONTROLS_X = ("X_solar_ext", "X_wind_ext", "X_demand_ext")
CONTROLS_Y = ("Y_hydro", "Y_imports")
FULL_REGRESSORS = ("G", "S", "W", "W_ramp", *CONTROLS_X, *CONTROLS_Y)

REGRESSOR_LABELS = {
    "G": "Thermal generation",
    "S": "Solar",
    "W": "Wind",
    "W_ramp": "Wind ramp",
    "X_solar_ext": "Solar (ext)",
    "X_wind_ext": "Wind (ext)",
    "X_demand_ext": "Demand (ext)",
    "Y_hydro": "Hydro",
    "Y_imports": "Net imports",
    "D_resid": "Residual demand",
}

FE_NAMES = ("entity", "month", "year", "entity_month")


@dataclass(frozen=True)
class DesignSpec:
    id: str
    dependent: str
    regressors: tuple[str, ...]
    fe_entity: bool = True
    fe_month: bool = True
    fe_year: bool = True
    fe_entity_month: bool = True

    def __post_init__(self):
        if self.dependent not in DEPENDENTS:
            raise DomainError(f"dependent must be one of {sorted(DEPENDENTS)}, got {self.dependent!r}")

    @property
    def dependent_column(self) -> str:
        return DEPENDENTS[self.dependent]

    @property
    def fe_groups(self) -> tuple[str, ...]:
        flags = (self.fe_entity, self.fe_month, self.fe_year, self.fe_entity_month)
        return tuple(n for n, on in zip(FE_NAMES, flags) if on)

    def hourly(self) -> "DesignSpec":
        """Single-plant variant: no plant or plant x month effects."""
        return dataclasses.replace(self, fe_entity=False, fe_entity_month=False)


def _drop(seq, *names):
    return tuple(r for r in seq if r not in names)


_SPEC_TABLE = {
    "M1": dict(regressors=FULL_REGRESSORS),
    "M2": dict(regressors=_drop(FULL_REGRESSORS, "G")),
    "M3": dict(regressors=_drop(FULL_REGRESSORS, "S")),
    "M4": dict(regressors=_drop(FULL_REGRESSORS, "W")),
    "M5": dict(regressors=_drop(FULL_REGRESSORS, *CONTROLS_X)),
    "M6": dict(regressors=("D_resid",) + FULL_REGRESSORS[1:]),
    "M7": dict(regressors=_drop(FULL_REGRESSORS, "W_ramp")),
    "M8": dict(regressors=FULL_REGRESSORS, fe_month=False, fe_year=False),
    "M9": dict(regressors=FULL_REGRESSORS, fe_entity_month=False),
}
SPEC_IDS = tuple(_SPEC_TABLE)


def design_spec(spec_id: str, dependent: str = "generation") -> DesignSpec:
    try:
        kw = _SPEC_TABLE[spec_id]
    except KeyError:
        raise DomainError(f"unknown specification {spec_id!r}; expected one of {SPEC_IDS}") from None
    return DesignSpec(id=spec_id, dependent=dependent, **kw)


# ---------------------------------------------------------------------------
# absorption
# ---------------------------------------------------------------------------


@dataclass
class Absorbed:
    demeaned: np.ndarray
    keep: np.ndarray  # row mask after singleton removal
    singletons_dropped: int
    sweeps: int
    levels: dict[str, int]
    effective_groups: list[str]
    dof_absorbed: int
    collinear: list[int] = field(default_factory=list)


def _codes(labels) -> np.ndarray:
    return pd.factorize(np.asarray(labels), sort=True)[0]


def _drop_singletons(groups: dict[str, np.ndarray]) -> np.ndarray:
    n = len(next(iter(groups.values())))
    keep = np.ones(n, dtype=bool)
    while True:
        changed = False
        for codes in groups.values():
            counts = np.bincount(codes[keep], minlength=int(codes.max()) + 1)
            single = keep & (counts[codes] == 1)
            if single.any():
                keep &= ~single
                changed = True
        if not changed:
            return keep


def _is_coarser(a: np.ndarray, b: np.ndarray) -> bool:
    """True when every level of ``b`` lies inside a single level of ``a``."""
    pairs = pd.unique(a.astype(np.int64) * (int(b.max()) + 1) + b)
    return len(pairs) == len(np.unique(b))


def _rank_of_fe(codes: list[np.ndarray]) -> int:
    levels = [int(c.max()) + 1 for c in codes]
    if len(codes) == 1:
        return levels[0]
    l1, l2 = levels[0], levels[1]
    n = len(codes[0])
    g = sp.coo_matrix((np.ones(n), (codes[0], codes[1] + l1)), shape=(l1 + l2, l1 + l2))
    n_comp, _ = connected_components(g, directed=False)
    # exact for two groups; each further group assumed to add levels - 1
    return l1 + l2 - n_comp + sum(l - 1 for l in levels[2:])


def absorb_fixed_effects(
    matrix: np.ndarray,
    groups: Mapping[str, Sequence],
    tol: float = 1e-10,
    max_sweeps: int = 500,
    collinear_tol: float = 1e-8,
    drop_singletons: bool = True,
) -> Absorbed:
    """Demean the columns of ``matrix`` within every fixed-effect group.

    Groups nested inside a finer group are redundant and skipped. With one
    effective group a single pass is exact. Otherwise groups are demeaned in
    turn until the largest change in a sweep falls below ``tol``.

    Raises
    ------
    AbsorptionError
        If ``max_sweeps`` sweeps do not converge.
    """
    M = np.array(matrix, dtype=float, copy=True)
    if M.ndim == 1:
        M = M[:, None]
    if not np.isfinite(M).all():
        raise DomainError("design contains non-finite values")
    coded = {name: _codes(lab) for name, lab in groups.items()}
    if not coded:
        return Absorbed(M, np.ones(len(M), bool), 0, 0, {}, [], 0, [])
    for name, c in coded.items():
        if len(c) != len(M):
            raise DomainError(f"fixed-effect group {name!r} has {len(c)} labels for {len(M)} rows")

    keep = _drop_singletons(coded) if drop_singletons else np.ones(len(M), bool)
    n_single = int((~keep).sum())
    M = M[keep]
    coded = {k: _codes(v[keep]) for k, v in coded.items()}
    levels = {k: int(v.max()) + 1 if len(v) else 0 for k, v in coded.items()}
    if len(M) == 0:
        raise DomainError("no observations left after dropping singleton groups")

    names = sorted(coded, key=lambda k: -levels[k])
    effective: list[str] = []
    for name in names:
        if not any(_is_coarser(coded[name], coded[e]) for e in effective):
            effective.append(name)

    norms0 = np.linalg.norm(M, axis=0)
    n = len(M)
    ops = []
    for name in effective:
        c = coded[name]
        S = sp.csr_matrix((np.ones(n), (c, np.arange(n))), shape=(levels[name], n))
        counts = np.asarray(S.sum(axis=1)).ravel()
        ops.append((S, c, counts))

    def sweep(A):
        for S, c, counts in ops:
            means = (S @ A) / counts[:, None]
            A = A - means[c]
        return A

    sweeps = 0
    if len(ops) == 1:
        M = sweep(M)
        sweeps = 1
    else:
        while True:
            new = sweep(M)
            sweeps += 1
            change = float(np.max(np.abs(new - M))) if new.size else 0.0
            M = new
            if change < tol:
                break
            if sweeps >= max_sweeps:
                raise AbsorptionError(
                    f"fixed-effect absorption did not converge in {max_sweeps} sweeps (last change {change:.3e})",
                    residual_norm=change,
                )

    norms = np.linalg.norm(M, axis=0)
    collinear = [j for j in range(M.shape[1]) if norms[j] <= collinear_tol * norms0[j] or norms0[j] == 0]
    for j in collinear:
        M[:, j] = 0.0
    dof = _rank_of_fe([coded[e] for e in effective])
    return Absorbed(M, keep, n_single, sweeps, levels, effective, dof, collinear)


# ---------------------------------------------------------------------------
# OLS
# ---------------------------------------------------------------------------


@dataclass
class OlsFit:
    coef: np.ndarray
    cov: np.ndarray
    resid: np.ndarray
    r_squared: float
    n: int
    k: int
    df_resid: int
    names: list[str]
    xtx_inv: np.ndarray


def _sandwich(X, resid, xtx_inv, mode, df_resid, clusters=None):
    n, k = X.shape
    if mode == "hc1":
        meat = (X * (resid**2)[:, None]).T @ X
        return xtx_inv @ meat @ xtx_inv * (n / df_resid)
    if mode == "cluster":
        if clusters is None:
            raise DomainError("cluster covariance needs cluster labels")
        codes = _codes(clusters)
        G = int(codes.max()) + 1
        if G < 2:
            raise DomainError("cluster covariance needs at least two clusters")
        scores = np.zeros((G, k))
        np.add.at(scores, codes, X * resid[:, None])
        meat = scores.T @ scores
        factor = G / (G - 1) * (n - 1) / (n - k)
        return xtx_inv @ meat @ xtx_inv * factor
    raise DomainError(f"unknown covariance mode {mode!r}")


def ols_fit(
    X: np.ndarray,
    y: np.ndarray,
    names: Sequence[str] | None = None,
    dof_absorbed: int = 0,
    se: str = "hc1",
    clusters=None,
    add_intercept: bool = False,
    rank_tol: float = 1e-10,
) -> OlsFit:
    """Least squares by QR with HC1 or cluster-robust covariance.

    ``dof_absorbed`` is the number of fixed-effect parameters already swept
    out of ``X`` and ``y``; it enters the HC1 small-sample factor
    ``n / (n - k - dof_absorbed)``. The cluster factor is
    ``G/(G-1) * (n-1)/(n-k)``. R-squared is centred on the mean of ``y``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]
    if add_intercept:
        X = np.column_stack([np.ones(len(X)), X])
        names = ["const", *names]
    n, k = X.shape
    Q, R = np.linalg.qr(X)
    d = np.abs(np.diag(R))
    bad = [names[j] for j in np.flatnonzero(d <= rank_tol * max(d.max(initial=0.0), 1e-300))]
    if bad or k == 0:
        raise RankDeficiencyError(f"design is rank deficient; offending columns: {bad}", bad)
    df_resid = n - k - dof_absorbed
    if df_resid <= 0:
        raise InsufficientDataError(f"no residual degrees of freedom (n={n}, k={k}, absorbed={dof_absorbed})")
    coef = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ coef
    r_inv = np.linalg.solve(R, np.eye(k))
    xtx_inv = r_inv @ r_inv.T
    cov = _sandwich(X, resid, xtx_inv, se, df_resid, clusters)
    yc = y - y.mean()
    sst = float(yc @ yc)
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else math.nan
    return OlsFit(coef, cov, resid, r2, n, k, df_resid, names, xtx_inv)


# ---------------------------------------------------------------------------
# panel and plant fits
# ---------------------------------------------------------------------------


@dataclass
class FitResult:
    spec_id: str
    dependent: str
    region: str
    coefficients: dict[str, float]
    std_errors: dict[str, float]
    r_squared: float
    n_obs: int
    se_mode: str
    plant_id: str | None = None
    alt_se_mode: str | None = None
    alt_std_errors: dict[str, float] | None = None
    fe_groups: dict[str, int] = field(default_factory=dict)
    effective_fe_groups: list[str] = field(default_factory=list)
    dof_absorbed: int = 0
    df_resid: int = 0
    singletons_dropped: int = 0
    collinear_dropped: list[str] = field(default_factory=list)
    sweeps: int = 0

    @property
    def fe_group_count(self) -> int:
        return len(self.fe_groups)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["fe_group_count"] = self.fe_group_count
        return _nan_to_none(d)

    @classmethod
    def from_dict(cls, d: Mapping) -> "FitResult":
        known = {f.name for f in dataclasses.fields(cls)}
        kw = {k: v for k, v in d.items() if k in known}
        for key in ("coefficients", "std_errors", "alt_std_errors"):
            if kw.get(key) is not None:
                kw[key] = {k: (math.nan if v is None else float(v)) for k, v in kw[key].items()}
        kw.setdefault("r_squared", math.nan)
        kw.setdefault("se_mode", "hc1")
        kw.setdefault("region", "")
        if kw.get("r_squared") is None:
            kw["r_squared"] = math.nan
        missing = {"spec_id", "dependent", "coefficients", "std_errors", "n_obs"} - set(kw)
        if missing:
            raise DomainError(f"fit record lacks fields {sorted(missing)}")
        return cls(**kw)


def _nan_to_none(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_nan_to_none(v) for v in obj]
    return obj


def fe_labels(rows: pd.DataFrame, spec: DesignSpec, entity_col: str = "plant_id") -> dict[str, np.ndarray]:
    ent = rows[entity_col].to_numpy()
    month = rows["month_index"].to_numpy()
    labels = {
        "entity": ent,
        "month": month,
        "year": rows["year_index"].to_numpy(),
        "entity_month": np.array([f"{e}|{m}" for e, m in zip(ent, month)], dtype=object),
    }
    return {g: labels[g] for g in spec.fe_groups}


def _fit(rows, spec, *, region, se, tol, max_sweeps, collinear_tol, plant_id=None, cluster_col="plant_id"):
    missing = [c for c in (*spec.regressors, spec.dependent_column) if c not in rows.columns]
    if missing:
        raise DomainError(f"rows lack columns {missing}")
    if len(rows) == 0:
        raise InsufficientDataError("no rows to fit")
    regs = list(spec.regressors)
    data = rows[[*regs, spec.dependent_column]].to_numpy(float)
    groups = fe_labels(rows, spec)
    if groups:
        ab = absorb_fixed_effects(data, groups, tol=tol, max_sweeps=max_sweeps, collinear_tol=collinear_tol)
        Z, keep, dof = ab.demeaned, ab.keep, ab.dof_absorbed
        add_intercept = False
    else:
        ab = None
        Z, keep, dof = data, np.ones(len(rows), bool), 0
        add_intercept = True
    collinear = [regs[j] for j in (ab.collinear if ab else []) if j < len(regs)]
    if ab and len(regs) in ab.collinear:
        raise EstimationError("dependent variable is constant within fixed-effect groups")
    use = [j for j, r in enumerate(regs) if r not in collinear]
    if collinear:
        log.warning("%s/%s: dropping collinear regressors %s", spec.id, spec.dependent, collinear)
    X = Z[:, use]
    y = Z[:, -1]
    used_names = [regs[j] for j in use]
    clusters = rows[cluster_col].to_numpy()[keep] if cluster_col in rows else None
    n_clusters = len(pd.unique(clusters)) if clusters is not None else 0
    primary = se
    alt = "cluster" if se == "hc1" else "hc1"
    if primary == "cluster" and n_clusters < 2:
        raise DomainError("cluster-robust errors need at least two entities")
    fit = ols_fit(X, y, used_names, dof_absorbed=dof if groups else 0, se=primary, clusters=clusters, add_intercept=add_intercept)
    off = 1 if add_intercept else 0
    coefs = {r: math.nan for r in regs}
    ses = {r: math.nan for r in regs}
    for i, r in enumerate(used_names):
        coefs[r] = float(fit.coef[i + off])
        ses[r] = float(math.sqrt(fit.cov[i + off, i + off]))
    alt_ses = None
    if alt == "hc1" or n_clusters >= 2:
        Xf = np.column_stack([np.ones(len(X)), X]) if add_intercept else X
        cov_alt = _sandwich(Xf, fit.resid, fit.xtx_inv, alt, fit.df_resid, clusters)
        alt_ses = {r: math.nan for r in regs}
        for i, r in enumerate(used_names):
            alt_ses[r] = float(math.sqrt(cov_alt[i + off, i + off]))
    return FitResult(
        spec_id=spec.id,
        dependent=spec.dependent,
        region=region,
        coefficients=coefs,
        std_errors=ses,
        r_squared=float(fit.r_squared),
        n_obs=int(fit.n),
        se_mode=primary,
        plant_id=plant_id,
        alt_se_mode=alt if alt_ses is not None else None,
        alt_std_errors=alt_ses,
        fe_groups=dict(ab.levels) if ab else {},
        effective_fe_groups=list(ab.effective_groups) if ab else [],
        dof_absorbed=int(dof) if groups else 0,
        df_resid=int(fit.df_resid),
        singletons_dropped=ab.singletons_dropped if ab else 0,
        collinear_dropped=collinear,
        sweeps=ab.sweeps if ab else 0,
    )


def fit_panel(
    rows: pd.DataFrame,
    spec: DesignSpec,
    region: str = "",
    se: str = "hc1",
    tol: float = 1e-10,
    max_sweeps: int = 500,
    collinear_tol: float = 1e-8,
) -> FitResult:
    """Fit one specification on a log-transformed daily panel.

    R-squared is the within R-squared of the demeaned regression. Both HC1
    and plant-clustered standard errors are computed; ``se`` picks which is
    primary.
    """
    return _fit(rows, spec, region=region, se=se, tol=tol, max_sweeps=max_sweeps, collinear_tol=collinear_tol)


def fit_plant_hourly(
    rows: pd.DataFrame,
    spec: DesignSpec,
    region: str = "",
    min_hours: int = 100,
    tol: float = 1e-10,
    max_sweeps: int = 500,
    collinear_tol: float = 1e-8,
) -> FitResult:
    """Single-plant hourly fit with month and year effects (no plant effects).

    Raises :class:`InsufficientDataError` for plants with fewer than
    ``min_hours`` usable (log-transformed) hours.
    """
    plants = pd.unique(rows["plant_id"]) if len(rows) else []
    if len(plants) > 1:
        raise DomainError(f"hourly design holds several plants: {list(plants)[:5]}")
    pid = str(plants[0]) if len(plants) else None
    if len(rows) < min_hours:
        raise InsufficientDataError(f"plant {pid}: {len(rows)} usable hours < {min_hours}")
    return _fit(
        rows,
        spec.hourly(),
        region=region,
        se="hc1",
        tol=tol,
        max_sweeps=max_sweeps,
        collinear_tol=collinear_tol,
        plant_id=pid,
        cluster_col="__none__",
    )


def fit_plants_hourly(
    designs: Mapping[str, pd.DataFrame],
    spec: DesignSpec,
    region: str = "",
    min_hours: int = 100,
    threads: int = 1,
    **kw,
) -> tuple[list[FitResult], dict[str, str]]:
    """Fit every plant; returns fits ordered by plant id and ``{plant: reason}`` for skips."""

    def one(pid):
        try:
            return pid, fit_plant_hourly(designs[pid], spec, region, min_hours, **kw), None
        except (InsufficientDataError, RankDeficiencyError) as exc:
            return pid, None, f"{type(exc).__name__}: {exc}"

    pids = sorted(designs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, pids))
    else:
        results = [one(p) for p in pids]
    fits = [f for _, f, _ in results if f is not None]
    skipped = {p: why for p, _, why in results if why is not None}
    for p, why in skipped.items():
        log.info("plant %s skipped: %s", p, why)
    return fits, skipped


# ---------------------------------------------------------------------------
# coefficient distributions
# ---------------------------------------------------------------------------


@dataclass
class CoefficientDistribution:
    regressor: str
    n: int
    mean: float
    sd: float
    quantiles: dict[float, float]
    histogram: pd.DataFrame
    kde: pd.DataFrame
    references: dict[str, float] = field(default_factory=dict)


def coefficient_distribution(
    fits: Iterable[FitResult],
    regressor: str,
    probs: Sequence[float] = (0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95),
    bins: int = 20,
    references: Mapping[str, float] | None = None,
    kde_points: int = 200,
) -> CoefficientDistribution:
    """Summary, histogram and Gaussian KDE of one coefficient across plant fits.

    ``references`` are external point values (e.g. literature displacement
    estimates) carried through for plot annotation only.
    """
    from .scenarios import quantile

    values = [f.coefficients.get(regressor, math.nan) for f in fits]
    values = np.array([v for v in values if v is not None and not math.isnan(v)], dtype=float)
    if values.size == 0:
        raise DomainError(f"no fits carry a coefficient for {regressor!r}")
    n = values.size
    mean = math.fsum(values) / n
    sd = math.sqrt(math.fsum((values - mean) ** 2) / (n - 1)) if n > 1 else math.nan
    qs = {p: quantile(values, p) for p in probs}
    counts, edges = np.histogram(values, bins=bins)
    width = np.diff(edges)
    hist = pd.DataFrame(
        {"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts, "density": counts / (n * width)}
    )
    if n > 1 and sd > 0:
        # Silverman's rule of thumb
        bw = 1.06 * sd * n ** (-1 / 5)
        grid = np.linspace(values.min() - 3 * bw, values.max() + 3 * bw, kde_points)
        z = (grid[:, None] - values[None, :]) / bw
        dens = np.exp(-0.5 * z**2).sum(axis=1) / (n * bw * math.sqrt(2 * math.pi))
        kde = pd.DataFrame({"x": grid, "density": dens})
    else:
        kde = pd.DataFrame(columns=["x", "density"])
    return CoefficientDistribution(regressor, n, mean, sd, qs, hist, kde, dict(references or {}))


def check_pair(a: FitResult, b: FitResult) -> None:
    """Raise :class:`ConsistencyError` unless two fits share spec, region and rows."""
    if a.spec_id != b.spec_id:
        raise ConsistencyError(f"fits use different specifications: {a.spec_id} vs {b.spec_id}")
    if a.region != b.region:
        raise ConsistencyError(f"fits cover different regions: {a.region!r} vs {b.region!r}")
    if a.n_obs != b.n_obs:
        raise ConsistencyError(f"fits use different rows: n_obs {a.n_obs} vs {b.n_obs}")
