import dataclasses
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermal_displacement.errors import (
    AbsorptionError,
    ConsistencyError,
    DomainError,
    EstimationError,
    InsufficientDataError,
    RankDeficiencyError,
)
from thermal_displacement.fe import (
    FULL_REGRESSORS,
    SPEC_IDS,
    DesignSpec,
    FitResult,
    absorb_fixed_effects,
    check_pair,
    coefficient_distribution,
    design_spec,
    fit_panel,
    fit_plant_hourly,
    fit_plants_hourly,
    ols_fit,
)
from thermal_displacement.panel import log_transform
from thermal_displacement.scenarios import quantile
from thermal_displacement.synth import hourly_fleet


def dummies(labels):
    _, codes = np.unique(np.asarray(labels, dtype=str), return_inverse=True)
    return np.eye(codes.max() + 1)[codes]


def residualize(M, *label_sets):
    D = np.column_stack([dummies(lab) for lab in label_sets])
    beta, *_ = np.linalg.lstsq(D, M, rcond=None)
    return M - D @ beta


class TestAbsorb:
    def test_one_group_single_pass(self):
        M = np.array([[1.0], [3.0], [10.0], [20.0]])
        ab = absorb_fixed_effects(M, {"g": ["a", "a", "b", "b"]})
        assert ab.sweeps == 1
        assert ab.demeaned.ravel().tolist() == [-1.0, 1.0, -5.0, 5.0]
        assert ab.dof_absorbed == 2

    def test_two_groups_match_dummy_oracle(self):
        rng = np.random.default_rng(0)
        M = rng.normal(size=(6, 2))
        g1 = ["a", "a", "b", "b", "c", "c"]
        g2 = ["x", "y", "x", "y", "x", "y"]
        ab = absorb_fixed_effects(M, {"g1": g1, "g2": g2})
        np.testing.assert_allclose(ab.demeaned, residualize(M, g1, g2), atol=1e-10)
        assert ab.dof_absorbed == 3 + 2 - 1

    def test_collinear_column_flagged(self):
        g = ["a", "a", "b", "b"]
        M = np.array([[5.0, 1.0], [5.0, 2.0], [7.0, 0.0], [7.0, 4.0]])
        ab = absorb_fixed_effects(M, {"g": g})
        assert ab.collinear == [0]
        assert (ab.demeaned[:, 0] == 0).all()

    def test_singletons_dropped(self):
        M = np.arange(5.0)[:, None]
        ab = absorb_fixed_effects(M, {"g": ["a", "a", "b", "b", "c"]})
        assert ab.singletons_dropped == 1
        assert ab.keep.tolist() == [True, True, True, True, False]

    def test_nested_group_skipped(self):
        rng = np.random.default_rng(1)
        ent = np.repeat(["p", "q"], 6)
        month = np.tile([1, 1, 2, 2, 3, 3], 2)
        em = [f"{e}|{m}" for e, m in zip(ent, month)]
        ab = absorb_fixed_effects(rng.normal(size=(12, 1)), {"entity": ent, "month": month, "entity_month": em})
        assert ab.effective_groups == ["entity_month"]
        assert ab.sweeps == 1

    def test_non_convergence(self):
        rng = np.random.default_rng(2)
        n = 200
        g1 = rng.integers(0, 20, n)
        g2 = rng.integers(0, 20, n)
        with pytest.raises(AbsorptionError) as exc:
            absorb_fixed_effects(rng.normal(size=(n, 1)), {"a": g1, "b": g2}, max_sweeps=2, drop_singletons=False)
        assert exc.value.residual_norm > 0

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            absorb_fixed_effects(np.array([[np.nan], [1.0]]), {"g": [1, 1]})


class TestOls:
    def test_exact_line(self):
        fit = ols_fit(np.array([1.0, 2.0, 3.0]), np.array([2.0, 4.0, 6.0]), ["x"], add_intercept=True)
        assert fit.coef[1] == pytest.approx(2.0, abs=1e-12)
        assert fit.coef[0] == pytest.approx(0.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_rank_deficiency_lists_columns(self):
        x = np.arange(10.0)
        with pytest.raises(RankDeficiencyError) as exc:
            ols_fit(np.column_stack([x, 2 * x]), x**2, ["a", "b"])
        assert exc.value.columns == ["b"]

    def test_hc1_matches_dense_oracle(self):
        rng = np.random.default_rng(4)
        n, k = 150, 3
        X = rng.normal(size=(n, k))
        y = X @ [1.0, -2.0, 0.5] + rng.normal(size=n) * (1 + np.abs(X[:, 0]))
        fit = ols_fit(X, y, dof_absorbed=7)
        beta = np.linalg.inv(X.T @ X) @ X.T @ y
        e = y - X @ beta
        bread = np.linalg.inv(X.T @ X)
        oracle = bread @ X.T @ np.diag(e**2) @ X @ bread * n / (n - k - 7)
        np.testing.assert_allclose(fit.coef, beta, rtol=1e-10)
        np.testing.assert_allclose(fit.cov, oracle, rtol=1e-8)

    def test_cluster_matches_dense_oracle(self):
        rng = np.random.default_rng(5)
        n, k = 120, 2
        X = rng.normal(size=(n, k))
        cl = np.repeat(np.arange(12), 10)
        y = X @ [0.3, 0.7] + rng.normal(size=12)[cl] + rng.normal(size=n)
        fit = ols_fit(X, y, se="cluster", clusters=cl)
        bread = np.linalg.inv(X.T @ X)
        e = y - X @ (bread @ X.T @ y)
        meat = sum(np.outer(X[cl == g].T @ e[cl == g], X[cl == g].T @ e[cl == g]) for g in range(12))
        oracle = bread @ meat @ bread * (12 / 11) * (n - 1) / (n - k)
        np.testing.assert_allclose(fit.cov, oracle, rtol=1e-8)


def planted_panel(n_ent=8, months=24, per=4, seed=0, noise=0.05):
    """Log-form panel with entity, month, year and entity x month effects."""
    rng = np.random.default_rng(seed)
    rows = []
    for e in range(n_ent):
        for m in range(months):
            for _ in range(per):
                rows.append((f"E{e}", m % 12 + 1, 2019 + m // 12))
    df = pd.DataFrame(rows, columns=["plant_id", "month_index", "year_index"])
    n = len(df)
    beta = dict(zip(FULL_REGRESSORS, [1.5, -0.2, -0.3, 0.1, 0.05, -0.05, 0.2, -0.1, 0.02]))
    for r in FULL_REGRESSORS:
        df[r] = rng.normal(size=n)
    df["D_resid"] = rng.normal(size=n)
    fe = {k: rng.normal(size=100) for k in ("e", "m", "y", "em")}
    ent = df["plant_id"].str[1:].astype(int).to_numpy()
    lin = sum(beta[r] * df[r] for r in FULL_REGRESSORS)
    lin = lin + fe["e"][ent] + fe["m"][df["month_index"]] + fe["y"][df["year_index"] - 2019] + fe["em"][(ent * 12 + df["month_index"]) % 100]
    df["y_generation"] = lin + rng.normal(0, noise, n)
    df["y_emissions"] = df["y_generation"] + rng.normal(0, noise, n)
    df["y_ei"] = df["y_emissions"] - df["y_generation"]
    return df, beta


def dummy_fit(df, spec):
    cols = [df[list(spec.regressors)].to_numpy()]
    labels = {"entity": df["plant_id"], "month": df["month_index"], "year": df["year_index"],
              "entity_month": df["plant_id"] + "|" + df["month_index"].astype(str)}
    for g in spec.fe_groups:
        cols.append(dummies(labels[g]))
    X = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(X, df[spec.dependent_column].to_numpy(), rcond=None)
    return dict(zip(spec.regressors, beta[: len(spec.regressors)]))


class TestFitPanel:
    @pytest.mark.parametrize("spec_id", ["M1", "M8", "M9"])
    def test_fwl_equivalence(self, spec_id):
        df, _ = planted_panel()
        spec = design_spec(spec_id)
        fit = fit_panel(df, spec)
        oracle = dummy_fit(df, spec)
        for r in spec.regressors:
            assert fit.coefficients[r] == pytest.approx(oracle[r], rel=1e-8, abs=1e-12)

    def test_m1_vs_m9(self):
        df, beta = planted_panel()
        f1 = fit_panel(df, design_spec("M1"))
        f9 = fit_panel(df, design_spec("M9"))
        assert f1.coefficients != f9.coefficients
        assert f1.fe_group_count == 4 and f9.fe_group_count == 3
        assert f1.fe_groups["entity_month"] == 8 * 12

    def test_single_plant_entity_fe_matches_demeaned_ols(self):
        df, _ = planted_panel(n_ent=1)
        spec = DesignSpec("X", "generation", ("G", "S"), fe_entity=True, fe_month=False, fe_year=False, fe_entity_month=False)
        fit = fit_panel(df, spec)
        X = df[["G", "S"]].to_numpy()
        y = df["y_generation"].to_numpy()
        beta, *_ = np.linalg.lstsq(X - X.mean(0), y - y.mean(), rcond=None)
        assert [fit.coefficients["G"], fit.coefficients["S"]] == pytest.approx(list(beta), rel=1e-10)

    def test_scale_equivariance(self):
        df, _ = planted_panel()
        spec = design_spec("M1")
        base = fit_panel(df, spec)
        shifted = df.copy()
        shifted["S"] = shifted["S"] + math.log(37.5)  # ln(c * S)
        moved = fit_panel(shifted, spec)
        for r in spec.regressors:
            assert moved.coefficients[r] == pytest.approx(base.coefficients[r], rel=1e-9, abs=1e-12)

    def test_permutation_invariance(self):
        df, _ = planted_panel()
        spec = design_spec("M9")
        a = fit_panel(df, spec)
        b = fit_panel(df.sample(frac=1.0, random_state=3).reset_index(drop=True), spec)
        for r in spec.regressors:
            assert b.coefficients[r] == pytest.approx(a.coefficients[r], rel=1e-10)
            assert b.std_errors[r] == pytest.approx(a.std_errors[r], rel=1e-10)
        assert (a.n_obs, a.dof_absorbed) == (b.n_obs, b.dof_absorbed)
        assert b.r_squared == pytest.approx(a.r_squared, rel=1e-12)

    def test_r2_non_decreasing_in_nested_specs(self):
        df, _ = planted_panel()
        for small in ("M2", "M3", "M4", "M5", "M7"):
            assert fit_panel(df, design_spec(small)).r_squared <= fit_panel(df, design_spec("M1")).r_squared + 1e-12

    def test_fit_result_invariants(self):
        df, _ = planted_panel()
        fit = fit_panel(df, design_spec("M1"), se="cluster")
        assert 0.0 <= fit.r_squared <= 1.0
        assert fit.n_obs > len(fit.coefficients)
        assert set(fit.coefficients) == set(FULL_REGRESSORS) == set(fit.std_errors)
        assert fit.se_mode == "cluster" and fit.alt_se_mode == "hc1"
        back = FitResult.from_dict(fit.to_dict())
        assert back.coefficients == fit.coefficients

    def test_collinear_regressor_reported(self):
        df, _ = planted_panel()
        df["W_ramp"] = df["month_index"] * 0.1  # constant within entity x month
        fit = fit_panel(df, design_spec("M1"))
        assert fit.collinear_dropped == ["W_ramp"]
        assert math.isnan(fit.coefficients["W_ramp"])

    def test_constant_dependent_is_error(self):
        df, _ = planted_panel()
        df["y_ei"] = 0.0
        with pytest.raises(EstimationError):
            fit_panel(df, design_spec("M1", "intensity"))

    def test_all_specs_run(self):
        df, _ = planted_panel()
        for sid in SPEC_IDS:
            assert fit_panel(df, design_spec(sid)).n_obs > 0

    def test_unknown_spec(self):
        with pytest.raises(DomainError):
            design_spec("M10")


def hourly_rows(n=500, seed=0, coef=-0.5):
    rng = np.random.default_rng(seed)
    ts = pd.date_range("2021-01-01", periods=n, freq="h", tz="Etc/GMT+8")
    df = pd.DataFrame({"plant_id": "P", "timestamp": ts, "month_index": ts.month, "year_index": ts.year})
    for r in FULL_REGRESSORS:
        df[r] = np.exp(rng.normal(3, 0.5, n))
    df["D_resid"] = np.exp(rng.normal(3, 0.5, n))
    df["y_generation"] = 7.0 * df["S"] ** coef
    df["y_emissions"] = df["y_generation"] * 0.4
    df["y_ei"] = 0.4
    return df


class TestPlantHourly:
    def test_exact_solar_relation(self):
        logged, _ = log_transform(hourly_rows())
        fit = fit_plant_hourly(logged, design_spec("M1"))
        assert fit.coefficients["S"] == pytest.approx(-0.5, rel=1e-8)
        assert fit.plant_id == "P"
        assert "entity" not in fit.fe_groups

    def test_short_plant_skipped(self):
        logged, _ = log_transform(hourly_rows(n=50))
        with pytest.raises(InsufficientDataError):
            fit_plant_hourly(logged, design_spec("M1"))
        fits, skipped = fit_plants_hourly({"P": logged, "Q": log_transform(hourly_rows(seed=1))[0].assign(plant_id="Q")}, design_spec("M1"))
        assert [f.plant_id for f in fits] == ["Q"]
        assert "P" in skipped

    def test_fleet_mean_recovers_planted_mean(self):
        designs, planted = hourly_fleet(seed=9, n_plants=20, days=60)
        logged = {p: log_transform(d)[0] for p, d in designs.items()}
        fits, skipped = fit_plants_hourly(logged, design_spec("M1"), threads=2)
        assert not skipped
        est = np.mean([f.coefficients["G"] for f in fits])
        truth = np.mean([planted[f.plant_id]["G"] for f in fits])
        assert est == pytest.approx(truth, abs=0.01)
        for f in fits:
            assert f.coefficients["S"] == pytest.approx(planted[f.plant_id]["S"], abs=0.01)

    def test_threads_do_not_change_results(self):
        designs, _ = hourly_fleet(seed=2, n_plants=5, days=20)
        logged = {p: log_transform(d)[0] for p, d in designs.items()}
        a, _ = fit_plants_hourly(logged, design_spec("M1"), threads=1)
        b, _ = fit_plants_hourly(logged, design_spec("M1"), threads=3)
        assert [f.to_dict() for f in a] == [f.to_dict() for f in b]


def _fit(coef, **kw):
    base = dict(spec_id="M1", dependent="generation", region="CAISO", coefficients={"S": coef},
                std_errors={"S": 0.1}, r_squared=0.5, n_obs=100, se_mode="hc1")
    base.update(kw)
    return FitResult(**base)


class TestCoefficientDistribution:
    def test_mean_sd(self):
        d = coefficient_distribution([_fit(-1.0), _fit(0.0), _fit(1.0)], "S")
        assert (d.mean, d.sd) == (0.0, 1.0)
        assert d.histogram["count"].sum() == 3
        assert len(d.kde) > 0

    def test_single_fit(self):
        d = coefficient_distribution([_fit(0.3)], "S")
        assert math.isnan(d.sd) and d.kde.empty

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=40))
    def test_quantiles_match_sorted_oracle(self, vals):
        d = coefficient_distribution([_fit(v) for v in vals], "S", references={"external": -0.41})
        s = sorted(vals)
        for p, q in d.quantiles.items():
            h = (len(s) - 1) * p
            i = int(h)
            j = min(i + 1, len(s) - 1)
            assert q == pytest.approx(s[i] + (h - i) * (s[j] - s[i]), abs=1e-12)
            assert q == quantile(vals, p)
        assert d.references == {"external": -0.41}

    def test_kde_integrates_to_one(self):
        vals = np.random.default_rng(0).normal(size=50)
        d = coefficient_distribution([_fit(float(v)) for v in vals], "S", kde_points=2000)
        assert np.trapezoid(d.kde["density"], d.kde["x"]) == pytest.approx(1.0, abs=2e-3)


class TestCheckPair:
    def test_mismatches(self):
        a = _fit(0.1)
        for kw in (dict(spec_id="M2"), dict(region="ERCOT"), dict(n_obs=99)):
            with pytest.raises(ConsistencyError):
                check_pair(a, dataclasses.replace(a, **kw))
        check_pair(a, dataclasses.replace(a, dependent="intensity"))
