import math

import numpy as np
import pytest

from novas import (
    DataError,
    ForecastRequest,
    InnovationSource,
    NovasVariant,
    Risk,
    Seed,
    SourceKind,
    Statistic,
    calibrate,
    forecast_json,
    generate,
    innovation_source,
    inverse_step,
    predict,
    simulate_path,
    simulate_paths,
)
from novas.returns import variance_path
from novas.simulate import ModelSpec

from oracles import oracle_welford_variance_path


@pytest.fixture(scope="module")
def fitted():
    y = generate(ModelSpec(model="M3", n=300, seed=Seed(17)))
    return {
        "GE": calibrate(NovasVariant.GE, 0.5, y),
        "GE_NO_A0": calibrate(NovasVariant.GE_NO_A0, 0.5, y),
        "GA": calibrate(NovasVariant.GA, 0.6, y),
        "GA_NO_A0": calibrate(NovasVariant.GA_NO_A0, 0.5, y),
    }


class TestSimulatePath:
    def test_single_step_equals_inverse_step(self, fitted):
        ct = fitted["GE"]
        w = ct.weights
        history = ct.history.values
        lagged = history[-w.order :][::-1] ** 2
        for innovation in (-1.2, 0.4, 2.0):
            expected = inverse_step(innovation, lagged, ct.s2_n, w)
            got = simulate_path(ct, [innovation])
            assert abs(got[0]) == pytest.approx(expected, rel=1e-12)
            assert math.copysign(1, got[0]) == math.copysign(1, innovation)

    def test_zero_innovations_propagate_zero(self, fitted):
        path = simulate_path(fitted["GA_NO_A0"], np.zeros(12))
        assert np.all(path == 0.0)

    def test_purity(self, fitted):
        innovations = np.linspace(-1.5, 1.5, 10)
        a = simulate_path(fitted["GA"], innovations)
        b = simulate_path(fitted["GA"], innovations)
        np.testing.assert_array_equal(a, b)

    def test_batch_matches_single(self, fitted):
        ct = fitted["GE_NO_A0"]
        rng = np.random.default_rng(3)
        draws = rng.normal(size=(6, 8))
        batch = simulate_paths(ct, draws)
        for m in range(6):
            np.testing.assert_allclose(
                simulate_path(ct, draws[m]), batch[m], rtol=1e-12
            )

    def test_variance_recursion_matches_welford_oracle(self, fitted):
        # re-derive the running variance of history + pseudo path and push
        # it through scalar inverse steps; the engine must agree
        ct = fitted["GE"]
        w = ct.weights
        history = ct.history.values.tolist()
        innovations = [0.5, -1.1, 0.9, 1.4, -0.2]
        path = simulate_path(ct, np.array(innovations))
        combined = history + path.tolist()
        s2_seq = [ct.s2_n] + oracle_welford_variance_path(history, path[:-1])
        for k, innovation in enumerate(innovations):
            hist_k = combined[: len(history) + k]
            lagged = np.array(hist_k[-w.order :][::-1]) ** 2
            expected = inverse_step(innovation, lagged, s2_seq[k], w)
            assert abs(path[k]) == pytest.approx(expected, rel=1e-9)

    def test_frozen_variance_mode(self, fitted):
        ct = fitted["GE"]
        innovations = np.full((1, 6), 1.1)
        live = simulate_paths(ct, innovations)[0]
        frozen = simulate_paths(ct, innovations, freeze_variance=True)[0]
        assert not np.allclose(live, frozen)


class TestPredict:
    def test_degenerate_pool_collapses_ensemble(self, fitted):
        ct = fitted["GE_NO_A0"]
        src = InnovationSource(SourceKind.EMPIRICAL, residual_pool=np.array([0.7]))
        req = ForecastRequest(horizon=3, source=src, paths=200, seed=Seed(0))
        result = predict(ct, req)
        assert result.ensemble_mean == pytest.approx(result.ensemble_median, rel=1e-12)
        assert result.point == result.ensemble_mean
        single = simulate_path(ct, np.full(3, 0.7))
        assert result.point == pytest.approx(float(np.mean(single**2)), rel=1e-12)

    def test_l2_aggregate_equals_mean_of_step_predictors(self, fitted):
        # linearity: mean over paths of per-path aggregates == average of
        # the h per-step L2 predictors on the same innovation tensor
        ct = fitted["GA"]
        req = ForecastRequest(
            horizon=5,
            source=innovation_source(ct, SourceKind.TRIMMED_NORMAL),
            paths=500,
            risk=Risk.L2,
            seed=Seed(4),
        )
        result, paths = predict(ct, req, return_paths=True)
        step_l2 = np.mean(paths**2, axis=0)
        assert result.point == pytest.approx(float(step_l2.mean()), rel=1e-12)

    def test_l1_uses_median(self, fitted):
        ct = fitted["GE"]
        req = ForecastRequest(
            horizon=2,
            source=innovation_source(ct, SourceKind.EMPIRICAL),
            paths=301,
            risk=Risk.L1,
            seed=Seed(9),
        )
        result, paths = predict(ct, req, return_paths=True)
        stats = np.mean(paths**2, axis=1)
        assert result.point == float(np.median(stats))
        assert result.ensemble_median == result.point
        assert result.stepwise_l1_aggregate == pytest.approx(
            float(np.mean(np.median(paths**2, axis=0))), rel=1e-12
        )

    def test_seed_reproducibility(self, fitted):
        ct = fitted["GA_NO_A0"]
        req = ForecastRequest(
            horizon=7,
            source=innovation_source(ct, SourceKind.TRIMMED_NORMAL),
            paths=400,
            seed=Seed(123),
        )
        a = predict(ct, req)
        b = predict(ct, req)
        assert a == b

    def test_nonnegative_and_inside_envelope(self, fitted):
        for name, ct in fitted.items():
            for kind in (SourceKind.TRIMMED_NORMAL, SourceKind.EMPIRICAL):
                req = ForecastRequest(
                    horizon=10,
                    source=innovation_source(ct, kind),
                    paths=300,
                    seed=Seed(5),
                )
                result, paths = predict(ct, req, return_paths=True)
                stats = np.mean(paths**2, axis=1)
                assert result.point >= 0.0
                assert stats.min() <= result.ensemble_median <= stats.max()
                assert stats.min() <= result.ensemble_mean <= stats.max()

    def test_squared_step_statistic(self, fitted):
        ct = fitted["GE"]
        req = ForecastRequest(
            horizon=4,
            source=innovation_source(ct, SourceKind.TRIMMED_NORMAL),
            paths=250,
            statistic=Statistic.SQUARED_STEP,
            seed=Seed(2),
        )
        result, paths = predict(ct, req, return_paths=True)
        assert result.point == pytest.approx(float(np.mean(paths[:, -1] ** 2)), rel=1e-12)
        assert result.stepwise_l1_aggregate is None

    def test_pluggable_statistic(self, fitted):
        ct = fitted["GE_NO_A0"]
        req = ForecastRequest(
            horizon=3,
            source=innovation_source(ct, SourceKind.TRIMMED_NORMAL),
            paths=200,
            statistic=lambda paths: np.abs(paths[:, -1]),
            seed=Seed(6),
        )
        result = predict(ct, req)
        assert result.statistic == "<lambda>"
        assert result.point >= 0.0

    def test_min_paths_enforced(self, fitted):
        with pytest.raises(DataError, match="minimum"):
            ForecastRequest(
                horizon=1,
                source=innovation_source(fitted["GE"], SourceKind.TRIMMED_NORMAL),
                paths=50,
            )

    def test_no_a0_paths_bounded_by_stability_envelope(self, fitted):
        # with a0 = 0 and bootstrapped innovations every pseudo value obeys
        # |Y*| <= max|W| * sqrt(alpha * max s2 + sum(lags) * max Y^2) where
        # the maxima run over the whole simulation; re-derive both maxima
        for name in ("GE_NO_A0", "GA_NO_A0"):
            ct = fitted[name]
            w = ct.weights
            req = ForecastRequest(
                horizon=30,
                source=innovation_source(ct, SourceKind.EMPIRICAL),
                paths=300,
                seed=Seed(8),
            )
            result, paths = predict(ct, req, return_paths=True)
            assert np.all(np.isfinite(paths))
            w_max = float(np.abs(ct.residuals).max())
            for m in range(0, 300, 50):
                combined = np.concatenate([ct.history.values, paths[m]])
                s2_max = max(
                    ct.s2_n,
                    max(oracle_welford_variance_path(ct.history.values, paths[m])),
                )
                y2_max = float((combined**2).max())
                envelope = w_max * math.sqrt(
                    w.alpha * s2_max + float(w.lags.sum()) * y2_max
                )
                assert np.abs(paths[m]).max() <= envelope * (1 + 1e-9)

    def test_forecast_json_keys(self, fitted):
        ct = fitted["GE"]
        req = ForecastRequest(
            horizon=2,
            source=innovation_source(ct, SourceKind.TRIMMED_NORMAL),
            paths=150,
            seed=Seed(1),
        )
        payload = forecast_json(predict(ct, req), "GE/mc", "GE", 0.5)
        assert set(payload) >= {
            "method", "variant", "alpha", "horizon", "risk", "statistic",
            "point", "ensemble_mean", "ensemble_median", "M", "seed",
        }
        assert payload["M"] == 150
        assert payload["seed"] == 1
