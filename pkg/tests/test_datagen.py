import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpscan._seeding import make_rng
from cpscan.datagen import (
    FAMILIES,
    GeneratorSpec,
    build_mlp_models,
    companion,
    gen_mlp_piecewise,
    gen_var,
    generate,
    lv_rhs,
    mean_shift_toy,
    place_change_points,
    rk4_step,
    simulate_lotka_volterra,
    simulate_nonlinear_var,
    simulate_var,
    spectral_radius,
)
from cpscan.exceptions import ConfigurationError
from cpscan.neural import forward


def _small(family, **kw):
    base = dict(family=family, p=6, h=3, N=2, gap_range=(60, 90), seed=3)
    base.update(kw)
    return GeneratorSpec(**base)


class TestPlacement:
    def test_mean_length_matches_expectation(self):
        # 31 gaps uniform on {300, ..., 1500} average 31 * 900 = 27900 rows
        totals = [place_change_points((300, 1500), 30, make_rng(11, k))[1] for k in range(200)]
        assert abs(np.mean(totals) - 27900) <= 0.05 * 27900

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 50), st.integers(0, 60), st.integers(0, 12), st.integers(0, 2**31))
    def test_gaps_within_range(self, lo, extra, N, seed):
        tau, T = place_change_points((lo, lo + extra), N, np.random.default_rng(seed))
        gaps = np.diff([0, *tau, T])
        assert len(tau) == N
        assert gaps.min() >= lo and gaps.max() <= lo + extra


class TestMlpPiecewise:
    def test_noiseless_replay(self):
        spec = _small("mlp_piecewise", sigma=0.0)
        ds, models = gen_mlp_piecewise(spec, return_models=True)
        bounds = [0, *ds.true_change_points, ds.n_rows]
        for j in range(models.n_segments):
            a, b = bounds[j], bounds[j + 1]
            np.testing.assert_array_equal(ds.Y[a:b], forward(models.segment_model(j), ds.X[a:b]))

    def test_noise_variance(self):
        spec = _small("mlp_piecewise", sigma=0.7, N=3, gap_range=(3000, 3000))
        ds, models = gen_mlp_piecewise(spec, return_models=True)
        clean = gen_mlp_piecewise(GeneratorSpec(**{**spec.to_dict(), "sigma": 0.0}))
        resid = ds.Y - clean.Y
        assert abs(resid.var() - 0.49) <= 0.05 * 0.49

    def test_fixed_signal_holds_on_fresh_inputs(self):
        spec = GeneratorSpec(family="mlp_piecewise", N=2, gap_range=(50, 60), signal=50.0,
                             seed=5, sigma=0.0)
        models = build_mlp_models(spec)
        X = np.random.default_rng(999).standard_normal((5000, spec.p))
        for j in range(1, models.n_segments):
            gap = forward(models.segment_model(j), X) - forward(models.segment_model(j - 1), X)
            fresh = np.mean(np.sum(gap ** 2, axis=1))
            assert abs(fresh - 50.0) <= 5.0
        np.testing.assert_allclose(models.signals, 50.0, rtol=1e-6)

    def test_default_hidden_width(self):
        assert GeneratorSpec(family="mlp_piecewise", p=40).generator_hidden == (10, 10)

    def test_var1_inputs_are_standardized(self):
        ds = generate(_small("mlp_piecewise", inputs="var1"))
        np.testing.assert_allclose(ds.X.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(ds.X.std(axis=0), 1, atol=1e-12)

    def test_fan_in_scaling_is_a_constant_factor(self):
        # bias-free ReLU networks are positively homogeneous, so per-layer
        # weight scaling multiplies the output by the product of the scales
        unit = generate(_small("mlp_piecewise", sigma=0.0))
        fan = generate(_small("mlp_piecewise", sigma=0.0, weight_scale="fan_in"))
        spec = _small("mlp_piecewise")
        widths = (spec.p, *spec.generator_hidden)
        np.testing.assert_allclose(fan.Y, unit.Y / math.sqrt(np.prod(widths)), rtol=1e-10,
                                   atol=1e-12)

    def test_bad_weight_scale(self):
        with pytest.raises(ConfigurationError):
            _small("mlp_piecewise", weight_scale="xavier")

    def test_determinism(self):
        a, b = generate(_small("mlp_piecewise")), generate(_small("mlp_piecewise"))
        np.testing.assert_array_equal(a.Y, b.Y)
        c = generate(_small("mlp_piecewise", seed=4))
        assert not np.array_equal(a.Y, c.Y)


class TestVar:
    def test_geometric_decay(self):
        out = simulate_var([[0.5 * np.eye(2)]], [], 10, 0.0, np.random.default_rng(0),
                           init=np.ones(2))
        expected = 0.5 ** np.arange(1, 11)
        np.testing.assert_allclose(out, np.column_stack([expected, expected]), rtol=0, atol=1e-15)

    def test_spectral_radius_bound(self):
        for seed in range(5):
            _, ds = gen_var(_small("var", h=5, lags=3, seed=seed))
            assert max(ds.meta["spectral_radii"]) <= 0.9 + 1e-9

    def test_companion_identity(self):
        rng = np.random.default_rng(1)
        h, q = 3, 4
        coefs = [rng.standard_normal((h, h)) for _ in range(q)]
        hist = rng.standard_normal((q, h))
        stacked = companion(coefs) @ hist.reshape(-1)
        direct = sum(A @ hist[k] for k, A in enumerate(coefs))
        np.testing.assert_allclose(stacked[:h], direct, atol=1e-10)
        np.testing.assert_allclose(stacked[h:], hist[:-1].reshape(-1), atol=1e-10)

    def test_lagged_shape_and_truth(self):
        raw, ds = gen_var(_small("var", h=4, lags=4))
        assert ds.X.shape == (raw.shape[0] - 4, 16)
        assert ds.true_change_points == [c - 4 for c in ds.meta["raw_tau"]]
        np.testing.assert_array_equal(ds.X[0, :4], raw[3])

    def test_lag_order_too_long(self):
        with pytest.raises(ConfigurationError):
            simulate_var([[np.eye(1)] * 5], [], 5, 0.0, np.random.default_rng(0))


class TestNonlinearVar:
    def test_no_drive_reduces_to_linear(self):
        spec = _small("nonlinear_var", h=4, factor_dim=3, sigma=0.0)
        x0 = np.arange(1.0, 5.0)
        x, tau, info = simulate_nonlinear_var(spec, lambda_scale=0.0, x0=x0)
        bounds = [0, *tau, x.shape[0]]
        prev = x0
        for j, seg in enumerate(info["segments"]):
            for t in range(bounds[j], bounds[j + 1]):
                prev = seg["A"] @ prev
                np.testing.assert_allclose(x[t], prev, rtol=1e-12, atol=1e-300)

    def test_bounded(self):
        x, _, _ = simulate_nonlinear_var(_small("nonlinear_var", h=5, factor_dim=4))
        assert np.all(np.isfinite(x))
        assert np.abs(x).max() < 1e3


class TestLotkaVolterra:
    def test_logistic_closed_form(self):
        def fun(s):
            return lv_rhs(s, [()], [()], 1.0, 0.0, 0.0, 0.0)

        s = np.array([0.1, 0.5])
        for _ in range(100):
            s = rk4_step(fun, s, 0.01)
        exact = 0.1 * math.e / (1 - 0.1 + 0.1 * math.e)
        assert abs(s[0] - exact) <= 1e-6
        assert s[1] == 0.5  # no prey and zero death rate leave the predator alone

    def test_clamp_and_bounded(self):
        spec = _small("lotka_volterra", p=4, sigma=0.0, gap_range=(40, 50))
        series, tau, parents = simulate_lotka_volterra(spec)
        assert np.all(series >= 1e-6)
        assert np.all(np.isfinite(series)) and series.max() < 1e3
        for px, py in parents:
            for j, prey in enumerate(py):
                assert all(j in px[i] for i in prey)

    def test_dataset_is_lag_one(self):
        spec = _small("lotka_volterra", p=3, sigma=0.0, gap_range=(30, 40))
        ds = generate(spec)
        np.testing.assert_array_equal(ds.X[1:], ds.Y[:-1])


class TestMeanShift:
    def test_toy_levels_and_noise(self):
        ds = mean_shift_toy(seed=1, T_sum=20000, tau=10000, sigma=0.3)
        assert ds.true_change_points == [10000]
        resid = ds.Y[:, 0] - np.r_[np.ones(10000), 2 * np.ones(10000)]
        assert abs(resid.var() - 0.09) <= 0.05 * 0.09
        assert ds.meta["signals"] == [1.0]

    def test_levels_cycle(self):
        ds = generate(GeneratorSpec(family="mean_shift", N=3, gap_range=(10, 10), sigma=0.0,
                                    levels=(0.0, 3.0)))
        np.testing.assert_array_equal(ds.Y[::10, 0], [0, 3, 0, 3])


class TestSpec:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_every_family_generates(self, family):
        ds = generate(_small(family, p=3 if family == "lotka_volterra" else 6,
                             gap_range=(30, 40)))
        assert ds.n_rows > 0 and ds.true_change_points

    def test_round_trip_and_unknown_keys(self):
        spec = _small("var")
        assert GeneratorSpec.from_dict(spec.to_dict()) == spec
        with pytest.raises(ConfigurationError):
            GeneratorSpec.from_dict({"family": "var", "bogus": 1})

    def test_spectral_radius(self):
        assert spectral_radius(np.diag([0.2, -0.7])) == pytest.approx(0.7)
