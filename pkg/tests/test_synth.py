import numpy as np
import pytest

from anomattr import Injection, Interval, SynthSpec, generate
from anomattr.errors import ConfigError
from anomattr.synth import spectral_radius


def var1_spec(**kw):
    defaults = dict(
        n=2000,
        d=2,
        coeffs=(np.array([[0.5, 0.1], [0.0, 0.4]]),),
        seed=4,
    )
    defaults.update(kw)
    return SynthSpec(**defaults)


class TestSpecValidation:
    def test_unstable_coefficients_report_radius(self):
        with pytest.raises(ConfigError, match="spectral radius"):
            SynthSpec(n=100, d=1, coeffs=(np.array([[1.01]]),))

    def test_spectral_radius_values(self):
        assert spectral_radius((), 3) == 0.0
        assert np.isclose(spectral_radius((np.array([[0.9]]),), 1), 0.9)
        # VAR(2): x_t = 0.5 x_{t-1} + 0.3 x_{t-2}; companion roots of z^2-0.5z-0.3
        roots = np.roots([1, -0.5, -0.3])
        assert np.isclose(
            spectral_radius((np.array([[0.5]]), np.array([[0.3]])), 1),
            np.abs(roots).max(),
        )

    def test_anomaly_bounds_checked(self):
        with pytest.raises(ConfigError):
            var1_spec(anomalies=(Injection(Interval(1990, 2010), (0,), "mean_shift", 1.0),))
        with pytest.raises(ConfigError):
            var1_spec(anomalies=(Injection(Interval(0, 10), (5,), "mean_shift", 1.0),))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError, match="kind"):
            Injection(Interval(0, 10), (0,), "spike", 1.0)

    def test_innovation_cov_must_be_pd(self):
        with pytest.raises(ConfigError):
            var1_spec(innovation_cov=np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestGenerate:
    def test_pure_noise_is_uncorrelated(self):
        spec = SynthSpec(n=10000, d=3, seed=1)
        series, _ = generate(spec)
        corr = np.corrcoef(series.values.T)
        off = corr[~np.eye(3, dtype=bool)]
        assert np.abs(off).max() < 0.05

    def test_mean_shift_magnitude(self):
        iv = Interval(1000, 1200)
        spec = var1_spec(
            n=10000, anomalies=(Injection(iv, (0,), "mean_shift", 4.0),), seed=8
        )
        series, _ = generate(spec)
        clean, _ = generate(var1_spec(n=10000, seed=8))
        std = clean.values[:, 0].std()
        shift = series.values[iv.a : iv.b, 0].mean() - clean.values[iv.a : iv.b, 0].mean()
        assert abs(shift - 4.0 * std) / (4.0 * std) < 0.10

    def test_zero_magnitude_is_identity(self):
        iv = Interval(500, 600)
        with_inj = var1_spec(anomalies=(Injection(iv, (0,), "mean_shift", 0.0),))
        without = var1_spec()
        s1, _ = generate(with_inj)
        s2, _ = generate(without)
        assert np.array_equal(s1.values, s2.values)

    def test_unit_variance_scale_is_identity(self):
        iv = Interval(500, 600)
        with_inj = var1_spec(anomalies=(Injection(iv, (0,), "variance_scale", 1.0),))
        s1, _ = generate(with_inj)
        s2, _ = generate(var1_spec())
        assert np.array_equal(s1.values, s2.values)

    def test_seed_determinism(self):
        spec = var1_spec(anomalies=(Injection(Interval(100, 200), (1,), "correlation_break"),))
        s1, _ = generate(spec)
        s2, _ = generate(spec)
        assert np.array_equal(s1.values, s2.values)

    def test_mean_shift_locality(self):
        iv = Interval(300, 400)
        injected, _ = generate(var1_spec(anomalies=(Injection(iv, (0,), "mean_shift", 3.0),)))
        clean, _ = generate(var1_spec())
        outside = np.ones(2000, dtype=bool)
        outside[iv.a : iv.b] = False
        assert np.array_equal(injected.values[outside], clean.values[outside])
        assert np.array_equal(injected.values[iv.a : iv.b, 1], clean.values[iv.a : iv.b, 1])

    def test_correlation_break_preserves_marginals(self):
        iv = Interval(300, 500)
        injected, _ = generate(
            var1_spec(anomalies=(Injection(iv, (0, 1), "correlation_break"),))
        )
        clean, _ = generate(var1_spec())
        for j in range(2):
            assert np.array_equal(
                np.sort(injected.values[iv.a : iv.b, j]),
                np.sort(clean.values[iv.a : iv.b, j]),
            )
        # but the permutation destroys lag-1 autocorrelation inside the interval
        seg_c = clean.values[iv.a : iv.b, 0]
        seg_i = injected.values[iv.a : iv.b, 0]
        auto_c = np.corrcoef(seg_c[:-1], seg_c[1:])[0, 1]
        auto_i = np.corrcoef(seg_i[:-1], seg_i[1:])[0, 1]
        assert auto_c > 0.3
        assert abs(auto_i) < 0.2

    def test_correlation_break_locality(self):
        iv = Interval(300, 500)
        injected, _ = generate(
            var1_spec(anomalies=(Injection(iv, (0,), "correlation_break"),))
        )
        clean, _ = generate(var1_spec())
        outside = np.ones(2000, dtype=bool)
        outside[iv.a : iv.b] = False
        assert np.array_equal(injected.values[outside], clean.values[outside])

    def test_variance_scale_grows_local_spread(self):
        iv = Interval(500, 900)
        injected, _ = generate(
            var1_spec(anomalies=(Injection(iv, (0,), "variance_scale", 3.0),), seed=12)
        )
        clean, _ = generate(var1_spec(seed=12))
        inside_ratio = injected.values[iv.a : iv.b, 0].std() / clean.values[iv.a : iv.b, 0].std()
        assert inside_ratio > 2.0

    def test_burn_in_independence_of_output_length(self):
        a, _ = generate(var1_spec(n=500, seed=3))
        b, _ = generate(var1_spec(n=700, seed=3))
        assert np.array_equal(a.values, b.values[:500])
