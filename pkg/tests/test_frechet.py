import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from frechet_anova.distributions import derive_stream, stream_key
from frechet_anova.exceptions import DegenerateError, InputError, ResamplingError
from frechet_anova.frechet import (
    IntervalMethod,
    bootstrap_variance_interval,
    compress,
    frechet_summary,
    stddev_interval,
    variance_interval,
)
from frechet_anova.generators import gen_gaussian_qd_sample
from frechet_anova.spaces import MatrixKind, ObjectSample, midpoint_grid

Z975 = 1.959963984540054


def ks_to_normal(values):
    return stats.kstest(values, "norm").statistic


class TestSummary:
    def test_identical_objects(self):
        s = frechet_summary(ObjectSample.vectors(np.ones((5, 3))))
        assert s.variance == 0.0 and s.sigma_sq == 0.0
        assert s.variance_degenerate and s.sigma_degenerate

    def test_hand_example(self):
        s = frechet_summary(ObjectSample.vectors([0.0, 1.0, 2.0]))
        assert s.mean_object.coords[0] == 1.0
        assert s.variance == pytest.approx(2 / 3, abs=1e-15)
        assert s.sigma_sq == pytest.approx(2 / 9, abs=1e-15)
        assert not s.approximate_mean

    def test_wasserstein_translation(self):
        z = special.ndtri(midpoint_grid(1000))
        s = frechet_summary(ObjectSample.quantiles([z, z + 2.0]))
        assert np.allclose(s.mean_object.values, z + 1.0, atol=1e-14)
        assert s.variance == pytest.approx(1.0, abs=1e-12)

    def test_empty(self):
        with pytest.raises(InputError):
            frechet_summary(ObjectSample.from_distance_matrix(np.zeros((0, 0))))

    def test_generic_medoid_fallback(self):
        x = np.array([0.0, 1.0, 2.0, 10.0])
        d = np.abs(x[:, None] - x[None, :])
        s = frechet_summary(ObjectSample.from_distance_matrix(d))
        assert s.approximate_mean
        assert s.mean_object == 2  # the medoid index
        assert s.variance == pytest.approx((4 + 1 + 0 + 64) / 4)

    def test_generic_with_solver_matches_euclidean(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(30, 2))
        d = np.linalg.norm(x[:, None] - x[None], axis=2)

        def solver(idx):
            m = x[idx].mean(axis=0)
            return m, np.sum((x[idx] - m) ** 2, axis=1)

        generic = frechet_summary(ObjectSample.from_distance_matrix(d, mean_solver=solver))
        direct = frechet_summary(ObjectSample.vectors(x))
        assert not generic.approximate_mean
        assert generic.variance == pytest.approx(direct.variance, rel=1e-12)
        assert generic.sigma_sq == pytest.approx(direct.sigma_sq, rel=1e-12)

    @given(seed=st.integers(0, 2**32 - 1), a=st.floats(0.01, 100), b=st.floats(-50, 50))
    @settings(max_examples=60, deadline=None)
    def test_scale_equivariance_and_translation_invariance(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(20, 3))
        base = frechet_summary(ObjectSample.vectors(x))
        scaled = frechet_summary(ObjectSample.vectors(a * x + b))
        assert scaled.variance == pytest.approx(a * a * base.variance, rel=1e-9)
        assert scaled.sigma_sq == pytest.approx(a ** 4 * base.sigma_sq, rel=1e-8)
        grids = np.sort(x, axis=1)
        gb = frechet_summary(ObjectSample.quantiles(grids))
        gs = frechet_summary(ObjectSample.quantiles(a * grids + b))
        assert gs.variance == pytest.approx(a * a * gb.variance, rel=1e-9)
        assert gs.sigma_sq == pytest.approx(a ** 4 * gb.sigma_sq, rel=1e-8)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 30))
    @settings(max_examples=60, deadline=None)
    def test_non_negative(self, seed, n):
        s = frechet_summary(ObjectSample.vectors(np.random.default_rng(seed).normal(size=(n, 2))))
        assert s.variance >= 0 and s.sigma_sq >= 0


class TestAsymptoticIntervals:
    def test_variance_hand_example(self):
        s = frechet_summary(ObjectSample.vectors([0.0, 1.0, 2.0]))
        ci = variance_interval(s, 0.95)
        half = Z975 * math.sqrt(2 / 9) / math.sqrt(3)
        assert ci.lower == pytest.approx(max(2 / 3 - half, 0.0), abs=1e-9)
        assert ci.upper == pytest.approx(2 / 3 + half, abs=1e-9)
        assert ci.method is IntervalMethod.ASYMPTOTIC_VARIANCE

    def test_lower_clamped(self):
        s = frechet_summary(ObjectSample.vectors([0.0, 0.0, 0.0, 10.0]))
        assert variance_interval(s, 0.99).lower == 0.0

    def test_zero_width_limit(self):
        s = frechet_summary(ObjectSample.vectors([0.0, 1.0, 2.0, 5.0]))
        ci = variance_interval(s, 1e-12)
        assert ci.width < 1e-10
        assert ci.lower <= s.variance <= ci.upper

    def test_stddev_closed_form(self):
        from frechet_anova.frechet import FrechetSummary

        s = FrechetSummary(None, 1.0, 2.0, 100)
        ci = stddev_interval(s, 0.95)
        half = Z975 * math.sqrt(2) / 20
        assert ci.lower == pytest.approx(1 - half, abs=1e-9)
        assert ci.upper == pytest.approx(1 + half, abs=1e-9)

    def test_stddev_center_identity(self):
        s = frechet_summary(ObjectSample.vectors(np.random.default_rng(1).normal(size=50)))
        ci = stddev_interval(s, 1e-9)
        assert ((ci.lower + ci.upper) / 2) ** 2 == pytest.approx(s.variance, rel=1e-12)

    def test_degenerate_errors(self):
        s = frechet_summary(ObjectSample.vectors(np.zeros((4, 1))))
        with pytest.raises(DegenerateError):
            variance_interval(s)
        with pytest.raises(DegenerateError):
            stddev_interval(s)
        # two symmetric points: positive variance, zero spread of squared distances
        s = frechet_summary(ObjectSample.vectors([-1.0, 1.0]))
        with pytest.raises(DegenerateError):
            variance_interval(s)

    @pytest.mark.parametrize("level", [0.0, 1.0, -0.5, 2.0])
    def test_bad_level(self, level):
        s = frechet_summary(ObjectSample.vectors([0.0, 1.0, 3.0]))
        with pytest.raises(InputError):
            variance_interval(s, level)

    def test_needs_two_observations(self):
        s = frechet_summary(ObjectSample.vectors([1.0]))
        with pytest.raises((InputError, DegenerateError)):
            variance_interval(s)

    def test_coverage(self):
        rng = np.random.default_rng(2024)
        hits_v = hits_sd = 0
        for _ in range(1000):
            s = frechet_summary(ObjectSample.vectors(rng.normal(size=500)))
            hits_v += 1.0 in variance_interval(s, 0.95)
            hits_sd += 1.0 in stddev_interval(s, 0.95)
        assert abs(hits_v / 1000 - 0.95) <= 0.025
        assert abs(hits_sd / 1000 - 0.95) <= 0.025


class TestCentralLimit:
    """Standardized variance estimates are close to N(0, 1) in every built-in space."""

    def _standardized(self, draw, v_true, runs=1000, n=500):
        out = np.empty(runs)
        for i in range(runs):
            s = frechet_summary(draw())
            out[i] = math.sqrt(n) * (s.variance - v_true) / math.sqrt(s.sigma_sq)
        return out

    def test_wasserstein(self):
        mu_sd = 0.5
        runs = iter(range(10**6))
        z = self._standardized(
            lambda: gen_gaussian_qd_sample(500, 0.0, mu_sd, 50, derive_stream(0, stream_key("clt", next(runs)))),
            mu_sd ** 2,
        )
        assert ks_to_normal(z) <= 0.06

    def test_frobenius_laplacian(self):
        # a fixed weighted graph whose overall edge weight is U(0, 1); the
        # Frechet variance is ||L0||^2 / 12 exactly
        w0 = np.zeros((5, 5))
        for i, j, wt in [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (3, 4, 1.5), (4, 0, 1.0), (0, 2, 0.7)]:
            w0[i, j] = w0[j, i] = wt
        lap0 = np.diag(w0.sum(axis=1)) - w0
        rng = np.random.default_rng(11)

        def draw():
            return ObjectSample.matrices(rng.uniform(size=(500, 1, 1)) * lap0, MatrixKind.LAPLACIAN)

        z = self._standardized(draw, float(np.sum(lap0 ** 2)) / 12)
        assert ks_to_normal(z) <= 0.06

    def test_euclidean(self):
        d = 3
        rng = np.random.default_rng(12)
        z = self._standardized(lambda: ObjectSample.vectors(rng.normal(size=(500, d))), float(d))
        assert ks_to_normal(z) <= 0.06

    def test_plug_in_mean_effect_vanishes(self):
        # sqrt(n) times the gap between the mean squared distance to the sample
        # mean and to the true mean shrinks as n grows
        rng = np.random.default_rng(13)

        def gap(n):
            vals = []
            for _ in range(200):
                x = rng.normal(size=(n, 2))
                s = frechet_summary(ObjectSample.vectors(x))
                vals.append(math.sqrt(n) * abs(s.variance - np.mean(np.sum(x ** 2, axis=1))))
            return np.mean(vals)

        assert gap(2000) < 0.5 * gap(200)


class TestBootstrapInterval:
    def test_deterministic(self):
        x = ObjectSample.vectors(np.random.default_rng(3).normal(size=60))
        a = bootstrap_variance_interval(x, replicates=200, seed=5)
        b = bootstrap_variance_interval(x, replicates=200, seed=5)
        c = bootstrap_variance_interval(x, replicates=200, seed=6)
        assert (a.lower, a.upper) == (b.lower, b.upper)
        assert (a.lower, a.upper) != (c.lower, c.upper)

    def test_identical_objects(self):
        with pytest.raises(ResamplingError):
            bootstrap_variance_interval(ObjectSample.vectors(np.ones((10, 2))), replicates=100)

    def test_comparable_to_asymptotic(self):
        x = ObjectSample.vectors(np.random.default_rng(4).normal(size=500))
        boot = bootstrap_variance_interval(x, 0.95, 500, seed=1)
        asym = variance_interval(frechet_summary(x), 0.95)
        assert abs(boot.width - asym.width) <= 0.2 * asym.width
        assert boot.method is IntervalMethod.BOOTSTRAP_VARIANCE
        assert boot.replicates == 500

    def test_discarded_counted(self):
        # two distinct objects: some resamples pick a single object and are degenerate
        x = ObjectSample.vectors([0.0, 1.0, 3.0])
        ci = bootstrap_variance_interval(x, replicates=400, seed=0)
        assert ci.discarded > 0
        assert ci.lower <= ci.upper

    def test_resample_size(self):
        x = ObjectSample.vectors(np.random.default_rng(5).normal(size=200))
        small = bootstrap_variance_interval(x, replicates=300, resample_size=50, seed=0)
        assert small.lower <= small.upper

    @pytest.mark.parametrize("kwargs", [{"replicates": 99}, {"resample_size": 1}, {"level": 1.0}])
    def test_bad_arguments(self, kwargs):
        x = ObjectSample.vectors([0.0, 1.0, 3.0])
        with pytest.raises(InputError):
            bootstrap_variance_interval(x, **kwargs)

    def test_compress_preserves_distances(self):
        rng = np.random.default_rng(6)
        base = rng.normal(size=(40, 3)) @ rng.normal(size=(3, 100))
        grids = np.sort(base, axis=1)
        sample = ObjectSample.quantiles(grids)
        small = compress(sample)
        assert small.data.shape[1] <= 40
        assert np.allclose(small.pairwise_distances(), sample.pairwise_distances(), atol=1e-10)
