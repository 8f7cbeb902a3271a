import math

import numpy as np
import pytest
from scipy import stats

from remlab.env import (
    BrownianLaw,
    Environment1D,
    ExtentError,
    FactorizationError,
    GaussianKernelLaw,
    GridSpec,
    JumpLaw,
    LevyLaw,
    LevyTriplet,
    Kernel,
    ZeroEnvironment,
    extrema,
    product_environment,
    sample_brownian_2sided,
    sample_gaussian_field,
    sample_levy_2sided,
    scale_transform,
)
from remlab.env.gaussian import GaussianFieldSampler, factorize_covariance
from remlab.env.levy import CLASS_LARGE_NEGATIVE, CLASS_LARGE_POSITIVE, CLASS_MIDDLE
from remlab.io import read_environment, write_environment
from remlab.rng import substream


def linear(L=4.0, h=0.01):
    return Environment1D.from_function(lambda x: x, L, h)


class TestEnvironment1D:
    def test_origin_pinned(self):
        with pytest.raises(ValueError):
            Environment1D.from_function(lambda x: x + 1.0, 1.0, 0.1)

    def test_grid_checks(self):
        with pytest.raises(ValueError):
            Environment1D(np.array([-1.0, 0.5, 0.0, 1.0]), np.zeros(4))
        with pytest.raises(ValueError):
            Environment1D(np.array([-1.0, 0.0, 2.0]), np.zeros(3))

    def test_evaluation_outside_extent(self):
        env = linear()
        with pytest.raises(ExtentError):
            env(4.5)
        assert env(1.25) == pytest.approx(1.25)


class TestBrownian:
    def test_pinned_and_deterministic(self):
        a = sample_brownian_2sided(1, 8.0, 2 ** -10)
        b = sample_brownian_2sided(1, 8.0, 2 ** -10)
        assert a(0.0) == 0.0
        assert np.array_equal(a.values, b.values)

    def test_increment_variance(self):
        h = 2 ** -10
        env = sample_brownian_2sided(1, 8.0, h)
        inc = np.diff(env.values)
        se = h * math.sqrt(2 / inc.size)
        assert abs(inc.var() - h) < 4 * se

    def test_semi_selfsimilar_in_law(self):
        r = 1.5
        law = BrownianLaw(r=r, alpha=0.5)
        grid, rows = law.sample_rows(substream(11, 1), 2.0, 0.01, 10_000)
        w1 = rows[:, np.searchsorted(grid, 1.0)]
        grid2, rows2 = law.sample_rows(substream(12, 1), 2.0, 0.01, 10_000)
        tw1 = r ** -0.5 * np.array([np.interp(r, grid2, row) for row in rows2])
        assert stats.ks_2samp(w1, tw1).pvalue > 0.01

    def test_law_validation(self):
        with pytest.raises(ValueError):
            BrownianLaw(r=1.0)
        with pytest.raises(ValueError):
            BrownianLaw(alpha=0.0)


class TestLevy:
    def test_pure_drift_zero(self):
        env = sample_levy_2sided(LevyTriplet(), 0, 2.0, 0.01)
        assert np.all(env.values == 0)

    def test_stable_two_is_gaussian(self):
        law = LevyLaw(triplet=LevyTriplet(stable_index=2.0))
        grid, rows = law.sample_rows(substream(3, 1), 1.0, 0.01, 10_000)
        assert stats.kstest(rows[:, -1], "norm").pvalue > 0.01

    def test_compound_poisson_count(self):
        tr = LevyTriplet(compound=((1.0, JumpLaw("fixed", 2.0)),))
        grid, rows = LevyLaw(triplet=tr).sample_rows(substream(4, 1), 1.0, 0.01, 100_000)
        counts = rows[:, -1] / 2.0
        assert abs(counts.mean() - 1.0) < 3 * math.sqrt(1.0 / counts.size)

    def test_jump_classes_partition(self):
        tr = LevyTriplet(compound=((5.0, JumpLaw("normal", 0.0, 2.0)),), eps=0.5)
        env = LevyLaw(triplet=tr).sample(9, 5.0, 0.01)
        for side in env.metadata["jumps"].values():
            sizes = np.asarray(side["size"])
            cls = np.asarray(side["class"])
            assert np.all((cls == CLASS_LARGE_POSITIVE) == (sizes > 0.5))
            assert np.all((cls == CLASS_LARGE_NEGATIVE) == (sizes < -1.0))
            assert np.all((cls == CLASS_MIDDLE) == ((sizes >= -1.0) & (sizes <= 0.5)))

    def test_triplet_validation(self):
        with pytest.raises(ValueError):
            LevyTriplet(stable_index=2.5)
        with pytest.raises(ValueError):
            LevyTriplet(compound=((-1.0, JumpLaw()),))
        with pytest.raises(ValueError):
            LevyTriplet(eps=0.0)


class TestGaussianField:
    def test_brox_kernel_marginal_variance(self):
        law = GaussianKernelLaw(kernel="brox")
        grid, rows = law.sample_rows(substream(5, 1), 2.0, 0.05, 10_000)
        for x in (-1.5, 0.5, 2.0):
            v = rows[:, np.searchsorted(grid, x - 1e-9)]
            se = abs(x) * math.sqrt(2 / v.size)
            assert abs(v.var() - abs(x)) < 3 * se
        assert np.all(rows[:, np.searchsorted(grid, 0.0)] == 0)

    def test_brox_kernel_covariance(self):
        law = GaussianKernelLaw(kernel="brox")
        grid, rows = law.sample_rows(substream(6, 1), 2.0, 0.05, 10_000)
        a = rows[:, np.searchsorted(grid, 0.5 - 1e-9)]
        b = rows[:, np.searchsorted(grid, 1.5 - 1e-9)]
        c = rows[:, np.searchsorted(grid, -1.0 - 1e-9)]
        n = a.size
        # Var(ab) = Var a Var b + Cov^2 for centred Gaussians
        assert abs(np.mean(a * b) - 0.5) < 3 * math.sqrt((0.5 * 1.5 + 0.25) / n)
        assert abs(np.mean(a * c)) < 3 * math.sqrt(0.5 / n)

    def test_zero_kernel(self):
        env = sample_gaussian_field("zero", GridSpec(2.0, 0.1), 0)
        assert np.all(env.values == 0)

    def test_two_dimensional_field(self):
        env = sample_gaussian_field("levy_brownian2", GridSpec(1.0, 0.25, 2), 3)
        assert env.dim == 2
        assert env(np.zeros(2)) == 0.0

    def test_non_psd_rejected(self):
        with pytest.raises(FactorizationError):
            factorize_covariance(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_kernel_dimension_mismatch(self):
        with pytest.raises(ValueError):
            GaussianFieldSampler("brox", GridSpec(1.0, 0.1, 2))


class TestScaleTransform:
    def test_identity(self):
        env = linear()
        assert scale_transform(env, 2.0, 1.0, 0) is env

    def test_linear_fixed_point(self):
        env = Environment1D.from_function(lambda x: x, 40.0, 0.01)
        T3 = scale_transform(env, 2.0, 1.0, 3)
        xs = np.linspace(-4, 4, 17)
        assert np.allclose(T3(xs), xs, atol=1e-12)

    def test_quadratic(self):
        env = Environment1D.from_function(lambda x: x ** 2, 10.0, 2 ** -8)
        T = scale_transform(env, 2.0, 1.0, 1)
        xs = np.linspace(-2, 2, 9)
        assert np.allclose(T(xs), 2 * xs ** 2, atol=1e-4)

    def test_composition(self):
        env = sample_brownian_2sided(2, 40.0, 0.01)
        r, a = 1.5, 0.5
        T23 = scale_transform(scale_transform(env, r, a, 2), r, a, 3)
        T5 = scale_transform(env, r, a, 5)
        xs = np.linspace(-4, 4, 101)
        assert np.allclose(T23(xs), T5(xs), atol=1e-12)

    def test_outside_scaled_extent(self):
        env = linear()
        with pytest.raises(ExtentError):
            scale_transform(env, 2.0, 1.0, 2)(1.5)


class TestExtrema:
    def test_zero(self):
        assert extrema(ZeroEnvironment(1), 0.0, 3.0) == (0.0, 0.0)

    def test_linear(self):
        assert linear().extrema(1.0, 4.0) == (4.0, -4.0)

    def test_brute_force(self):
        env = sample_brownian_2sided(3, 10.0, 0.01)
        a, b = 1.0, 2.25
        hi, lo = env.extrema(a, b)
        mask = (np.abs(env.grid) >= a) & (np.abs(env.grid) <= b)
        vals = np.concatenate([env.values[mask], env(np.array([-b, -a, a, b]))])
        assert hi == vals.max() and lo == vals.min()

    def test_interpolated_boundary(self):
        env = Environment1D(np.array([-2.0, 0.0, 2.0]), np.array([2.0, 0.0, 2.0]))
        assert env.extrema(0.5, 1.0) == (1.0, 0.5)


class TestProduct:
    def test_zero_components(self):
        z = Environment1D.from_function(lambda x: 0 * x, 2.0, 0.1)
        env = product_environment([z, z])
        assert env(np.array([0.3, -1.2])) == 0.0

    def test_signs_cancel(self):
        a = Environment1D.from_function(lambda x: x, 2.0, 0.1)
        b = Environment1D.from_function(lambda x: -x, 2.0, 0.1)
        assert product_environment([a, b])(np.array([1.0, 1.0])) == pytest.approx(0.0)

    def test_summation(self):
        comps = [sample_brownian_2sided(s, 5.0, 0.01) for s in (1, 2, 3)]
        env = product_environment(comps)
        pts = np.random.default_rng(0).uniform(-5, 5, (100, 3))
        expect = sum(c(pts[:, j]) for j, c in enumerate(comps))
        assert np.allclose(env(pts), expect, atol=1e-14)

    def test_product_extrema_brute_force(self):
        comps = [sample_brownian_2sided(s, 3.0, 0.05) for s in (4, 5)]
        env = product_environment(comps)
        hi, lo = env.extrema(0.5, 2.0)
        g = comps[0].grid
        X, Y = np.meshgrid(g, g, indexing="ij")
        R = np.hypot(X, Y)
        mask = (R >= 0.5) & (R <= 2.0)
        vals = (comps[0].values[:, None] + comps[1].values[None, :])[mask]
        assert hi >= vals.max() - 1e-12 and lo <= vals.min() + 1e-12


class TestEnvironmentFiles:
    def test_roundtrip(self, tmp_path):
        env = sample_brownian_2sided(7, 3.0, 0.01)
        write_environment(env, tmp_path / "env.csv")
        back = read_environment(tmp_path / "env.csv")
        assert np.array_equal(back.values, env.values)
        assert back.metadata["seed"] == 7

    def test_product_files(self, tmp_path):
        env = product_environment([sample_brownian_2sided(s, 1.0, 0.1) for s in (1, 2)])
        paths = write_environment(env, tmp_path / "env.csv")
        assert [p.name for p in paths] == ["env_1.csv", "env_2.csv", "env.json"]


def test_kernel_registry_rejects_unknown():
    from remlab.env import get_kernel

    with pytest.raises(KeyError):
        get_kernel("no-such-kernel")
    assert isinstance(get_kernel("brox"), Kernel)
