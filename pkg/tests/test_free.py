import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freemix.classical import classical_sum
from freemix.free import (BranchError, FreeSumQuery, PoleError, cauchy_transform,
                          default_free_grid, free_density_at, free_sum_mc, inverse_cauchy,
                          nfold_cauchy_transform, nfold_free_density, nfold_roots,
                          r_transform_probe, solve_secular)
from freemix.rng import RngSeed
from freemix.spectral import (DensityCurve, GridSpec, Spectrum, density_from_spectrum,
                              ks_distance, moment)

PM1 = Spectrum([1.0, -1.0])


def arcsine(x):
    return 1.0 / (math.pi * math.sqrt(4.0 - x * x))


def secular_residual(s, z, N, w):
    """``|sum_i v_i / (w - v_i) - alpha| / |alpha|`` with one term per atom."""
    v = (N - 1) / (N * s.values - z)
    alpha = -s.m * (N - 1) / N
    return abs(np.sum(v / (w - v)) - alpha) / abs(alpha)


class TestCauchy:
    def test_examples(self):
        assert cauchy_transform(Spectrum([0.0]), 1j) == pytest.approx(-1j)
        assert cauchy_transform(PM1, 2.0) == pytest.approx(2 / 3)

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=10),
           st.floats(-10, 10), st.floats(1e-3, 10))
    def test_herglotz(self, atoms, x, y):
        assert cauchy_transform(Spectrum(atoms), complex(x, y)).imag < 0

    def test_pole(self):
        with pytest.raises(PoleError):
            cauchy_transform(PM1, 1.0)


class TestRoots:
    def test_inside_support(self):
        roots = nfold_roots(PM1, 0.0, 2)
        assert np.any(np.abs(roots.imag) > 1e-6)

    def test_outside_support(self):
        rs = solve_secular(PM1, 3.0, 2)
        assert rs.n_complex == 0 and rs.upper_root() is None

    @pytest.mark.parametrize("z", [-2.5, -1.0, 0.0, 0.3, 1.7, 2.5])
    def test_residual_pm1(self, z):
        for w in nfold_roots(PM1, z, 2):
            assert secular_residual(PM1, z, 2, w) <= 1e-8

    def test_pole_collision(self):
        with pytest.raises(PoleError):
            nfold_roots(PM1, 2.0, 2)

    def test_needs_two_folds(self):
        with pytest.raises(ValueError):
            nfold_roots(PM1, 0.0, 1)

    def test_duplicates_grouped(self):
        big = Spectrum(np.repeat([1.0, -1.0], 100))
        assert nfold_roots(big, 0.3, 2) == pytest.approx(nfold_roots(PM1, 0.3, 2))

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=12, unique=True),
           st.integers(2, 9), st.floats(-1, 1))
    @settings(max_examples=150, deadline=None)
    def test_one_pair_and_backward_stable(self, atoms, N, t):
        s = Spectrum(atoms)
        lo, hi = N * s.values[0] - 1, N * s.values[-1] + 1
        z = lo + (hi - lo) * (t + 1) / 2
        try:
            rs = solve_secular(s, z, N)
        except PoleError:
            return
        assert rs.n_complex <= 2
        assert rs.max_residual <= 1e-8


class TestDensity:
    @pytest.mark.parametrize("x", [0.0, 1.0, -1.0, 1.9, -1.9])
    def test_arcsine(self, x):
        assert free_density_at(PM1, x, 2)[0] == pytest.approx(arcsine(x), abs=1e-6)

    def test_zero_outside(self):
        assert free_density_at(PM1, [2.001, -2.001, 3.0, -7.5], 2).tolist() == [0.0] * 4

    def test_curve_unnormalized(self):
        grid = GridSpec(-2.5, 2.5, 501)
        c = nfold_free_density(FreeSumQuery(PM1, 2, grid), normalize=False)
        assert c(0.0) == pytest.approx(1 / (2 * math.pi), abs=1e-6)
        assert c(1.0) == pytest.approx(1 / (math.pi * math.sqrt(3)), abs=1e-6)
        assert c.meta["raw_integral"] == pytest.approx(c.integral())

    def test_default_normalized(self):
        c = nfold_free_density(FreeSumQuery(PM1, 2))
        assert c.integral() == pytest.approx(1.0, abs=1e-12)

    def test_pole_points_flagged(self):
        grid = GridSpec(-3.0, 3.0, 7)  # hits the poles at +-2
        c = nfold_free_density(FreeSumQuery(PM1, 2, grid), normalize=False)
        flags = [d for d in c.meta["diagnostics"] if d.get("flag") == "pole"]
        assert [d["x"] for d in flags] == [-2.0, 2.0]
        assert c(2.0) == 0.0

    def test_diagnostics_keys(self):
        c = nfold_free_density(FreeSumQuery(PM1, 2, GridSpec(-2.5, 2.5, 11)))
        for d in c.meta["diagnostics"]:
            assert {"x", "n_real", "n_complex", "max_residual"} <= set(d)
            assert d["n_complex"] <= 2

    def test_single_fold_smooths_base(self):
        s = Spectrum([0.0, 1.0, 3.0])
        grid = GridSpec(-2.0, 5.0, 301)
        c = nfold_free_density(FreeSumQuery(s, 1, grid))
        assert np.allclose(c.values, density_from_spectrum(s, grid).values)

    def test_query_validation(self):
        with pytest.raises(ValueError):
            FreeSumQuery(PM1, 0)

    @pytest.mark.parametrize("m,N", [(4, 2), (9, 4), (16, 8), (64, 2)])
    def test_mass_mean_variance(self, m, N):
        s = Spectrum(RngSeed(m * N).generator().normal(size=m))
        c = nfold_free_density(FreeSumQuery(s, N), normalize=False)
        x, f = c.grid, c.values
        assert abs(c.integral() - 1) <= 2e-3
        mass = c.integral()
        mean = np.trapezoid(f * x, x) / mass
        var = np.trapezoid(f * (x - mean) ** 2, x) / mass
        assert abs(mean - N * s.mean()) <= 1e-3 * max(1.0, abs(N * s.mean()))
        assert var == pytest.approx(N * s.variance(), rel=1e-3)

    def test_semicircle_limit(self):
        N = 20
        grid = GridSpec(-2.2 * math.sqrt(N), 2.2 * math.sqrt(N), 801)
        c = nfold_free_density(FreeSumQuery(PM1, N, grid))
        x = c.grid / math.sqrt(N)
        semi = DensityCurve(x, np.sqrt(np.clip(4 - x * x, 0, None)) / (2 * math.pi)).normalized()
        scaled = DensityCurve(x, c.values * math.sqrt(N)).normalized()
        assert ks_distance(scaled, semi) <= 0.05


class TestMonteCarlo:
    def test_constant_shift(self):
        s1 = Spectrum([0.0, 1.0, 5.0])
        out = free_sum_mc(s1, Spectrum([2.0] * 3), 1, 4, RngSeed(0))
        assert np.allclose(out.values, np.repeat(s1.values + 2.0, 4))

    @pytest.mark.parametrize("beta", [1, 2])
    def test_mean_exact(self, beta):
        gen = RngSeed(4).generator()
        s1, s2 = Spectrum(gen.normal(size=7)), Spectrum(gen.normal(size=7))
        out = free_sum_mc(s1, s2, beta, 3, gen)
        assert out.m == 21
        assert moment(out, 1) == pytest.approx(moment(s1, 1) + moment(s2, 1), abs=1e-13)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            free_sum_mc(PM1, Spectrum([0.0]))

    def test_arcsine_cdf(self):
        s = Spectrum(np.repeat([1.0, -1.0], 100))
        atoms = free_sum_mc(s, s, 1, 50, RngSeed(1))
        x = np.sort(atoms.values)
        ecdf = np.arange(1, x.size + 1) / x.size
        exact = 0.5 + np.arcsin(np.clip(x / 2, -1, 1)) / math.pi
        assert np.max(np.abs(ecdf - exact)) <= 0.05


class TestRTransform:
    def test_single_atom(self):
        for w in (0.1 - 0.05j, -0.3 + 0.2j, 0.05):
            assert r_transform_probe(Spectrum([1.7]), w) == pytest.approx(1.7, abs=1e-12)

    @pytest.mark.parametrize("w", [0.05, 0.1, -0.2, 0.15 - 0.1j])
    def test_bernoulli(self, w):
        exact = (np.sqrt(1 + 4 * w * w) - 1) / (2 * w)
        assert r_transform_probe(PM1, w) == pytest.approx(exact, abs=1e-10)

    def test_small_w_is_variance(self):
        assert r_transform_probe(PM1, 1e-3).real == pytest.approx(1e-3, rel=1e-5)

    @pytest.mark.parametrize("N", [2, 3, 6])
    def test_additivity(self, N):
        s = Spectrum(RngSeed(N).generator().normal(size=6))
        for z in (1.0 + 2.0j, -3.0 + 0.7j):
            w = nfold_cauchy_transform(s, z, N)
            assert z - 1 / w == pytest.approx(N * r_transform_probe(s, w), abs=1e-8)

    def test_inverse_cauchy_contains_preimage(self):
        s = Spectrum([-1.0, 0.5, 2.0])
        z = 0.3 + 1.1j
        assert np.min(np.abs(inverse_cauchy(s, cauchy_transform(s, z)) - z)) < 1e-10

    def test_branch_error(self):
        with pytest.raises(BranchError):
            r_transform_probe(PM1, 50.0)
        with pytest.raises(ValueError):
            r_transform_probe(PM1, 0.0)

    def test_nfold_cauchy_series(self):
        # moments from free cumulants of the 3-fold sum of {0, 1}:
        # k1 = 1.5, k2 = 0.75, k3 = 0, k4 = -3/16
        s = Spectrum([0.0, 1.0])
        z = 40j
        m = [1.0, 1.5, 3.0, 6.75, 16.125]
        series = sum(mk / z ** (k + 1) for k, mk in enumerate(m))
        assert nfold_cauchy_transform(s, z, 3) == pytest.approx(series, abs=1e-7)
