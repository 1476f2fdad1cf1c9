import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freemix.ensembles import (MatrixSample, haar_cross_moments, haar_fourth_moment,
                               haar_ipr_closed, ipr, matrix_from_csv, matrix_to_csv,
                               sample_goe_block, sample_haar, sample_permutation)
from freemix.rng import RngSeed, as_generator


def zscore(samples, target):
    samples = np.asarray(samples, dtype=float)
    return abs(samples.mean() - target) / (samples.std(ddof=1) / np.sqrt(samples.size))


class TestRng:
    def test_reproducible(self):
        a = RngSeed(42, 3).generator().standard_normal(5)
        b = RngSeed(42, 3).generator().standard_normal(5)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngSeed(42, 0).generator().standard_normal(5)
        b = RngSeed(42, 1).generator().standard_normal(5)
        assert not np.array_equal(a, b)

    def test_accepts(self):
        gen = np.random.default_rng(0)
        assert as_generator(gen) is gen
        assert isinstance(as_generator(7), np.random.Generator)
        with pytest.raises(TypeError):
            as_generator("seed")
        with pytest.raises(ValueError):
            RngSeed(-1)


class TestHaar:
    @pytest.mark.parametrize("beta", [1, 2])
    @pytest.mark.parametrize("m", [1, 2, 7, 30])
    def test_orthonormal(self, m, beta):
        q = sample_haar(m, beta, RngSeed(m)).entries
        assert np.max(np.abs(q.conj().T @ q - np.eye(m))) <= 1e-10
        assert np.iscomplexobj(q) == (beta == 2)

    def test_m1_signs(self):
        gen = RngSeed(0).generator()
        vals = np.array([sample_haar(1, 1, gen).entries[0, 0] for _ in range(4000)])
        assert set(np.unique(vals)) == {-1.0, 1.0}
        assert zscore(vals, 0.0) < 3

    def test_bit_reproducible(self):
        a = sample_haar(6, 2, RngSeed(11)).entries
        b = sample_haar(6, 2, RngSeed(11)).entries
        assert np.array_equal(a, b)

    def test_second_moment(self):
        gen = RngSeed(1).generator()
        vals = [abs(sample_haar(8, 1, gen).entries[0, 0]) ** 2 for _ in range(10_000)]
        assert zscore(vals, 1 / 8) < 3

    def test_phase_correction_matters(self):
        # the first column's first entry of an uncorrected QR is biased in sign
        gen = RngSeed(5).generator()
        vals = [sample_haar(4, 1, gen).entries[0, 0] for _ in range(4000)]
        assert zscore(vals, 0.0) < 3

    def test_unsupported_beta(self):
        with pytest.raises(ValueError):
            sample_haar(3, 4)


class TestPermutation:
    def test_identity_m1(self):
        assert np.array_equal(sample_permutation(1, RngSeed(0)).entries, np.eye(1))

    def test_uniform_m3(self):
        gen = RngSeed(2).generator()
        counts = {}
        n = 60_000
        for _ in range(n):
            p = sample_permutation(3, gen).entries
            key = tuple(np.argmax(p, axis=1))
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 6
        sigma = np.sqrt(n * (1 / 6) * (5 / 6))
        for c in counts.values():
            assert abs(c - n / 6) < 3 * sigma

    def test_row_column_sums(self):
        p = sample_permutation(9, RngSeed(3)).entries
        assert np.array_equal(p.sum(0), np.ones(9)) and np.array_equal(p.sum(1), np.ones(9))
        assert set(np.unique(p)) <= {0.0, 1.0}


class TestIpr:
    def test_examples(self):
        assert ipr(np.eye(5)) == 0.0
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert ipr(h) == pytest.approx(0.5, abs=1e-15)
        assert ipr(sample_permutation(7, RngSeed(0))) == 0.0

    def test_non_square(self):
        with pytest.raises(ValueError):
            ipr(np.ones((2, 3)))

    @given(st.integers(1, 12), st.integers(0, 2**32), st.sampled_from([1, 2]))
    @settings(max_examples=40, deadline=None)
    def test_bounds_and_sign_symmetry(self, m, seed, beta):
        q = np.array(sample_haar(m, beta, RngSeed(seed)).entries)
        v = ipr(q)
        assert -1e-12 <= v <= 1 - 1 / m + 1e-12
        q[:, 0] *= -1
        assert ipr(q) == v

    @pytest.mark.parametrize("beta", [1, 2])
    def test_haar_mean(self, beta):
        gen = RngSeed(beta).generator()
        vals = [ipr(sample_haar(10, beta, gen)) for _ in range(3000)]
        assert zscore(vals, haar_ipr_closed(10, beta)) < 3


class TestHaarTable:
    def test_m2_beta1(self):
        assert haar_fourth_moment(2, 1) == pytest.approx(3 / 8)
        assert haar_ipr_closed(2, 1) == pytest.approx(1 / 4)
        e22, ec = haar_cross_moments(2, 1)
        assert e22 == pytest.approx(1 / 8) and ec == pytest.approx(-1 / 8)

    def test_limits(self):
        assert abs(haar_ipr_closed(10**6, 2) - 1) < 1e-5
        assert haar_ipr_closed(1, 1) == 0 and haar_ipr_closed(1, 2) == 0
        assert np.isnan(haar_cross_moments(1, 1)[1])

    @pytest.mark.parametrize("m", [2, 3, 8, 50])
    @pytest.mark.parametrize("beta", [1, 2])
    def test_row_sum_identity(self, m, beta):
        e22, _ = haar_cross_moments(m, beta)
        assert e22 * (m - 1) + haar_fourth_moment(m, beta) == pytest.approx(1 / m, rel=1e-14)

    def test_monte_carlo_m6(self):
        gen = RngSeed(9).generator()
        n = 20_000
        q4 = np.empty(n)
        q22 = np.empty(n)
        qx = np.empty(n)
        for t in range(n):
            q = sample_haar(6, 1, gen).entries
            q4[t] = q[0, 0] ** 4
            q22[t] = q[0, 0] ** 2 * q[0, 1] ** 2
            qx[t] = q[0, 0] * q[0, 1] * q[1, 1] * q[1, 0]
        e22, ec = haar_cross_moments(6, 1)
        assert zscore(q4, haar_fourth_moment(6, 1)) < 3
        assert zscore(q22, e22) < 3
        assert zscore(qx, ec) < 3


class TestGoe:
    @pytest.mark.parametrize("beta", [1, 2])
    def test_hermitian(self, beta):
        b = sample_goe_block(6, beta, RngSeed(0)).entries
        assert np.max(np.abs(b - b.conj().T)) <= 1e-12

    @pytest.mark.parametrize("beta", [1, 2])
    def test_variances(self, beta):
        gen = RngSeed(beta + 10).generator()
        d, off = [], []
        for _ in range(100_000 // 4):
            b = sample_goe_block(2, beta, gen).entries
            d.append(b[0, 0].real)
            off.append(abs(b[0, 1]) ** 2)
        assert zscore(np.square(d), 1.0) < 3
        assert zscore(off, beta / 2) < 3


def test_matrix_csv_roundtrip(tmp_path):
    for beta in (1, 2):
        q = sample_haar(4, beta, RngSeed(1)).entries
        path = tmp_path / f"q{beta}.csv"
        matrix_to_csv(MatrixSample(q, beta, "haar"), path)
        assert np.array_equal(matrix_from_csv(path), q)


def test_matrix_sample_validation():
    with pytest.raises(ValueError):
        MatrixSample(np.ones((2, 3)))
    with pytest.raises(ValueError):
        MatrixSample(np.eye(2), kind="other")
    s = MatrixSample(np.eye(2), 2)
    assert np.iscomplexobj(s.entries) and s.m == 2
