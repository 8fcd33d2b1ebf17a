"""Tests for channel sampling, metrics, and the deterministic stream layout."""

import math

import numpy as np
import pytest

from beaconsim.channel import (
    ChannelSet,
    LinkParams,
    MeanGains,
    MetricTriple,
    MultiuserMeans,
    compute_metrics,
    perturb_metrics,
    sample_channels,
    sample_multiuser,
)
from beaconsim.mc import parallel_chunk_stats, substream


class TestLinkParams:
    def test_mean_gain(self):
        lp = LinkParams(gain_scale=2.0, distance=2.0, exponent=3.0)
        assert lp.mean_gain == pytest.approx(0.25)
        assert LinkParams(1.0, 1.0, 4.0).mean_gain == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            LinkParams(0.0, 1.0, 2.0)
        with pytest.raises(ValueError):
            LinkParams(1.0, -1.0, 2.0)
        with pytest.raises(ValueError):
            LinkParams(1.0, 1.0, -0.5)


class TestSampling:
    def test_exponential_moments(self):
        means = MeanGains(1.0, 2.0, 3.0)
        ch = sample_channels(means, 200_000, seed=42)
        for g, lam in [(ch.g_pt, 1.0), (ch.g_pr, 2.0), (ch.g_tr, 3.0)]:
            assert np.mean(g) == pytest.approx(lam, rel=0.02)
            assert np.median(g) == pytest.approx(lam * math.log(2), rel=0.03)
            assert g.min() >= 0

    def test_links_independent(self):
        ch = sample_channels(MeanGains(1.0, 1.0, 1.0), 200_000, seed=3)
        assert abs(np.corrcoef(ch.g_pt, ch.g_pr)[0, 1]) < 0.01
        assert abs(np.corrcoef(ch.g_pt, ch.g_tr)[0, 1]) < 0.01

    def test_deterministic(self):
        a = sample_channels(MeanGains(1.0, 2.0, 3.0), 5000, seed=7)
        b = sample_channels(MeanGains(1.0, 2.0, 3.0), 5000, seed=7)
        np.testing.assert_array_equal(a.g_pt, b.g_pt)
        np.testing.assert_array_equal(a.g_tr, b.g_tr)
        c = sample_channels(MeanGains(1.0, 2.0, 3.0), 5000, seed=8)
        assert not np.array_equal(a.g_pt, c.g_pt)

    def test_validation(self):
        with pytest.raises(ValueError):
            MeanGains(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            sample_channels(MeanGains(1.0, 1.0, 1.0), 0, seed=1)


class TestMetrics:
    def test_sums(self):
        ch = ChannelSet(np.array([1.0]), np.array([2.0]), np.array([4.0]))
        m = compute_metrics(ch)
        assert m.t_p[0] == 3.0
        assert m.t_t[0] == 5.0
        assert m.t_r[0] == 6.0

    def test_perturb_zero_noise_is_identity(self):
        ch = sample_channels(MeanGains(1.0, 1.0, 1.0), 100, seed=1)
        m = compute_metrics(ch)
        noisy = perturb_metrics(m, 0.0, substream(1, 99))
        np.testing.assert_array_equal(noisy.t_p, m.t_p)
        np.testing.assert_array_equal(noisy.t_t, m.t_t)
        np.testing.assert_array_equal(noisy.t_r, m.t_r)

    def test_perturb_variance(self):
        n = 200_000
        m = MetricTriple(np.zeros(n), np.zeros(n), np.zeros(n))
        noisy = perturb_metrics(m, 0.25, substream(5, 99))
        assert np.var(noisy.t_p) == pytest.approx(0.25, rel=0.03)
        assert np.var(noisy.t_t) == pytest.approx(0.25, rel=0.03)
        # independent noise per metric
        assert abs(np.corrcoef(noisy.t_p, noisy.t_r)[0, 1]) < 0.01

    def test_perturb_negative_variance_rejected(self):
        m = MetricTriple(np.zeros(4), np.zeros(4), np.zeros(4))
        with pytest.raises(ValueError):
            perturb_metrics(m, -1.0, substream(1, 99))


class TestMultiuser:
    def test_shapes_and_symmetry(self):
        mu = MultiuserMeans.uniform(m_pairs=2, primary=1.0, inter=2.0)
        mch = sample_multiuser(mu, 20_000, seed=11)
        assert mch.g_p.shape == (4, 20_000)
        assert mch.g_uu.shape == (4, 4, 20_000)
        np.testing.assert_array_equal(mch.g_uu[0, 3], mch.g_uu[3, 0])
        np.testing.assert_array_equal(mch.g_uu[1, 2], mch.g_uu[2, 1])
        assert np.all(mch.g_uu[2, 2] == 0.0)
        assert np.mean(mch.g_p[1]) == pytest.approx(1.0, rel=0.05)
        assert np.mean(mch.g_uu[0, 1]) == pytest.approx(2.0, rel=0.05)

    def test_deterministic(self):
        mu = MultiuserMeans.uniform(2, 1.0, 1.0)
        a = sample_multiuser(mu, 1000, seed=5)
        b = sample_multiuser(mu, 1000, seed=5)
        np.testing.assert_array_equal(a.g_p, b.g_p)
        np.testing.assert_array_equal(a.g_uu, b.g_uu)

    def test_validation(self):
        with pytest.raises(ValueError):
            MultiuserMeans.uniform(0, 1.0, 1.0)
        with pytest.raises(ValueError):
            MultiuserMeans.uniform(2, -1.0, 1.0)


class TestChunkStats:
    def test_matches_direct_mean(self):
        def worker(chunk_idx, start, size):
            rng = substream(123, 7, chunk_idx)
            return rng.exponential(1.0, size)

        mean, se, n = parallel_chunk_stats(worker, n=50_000, chunk=8192, threads=1)
        assert n == 50_000
        assert mean == pytest.approx(1.0, abs=5 / math.sqrt(50_000))
        assert se == pytest.approx(1.0 / math.sqrt(50_000), rel=0.1)

    def test_thread_count_invariant(self):
        def worker(chunk_idx, start, size):
            rng = substream(9, 1, chunk_idx)
            return rng.exponential(2.0, size)

        r1 = parallel_chunk_stats(worker, n=40_000, chunk=4096, threads=1)
        r4 = parallel_chunk_stats(worker, n=40_000, chunk=4096, threads=4)
        assert r1 == r4  # bit-identical, not approximately equal

    def test_multicolumn(self):
        def worker(chunk_idx, start, size):
            rng = substream(10, 1, chunk_idx)
            x = rng.exponential(1.0, size)
            return np.stack([x, 2.0 * x], axis=1)

        mean, se, n = parallel_chunk_stats(worker, n=30_000, chunk=4096, threads=2)
        assert mean.shape == (2,)
        assert mean[1] == pytest.approx(2 * mean[0], rel=1e-12)
