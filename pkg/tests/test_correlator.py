"""Pair-count histogrammer, checked against a brute-force O(N^2) oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgqed.correlator import (
    CorrelationHistogram,
    correlate_streams,
    reduce_count_trace,
)
from wgqed.errors import ConfigurationError, DomainError
from wgqed.timetags import TimeTagStream


def brute_force_counts(ta, tb, width, tau_max, same_stream):
    """Reference pair counts by full outer difference, chunked over ta."""
    m = tau_max // width
    hist = np.zeros(2 * m + 1, dtype=np.int64)
    tb = np.asarray(tb, dtype=np.int64)
    for chunk in np.array_split(np.asarray(ta, dtype=np.int64), max(1, len(ta) // 512)):
        if chunk.size == 0:
            continue
        tau = tb[None, :] - chunk[:, None]
        tau = tau[np.abs(tau) <= tau_max]
        k = np.sign(tau) * ((2 * np.abs(tau) + width) // (2 * width))
        hist += np.bincount((k + m).astype(np.intp), minlength=2 * m + 1)
    if same_stream:
        hist[m] -= len(ta)
    return hist


def poisson_stream(rng, rate_hz, span_ps, channel="transmission"):
    n = rng.poisson(rate_hz * span_ps * 1e-12)
    tags = np.sort(rng.integers(0, span_ps, size=n))
    return TimeTagStream(channel, tags.astype(np.int64), span_ps)


class TestExactness:
    def test_cross_correlation_matches_brute_force(self):
        rng = np.random.default_rng(11)
        a = poisson_stream(rng, 2e6, 5_000_000, "transmission_hbt_a")
        b = poisson_stream(rng, 3e6, 5_000_000, "transmission_hbt_b")
        h = correlate_streams(a, b, 128, 1024)
        ref = brute_force_counts(a.timestamps_ps, b.timestamps_ps, 128, 1024, False)
        np.testing.assert_array_equal(h.counts, ref)
        assert h.n_pairs == ref.sum()

    def test_autocorrelation_excludes_self_pairs(self):
        tags = np.array([0, 100, 100, 250], dtype=np.int64)
        s = TimeTagStream("reflection_psb", tags, 10_000)
        h = correlate_streams(s, s, 10, 500)
        ref = brute_force_counts(tags, tags, 10, 500, True)
        np.testing.assert_array_equal(h.counts, ref)
        # the two simultaneous clicks still pair with each other, twice
        assert h.counts[h.tau_ps.tolist().index(0)] == 2

    @settings(max_examples=25, deadline=None)
    @given(
        seed=st.integers(0, 2**31),
        width=st.sampled_from([1, 2, 5, 64, 128]),
        m=st.integers(1, 9),
    )
    def test_brute_force_property(self, seed, width, m):
        rng = np.random.default_rng(seed)
        span = 200_000
        a = poisson_stream(rng, 1e7, span, "transmission_hbt_a")
        b = poisson_stream(rng, 1e7, span, "transmission_hbt_b")
        tau_max = width * m
        h = correlate_streams(a, b, width, tau_max)
        ref = brute_force_counts(
            a.timestamps_ps, b.timestamps_ps, width, tau_max, False
        )
        np.testing.assert_array_equal(h.counts, ref)

    def test_mirror_symmetry_under_argument_swap(self):
        rng = np.random.default_rng(7)
        a = poisson_stream(rng, 2e6, 2_000_000, "transmission_hbt_a")
        b = poisson_stream(rng, 2e6, 2_000_000, "transmission_hbt_b")
        hab = correlate_streams(a, b, 64, 512)
        hba = correlate_streams(b, a, 64, 512)
        np.testing.assert_array_equal(hab.counts, hba.counts[::-1])

    def test_autocorrelation_is_even(self):
        rng = np.random.default_rng(13)
        s = poisson_stream(rng, 3e6, 2_000_000, "reflection_psb")
        h = correlate_streams(s, s, 64, 512)
        np.testing.assert_array_equal(h.counts, h.counts[::-1])


class TestBinGeometry:
    def test_tau_axis_centered(self):
        rng = np.random.default_rng(3)
        s = poisson_stream(rng, 1e6, 1_000_000)
        h = correlate_streams(s, s, 100, 300)
        assert h.tau_ps.tolist() == [-300, -200, -100, 0, 100, 200, 300]

    def test_slot_counts_even_width(self):
        # even width: tau = 0 bin covers width-1 integer delays, edge bins
        # width/2 + 1 (clipping at +/- tau_max)
        rng = np.random.default_rng(3)
        s = poisson_stream(rng, 1e6, 1_000_000)
        h = correlate_streams(s, s, 128, 256)
        assert h.slot_counts_ps.tolist() == [65, 128, 127, 128, 65]

    def test_slot_counts_odd_width(self):
        rng = np.random.default_rng(3)
        s = poisson_stream(rng, 1e6, 1_000_000)
        h = correlate_streams(s, s, 5, 15)
        assert h.slot_counts_ps.tolist() == [3, 5, 5, 5, 5, 5, 3]
        assert int(h.slot_counts_ps.sum()) == 2 * 15 + 1

    def test_every_delay_lands_in_exactly_one_bin(self):
        # one click at 0 paired against one click at each integer delay
        width, tau_max = 6, 24
        for d in range(-tau_max, tau_max + 1):
            a = TimeTagStream("transmission_hbt_a", np.array([1000], np.int64), 5000)
            b = TimeTagStream(
                "transmission_hbt_b", np.array([1000 + d], np.int64), 5000
            )
            h = correlate_streams(a, b, width, tau_max)
            assert h.counts.sum() == 1
            center = h.tau_ps[np.argmax(h.counts)]
            assert abs(d - center) <= width / 2


class TestNormalization:
    def test_poisson_g2_near_unity(self):
        rng = np.random.default_rng(21)
        span = 500_000_000
        a = poisson_stream(rng, 1e8, span, "transmission_hbt_a")
        b = poisson_stream(rng, 8e7, span, "transmission_hbt_b")
        h = correlate_streams(a, b, 128, 2048)
        assert float(h.g2.mean()) == pytest.approx(1.0, abs=0.03)
        # errors should be plausible: most bins within 3 sigma of 1
        z = np.abs(h.g2 - 1.0) / h.g2_err
        assert np.mean(z < 3) > 0.9

    def test_empty_bin_carries_upper_bound_error(self):
        a = TimeTagStream("transmission_hbt_a", np.array([5000], np.int64), 100_000)
        b = TimeTagStream("transmission_hbt_b", np.array([5000], np.int64), 100_000)
        h = correlate_streams(a, b, 10, 50)
        off = h.counts == 0
        assert np.any(off)
        assert np.all(h.g2_err[off] > 0)

    def test_zero_bin_helper(self):
        rng = np.random.default_rng(2)
        s = poisson_stream(rng, 2e6, 2_000_000)
        h = correlate_streams(s, s, 64, 256)
        val, err = h.zero_bin()
        i = list(h.tau_ps).index(0)
        assert val == h.g2[i]
        assert err == h.g2_err[i]


class TestValidation:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.s = poisson_stream(rng, 1e6, 1_000_000)

    def test_bad_bin_width(self):
        with pytest.raises(ConfigurationError):
            correlate_streams(self.s, self.s, 0, 100)

    def test_tau_max_not_multiple(self):
        with pytest.raises(ConfigurationError):
            correlate_streams(self.s, self.s, 128, 1000)

    def test_window_exceeding_span(self):
        with pytest.raises(DomainError):
            correlate_streams(self.s, self.s, 1_000_000, 2_000_000)


class TestCsvRoundTrip:
    def test_round_trip(self):
        rng = np.random.default_rng(17)
        s = poisson_stream(rng, 2e6, 2_000_000)
        h = correlate_streams(s, s, 64, 512)
        back = CorrelationHistogram.from_csv(h.to_csv())
        np.testing.assert_array_equal(back.tau_ps, h.tau_ps)
        np.testing.assert_array_equal(back.counts, h.counts)
        np.testing.assert_allclose(back.g2, h.g2, rtol=1e-6)
        assert back.bin_width_ps == h.bin_width_ps
        assert back.n_pairs == h.n_pairs

    def test_rejects_wrong_header(self):
        from wgqed.errors import DataFormatError

        with pytest.raises(DataFormatError):
            CorrelationHistogram.from_csv("tau,count\n0,1\n")


class TestCountTrace:
    def test_constant_rate_recovered(self):
        span_ps = 10_000_000_000  # 10 ms
        tags = np.arange(0, span_ps, 100_000, dtype=np.int64)  # 10 MHz comb
        s = TimeTagStream("transmission", tags, span_ps)
        trace = reduce_count_trace(s, 1e-4)
        assert trace.rate_hz == pytest.approx(1e7, rel=1e-3)
        assert not trace.degenerate
        assert trace.n_zero_windows == 0

    def test_empty_windows_flag_degenerate(self):
        s = TimeTagStream(
            "transmission", np.array([100, 200], np.int64), 10_000_000
        )
        trace = reduce_count_trace(s, 1e-6)
        assert trace.degenerate
        assert trace.n_zero_windows > 0

    def test_window_validation(self):
        s = TimeTagStream("transmission", np.array([100], np.int64), 1_000)
        with pytest.raises(ConfigurationError):
            reduce_count_trace(s, 0.0)
        with pytest.raises(ConfigurationError):
            reduce_count_trace(s, 1.0)
