import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from occlink import channel as ch
from oracles import OOK_BER_FROZEN, mean_snr_closed_form, ook_ber, snr_density_by_change_of_variables


def faded(k, z, sigma=1.0):
    return ch.ChannelParams(1.0, 1.0, sigma, ch.FadingParams(k, z))


class TestParams:
    def test_rejects_bad_power_and_responsivity(self):
        with pytest.raises(ch.ChannelError):
            ch.ChannelParams(transmit_power_avg=0.0)
        with pytest.raises(ch.ChannelError):
            ch.ChannelParams(responsivity=-1.0)
        with pytest.raises(ch.ChannelError):
            ch.ChannelParams(noise_std=-0.1)

    def test_fading_params_positive(self):
        with pytest.raises(ch.ChannelError):
            ch.FadingParams(0.0, 1.0)
        with pytest.raises(ch.ChannelError):
            ch.FadingParams(1.0, -2.0)

    def test_gamma_o(self):
        p = ch.ChannelParams(2.0, 0.5, 0.25)
        assert p.gamma_o == pytest.approx(2 * 4.0 * 0.25 / 0.0625)

    def test_with_snr_db_round_trip(self):
        p = ch.ChannelParams(1.3, 0.7).with_snr_db(10.0)
        assert ch.linear_to_db(p.gamma_o) == pytest.approx(10.0)
        assert ch.ChannelParams().with_snr_db(math.inf).noise_std == 0.0


class TestTransmit:
    def test_noiseless_on_symbol(self):
        p = ch.ChannelParams(1.5, 0.8, 0.0)
        s = ch.transmit(p.on_level, p, 1.0)
        assert float(s.received) == 2 * 1.5 * 0.8

    def test_zero_input(self):
        s = ch.transmit(0.0, ch.ChannelParams(), 0.5)
        assert float(s.received) == 0.0

    def test_sample_mean(self):
        p = ch.ChannelParams(1.0, 1.0, 0.3)
        rng = np.random.default_rng(5)
        y = ch.transmit(np.full(100_000, p.on_level), p, 1.0, rng).received
        assert abs(y.mean() - 2.0) < 4 * 0.3 / math.sqrt(1e5)

    def test_requires_rng_when_noisy(self):
        with pytest.raises(ch.ChannelError):
            ch.transmit(1.0, ch.ChannelParams(noise_std=1.0))

    def test_rejects_negative_intensity_and_bad_gain(self):
        p = ch.ChannelParams()
        with pytest.raises(ch.ChannelError):
            ch.transmit(-1.0, p)
        with pytest.raises(ch.ChannelError):
            ch.transmit(1.0, p, 1.5)

    @given(st.lists(st.floats(0, 10), min_size=1, max_size=20), st.floats(0.01, 1.0), st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_received_minus_noise_is_exact(self, xs, gain, seed):
        p = ch.ChannelParams(1.0, 0.9, 0.2)
        s = ch.transmit(np.array(xs), p, gain, np.random.default_rng(seed))
        assert np.allclose(s.received - s.noise_draw, gain * 0.9 * np.array(xs), rtol=0, atol=1e-12)


class TestSnr:
    def test_values(self):
        p = ch.ChannelParams(1.0, 1.0, 1.0)
        assert ch.snr(p, 1.0) == p.gamma_o
        assert ch.snr(p, 0.0) == 0.0
        assert ch.snr(p, 0.5) == pytest.approx(0.5)

    def test_infinite_snr(self):
        with pytest.raises(ch.ChannelError, match="infinite SNR"):
            ch.snr(ch.ChannelParams(noise_std=0.0), 1.0)

    @given(st.floats(0.01, 1.0), st.floats(0.05, 3.0))
    def test_pure_quadratic(self, h, sigma):
        p = ch.ChannelParams(1.0, 1.0, sigma)
        assert ch.snr(p, h) == pytest.approx(p.gamma_o * h * h)


class TestSnrPdf:
    def test_matches_change_of_variables(self):
        for k, z in [(1, 1), (2, 1), (1.5, 2), (3.2, 0.7)]:
            p = faded(k, z, 0.8)
            g = np.linspace(1e-4, 1, 97) * p.gamma_o
            assert np.allclose(ch.snr_pdf(g, p), snr_density_by_change_of_variables(g, p.gamma_o, k, z), rtol=1e-10)

    def test_k1_z1_simplifies(self):
        p = faded(1, 1)
        g = np.array([0.01, 0.3, 1.0, 1.9])
        assert np.allclose(ch.snr_pdf(g, p), 1 / (2 * np.sqrt(g * p.gamma_o)))

    def test_domain(self):
        p = faded(1, 1)
        with pytest.raises(ch.ChannelError):
            ch.snr_pdf(0.0, p)
        with pytest.raises(ch.ChannelError):
            ch.snr_pdf(p.gamma_o * 1.01, p)

    @given(st.floats(0.5, 5.0), st.floats(0.5, 5.0))
    @settings(max_examples=30, deadline=None)
    def test_normalized(self, k, z):
        assert abs(ch.pdf_mass(faded(k, z)) - 1.0) < 1e-6


class TestAverageSnr:
    def test_fixed_gain(self):
        p = ch.ChannelParams(1.0, 1.0, 1.0)
        assert ch.average_snr(p) == p.gamma_o

    @pytest.mark.parametrize("k,z", [(1, 1), (2, 1), (1.5, 2), (0.6, 4.5)])
    def test_closed_form(self, k, z):
        p = faded(k, z, 0.5)
        assert ch.average_snr(p) == pytest.approx(mean_snr_closed_form(p.gamma_o, k, z), rel=1e-8)
        assert ch.average_snr(p) <= p.gamma_o

    def test_sample_mean(self):
        p = faded(1, 1)
        g = ch.snr(p, ch.sample_gain(p, np.random.default_rng(2), 200_000))
        se = g.std(ddof=1) / math.sqrt(g.size)
        assert abs(g.mean() - ch.average_snr(p)) < 3 * se


class TestBer:
    def test_endpoints(self):
        assert ch.ook_ber_theory(0.0) == 0.5
        assert ch.ook_ber_theory(math.inf) == 0.0

    def test_frozen_values(self):
        for db, ref in OOK_BER_FROZEN.items():
            assert ch.ook_ber_theory(ch.db_to_linear(db)) == pytest.approx(ref, rel=1e-12)

    def test_q_function(self):
        x = np.linspace(-3, 6, 50)
        assert np.allclose(ch.q_function(x), stats.norm.sf(x), rtol=1e-12, atol=0)

    @given(st.floats(0, 100), st.floats(0.001, 10))
    def test_strictly_decreasing_and_bounded(self, g, dg):
        a, b = ch.ook_ber_theory(g), ch.ook_ber_theory(g + dg)
        assert 0 <= b < a <= 0.5

    def test_monte_carlo_at_10db(self):
        p = ch.ChannelParams().with_snr_db(10.0)
        rng = np.random.default_rng(11)
        n = 1_000_000
        bits = rng.integers(0, 2, n)
        y = ch.transmit(bits * p.on_level, p, 1.0, rng).received
        ber = np.mean((y > 0.5 * p.on_level) != bits)
        ref = ch.ook_ber_theory(p.gamma_o)
        assert abs(ber - ref) < 3 * math.sqrt(ref * (1 - ref) / n)

    def test_faded_ber_monte_carlo(self):
        p = faded(2, 1, 0.3)
        rng = np.random.default_rng(4)
        n = 1_000_000
        bits = rng.integers(0, 2, n)
        h = ch.sample_gain(p, rng, n)
        y = ch.transmit(bits * p.on_level, p, h, rng).received
        ber = np.mean((y > 0.5 * p.on_level * h) != bits)
        ref = ch.faded_ber_theory(p)
        assert abs(ber - ref) < 3 * math.sqrt(ref * (1 - ref) / n)

    def test_negative_gamma(self):
        with pytest.raises(ch.ChannelError):
            ch.ook_ber_theory(-1.0)
