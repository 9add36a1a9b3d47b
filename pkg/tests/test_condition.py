import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acufusion.condition import (NotchSpec, WaveletSpec, compensate_prestress,
                                 daubechies_filter, lowpass_accel,
                                 notch_filter, wavedec, wavelet_denoise,
                                 waverec)
from acufusion.core import SampledSeries
from acufusion.errors import ConfigError, DegenerateInput, WindowTooLong


def _tone(freq, fs, n, phase=0.0):
    t = np.arange(n) / fs
    return SampledSeries(0.0, 1.0 / fs, np.sin(2 * np.pi * freq * t + phase))


def _gain_db(out, inp, trim):
    r = np.std(out.values[trim:-trim]) / np.std(inp.values[trim:-trim])
    return 20.0 * np.log10(r)


class TestPrestress:
    def test_constant_series_zeroed(self):
        s = SampledSeries(0.0, 0.01, np.full(300, 2.7))
        out = compensate_prestress(s, 1.0)
        assert np.max(np.abs(out.values)) <= 1e-12

    def test_sine_plus_offset(self):
        t = np.arange(1000) / 100.0
        s = SampledSeries(0.0, 0.01, 0.2 + np.sin(2 * np.pi * t))
        out = compensate_prestress(s, 2.0)  # whole number of periods
        assert np.max(np.abs(out.values - np.sin(2 * np.pi * t))) <= 1e-3

    def test_window_errors(self):
        s = SampledSeries(0.0, 0.01, np.zeros(100))
        with pytest.raises(ConfigError):
            compensate_prestress(s, 0.0)
        with pytest.raises(WindowTooLong):
            compensate_prestress(s, 5.0)


class TestNotch:
    def test_tone_killed_at_200hz(self):
        tone = _tone(50.0, 200.0, 4000)
        out = notch_filter(tone, NotchSpec(50.0, 200.0, 30.0))
        rms_ratio = (np.std(out.values[200:-200])
                     / np.std(tone.values[200:-200]))
        assert rms_ratio <= 0.01  # >= 40 dB attenuation

    def test_dc_preserved(self):
        s = SampledSeries(0.0, 0.01, np.full(500, 4.2))
        out = notch_filter(s, NotchSpec(50.0, 100.0, 30.0))
        assert np.max(np.abs(out.values - 4.2)) <= 1e-9

    def test_passband_2hz(self):
        tone = _tone(2.0, 100.0, 2000)
        out = notch_filter(tone, NotchSpec(50.0, 100.0, 30.0))
        assert abs(_gain_db(out, tone, 200)) <= 1.0

    def test_nyquist_alias_killed_at_100hz(self):
        # a 50 Hz tone sampled at 100 Hz aliases to an alternating sequence
        tone = _tone(50.0, 100.0, 2000, phase=0.7)
        out = notch_filter(tone, NotchSpec(50.0, 100.0, 30.0))
        assert np.std(out.values[200:-200]) <= 1e-4

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            NotchSpec(60.0, 100.0, 30.0)
        with pytest.raises(ConfigError):
            NotchSpec(50.0, 100.0, 0.0)
        with pytest.raises(ConfigError):
            notch_filter(_tone(2.0, 100.0, 500), NotchSpec(50.0, 200.0, 30.0))

    def test_zero_phase(self):
        rng = np.random.default_rng(0)
        sig = SampledSeries(0.0, 0.01, rng.standard_normal(2048))
        out = notch_filter(sig, NotchSpec(50.0, 100.0, 30.0))
        xc = np.correlate(out.values, sig.values, mode="full")
        assert np.argmax(xc) == len(sig) - 1  # zero-lag peak


class TestLowpass:
    def test_minus_3db_at_bandwidth(self):
        tone = _tone(44.8, 200.0, 4000)
        out = lowpass_accel(tone, 44.8)
        assert _gain_db(out, tone, 300) == pytest.approx(-3.0, abs=0.5)

    def test_dc_preserved(self):
        s = SampledSeries(0.0, 0.005, np.full(500, 1.5))
        out = lowpass_accel(s, 44.8)
        assert np.max(np.abs(out.values - 1.5)) <= 1e-9

    def test_passband_5hz(self):
        tone = _tone(5.0, 100.0, 2000)
        out = lowpass_accel(tone, 44.8)
        assert abs(_gain_db(out, tone, 200)) <= 0.5

    def test_three_axis(self):
        rng = np.random.default_rng(1)
        s = SampledSeries(0.0, 0.01, rng.standard_normal((500, 3)))
        out = lowpass_accel(s, 20.0)
        assert out.values.shape == (500, 3)

    def test_linearity(self):
        rng = np.random.default_rng(2)
        x = SampledSeries(0.0, 0.01, rng.standard_normal(600))
        y = SampledSeries(0.0, 0.01, rng.standard_normal(600))
        combo = SampledSeries(0.0, 0.01, 2.0 * x.values + 3.0 * y.values)
        lhs = lowpass_accel(combo, 30.0).values
        rhs = (2.0 * lowpass_accel(x, 30.0).values
               + 3.0 * lowpass_accel(y, 30.0).values)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


class TestWavelet:
    def test_daubechies_filter_properties(self):
        # orthonormality and normalization of the constructed filter bank
        for order in (2, 3, 5):
            h = daubechies_filter(order)
            assert len(h) == 2 * order
            assert np.sum(h) == pytest.approx(np.sqrt(2.0), abs=1e-12)
            assert np.sum(h * h) == pytest.approx(1.0, abs=1e-12)
            for k in range(1, order):
                assert np.dot(h[:-2 * k], h[2 * k:]) == pytest.approx(
                    0.0, abs=1e-12)

    def test_db2_textbook_values(self):
        h = daubechies_filter(2)
        expected = np.array([(1 + np.sqrt(3)), (3 + np.sqrt(3)),
                             (3 - np.sqrt(3)), (1 - np.sqrt(3))]) / (4 * np.sqrt(2))
        assert np.max(np.abs(h - expected)) <= 1e-12

    def test_zero_in_zero_out(self):
        s = SampledSeries(0.0, 0.01, np.zeros(512))
        out = wavelet_denoise(s, WaveletSpec())
        assert np.all(out.values == 0.0)

    def test_identity_without_threshold(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(1000)
        s = SampledSeries(0.0, 0.01, x)
        out = wavelet_denoise(s, WaveletSpec(threshold_rule="none"))
        assert np.max(np.abs(out.values - x)) <= 1e-8

    @settings(max_examples=30, deadline=None)
    @given(st.integers(64, 700), st.integers(1, 4))
    def test_identity_random_lengths(self, n, levels):
        rng = np.random.default_rng(n)
        x = rng.standard_normal(n)
        approx, details = wavedec(x, 5, levels)
        rec = waverec(approx, details, n, 5)
        assert np.max(np.abs(rec - x)) <= 1e-8

    def test_denoising_benchmark(self):
        # smooth 1 Hz ramp-and-hold plus white noise at 10 dB SNR: the
        # denoised RMSE must at least halve the noisy RMSE
        def sstep(u):
            return u * u * u * (10 + u * (-15 + 6 * u))
        t = np.arange(2000) / 100.0
        ph = t % 1.0
        clean = np.where(ph < 0.25, sstep(ph / 0.25),
                         np.where(ph < 0.5, 1.0,
                                  np.where(ph < 0.75,
                                           1.0 - sstep((ph - 0.5) / 0.25),
                                           0.0)))
        rng = np.random.default_rng(7)
        noise_std = np.sqrt(np.mean(clean ** 2)) * 10 ** (-0.5)
        noisy = clean + rng.standard_normal(len(clean)) * noise_std
        out = wavelet_denoise(SampledSeries(0.0, 0.01, noisy), WaveletSpec())
        e_noisy = np.sqrt(np.mean((noisy - clean) ** 2))
        e_out = np.sqrt(np.mean((out.values - clean) ** 2))
        assert e_out <= 0.5 * e_noisy

    def test_too_short_or_too_deep(self):
        with pytest.raises(ConfigError):
            wavelet_denoise(SampledSeries(0.0, 0.01, np.zeros(64)),
                            WaveletSpec(levels=8))
        with pytest.raises(DegenerateInput):
            wavelet_denoise(SampledSeries(0.0, 0.01, np.zeros(8)),
                            WaveletSpec(levels=1))

    def test_denoise_linearity_of_analysis(self):
        # analysis/synthesis (no threshold) is linear
        rng = np.random.default_rng(4)
        x = rng.standard_normal(400)
        y = rng.standard_normal(400)
        spec = WaveletSpec(threshold_rule="none")
        sx = SampledSeries(0.0, 0.01, x)
        sy = SampledSeries(0.0, 0.01, y)
        sxy = SampledSeries(0.0, 0.01, 2.0 * x - 0.5 * y)
        lhs = wavelet_denoise(sxy, spec).values
        rhs = (2.0 * wavelet_denoise(sx, spec).values
               - 0.5 * wavelet_denoise(sy, spec).values)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9
