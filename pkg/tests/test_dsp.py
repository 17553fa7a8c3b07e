import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wearbench import dsp
from wearbench.errors import (
    ConstantInput,
    EmptyBand,
    InvalidCutoff,
    InvalidOrder,
    SignalTooShort,
)

MINUS_3DB = 10 ** (-3.01 / 20)


# --- detrend -----------------------------------------------------------------


class TestDetrend:
    def test_constant_becomes_zero(self):
        out = dsp.detrend(np.full(4, 5.0), 500.0)
        assert np.max(np.abs(out)) < 1e-6

    def test_zero_stays_zero(self):
        out = dsp.detrend(np.zeros(100), 500.0)
        assert np.max(np.abs(out)) == 0.0

    def test_ramp_plus_sinusoid_recovers_sinusoid(self):
        # the ramp is in the regularizer's null space, so only the
        # sinusoid's tiny leakage into the trend remains as error
        fs = 8.0
        t = np.arange(0, 60, 1 / fs)
        sinusoid = np.sin(2 * math.pi * 1.0 * t)
        ramp = 0.5 * t
        out = dsp.detrend(ramp + sinusoid, 500.0)
        err = out - sinusoid
        rel = np.sqrt(np.mean(err ** 2)) / np.sqrt(np.mean(sinusoid ** 2))
        assert rel < 0.05

    def test_output_mean_is_negligible(self):
        rng = np.random.default_rng(7)
        x = rng.normal(3.0, 2.0, 500) + np.linspace(0, 10, 500)
        out = dsp.detrend(x, 500.0)
        assert abs(float(out.mean())) < 1e-6 * np.sqrt(np.mean(x ** 2))

    def test_too_short(self):
        with pytest.raises(SignalTooShort):
            dsp.detrend([1.0, 2.0], 500.0)

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=60)
        lam = 50.0
        n = x.size
        d2 = np.zeros((n - 2, n))
        for k in range(n - 2):
            d2[k, k:k + 3] = (1.0, -2.0, 1.0)
        trend = np.linalg.solve(np.eye(n) + lam ** 2 * d2.T @ d2, x)
        expected = x - trend
        got = dsp.detrend(x, lam)
        assert np.max(np.abs(got - expected)) < 1e-9


# --- Butterworth design ----------------------------------------------------------


class TestButterworthDesign:
    def test_lowpass_half_power_at_cutoff(self):
        design = dsp.design_butterworth(5, dsp.FilterKind.LOW_PASS, (10.0,),
                                        32.0)
        h = abs(dsp.frequency_response(design, [10.0])[0])
        assert h == pytest.approx(0.7079, rel=0.01)
        assert h == pytest.approx(MINUS_3DB, abs=0.01)

    def test_lowpass_monotone_stopband(self):
        design = dsp.design_butterworth(5, dsp.FilterKind.LOW_PASS, (10.0,),
                                        32.0)
        freqs = np.linspace(10.0, 15.9, 60)
        mags = np.abs(dsp.frequency_response(design, freqs))
        assert mags[0] > mags[-1]
        assert np.all(np.diff(mags) < 1e-12)
        assert abs(dsp.frequency_response(design, [14.0])[0]) < mags[0]

    def test_bandpass_response(self):
        design = dsp.design_butterworth(2, dsp.FilterKind.BAND_PASS,
                                        (0.7, 3.5), 64.0)
        mags = np.abs(dsp.frequency_response(design, [0.05, 1.5]))
        assert mags[0] < 0.05
        assert mags[1] > 0.9

    def test_bandpass_half_power_at_both_edges(self):
        design = dsp.design_butterworth(2, dsp.FilterKind.BAND_PASS,
                                        (0.7, 3.5), 64.0)
        mags = np.abs(dsp.frequency_response(design, [0.7, 3.5]))
        assert mags == pytest.approx([MINUS_3DB, MINUS_3DB], abs=0.012)

    @pytest.mark.parametrize("order,kind,cutoffs,fs", [
        (1, dsp.FilterKind.LOW_PASS, (1.0,), 8.0),
        (2, dsp.FilterKind.LOW_PASS, (0.05,), 4.0),
        (3, dsp.FilterKind.LOW_PASS, (8.0,), 64.0),
        (4, dsp.FilterKind.LOW_PASS, (1.0,), 4.0),
        (5, dsp.FilterKind.LOW_PASS, (10.0,), 32.0),
        (2, dsp.FilterKind.BAND_PASS, (0.7, 3.5), 64.0),
        (2, dsp.FilterKind.BAND_PASS, (0.04, 0.4), 4.0),
        (3, dsp.FilterKind.BAND_PASS, (5.0, 12.0), 64.0),
    ])
    def test_stability_and_cutoff_accuracy(self, order, kind, cutoffs, fs):
        design = dsp.design_butterworth(order, kind, cutoffs, fs)
        assert np.all(np.abs(design.poles()) < 1.0)
        mags = np.abs(dsp.frequency_response(design, list(cutoffs)))
        db = 20 * np.log10(mags)
        assert np.all(np.abs(db - (-3.01)) < 0.1)

    def test_matches_scipy(self):
        from scipy import signal as sps
        design = dsp.design_butterworth(5, dsp.FilterKind.LOW_PASS, (10.0,),
                                        32.0)
        freqs = np.linspace(0.1, 15.9, 200)
        mine = np.abs(dsp.frequency_response(design, freqs))
        b, a = sps.butter(5, 10.0, fs=32.0)
        _, h = sps.freqz(b, a, worN=freqs, fs=32.0)
        assert np.max(np.abs(mine - np.abs(h))) < 1e-8

    @given(order=st.integers(1, 6), rel_cut=st.floats(0.02, 0.98))
    @settings(max_examples=60, deadline=None)
    def test_random_lowpass_stable_and_on_spec(self, order, rel_cut):
        fs = 32.0
        cutoff = rel_cut * fs / 2.0
        design = dsp.design_butterworth(order, dsp.FilterKind.LOW_PASS,
                                        (cutoff,), fs)
        assert np.all(np.abs(design.poles()) < 1.0)
        mag = abs(dsp.frequency_response(design, [cutoff])[0])
        assert 20 * math.log10(mag) == pytest.approx(-3.01, abs=0.1)

    @given(order=st.integers(1, 4), lo=st.floats(0.03, 0.4),
           width=st.floats(0.05, 0.5))
    @settings(max_examples=60, deadline=None)
    def test_random_bandpass_stable_and_on_spec(self, order, lo, width):
        fs = 32.0
        f1 = lo * fs / 2.0
        f2 = min(0.98, lo + width) * fs / 2.0
        if f2 <= f1:
            return
        design = dsp.design_butterworth(order, dsp.FilterKind.BAND_PASS,
                                        (f1, f2), fs)
        assert np.all(np.abs(design.poles()) < 1.0)
        mags = np.abs(dsp.frequency_response(design, [f1, f2]))
        assert np.all(np.abs(20 * np.log10(mags) - (-3.01)) < 0.1)

    def test_invalid_inputs(self):
        with pytest.raises(InvalidOrder):
            dsp.design_butterworth(0, dsp.FilterKind.LOW_PASS, (1.0,), 8.0)
        with pytest.raises(InvalidCutoff):
            dsp.design_butterworth(2, dsp.FilterKind.LOW_PASS, (4.0,), 8.0)
        with pytest.raises(InvalidCutoff):
            dsp.design_butterworth(2, dsp.FilterKind.BAND_PASS, (3.0, 1.0),
                                   8.0)

    def test_denominators_normalized(self):
        design = dsp.design_butterworth(4, dsp.FilterKind.LOW_PASS, (1.0,),
                                        8.0)
        assert np.all(design.sos[:, 3] == 1.0)


# --- filtfilt ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def bandpass_64():
    return dsp.design_butterworth(2, dsp.FilterKind.BAND_PASS, (0.7, 3.5),
                                  64.0)


class TestFiltFilt:
    def test_passband_amplitude_and_lag(self, bandpass_64):
        fs = 64.0
        t = np.arange(0, 30, 1 / fs)
        x = np.sin(2 * math.pi * 1.5 * t)
        y = dsp.filtfilt(bandpass_64, x)
        assert float(y.std() / x.std()) == pytest.approx(1.0, abs=0.02)
        xc = np.correlate(y - y.mean(), x - x.mean(), "full")
        assert int(np.argmax(xc)) - (len(x) - 1) == 0

    def test_dc_rejected(self, bandpass_64):
        x = np.ones(1000)
        y = dsp.filtfilt(bandpass_64, x)
        assert np.sqrt(np.mean(y ** 2)) < 0.01

    def test_zero_in_zero_out(self, bandpass_64):
        assert np.all(dsp.filtfilt(bandpass_64, np.zeros(500)) == 0.0)

    def test_linearity(self, bandpass_64):
        rng = np.random.default_rng(11)
        x = rng.normal(size=600)
        y = rng.normal(size=600)
        a, b = 2.5, -1.25
        lhs = dsp.filtfilt(bandpass_64, a * x + b * y)
        rhs = a * dsp.filtfilt(bandpass_64, x) + b * dsp.filtfilt(bandpass_64, y)
        scale = np.max(np.abs(lhs)) + 1e-30
        assert np.max(np.abs(lhs - rhs)) / scale < 1e-9

    def test_constant_passes_lowpass_exactly(self):
        design = dsp.design_butterworth(2, dsp.FilterKind.LOW_PASS, (0.05,),
                                        4.0)
        y = dsp.filtfilt(design, np.full(200, 3.25))
        assert np.max(np.abs(y - 3.25)) < 1e-9

    def test_too_short(self, bandpass_64):
        with pytest.raises(SignalTooShort):
            dsp.filtfilt(bandpass_64, np.zeros(15))

    def test_matches_scipy_interior(self, bandpass_64):
        from scipy import signal as sps
        rng = np.random.default_rng(5)
        x = rng.normal(size=2048)
        mine = dsp.filtfilt(bandpass_64, x)
        sos = sps.butter(2, [0.7, 3.5], btype="band", fs=64.0, output="sos")
        ref = sps.sosfiltfilt(sos, x)
        assert np.max(np.abs(mine - ref)) < 1e-10


# --- Welch PSD ----------------------------------------------------------------------


class TestWelch:
    def test_sinusoid_peak_bin(self):
        fs = 4.0
        t = np.arange(0, 1000, 1 / fs)
        x = np.sin(2 * math.pi * 0.10 * t)
        spec = dsp.welch_psd(x, fs, segment_len=256)
        # independent check: plain rectangular periodogram of one segment
        seg = x[:256] - x[:256].mean()
        raw = np.abs(np.fft.rfft(seg))
        expect = np.argmax(raw) * fs / 256
        peak = spec.freqs_hz[np.argmax(spec.power)]
        assert abs(peak - 0.10) <= spec.resolution_hz
        assert abs(peak - expect) <= spec.resolution_hz

    def test_parseval(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(4096)
        spec = dsp.welch_psd(x, 2.0, segment_len=64)
        total = float(np.sum(spec.power) * spec.resolution_hz)
        assert total == pytest.approx(float(x.var()), rel=0.10)

    def test_white_noise_flat(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(4096)
        spec = dsp.welch_psd(x, 2.0, segment_len=64)
        lo = dsp.band_power(spec, 0.0, 0.5)
        hi = dsp.band_power(spec, 0.5, 1.0)
        assert lo / hi == pytest.approx(1.0, abs=0.25)

    def test_zero_signal(self):
        spec = dsp.welch_psd(np.zeros(512), 4.0)
        assert np.all(spec.power == 0.0)

    def test_offset_invariance(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal(1024)
        a = dsp.welch_psd(x, 4.0, segment_len=128)
        b = dsp.welch_psd(x + 123.4, 4.0, segment_len=128)
        assert np.allclose(a.power, b.power, atol=1e-9)

    def test_freqs_start_at_zero(self):
        spec = dsp.welch_psd(np.ones(64), 4.0, segment_len=32)
        assert spec.freqs_hz[0] == 0.0
        assert np.all(np.diff(spec.freqs_hz) > 0)
        assert np.all(spec.power >= 0.0)

    def test_too_short(self):
        with pytest.raises(SignalTooShort):
            dsp.welch_psd(np.zeros(6), 4.0)
        with pytest.raises(SignalTooShort):
            dsp.welch_psd(np.zeros(100), 4.0, segment_len=128)

    def test_matches_scipy(self):
        from scipy import signal as sps
        rng = np.random.default_rng(4)
        x = rng.standard_normal(2000)
        spec = dsp.welch_psd(x, 8.0, segment_len=256)
        f, p = sps.welch(x, fs=8.0, nperseg=256, detrend="constant")
        assert np.allclose(spec.freqs_hz, f)
        assert np.allclose(spec.power, p, rtol=1e-10, atol=1e-12)


# --- band power ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def spectrum():
    rng = np.random.default_rng(12)
    x = rng.standard_normal(2048)
    return dsp.welch_psd(x, 4.0, segment_len=256)


class TestBandPower:

    def test_full_range_equals_total(self, spectrum):
        total = dsp.band_power(spectrum, float(spectrum.freqs_hz[0]),
                               float(spectrum.freqs_hz[-1]))
        expect = float(np.trapezoid(spectrum.power, spectrum.freqs_hz))
        assert total == pytest.approx(expect, rel=1e-12)

    def test_partition_additivity(self, spectrum):
        lf = dsp.band_power(spectrum, 0.04, 0.15)
        hf = dsp.band_power(spectrum, 0.15, 0.4)
        assert lf + hf == pytest.approx(dsp.band_power(spectrum, 0.04, 0.4),
                                        abs=1e-9)

    def test_concentrated_spectrum(self):
        fs = 4.0
        t = np.arange(0, 2000, 1 / fs)
        x = np.sin(2 * math.pi * 0.10 * t)
        spec = dsp.welch_psd(x, fs, segment_len=512)
        lf = dsp.band_power(spec, 0.04, 0.15)
        tp = dsp.band_power(spec, 0.0, 2.0)
        assert lf >= 0.95 * tp

    def test_no_support_returns_zero(self, spectrum):
        assert dsp.band_power(spectrum, 5.0, 6.0) == 0.0

    def test_invalid_band(self, spectrum):
        with pytest.raises(EmptyBand):
            dsp.band_power(spectrum, 0.4, 0.15)

    @given(lo=st.floats(0.0, 1.0), width=st.floats(0.01, 0.5),
           widen=st.floats(0.0, 0.5))
    @settings(max_examples=50, deadline=None)
    def test_monotone_widening(self, lo, width, widen):
        rng = np.random.default_rng(42)
        x = rng.standard_normal(1024)
        spec = dsp.welch_psd(x, 4.0, segment_len=128)
        inner = dsp.band_power(spec, lo, lo + width)
        outer = dsp.band_power(spec, max(0.0, lo - widen),
                               lo + width + widen)
        assert outer >= inner - 1e-12


# --- Pearson correlation ------------------------------------------------------------------


class TestPearson:
    def test_identity(self):
        a = [1.0, 2.0, 5.0, 3.0]
        assert dsp.pearson_corr(a, a) == pytest.approx(1.0)

    def test_negation(self):
        a = np.array([1.0, 2.0, 5.0, 3.0])
        assert dsp.pearson_corr(a, -a) == pytest.approx(-1.0)

    def test_known_value(self):
        r = dsp.pearson_corr([1, 2, 3, 4], [1, 2, 3, 5])
        assert r == pytest.approx(0.9827, abs=1e-3)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            a = rng.normal(size=20)
            b = rng.normal(size=20)
            da, db = a - a.mean(), b - b.mean()
            expect = float(np.sum(da * db)
                           / math.sqrt(np.sum(da ** 2) * np.sum(db ** 2)))
            assert dsp.pearson_corr(a, b) == pytest.approx(expect, abs=1e-12)

    def test_constant_input(self):
        with pytest.raises(ConstantInput):
            dsp.pearson_corr([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_bounded(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            r = dsp.pearson_corr(rng.normal(size=5), rng.normal(size=5))
            assert -1.0 <= r <= 1.0
