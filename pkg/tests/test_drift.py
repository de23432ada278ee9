import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlink.drift import (
    LAB_DRIFT,
    NO_DRIFT,
    DriftModel,
    Spectrum,
    TimeSeries,
    compare_band_power,
    fourier_spectrum,
    link_traces,
    synthesize_drift_trace,
)


def test_timeseries_length_and_validation():
    ts = synthesize_drift_trace(2.5, 1000.0)
    assert ts.samples.size == 2500 and ts.duration_s == 2.5
    with pytest.raises(ValueError):
        TimeSeries(0.0, [1.0])


def test_driftless_trace_is_periodic():
    ts = synthesize_drift_trace(1.0, 1000.0, 100.0, NO_DRIFT)
    x = ts.samples
    np.testing.assert_allclose(x[10:], x[:-10], atol=1e-12)
    # autocorrelation of the mean-removed trace peaks again at a 10 ms lag
    y = x - x.mean()
    ac = np.array([np.dot(y[: y.size - k], y[k:]) / (y.size - k) for k in range(1, 16)])
    assert int(np.argmax(ac)) + 1 == 10


def test_trace_determinism_and_nyquist():
    a = synthesize_drift_trace(5.0, 1000.0, 100.0, LAB_DRIFT, seed=3)
    b = synthesize_drift_trace(5.0, 1000.0, 100.0, LAB_DRIFT, seed=3)
    np.testing.assert_array_equal(a.samples, b.samples)
    with pytest.raises(ValueError, match="Nyquist"):
        synthesize_drift_trace(1.0, 150.0, 100.0)


def test_drift_raises_low_band_power():
    quiet = fourier_spectrum(synthesize_drift_trace(60.0, drift_model=NO_DRIFT, seed=1))
    noisy = fourier_spectrum(synthesize_drift_trace(60.0, drift_model=DriftModel(0.05), seed=1))
    assert noisy.band_power((0, 10)) > quiet.band_power((0, 10))


def test_drift_model_validation():
    with pytest.raises(ValueError):
        DriftModel(-1.0)
    with pytest.raises(ValueError):
        DriftModel(0.1, 0.0)
    assert DriftModel(0.1, 5.0).scaled(10).sigma_rad_per_sqrt_s == pytest.approx(1.0)


def test_ou_walk_is_stationary():
    rng = np.random.default_rng(0)
    phi = DriftModel(0.2, 1.0).phases(400_000, 1e-3, rng)
    # stationary variance sigma^2 * tau / 2
    assert np.var(phi) == pytest.approx(0.02, rel=0.25)


def test_pure_tone_single_bin():
    n, fs = 1000, 1000.0
    t = np.arange(n) / fs
    spec = fourier_spectrum(TimeSeries(fs, np.sin(2 * np.pi * 100 * t)))
    assert spec.resolution_hz == pytest.approx(fs / n)
    k = int(np.argmax(spec.magnitudes))
    assert spec.frequencies_hz[k] == pytest.approx(100.0)
    others = np.delete(spec.magnitudes, k)
    assert others.max() < 1e-9 * spec.magnitudes[k]
    assert spec.magnitudes[k] == pytest.approx(1 / np.sqrt(2), rel=1e-12)


def test_constant_trace_all_dc():
    spec = fourier_spectrum(TimeSeries(100.0, np.full(64, 3.0)))
    assert spec.magnitudes[0] == pytest.approx(3.0)
    assert np.all(spec.magnitudes[1:] < 1e-12)


def test_short_series_rejected():
    with pytest.raises(ValueError):
        fourier_spectrum(TimeSeries(10.0, np.zeros(15)))
    with pytest.raises(ValueError):
        fourier_spectrum(TimeSeries(10.0, np.zeros(32)), window="kaiser")


@settings(max_examples=100, deadline=None)
@given(st.integers(16, 400), st.integers(0, 2**32 - 1))
def test_parseval(n, seed):
    x = np.random.default_rng(seed).normal(size=n) + 0.3
    spec = fourier_spectrum(TimeSeries(50.0, x))
    assert np.sum(spec.magnitudes**2) == pytest.approx(np.mean(x**2), rel=1e-6)
    # direct two-sided sum
    two_sided = np.sum(np.abs(np.fft.fft(x) / n) ** 2)
    assert np.sum(spec.magnitudes**2) == pytest.approx(two_sided, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(16, 300), st.integers(0, 2**32 - 1), st.sampled_from(["rectangular", "hann"]))
def test_spectrum_linear(n, seed, window):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=n), rng.normal(size=n)
    sa, sb = fourier_spectrum(TimeSeries(1.0, a), window), fourier_spectrum(TimeSeries(1.0, b), window)
    sab = fourier_spectrum(TimeSeries(1.0, a + b), window)
    np.testing.assert_allclose(sab.coefficients, sa.coefficients + sb.coefficients, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(32, 300), st.integers(0, 2**32 - 1))
def test_compare_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    s1 = fourier_spectrum(TimeSeries(100.0, rng.normal(size=n)))
    s2 = fourier_spectrum(TimeSeries(100.0, rng.normal(size=n)))
    r12 = compare_band_power(s1, s2).ratio
    r21 = compare_band_power(s2, s1).ratio
    assert r12 * r21 == pytest.approx(1.0, rel=1e-12)


def test_compare_examples():
    s = fourier_spectrum(synthesize_drift_trace(20.0, drift_model=LAB_DRIFT, seed=2))
    same = compare_band_power(s, s)
    assert same.ratio == 1.0 and same.indistinguishable
    other = fourier_spectrum(synthesize_drift_trace(10.0))
    with pytest.raises(ValueError):
        compare_band_power(s, other)
    with pytest.raises(ValueError):
        compare_band_power(s, s, tolerance=0.5)


def test_modulation_peak_within_one_bin():
    ts = synthesize_drift_trace(30.0, 1000.0, 100.0, LAB_DRIFT, seed=4)
    spec = fourier_spectrum(ts, "hann")
    assert abs(spec.peak_frequency(10.0) - 100.0) <= spec.resolution_hz


def test_link_traces_share_statistics():
    b2b, spool = link_traces(30.0, seed=1, spool_transmission=0.76)
    assert b2b.samples.size == spool.samples.size
    assert spool.samples.max() <= 0.76 + 1e-12
    assert not np.array_equal(b2b.samples, spool.samples / 0.76)


def test_csv_roundtrip(tmp_path):
    ts = synthesize_drift_trace(0.5, 1000.0, 100.0, LAB_DRIFT, seed=8)
    p = tmp_path / "trace.csv"
    ts.save_csv(p)
    assert p.read_text().startswith("# sample_rate_hz=1000.0\n")
    back = TimeSeries.load_csv(p)
    assert back.sample_rate_hz == 1000.0
    np.testing.assert_allclose(back.samples, ts.samples, rtol=1e-11)
    spec = fourier_spectrum(back)
    q = tmp_path / "spec.csv"
    spec.save_csv(q)
    assert q.read_text().splitlines()[0] == "freq_hz,magnitude"
    again = Spectrum.load_csv(q)
    np.testing.assert_allclose(again.magnitudes, spec.magnitudes, rtol=1e-11)
    bad = tmp_path / "bad.csv"
    bad.write_text("1\n2\n")
    with pytest.raises(ValueError):
        TimeSeries.load_csv(bad)
