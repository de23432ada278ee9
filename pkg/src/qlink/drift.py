"""Interferometer phase-drift traces and their Fourier spectra.

A photodiode behind the final beamsplitter sees
``(1 + V*cos(A*sin(2*pi*f*t) + bias + drift(t))) / 2`` while Alice's
modulator is driven with a sine.  The spectra of such traces are compared
band by band to decide whether an added fiber span changes the drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .components import substream

WINDOWS = ("rectangular", "hann")
DEFAULT_SAMPLE_RATE_HZ = 1000.0
DEFAULT_BAND_HZ = (0.0, 10.0)


@dataclass(frozen=True)
class TimeSeries:
    sample_rate_hz: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")
        s = np.asarray(self.samples, dtype=float).reshape(-1)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz

    def save_csv(self, path: str | Path) -> None:
        body = "\n".join(f"{v:.12g}" for v in self.samples)
        Path(path).write_text(f"# sample_rate_hz={self.sample_rate_hz!r}\n{body}\n")

    @classmethod
    def load_csv(cls, path: str | Path) -> "TimeSeries":
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("# sample_rate_hz="):
                raise ValueError(f"{path}: missing '# sample_rate_hz=' header")
            rate = float(header.split("=", 1)[1])
            samples = np.loadtxt(fh, dtype=float, ndmin=1)
        return cls(rate, samples)


@dataclass(frozen=True)
class DriftModel:
    """Phase random walk, sigma in rad/sqrt(s).

    With ``relax_time_s`` set the walk is pulled back towards zero on that
    time scale (Ornstein-Uhlenbeck), giving stationary drift whose spectrum
    is flat below 1/(2*pi*relax_time_s) and falls as 1/f^2 above it.
    """

    sigma_rad_per_sqrt_s: float = 0.0
    relax_time_s: float | None = None

    def __post_init__(self):
        if self.sigma_rad_per_sqrt_s < 0:
            raise ValueError("drift sigma must be >= 0")
        if self.relax_time_s is not None and self.relax_time_s <= 0:
            raise ValueError("relax time must be positive")

    def scaled(self, factor: float) -> "DriftModel":
        return DriftModel(self.sigma_rad_per_sqrt_s * factor, self.relax_time_s)

    def phases(self, n: int, dt: float, rng: np.random.Generator) -> np.ndarray:
        if self.sigma_rad_per_sqrt_s == 0:
            return np.zeros(n)
        kicks = rng.standard_normal(n) * self.sigma_rad_per_sqrt_s * np.sqrt(dt)
        if self.relax_time_s is None:
            return np.cumsum(kicks) - kicks[0]
        from scipy.signal import lfilter

        a = np.exp(-dt / self.relax_time_s)
        # exact discretization: phi[k] = a*phi[k-1] + kick with matched variance
        kicks *= np.sqrt((1 - a**2) * self.relax_time_s / (2 * dt))
        return lfilter([1.0], [1.0, -a], kicks)


NO_DRIFT = DriftModel()
# stationary lab drift used for the back-to-back vs spool comparison
LAB_DRIFT = DriftModel(0.02, 10.0)


def synthesize_drift_trace(
    duration_s: float,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    mod_freq_hz: float = 100.0,
    drift_model: DriftModel = NO_DRIFT,
    seed: int = 0,
    visibility: float = 1.0,
    mod_depth_rad: float = 1.0,
    bias_rad: float = np.pi / 2,
    transmission: float = 1.0,
) -> TimeSeries:
    """Photodiode trace of a sine-modulated interferometer with phase drift.

    ``bias_rad`` sets the static operating point (quadrature by default, where
    the fundamental dominates); ``transmission`` scales the detected power.
    """
    if sample_rate_hz <= 2 * mod_freq_hz:
        raise ValueError(
            f"sample rate {sample_rate_hz} Hz does not resolve {mod_freq_hz} Hz modulation (Nyquist)"
        )
    n = int(round(duration_s * sample_rate_hz))
    if n < 1:
        raise ValueError("duration too short for one sample")
    t = np.arange(n) / sample_rate_hz
    drift = drift_model.phases(n, 1.0 / sample_rate_hz, substream(seed, 0))
    phase = mod_depth_rad * np.sin(2 * np.pi * mod_freq_hz * t) + bias_rad + drift
    return TimeSeries(sample_rate_hz, transmission * 0.5 * (1.0 + visibility * np.cos(phase)))


@dataclass(frozen=True)
class Spectrum:
    """One-sided RMS magnitude spectrum.

    ``magnitudes[k]**2`` is the mean-square power in bin k, so for the
    rectangular window the squared magnitudes sum to the mean of x**2.
    ``coefficients`` holds the scaled complex rfft values behind them.
    """

    frequencies_hz: np.ndarray = field(repr=False)
    magnitudes: np.ndarray = field(repr=False)
    window: str = "rectangular"
    coefficients: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def resolution_hz(self) -> float:
        return float(self.frequencies_hz[1] - self.frequencies_hz[0])

    def band_power(self, band_hz: tuple[float, float]) -> float:
        lo, hi = band_hz
        sel = (self.frequencies_hz > lo) & (self.frequencies_hz <= hi)
        return float(np.sum(self.magnitudes[sel] ** 2))

    def peak_frequency(self, min_hz: float = 0.0) -> float:
        """Frequency of the largest bin above ``min_hz`` (DC always excluded)."""
        sel = self.frequencies_hz > min_hz
        k = np.argmax(np.where(sel, self.magnitudes, -np.inf))
        return float(self.frequencies_hz[k])

    def save_csv(self, path: str | Path) -> None:
        rows = "\n".join(f"{f:.17g},{m:.12g}" for f, m in zip(self.frequencies_hz, self.magnitudes))
        Path(path).write_text(f"freq_hz,magnitude\n{rows}\n")

    @classmethod
    def load_csv(cls, path: str | Path, window: str = "rectangular") -> "Spectrum":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], window)


def fourier_spectrum(ts: TimeSeries, window: str = "rectangular") -> Spectrum:
    """One-sided RMS spectrum with resolution sample_rate/len.

    The Hann window is rescaled to unit mean square so broadband power is
    preserved on average.
    """
    x = ts.samples
    n = x.size
    if n < 16:
        raise ValueError(f"need at least 16 samples, got {n}")
    if window == "rectangular":
        w = np.ones(n)
    elif window == "hann":
        w = np.hanning(n)
        w = w / np.sqrt(np.mean(w**2))
    else:
        raise ValueError(f"unknown window {window!r}; expected one of {WINDOWS}")
    coeff = np.fft.rfft(x * w) / n
    mag = np.abs(coeff)
    # fold the negative frequencies in; DC and (even-n) Nyquist appear once
    fold = np.full(mag.size, np.sqrt(2.0))
    fold[0] = 1.0
    if n % 2 == 0:
        fold[-1] = 1.0
    freqs = np.fft.rfftfreq(n, d=1.0 / ts.sample_rate_hz)
    return Spectrum(freqs, mag * fold, window, coeff)


@dataclass(frozen=True)
class BandComparison:
    ratio: float
    indistinguishable: bool
    band_hz: tuple[float, float]
    tolerance: float


def compare_band_power(
    s1: Spectrum,
    s2: Spectrum,
    band_hz: tuple[float, float] = DEFAULT_BAND_HZ,
    tolerance: float = 2.0,
) -> BandComparison:
    """Ratio of in-band power s1/s2 and whether it lies within [1/tol, tol]."""
    if s1.frequencies_hz.shape != s2.frequencies_hz.shape or not np.allclose(
        s1.frequencies_hz, s2.frequencies_hz, rtol=1e-12, atol=0
    ):
        raise ValueError("spectra are on different frequency grids")
    if tolerance < 1:
        raise ValueError("tolerance must be >= 1")
    p1, p2 = s1.band_power(band_hz), s2.band_power(band_hz)
    if p1 == p2:
        ratio = 1.0
    elif p2 == 0:
        ratio = np.inf
    else:
        ratio = p1 / p2
    return BandComparison(float(ratio), bool(1 / tolerance <= ratio <= tolerance), tuple(band_hz), tolerance)


def link_traces(
    duration_s: float,
    seed: int,
    drift_model: DriftModel = LAB_DRIFT,
    spool_transmission: float = 1.0,
    **kwargs,
) -> tuple[TimeSeries, TimeSeries]:
    """(back-to-back, with spool) traces under the same local drift statistics.

    Drift lives in the parallel single-mode paths at Alice and Bob; the
    few-mode span adds only a phase common to both modes, which cancels at
    the final beamsplitter, so the spool trace differs only by its own drift
    realization and its power transmission.
    """
    b2b = synthesize_drift_trace(duration_s, drift_model=drift_model, seed=seed * 2, **kwargs)
    spool = synthesize_drift_trace(
        duration_s, drift_model=drift_model, seed=seed * 2 + 1, transmission=spool_transmission, **kwargs
    )
    return b2b, spool
