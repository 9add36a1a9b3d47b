"""Signal conditioning: prestress compensation, mains notch, wavelet
denoising for the force channel, and the accelerometer low-pass that
mirrors the in-chip filter.

All filters are applied forward-backward (zero phase), because cycle
characteristic-point timing downstream must not be phase shifted.  At the
100 Hz sensor rate a 50 Hz notch sits exactly at Nyquist; the pole-zero
design below handles that edge with real coefficients, so the same code
serves both the deployed rate and higher test rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import filtfilt

from .core import SampledSeries
from .errors import ConfigError, DegenerateInput, WindowTooLong


def compensate_prestress(force: SampledSeries,
                         baseline_window: float) -> SampledSeries:
    """Subtract the mean over an initial no-manipulation window."""
    if baseline_window < 0.5:
        raise ConfigError("baseline window must cover at least 0.5 s")
    n_base = int(round(baseline_window / force.dt))
    if n_base > len(force):
        raise WindowTooLong(
            f"baseline window {baseline_window} s exceeds series "
            f"({len(force) * force.dt} s)")
    baseline = float(np.mean(force.values[:n_base], axis=0))
    return force.with_values(force.values - baseline)


@dataclass(frozen=True)
class NotchSpec:
    """Second-order notch: center frequency, sample rate, and quality."""

    f0: float = 50.0
    fs: float = 100.0
    quality: float = 30.0

    def __post_init__(self):
        if not 0 < self.f0 <= self.fs / 2:
            raise ConfigError("f0 must lie in (0, fs/2]")
        if not self.quality > 0:
            raise ConfigError("quality must be positive")


def _notch_coefficients(spec: NotchSpec) -> tuple[np.ndarray, np.ndarray]:
    w0 = 2.0 * math.pi * spec.f0 / spec.fs
    rho = 1.0 - math.pi * spec.f0 / (spec.quality * spec.fs)
    if rho <= 0:
        raise ConfigError("quality too low for this f0/fs")
    c = math.cos(w0)
    b = np.array([1.0, -2.0 * c, 1.0])
    a = np.array([1.0, -2.0 * rho * c, rho * rho])
    # unity gain at whichever band edge is farther from the notch
    z = 1.0 if spec.f0 >= spec.fs / 4 else -1.0
    num = b[0] * z * z + b[1] * z + b[2]
    den = a[0] * z * z + a[1] * z + a[2]
    return b * (den / num), a


def notch_filter(series: SampledSeries, spec: NotchSpec) -> SampledSeries:
    """Zero-phase second-order notch at spec.f0."""
    if abs(series.rate - spec.fs) > 1e-6 * spec.fs:
        raise ConfigError(
            f"series rate {series.rate} Hz does not match spec fs {spec.fs} Hz")
    if len(series) < 10:
        raise DegenerateInput("series too short to notch filter")
    b, a = _notch_coefficients(spec)
    return series.with_values(filtfilt(b, a, series.values, axis=0))


def lowpass_accel(series: SampledSeries, bandwidth: float) -> SampledSeries:
    """Zero-phase second-order Butterworth low-pass.

    The one-pass cutoff is prewarped so the overall (two-pass) response is
    -3 dB at ``bandwidth``.
    """
    if not 0 < bandwidth < series.rate / 2:
        raise ConfigError("bandwidth must lie in (0, fs/2)")
    if len(series) < 10:
        raise DegenerateInput("series too short to low-pass filter")
    from scipy.signal import butter
    # two passes of |H|^2 = 1/(1+T^4) reach -3 dB where T^4 = sqrt(2)-1
    t_edge = (math.sqrt(2.0) - 1.0) ** 0.25
    wc = 2.0 * math.atan(math.tan(math.pi * bandwidth / series.rate) / t_edge)
    b, a = butter(2, wc / math.pi)
    return series.with_values(filtfilt(b, a, series.values, axis=0))


# ---------------------------------------------------------------------------
# Daubechies wavelet shrinkage


@lru_cache(maxsize=None)
def daubechies_filter(order: int) -> np.ndarray:
    """Minimum-phase Daubechies scaling filter with ``order`` vanishing
    moments (2*order taps), normalized to sum sqrt(2).

    Built by spectral factorization: roots of the binomial polynomial are
    mapped into the unit circle and combined with the (1+z)^order factor.
    """
    if order < 1:
        raise ConfigError("wavelet order must be >= 1")
    n = order
    binom = [math.comb(n - 1 + k, k) for k in range(n)]
    yroots = np.roots(binom[::-1]) if n > 1 else np.array([])
    poly = np.poly1d([1.0])
    for _ in range(n):
        poly = poly * np.poly1d([1.0, 1.0])
    for y in yroots:
        b = 2.0 - 4.0 * y
        disc = np.sqrt(b * b - 4.0 + 0j)
        z1 = (b + disc) / 2.0
        z2 = (b - disc) / 2.0
        poly = poly * np.poly1d([1.0, -(z1 if abs(z1) < 1 else z2)])
    h = np.real(poly.coeffs)
    h = h / np.sum(h) * math.sqrt(2.0)
    h.setflags(write=False)
    return h


@lru_cache(maxsize=None)
def _filter_banks(order: int):
    h = daubechies_filter(order)
    length = len(h)
    dec_lo = h[::-1].copy()
    dec_hi = np.array([(-1.0) ** k * h[k] for k in range(length)])
    rec_lo = h.copy()
    rec_hi = dec_hi[::-1].copy()
    return dec_lo, dec_hi, rec_lo, rec_hi, length


def _dwt_single(x: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    dec_lo, dec_hi, _, _, flen = _filter_banks(order)
    n = len(x)
    ext = np.concatenate([x[flen - 2::-1], x, x[-1:-flen:-1]])
    out_len = (n + flen - 1) // 2
    approx = np.convolve(ext, dec_lo)[flen::2][:out_len]
    detail = np.convolve(ext, dec_hi)[flen::2][:out_len]
    return approx, detail


def _idwt_single(approx: np.ndarray, detail: np.ndarray, n_out: int,
                 order: int) -> np.ndarray:
    _, _, rec_lo, rec_hi, flen = _filter_banks(order)
    up_a = np.zeros(2 * len(approx))
    up_a[::2] = approx
    up_d = np.zeros(2 * len(detail))
    up_d[::2] = detail
    rec = np.convolve(up_a, rec_lo) + np.convolve(up_d, rec_hi)
    return rec[flen - 2:flen - 2 + n_out]


def wavedec(x: np.ndarray, order: int, levels: int
            ) -> tuple[np.ndarray, list[np.ndarray]]:
    """Multilevel DWT with half-sample symmetric boundary extension.

    Returns (approximation, [detail_level1 ... detail_levelN]) where
    level 1 is the finest scale.
    """
    flen = 2 * order
    if levels < 1:
        raise ConfigError("levels must be >= 1")
    details = []
    cur = np.asarray(x, dtype=np.float64)
    for _ in range(levels):
        if len(cur) < flen:
            raise DegenerateInput("series too short for this many levels")
        cur, d = _dwt_single(cur, order)
        details.append(d)
    return cur, details


def waverec(approx: np.ndarray, details: list[np.ndarray], n_out: int,
            order: int) -> np.ndarray:
    """Inverse of wavedec; ``n_out`` is the original signal length."""
    flen = 2 * order
    lens = [n_out]
    for _ in details:
        lens.append((lens[-1] + flen - 1) // 2)
    rec = approx
    for lev in range(len(details) - 1, -1, -1):
        rec = _idwt_single(rec, details[lev], lens[lev], order)
    return rec


@dataclass(frozen=True)
class WaveletSpec:
    """Wavelet shrinkage parameters.

    ``threshold_rule`` is "universal-soft" (soft shrinkage at
    sigma*sqrt(2 ln N), sigma from the median absolute deviation of the
    finest details / 0.6745) or "none" (analysis/synthesis identity).
    """

    order: int = 5
    levels: int = 4
    threshold_rule: str = "universal-soft"

    def __post_init__(self):
        if self.order < 1 or self.levels < 1:
            raise ConfigError("order and levels must be >= 1")
        if self.threshold_rule not in ("universal-soft", "none"):
            raise ConfigError(f"unknown threshold rule {self.threshold_rule!r}")


def wavelet_denoise(series: SampledSeries, spec: WaveletSpec) -> SampledSeries:
    """Multilevel wavelet shrinkage; output length equals input length."""
    n = len(series)
    if spec.levels > max(int(math.floor(math.log2(n))) - 2, 0):
        raise ConfigError(
            f"levels={spec.levels} too deep for a series of {n} samples")
    if n < 2 * spec.order:
        raise DegenerateInput("series shorter than the wavelet filter")
    x = series.values
    if x.ndim != 1:
        raise ConfigError("wavelet denoising expects a scalar series")
    approx, details = wavedec(x, spec.order, spec.levels)
    if spec.threshold_rule == "universal-soft":
        finest = details[0]
        sigma = float(np.median(np.abs(finest - np.median(finest)))) / 0.6745
        thr = sigma * math.sqrt(2.0 * math.log(n))
        details = [np.sign(d) * np.maximum(np.abs(d) - thr, 0.0)
                   for d in details]
    return series.with_values(waverec(approx, details, n, spec.order))
