"""Metrology and statistics: Allan-deviation noise identification,
force-calibration nonlinearity, Welch's heteroscedastic ANOVA, and
mean +/- SD summaries.

Allan deviations use the overlapping estimator.  Random-walk coefficients
are returned in the series' native units times sqrt(s) (equivalently
X/sqrt(Hz)); unit helpers convert to the conventional ug/sqrt(Hz) and
deg/sqrt(h).  The Welch p-value comes from a locally implemented
regularized incomplete beta function, so no statistics package is needed
at run time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GRAVITY, SampledSeries
from .errors import (ConfigError, DegenerateGroup, DegenerateInput,
                     FitUnstable, SeriesTooShort)

BIAS_INSTABILITY_FACTOR = 0.664


@dataclass(frozen=True)
class AllanCurve:
    """Overlapping Allan deviation on a set of averaging times."""

    taus: np.ndarray             # seconds, strictly increasing
    adev: np.ndarray             # (ntau,) or (ntau, axes)

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=np.float64)
        adev = np.asarray(self.adev, dtype=np.float64)
        if np.any(np.diff(taus) <= 0):
            raise ConfigError("taus must be strictly increasing")
        if adev.shape[0] != len(taus):
            raise ConfigError("adev and taus lengths differ")
        if np.any(adev < 0):
            raise ConfigError("Allan deviation cannot be negative")
        for name, arr in (("taus", taus), ("adev", adev)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def axes(self) -> int:
        return 1 if self.adev.ndim == 1 else self.adev.shape[1]


@dataclass(frozen=True)
class NoiseCoefficients:
    """Fitted random-walk and bias-instability coefficients per axis.

    ``random_walk`` carries the series' native units * sqrt(s); ``slope``
    is the freely fitted log-log slope of the detected -1/2 region.
    """

    random_walk: np.ndarray
    bias_instability: np.ndarray
    slope: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.random_walk) < 0) \
                or np.any(np.asarray(self.bias_instability) < 0):
            raise ConfigError("noise coefficients must be nonnegative")


def allan_deviation(series: SampledSeries,
                    taus: np.ndarray | None = None) -> AllanCurve:
    """Overlapping Allan deviation of a rate series, per axis.

    Default taus: ~30 log-spaced cluster times from 2*dt to n*dt/9.  The
    series must be at least 9 times the largest cluster.
    """
    y = series.values
    n = y.shape[0]
    if n < 32:
        raise SeriesTooShort("need at least 32 samples for Allan analysis")
    dt = series.dt
    if taus is None:
        m_max = n // 9
        if m_max < 2:
            raise SeriesTooShort("series shorter than 18 samples")
        m = np.unique(np.round(np.logspace(
            math.log10(2), math.log10(m_max), 30)).astype(int))
    else:
        taus = np.asarray(taus, dtype=np.float64)
        m = np.unique(np.maximum(np.round(taus / dt).astype(int), 1))
        if np.any(m > n // 9):
            raise SeriesTooShort(
                "series length must be >= 9x the largest cluster")
    scalar = y.ndim == 1
    cols = y.reshape(n, -1)
    theta = np.vstack([np.zeros((1, cols.shape[1])),
                       np.cumsum(cols, axis=0) * dt])
    out = np.empty((len(m), cols.shape[1]))
    for i, mi in enumerate(m):
        d = theta[2 * mi:] - 2.0 * theta[mi:-mi] + theta[:-2 * mi]
        tau = mi * dt
        out[i] = np.sqrt(np.mean(d * d, axis=0) / (2.0 * tau * tau))
    adev = out[:, 0] if scalar else out
    return AllanCurve(taus=m * dt, adev=adev)


def fit_noise_coeffs(curve: AllanCurve,
                     slope_tolerance: float = 0.12,
                     min_region: int = 3) -> NoiseCoefficients:
    """Read noise coefficients off an Allan curve.

    The random-walk coefficient is the -1/2-slope region projected onto
    an exact -1/2 line and evaluated at tau = 1 s; bias instability is the
    curve minimum divided by 0.664.  FitUnstable is raised when no
    contiguous region of ``min_region`` points has local slope within
    ``slope_tolerance`` of -1/2.
    """
    taus = curve.taus
    if math.log10(taus[-1] / taus[0]) < 2.0 - 1e-9:
        raise FitUnstable("Allan curve spans less than 2 decades of tau")
    adev = curve.adev.reshape(len(taus), -1)
    rw = np.empty(adev.shape[1])
    bi = np.empty(adev.shape[1])
    sl = np.empty(adev.shape[1])
    log_tau = np.log(taus)
    for ax in range(adev.shape[1]):
        sigma = adev[:, ax]
        if np.any(sigma <= 0):
            raise FitUnstable("Allan deviation vanishes; nothing to fit")
        log_sig = np.log(sigma)
        local = np.diff(log_sig) / np.diff(log_tau)
        ok = np.abs(local + 0.5) <= slope_tolerance
        best_start, best_len = -1, 0
        run_start = None
        for i, flag in enumerate(np.append(ok, False)):
            if flag and run_start is None:
                run_start = i
            elif not flag and run_start is not None:
                if i - run_start > best_len:
                    best_start, best_len = run_start, i - run_start
                run_start = None
        if best_len + 1 < min_region:
            raise FitUnstable("no -1/2-slope region detected")
        pts = slice(best_start, best_start + best_len + 1)
        # project onto the exact -1/2 line and read it at tau = 1 s
        rw[ax] = math.exp(float(np.mean(log_sig[pts] + 0.5 * log_tau[pts])))
        sl[ax] = float(np.polyfit(log_tau[pts], log_sig[pts], 1)[0])
        bi[ax] = float(sigma.min()) / BIAS_INSTABILITY_FACTOR
    if curve.adev.ndim == 1:
        rw, bi, sl = rw[:1], bi[:1], sl[:1]
    return NoiseCoefficients(random_walk=rw, bias_instability=bi, slope=sl)


def accel_rw_to_ug_per_sqrt_hz(value: float) -> float:
    """(m/s^2)*sqrt(s) -> ug/sqrt(Hz)."""
    return value / (1e-6 * GRAVITY)


def gyro_rw_to_deg_per_sqrt_h(value: float) -> float:
    """(rad/s)*sqrt(s) -> deg/sqrt(h)."""
    return value * (180.0 / math.pi) * 60.0


def accel_bias_to_mg(value: float) -> float:
    """m/s^2 -> mg."""
    return value / (1e-3 * GRAVITY)


def gyro_bias_to_deg_per_h(value: float) -> float:
    """rad/s -> deg/h."""
    return value * (180.0 / math.pi) * 3600.0


# ---------------------------------------------------------------------------
# Force calibration


@dataclass(frozen=True)
class CalibrationCurve:
    """Applied force vs output voltage sweep (tension and compression)."""

    applied_force: np.ndarray   # N, signed
    output_voltage: np.ndarray  # V
    repeats: int = 1

    def __post_init__(self):
        f = np.asarray(self.applied_force, dtype=np.float64)
        v = np.asarray(self.output_voltage, dtype=np.float64)
        if f.shape != v.shape or f.ndim != 1:
            raise ConfigError("force and voltage must be equal-length vectors")
        if len(f) < 5:
            raise DegenerateInput("calibration needs at least 5 points")
        if not (f.min() < 0.0 < f.max()):
            raise ConfigError("sweep must span tension and compression")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        for name, arr in (("applied_force", f), ("output_voltage", v)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def nonlinearity_error(curve: CalibrationCurve) -> float:
    """Maximum residual of the least-squares line, as a fraction of the
    full-scale output span."""
    f = curve.applied_force
    v = curve.output_voltage
    design = np.stack([f, np.ones_like(f)], axis=1)
    coef, *_ = np.linalg.lstsq(design, v, rcond=None)
    residual = v - design @ coef
    span = float(v.max() - v.min())
    if span == 0:
        raise DegenerateInput("output voltage span is zero")
    return float(np.max(np.abs(residual))) / span


# ---------------------------------------------------------------------------
# Statistics


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iter = 300
    eps = 1e-15
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise FitUnstable("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to ~1e-8 absolute accuracy for a, b > 0, 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ConfigError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_survival(f: float, df1: float, df2: float) -> float:
    """P(F > f) for the F distribution."""
    if f <= 0:
        return 1.0
    x = df2 / (df2 + df1 * f)
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x)


def welch_anova(groups: list[np.ndarray]) -> tuple[float, float]:
    """Welch's heteroscedastic one-way ANOVA.

    Returns (F, p) with Welch-Satterthwaite denominator degrees of
    freedom.  Groups must each have >= 3 samples and nonzero variance.
    """
    if len(groups) < 2:
        raise DegenerateGroup("need at least two groups")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    for g in arrays:
        if g.ndim != 1 or len(g) < 3:
            raise DegenerateGroup("each group needs at least 3 samples")
        if np.var(g, ddof=1) == 0.0:
            raise DegenerateGroup("group variance is zero")
    k = len(arrays)
    n = np.array([len(g) for g in arrays], dtype=np.float64)
    means = np.array([g.mean() for g in arrays])
    variances = np.array([g.var(ddof=1) for g in arrays])
    w = n / variances
    w_tot = w.sum()
    mean_w = float((w * means).sum() / w_tot)
    a = float((w * (means - mean_w) ** 2).sum() / (k - 1))
    tmp = float((((1.0 - w / w_tot) ** 2) / (n - 1.0)).sum())
    b = 1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * tmp
    f_stat = a / b
    df1 = k - 1.0
    df2 = (k * k - 1.0) / (3.0 * tmp)
    return f_stat, f_survival(f_stat, df1, df2)


def mean_sd(samples) -> tuple[float, float]:
    """Arithmetic mean and sample (n-1) standard deviation."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise DegenerateInput("need at least 2 samples")
    return float(x.mean()), float(x.std(ddof=1))
