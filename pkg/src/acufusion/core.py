"""Shared data model: uniformly sampled time series, recording sessions,
manipulation labels, and the cubic-spline resampler used to put the 30 Hz
visual channel onto the 100 Hz inertial clock.

Conventions
-----------
* All series are uniform-rate; the timestamp of sample ``n`` is exactly
  ``t0 + n * dt``.  No per-sample jitter is stored.
* All internal units are SI (N, m, s, rad).  Unit strings are carried for
  I/O and reporting only.
* Values are float64 and frozen after construction; every operation here
  is a pure function.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DegenerateInput, LengthMismatch, SpanError

IMU_RATE_HZ = 100.0
VISUAL_RATE_HZ = 30.0
GRAVITY = 9.80665  # m/s^2


@dataclass(frozen=True)
class SampledSeries:
    """Uniformly sampled scalar or fixed-width vector series.

    Parameters
    ----------
    t0 : float
        Time of the first sample, seconds.
    dt : float
        Sample interval, seconds; strictly positive.
    values : array_like
        Shape (n,) for scalar series or (n, k) for k-wide vector series.
    unit : str
        Physical unit of the values (informational).
    """

    t0: float
    dt: float
    values: np.ndarray
    unit: str = ""

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim not in (1, 2):
            raise ConfigError(f"values must be 1-D or 2-D, got ndim={arr.ndim}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    @property
    def rate(self) -> float:
        return 1.0 / self.dt

    @property
    def t_end(self) -> float:
        """Time of the last sample."""
        return self.t0 + (len(self) - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def with_values(self, values: np.ndarray, unit: str | None = None) -> "SampledSeries":
        """Same clock, new values."""
        return SampledSeries(self.t0, self.dt, values,
                             self.unit if unit is None else unit)


class ManipulationType(enum.Enum):
    """The four basic manipulations."""

    LTRF = "LTRF"  # lifting-thrusting reinforcement
    LTRD = "LTRD"  # lifting-thrusting reduction
    TRRF = "TRRF"  # twirling-rotating reinforcement
    TRRD = "TRRD"  # twirling-rotating reduction


@dataclass(frozen=True)
class ForceCalibration:
    """Force channel electrical model.

    ``sensitivity`` (V/V) * ``excitation`` (V) * ``gain`` is the output
    voltage at full-scale force; ``offset`` is added after amplification.
    """

    sensitivity: float = 0.0005  # V/V at full scale
    excitation: float = 5.0      # V
    gain: float = 600.0          # three-stage amplifier chain
    full_scale: float = 22.2     # N
    offset: float = 0.0          # V

    def __post_init__(self):
        if not self.gain > 0:
            raise ConfigError("gain must be positive")
        if not self.full_scale > 0:
            raise ConfigError("full_scale must be positive")

    @property
    def volts_per_newton(self) -> float:
        return self.sensitivity * self.excitation * self.gain / self.full_scale


@dataclass(frozen=True)
class RecordingSession:
    """Synchronized sensor streams from one recording.

    force, accel and gyro share t0 and the 100 Hz clock; the optional
    visual channel runs at 30 Hz over an overlapping span.
    """

    force: SampledSeries                    # N, scalar
    accel: SampledSeries                    # m/s^2, 3-axis
    gyro: SampledSeries                     # rad/s, 3-axis
    visual: SampledSeries | None = None     # flow magnitude, dimensionless
    label: ManipulationType | None = None
    calibration: ForceCalibration = field(default_factory=ForceCalibration)

    def __post_init__(self):
        for name, ch in (("force", self.force), ("accel", self.accel),
                         ("gyro", self.gyro)):
            if ch.t0 != self.force.t0 or ch.dt != self.force.dt:
                raise ConfigError(f"{name} clock differs from force clock")
            if len(ch) != len(self.force):
                raise LengthMismatch(f"{name} length differs from force length")
        if self.accel.width != 3 or self.gyro.width != 3:
            raise ConfigError("accel and gyro must be 3-axis")
        if self.visual is not None:
            lo = max(self.force.t0, self.visual.t0)
            hi = min(self.force.t_end, self.visual.t_end)
            if hi <= lo:
                raise ConfigError("visual span does not overlap inertial span")

    @property
    def duration(self) -> float:
        return len(self.force) * self.force.dt


def resample_cubic_spline(src: SampledSeries, target_dt: float,
                          target_span: tuple[float, float]) -> SampledSeries:
    """Resample a series onto a new uniform grid with a natural cubic spline.

    The target grid starts at ``target_span[0]`` and steps by ``target_dt``
    up to (at most) ``target_span[1]``.  No extrapolation: the span must
    lie inside the source span.  Output passes exactly through source
    values wherever a target node coincides with a source node.
    """
    if len(src) < 4:
        raise DegenerateInput(f"need >= 4 samples to spline, got {len(src)}")
    if not target_dt > 0:
        raise ConfigError("target_dt must be positive")
    t_start, t_end = target_span
    if t_end < t_start:
        raise SpanError("target span is empty")
    # Tolerate float round-off at the edges (half a source sample step).
    eps = 0.5e-9 * src.dt
    if t_start < src.t0 - eps or t_end > src.t_end + eps:
        raise SpanError(
            f"target span [{t_start}, {t_end}] exceeds source span "
            f"[{src.t0}, {src.t_end}]")
    n_out = int(np.floor((t_end - t_start) / target_dt + 1e-9)) + 1
    t_new = t_start + target_dt * np.arange(n_out)
    t_new = np.clip(t_new, src.t0, src.t_end)
    spline = CubicSpline(src.times(), src.values, axis=0, bc_type="natural")
    out = spline(t_new)
    # nodes that land on source knots take the source values exactly
    k = np.round((t_new - src.t0) / src.dt).astype(int)
    on_knot = (np.abs(t_new - (src.t0 + k * src.dt)) < 1e-6 * src.dt) \
        & (k >= 0) & (k < len(src))
    out[on_knot] = src.values[k[on_knot]]
    return SampledSeries(t_start, target_dt, out, src.unit)


def rmse(a: SampledSeries, b: SampledSeries) -> float:
    """Root mean square difference of two equally sampled series."""
    if len(a) != len(b):
        raise LengthMismatch(f"lengths differ: {len(a)} vs {len(b)}")
    if a.dt != b.dt:
        raise LengthMismatch(f"sample intervals differ: {a.dt} vs {b.dt}")
    diff = a.values - b.values
    return float(np.sqrt(np.mean(np.square(diff))))
