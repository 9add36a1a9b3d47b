"""Attitude estimation: a Mahony-style complementary filter on gyro+accel,
and roll extraction about the needle axis (the twirling-rotating angle).

Quaternions are scalar-first (w, x, y, z) and map body vectors into the
world frame (z up).  Gravity gives no information about rotation around
the vertical, so roll about a vertical needle is driven purely by gyro
integration; that matches how the twirling angle is used downstream
(per-cycle analysis, slow drift tolerated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import GRAVITY, SampledSeries
from .errors import ConfigError, EmptyInput, LengthMismatch


@dataclass(frozen=True)
class Quaternion:
    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = self.norm()
        if abs(n - 1.0) > 1e-6:
            raise ConfigError(f"quaternion norm {n} deviates from 1")

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x
                         + self.y * self.y + self.z * self.z)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def multiply(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @staticmethod
    def identity() -> "Quaternion":
        return Quaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "Quaternion":
        ax = np.asarray(axis, dtype=float)
        n = float(np.linalg.norm(ax))
        if n == 0:
            return Quaternion.identity()
        ax = ax / n
        h = 0.5 * angle
        s = math.sin(h)
        return Quaternion(math.cos(h), ax[0] * s, ax[1] * s, ax[2] * s)

    def rotate(self, vec) -> np.ndarray:
        """Rotate a body vector into the world frame."""
        v = np.asarray(vec, dtype=float)
        u = np.array([self.x, self.y, self.z])
        t = 2.0 * np.cross(u, v)
        return v + self.w * t + np.cross(u, t)


@dataclass(frozen=True)
class AttitudeGains:
    kp: float = 2.0   # 1/s, proportional gravity correction
    ki: float = 0.05  # 1/s, gyro-bias integral

    def __post_init__(self):
        if not self.kp > 0:
            raise ConfigError("kp must be positive")
        if self.ki < 0:
            raise ConfigError("ki must be nonnegative")


#: accel-magnitude gate: corrections are skipped when | |a| - g | exceeds
#: this fraction of g (dynamic motion)
GATE_FRACTION = 0.2


def mahony_step(q: Quaternion, gyro, accel, dt: float, gains: AttitudeGains,
                bias, gate_fraction: float = GATE_FRACTION,
                g: float = GRAVITY) -> tuple[Quaternion, tuple[float, float, float]]:
    """One complementary-filter update.

    The error vector is the cross product of the measured and predicted
    gravity directions (body frame); it feeds a proportional correction of
    the rate and an integral update of the gyro-bias estimate.  The
    quaternion is advanced by the exponential of the corrected rate over
    dt and renormalized.  When the accelerometer magnitude deviates from g
    by more than ``gate_fraction``, the correction is skipped.
    """
    if not dt > 0:
        raise ConfigError("dt must be positive")
    gyro_arr = np.asarray(gyro, dtype=np.float64).reshape(1, 3)
    accel_arr = np.asarray(accel, dtype=np.float64).reshape(1, 3)
    q_arr, b_arr = _kernels.mahony_batch(
        np.ascontiguousarray(gyro_arr), np.ascontiguousarray(accel_arr),
        dt, gains.kp, gains.ki, q.as_array(),
        np.asarray(bias, dtype=np.float64), gate_fraction, g)
    q_new = Quaternion(*q_arr[0])
    return q_new, (float(b_arr[0, 0]), float(b_arr[0, 1]), float(b_arr[0, 2]))


@dataclass(frozen=True)
class AttitudeTrack:
    """Per-sample attitude estimates on the sensor clock."""

    t0: float
    dt: float
    quaternions: np.ndarray  # (n, 4) scalar-first
    bias: np.ndarray         # (n, 3) rad/s

    def __len__(self) -> int:
        return self.quaternions.shape[0]


class MahonyFilter:
    """Stateful estimator wrapping the batch kernel.

    One instance per stream; distinct instances are independent.
    """

    def __init__(self, gains: AttitudeGains | None = None,
                 q0: Quaternion | None = None,
                 bias0=(0.0, 0.0, 0.0),
                 gate_fraction: float = GATE_FRACTION,
                 g: float = GRAVITY):
        self.gains = gains or AttitudeGains()
        self.q = q0 or Quaternion.identity()
        self.bias = tuple(float(b) for b in bias0)
        self.gate_fraction = gate_fraction
        self.g = g

    def step(self, gyro, accel, dt: float) -> Quaternion:
        self.q, self.bias = mahony_step(self.q, gyro, accel, dt, self.gains,
                                        self.bias, self.gate_fraction, self.g)
        return self.q

    def run(self, gyro: SampledSeries, accel: SampledSeries) -> AttitudeTrack:
        if len(gyro) != len(accel) or gyro.dt != accel.dt:
            raise LengthMismatch("gyro and accel series are not aligned")
        q_arr, b_arr = _kernels.mahony_batch(
            np.ascontiguousarray(gyro.values),
            np.ascontiguousarray(accel.values),
            gyro.dt, self.gains.kp, self.gains.ki, self.q.as_array(),
            np.asarray(self.bias, dtype=np.float64),
            self.gate_fraction, self.g)
        self.q = Quaternion(*q_arr[-1])
        self.bias = tuple(float(b) for b in b_arr[-1])
        return AttitudeTrack(gyro.t0, gyro.dt, q_arr, b_arr)


def attitude_from_accel(accel_mean) -> Quaternion:
    """Initial tilt-only alignment from a static accelerometer mean.

    Yaw is unobservable and left at zero.
    """
    a = np.asarray(accel_mean, dtype=float)
    n = float(np.linalg.norm(a))
    if n == 0:
        raise ConfigError("zero accelerometer vector")
    a = a / n
    z = np.array([0.0, 0.0, 1.0])
    axis = np.cross(a, z)
    s = float(np.linalg.norm(axis))
    c = float(np.dot(a, z))
    if s < 1e-12:
        if c > 0:
            return Quaternion.identity()
        return Quaternion(0.0, 1.0, 0.0, 0.0)  # upside down: 180 deg about x
    return Quaternion.from_axis_angle(axis, math.atan2(s, c))


def roll_angle_series(q_series, reference: Quaternion,
                      t0: float = 0.0, dt: float = 0.01) -> SampledSeries:
    """Unwrapped roll about the needle (body z) axis relative to a
    reference orientation.

    Accepts an AttitudeTrack, an (n, 4) array, or a list of Quaternion.
    Twist is extracted by swing-twist decomposition of the relative
    rotation and unwrapped with a half-turn-per-sample threshold.
    """
    if isinstance(q_series, AttitudeTrack):
        arr = q_series.quaternions
        t0, dt = q_series.t0, q_series.dt
    elif isinstance(q_series, np.ndarray):
        arr = q_series
    else:
        qs = list(q_series)
        if not qs:
            raise EmptyInput("empty quaternion series")
        arr = np.array([[q.w, q.x, q.y, q.z] for q in qs])
    if arr.size == 0:
        raise EmptyInput("empty quaternion series")
    rw, rx, ry, rz = reference.w, reference.x, reference.y, reference.z
    w, x, y, z = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    # q_rel = conj(reference) * q
    rel_w = rw * w + rx * x + ry * y + rz * z
    rel_z = rw * z - rx * y + ry * x - rz * w
    twist = 2.0 * np.arctan2(rel_z, rel_w)
    return SampledSeries(t0, dt, np.unwrap(twist), "rad")
