"""Velocity and displacement recovery from axial acceleration.

Segmented integration advances the trapezoidal recursion only through
motion intervals: stationary samples force velocity to zero, treat
acceleration as zero and hold displacement, and each motion interval
restarts from zero velocity.  On top of that, the known zero-velocity
constraint at the end of every motion interval is applied retroactively:
the residual terminal velocity (integrated sensor error) is removed as a
linear ramp across the interval before displacement is formed.  Without
this step the per-interval leakage of accelerometer bias accumulates
coherently over a long session and dominates the displacement error; the
naive double integration is kept as the uncorrected baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .attitude import AttitudeTrack
from .core import GRAVITY, SampledSeries
from .errors import LengthMismatch
from .statefuse import MotionStateTimeline

__all__ = ["KinematicEstimate", "segmented_integrate",
           "naive_double_integrate", "axial_projection"]


@dataclass(frozen=True)
class KinematicEstimate:
    """Recovered axial kinematics and the timeline that gated them."""

    velocity: SampledSeries
    displacement: SampledSeries
    states_used: MotionStateTimeline
    accel: SampledSeries   # the axial acceleration that was integrated

    def __len__(self) -> int:
        return len(self.velocity)


def _all_motion_timeline(accel: SampledSeries) -> MotionStateTimeline:
    conf = SampledSeries(accel.t0, accel.dt, np.ones(len(accel)), "confidence")
    return MotionStateTimeline(confidence=conf,
                               intervals=(("motion", 0, len(accel)),))


def segmented_integrate(accel: SampledSeries,
                        timeline: MotionStateTimeline,
                        zero_terminal_velocity: bool = True
                        ) -> KinematicEstimate:
    """Integrate gravity-removed axial acceleration through the timeline.

    With ``zero_terminal_velocity`` (default) every motion interval that
    is followed by a stationary interval has its residual end velocity
    removed as a linear in-interval ramp before displacement is formed;
    with the flag off the plain gated recursion is returned.
    """
    if len(accel) != len(timeline.confidence):
        raise LengthMismatch("acceleration and timeline lengths differ")
    a = np.ascontiguousarray(accel.values, dtype=np.float64)
    if a.ndim != 1:
        raise LengthMismatch("axial acceleration must be a scalar series")
    motion = timeline.motion_mask()
    v, d = _kernels.zupt_integrate(a, motion.astype(np.uint8), accel.dt, 0.0)
    if zero_terminal_velocity:
        n = len(a)
        v = v.copy()
        for start, end in timeline.motion_intervals():
            if end >= n:
                continue  # series ends mid-motion: no rest constraint
            if end - start < 2:
                v[start:end] = 0.0
                continue
            v_end = v[end - 1]
            v[start:end] -= v_end * (np.arange(end - start)
                                     / (end - 1 - start))
        d = np.empty(n)
        d[0] = 0.0
        if n > 1:
            d[1:] = np.cumsum(0.5 * (v[1:] + v[:-1]) * accel.dt)
    return KinematicEstimate(
        velocity=SampledSeries(accel.t0, accel.dt, v, "m/s"),
        displacement=SampledSeries(accel.t0, accel.dt, d, "m"),
        states_used=timeline, accel=accel)


def naive_double_integrate(accel: SampledSeries) -> KinematicEstimate:
    """Trapezoidal double integration with no state gating (baseline)."""
    a = np.ascontiguousarray(accel.values, dtype=np.float64)
    if a.ndim != 1:
        raise LengthMismatch("axial acceleration must be a scalar series")
    timeline = _all_motion_timeline(accel)
    motion = np.ones(len(a), dtype=np.uint8)
    v, d = _kernels.zupt_integrate(a, motion, accel.dt, 0.0)
    return KinematicEstimate(
        velocity=SampledSeries(accel.t0, accel.dt, v, "m/s"),
        displacement=SampledSeries(accel.t0, accel.dt, d, "m"),
        states_used=timeline, accel=accel)


def _quat_rotate_batch(q: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Rotate per-sample body vectors into the world frame.

    ``q`` is (n, 4) scalar-first body-to-world; ``vec`` is (n, 3) or (3,).
    """
    v = np.broadcast_to(vec, (q.shape[0], 3))
    w = q[:, :1]
    u = q[:, 1:]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def axial_projection(accel3: SampledSeries,
                     attitude: AttitudeTrack | np.ndarray,
                     axis=(0.0, 0.0, 1.0),
                     g: float = GRAVITY) -> SampledSeries:
    """Gravity-removed acceleration along the (attitude-tracked) needle axis.

    The body-frame specific force is rotated into the world frame, gravity
    is subtracted, and the result is projected on the world direction of
    ``axis`` (a unit vector in the body frame; the default +z points up
    the handle, so use (0, 0, -1) for insertion-positive output).
    """
    q = attitude.quaternions if isinstance(attitude, AttitudeTrack) else attitude
    if q.shape[0] != len(accel3):
        raise LengthMismatch("attitude series not aligned with acceleration")
    if accel3.values.ndim != 2 or accel3.values.shape[1] != 3:
        raise LengthMismatch("accel3 must be a 3-axis series")
    f_world = _quat_rotate_batch(q, accel3.values)
    a_world = f_world - np.array([0.0, 0.0, g])
    axis_world = _quat_rotate_batch(q, np.asarray(axis, dtype=np.float64))
    out = np.sum(a_world * axis_world, axis=1)
    return SampledSeries(accel3.t0, accel3.dt, out, "m/s^2")
