"""Motion-confidence fusion: acceleration variance and visual flow are
mapped through saturating measurements into a scalar-state Kalman filter,
and the confidence series is thresholded (with hysteresis and a minimum
dwell time) into alternating stationary/motion intervals.

The two measurement channels play complementary roles: hand tremor keeps
the acceleration channel from ever being quiet during the rest intervals,
while the visual flow tracks true needle speed and stays near its noise
floor there.  Thresholds are calibrated on a stationary prefix of the
session so both channels read "low" whenever the needle is genuinely
still.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import RecordingSession, SampledSeries, resample_cubic_spline
from .errors import (ConfigError, DegenerateInput, MissingChannel,
                     SingularInnovation)


@dataclass(frozen=True)
class ConfidenceState:
    """Scalar motion-confidence state with its filter covariances."""

    p: float = 0.0                    # motion confidence in [0, 1]
    P: float = 1.0                    # estimate variance
    Q: float = 1e-3                   # process-noise variance
    R: np.ndarray = field(default_factory=lambda: np.diag([0.03, 0.05]))

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ConfigError("confidence must lie in [0, 1]")
        if not self.P > 0 or not self.Q > 0:
            raise ConfigError("P and Q must be positive")
        r = np.asarray(self.R, dtype=np.float64)
        if r.shape != (2, 2) or not np.allclose(r, r.T):
            raise ConfigError("R must be a symmetric 2x2 matrix")
        if np.any(np.linalg.eigvalsh(r) <= 0):
            raise ConfigError("R must be positive definite")
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "R", r)


@dataclass(frozen=True)
class FusionThresholds:
    """Measurement mapping and decision parameters.

    ``tau_acc`` / ``tau_vis`` scale the saturating measurement map;
    ``window`` is the sliding-variance window (odd, centered).  The
    decision threshold is applied with hysteresis ``delta`` (enter motion
    above threshold+delta, leave below threshold-delta) and states shorter
    than ``min_state_duration`` are merged away.
    """

    tau_acc: float
    tau_vis: float
    window: int = 9
    decision_threshold: float = 0.5
    delta: float = 0.05
    min_state_duration: float = 0.05

    def __post_init__(self):
        if self.tau_acc <= 0 or self.tau_vis <= 0:
            raise ConfigError("tau_acc and tau_vis must be positive")
        if self.window < 2:
            raise ConfigError("window must be >= 2")
        if not 0 < self.decision_threshold < 1:
            raise ConfigError("decision threshold must lie in (0, 1)")
        if not 0 <= self.delta < min(self.decision_threshold,
                                     1 - self.decision_threshold):
            raise ConfigError("hysteresis must keep both thresholds in (0, 1)")
        if self.min_state_duration < 0:
            raise ConfigError("min_state_duration must be nonnegative")


@dataclass(frozen=True)
class MotionStateTimeline:
    """Per-sample confidence and the derived alternating interval labels."""

    confidence: SampledSeries
    intervals: tuple[tuple[str, int, int], ...]  # (state, start, end_excl)
    mode: str = "fused"   # "fused" (accel+visual) or "imu-only"

    def __post_init__(self):
        pos = 0
        prev = None
        for state, start, end in self.intervals:
            if state not in ("motion", "stationary"):
                raise ConfigError(f"unknown state {state!r}")
            if start != pos or end <= start:
                raise ConfigError("intervals must tile the series in order")
            if prev == state:
                raise ConfigError("intervals must alternate states")
            pos = end
            prev = state
        if pos != len(self.confidence):
            raise ConfigError("intervals do not cover the series")

    def motion_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.confidence), dtype=bool)
        for state, start, end in self.intervals:
            if state == "motion":
                mask[start:end] = True
        return mask

    def motion_intervals(self) -> list[tuple[int, int]]:
        return [(s, e) for st, s, e in self.intervals if st == "motion"]


def _sliding_moments(x: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Centered sliding mean and population variance with shrunken edge
    windows, via cumulative sums.

    The variance pass works on the globally centered signal (variance is
    shift invariant), which keeps cancellation error away from the large
    offset of an acceleration-magnitude signal.
    """
    n = len(x)
    half = window // 2
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    count = hi - lo
    c1 = np.concatenate([[0.0], np.cumsum(x)])
    mean = (c1[hi] - c1[lo]) / count
    xc = x - np.mean(x)
    c1c = np.concatenate([[0.0], np.cumsum(xc)])
    c2c = np.concatenate([[0.0], np.cumsum(xc * xc)])
    mean_c = (c1c[hi] - c1c[lo]) / count
    var = np.maximum((c2c[hi] - c2c[lo]) / count - mean_c * mean_c, 0.0)
    return mean, var


def accel_variance(accel: SampledSeries, window: int) -> SampledSeries:
    """Sliding-window variance of the acceleration magnitude.

    3-axis input is reduced to its Euclidean magnitude first; scalar input
    is used as is.  ``window`` must be odd (centered window); edges use
    shrunken windows.
    """
    if window < 2:
        raise DegenerateInput("window must be >= 2 samples")
    if window % 2 == 0:
        raise DegenerateInput("window must be odd (centered)")
    if len(accel) < 2:
        raise DegenerateInput("series too short")
    x = accel.values
    if x.ndim == 2:
        x = np.sqrt(np.sum(x * x, axis=1))
    _, var = _sliding_moments(x, window)
    return SampledSeries(accel.t0, accel.dt, var, "(m/s^2)^2")


def measurement_vector(z_acc: float, z_vis: float,
                       thresholds: FusionThresholds) -> np.ndarray:
    """Saturating measurement map [1-exp(-z/tau)] for both channels."""
    if z_acc < 0 or z_vis < 0:
        raise ConfigError("measurements must be nonnegative")
    return np.array([1.0 - np.exp(-z_acc / thresholds.tau_acc),
                     1.0 - np.exp(-z_vis / thresholds.tau_vis)])


def kalman_step(state: ConfidenceState, z) -> ConfidenceState:
    """One predict+update of the confidence filter (H = [1, 1]^T).

    Predict: x- = x, P- = P + Q.  Update with the 2x2 innovation inverse;
    the posterior confidence is clamped into [0, 1].
    """
    z = np.asarray(z, dtype=np.float64).reshape(1, 2)
    r = state.R
    try:
        x_arr, p_arr = _kernels.confidence_batch(
            np.ascontiguousarray(z), state.p, state.P, state.Q,
            float(r[0, 0]), float(r[0, 1]), float(r[1, 0]), float(r[1, 1]))
    except ValueError as exc:
        raise SingularInnovation(
            "innovation covariance is not invertible") from exc
    return ConfidenceState(p=float(x_arr[0]), P=float(p_arr[0]),
                           Q=state.Q, R=state.R)


def run_confidence_filter(z: np.ndarray, state: ConfidenceState
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Run the filter over an (n, 2) measurement array; returns (x, P)."""
    r = state.R
    try:
        return _kernels.confidence_batch(
            np.ascontiguousarray(z, dtype=np.float64), state.p, state.P,
            state.Q, float(r[0, 0]), float(r[0, 1]),
            float(r[1, 0]), float(r[1, 1]))
    except ValueError as exc:
        raise SingularInnovation(
            f"innovation covariance singular at step {exc.args[0]}") from exc


def smooth_confidence(x_filt: np.ndarray, p_filt: np.ndarray,
                      q: float, p0: float) -> np.ndarray:
    """Fixed-interval (Rauch-Tung-Striebel) smoothing of the confidence.

    State detection runs offline over a completed session, so the backward
    pass is free; it removes the one-sided lag of the causal filter, which
    would otherwise bias every interval boundary in the same direction.
    The identity transition makes the scalar recursion trivial.
    """
    n = len(x_filt)
    x_s = x_filt.copy()
    for k in range(n - 2, -1, -1):
        gain = p_filt[k] / (p_filt[k] + q)
        x_s[k] = x_filt[k] + gain * (x_s[k + 1] - x_filt[k])
    return np.clip(x_s, 0.0, 1.0)


def calibrate_thresholds(session: RecordingSession,
                         prefix: float = 2.0,
                         scale: float = 5.0,
                         **kwargs) -> FusionThresholds:
    """Set tau_acc/tau_vis from a stationary prefix of the session.

    tau_acc is ``scale`` times the accel-magnitude variance over the
    prefix; tau_vis is ``scale`` times the mean flow magnitude there.
    """
    n_pre = int(round(prefix / session.accel.dt))
    if n_pre < 10:
        raise ConfigError("stationary prefix too short to calibrate")
    mag = np.sqrt(np.sum(session.accel.values[:n_pre] ** 2, axis=1))
    tau_acc = scale * float(np.var(mag))
    if session.visual is not None:
        n_vis = int(round(prefix * session.visual.rate))
        tau_vis = scale * float(np.mean(session.visual.values[:n_vis]))
    else:
        tau_vis = tau_acc
    return FusionThresholds(tau_acc=max(tau_acc, 1e-12),
                            tau_vis=max(tau_vis, 1e-12), **kwargs)


def _hysteresis_states(confidence: np.ndarray, enter: float,
                       leave: float) -> np.ndarray:
    motion = np.zeros(len(confidence), dtype=bool)
    state = False
    for i, c in enumerate(confidence):
        if state:
            if c < leave:
                state = False
        elif c > enter:
            state = True
        motion[i] = state
    return motion


def _runs(mask: np.ndarray) -> list[tuple[bool, int, int]]:
    out = []
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            out.append((bool(mask[start]), start, i))
            start = i
    return out


def _merge_short_runs(mask: np.ndarray, min_len: int) -> np.ndarray:
    """Flip runs shorter than min_len (shortest first) until none remain."""
    mask = mask.copy()
    while True:
        runs = _runs(mask)
        if len(runs) <= 1:
            return mask
        short = [(e - s, s, e) for _, s, e in runs if (e - s) < min_len]
        if not short:
            return mask
        _, s, e = min(short)
        mask[s:e] = ~mask[s]


def detect_states(session: RecordingSession,
                  thresholds: FusionThresholds,
                  q: float = 1e-3,
                  r: np.ndarray | None = None,
                  allow_imu_only: bool = False,
                  smooth: bool = True) -> MotionStateTimeline:
    """Run the full fusion chain over a session and label its intervals.

    The visual channel is aligned to the inertial clock by cubic-spline
    resampling (edge samples outside the visual span hold the boundary
    value) and smoothed with the same sliding window as the acceleration
    variance.  Without a visual channel this raises MissingChannel unless
    ``allow_imu_only`` is set, in which case the acceleration measurement
    alone drives both filter channels and the timeline is flagged.
    """
    accel = session.accel
    z_acc = accel_variance(accel, thresholds.window).values
    if session.visual is None and not allow_imu_only:
        raise MissingChannel("session has no visual channel")
    mode = "fused"
    if session.visual is not None:
        vis = session.visual
        t_lo = max(accel.t0, vis.t0)
        t_hi = min(accel.t_end, vis.t_end)
        aligned = resample_cubic_spline(vis, accel.dt, (t_lo, t_hi))
        flow = np.empty(len(accel))
        i_lo = int(round((t_lo - accel.t0) / accel.dt))
        flow[i_lo:i_lo + len(aligned)] = aligned.values
        flow[:i_lo] = aligned.values[0]
        flow[i_lo + len(aligned):] = aligned.values[-1]
        flow, _ = _sliding_moments(np.maximum(flow, 0.0), thresholds.window)
        z_vis_m = 1.0 - np.exp(-flow / thresholds.tau_vis)
    else:
        mode = "imu-only"
        z_vis_m = None
    z_acc_m = 1.0 - np.exp(-z_acc / thresholds.tau_acc)
    if z_vis_m is None:
        z_vis_m = z_acc_m  # degraded mode: both channels see the IMU
    z = np.stack([z_acc_m, z_vis_m], axis=1)
    state0 = ConfidenceState(p=0.0, P=1.0, Q=q,
                             R=np.diag([0.03, 0.05]) if r is None else r)
    conf, p_filt = run_confidence_filter(z, state0)
    if smooth:
        conf = smooth_confidence(conf, p_filt, q, state0.P)
    enter = thresholds.decision_threshold + thresholds.delta
    leave = thresholds.decision_threshold - thresholds.delta
    motion = _hysteresis_states(conf, enter, leave)
    min_len = max(int(round(thresholds.min_state_duration / accel.dt)), 1)
    motion = _merge_short_runs(motion, min_len)
    intervals = tuple(("motion" if m else "stationary", s, e)
                      for m, s, e in _runs(motion))
    return MotionStateTimeline(
        confidence=SampledSeries(accel.t0, accel.dt, conf, "confidence"),
        intervals=intervals, mode=mode)
