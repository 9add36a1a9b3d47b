"""Cycle segmentation and per-stage feature extraction.

Lifting-thrusting cycles are delimited by four characteristic points on
the conditioned axial acceleration (thrust start/end, lift start/end),
found by peak detection plus backward/forward quiet-run search and
classified by the net displacement direction of each burst (insertion
positive = thrust).  Twirling-rotating cycles are delimited by the peaks
(left-twirl starts) and valleys (right-twirl starts) of the unwrapped
angle waveform.

Features per stage:
  F1/F5  stage duration as a fraction of its cycle
  F2     maximum force magnitude
  F3     RMS force
  F4     RMS axial acceleration
  F6     RMS angular velocity
Raw SI values are kept alongside per-table min-max normalized variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .core import RecordingSession, SampledSeries
from .errors import (ConfigError, EmptyInput, InconsistentStates,
                     NoCyclesFound)
from .kinematics import KinematicEstimate
from .statefuse import MotionStateTimeline


@dataclass(frozen=True)
class LtCycle:
    """One lifting-thrusting cycle: thrust start/end, lift start/end, and
    the next cycle's thrust start (sample indices)."""

    ts: int
    te: int
    ls: int
    le: int
    next_ts: int

    def __post_init__(self):
        if not self.ts < self.te < self.ls < self.le < self.next_ts:
            raise ConfigError("cycle points must be strictly ordered")

    @property
    def stages(self) -> dict[str, tuple[int, int]]:
        return {"S1": (self.ts, self.te), "S2": (self.te, self.ls),
                "S3": (self.ls, self.le), "S4": (self.le, self.next_ts)}

    @property
    def length(self) -> int:
        return self.next_ts - self.ts

    def stage_proportions(self) -> dict[str, float]:
        return {name: (e - s) / self.length
                for name, (s, e) in self.stages.items()}


@dataclass(frozen=True)
class TrCycle:
    """One twirling cycle: left-twirl start (angle peak), right-twirl
    start (angle valley), and the next left start."""

    left_start: int
    right_start: int
    next_left: int

    def __post_init__(self):
        if not self.left_start < self.right_start < self.next_left:
            raise ConfigError("cycle points must be strictly ordered")

    @property
    def stages(self) -> dict[str, tuple[int, int]]:
        return {"left_twirl": (self.left_start, self.right_start),
                "right_twirl": (self.right_start, self.next_left)}

    @property
    def length(self) -> int:
        return self.next_left - self.left_start

    def stage_proportions(self) -> dict[str, float]:
        return {name: (e - s) / self.length
                for name, (s, e) in self.stages.items()}


@dataclass(frozen=True)
class StageFeatures:
    """Feature values of one stage of one cycle."""

    cycle: int
    stage: str
    start: int
    end: int
    features: dict[str, float]
    normalized: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CycleFeatureTable:
    """Per-cycle, per-stage features for one session."""

    kind: str   # "lifting_thrusting" or "twirling_rotating"
    rows: tuple[StageFeatures, ...]

    def feature_values(self, name: str, stage: str | None = None
                       ) -> np.ndarray:
        return np.array([r.features[name] for r in self.rows
                         if stage is None or r.stage == stage])

    def stages(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.stage not in seen:
                seen.append(r.stage)
        return seen


def _normalize_rows(rows: list[StageFeatures]) -> tuple[StageFeatures, ...]:
    if not rows:
        return ()
    names = rows[0].features.keys()
    spans = {}
    for name in names:
        vals = np.array([r.features[name] for r in rows])
        lo, hi = float(vals.min()), float(vals.max())
        spans[name] = (lo, hi - lo)
    out = []
    for r in rows:
        norm = {}
        for name, v in r.features.items():
            lo, span = spans[name]
            norm[name] = (v - lo) / span if span > 0 else 0.0
        out.append(StageFeatures(r.cycle, r.stage, r.start, r.end,
                                 r.features, norm))
    return tuple(out)


# ---------------------------------------------------------------------------
# Lifting-thrusting segmentation


def _find_bursts(a: np.ndarray, prominence: float, eps: float,
                 min_below: int, min_spacing: int,
                 stationary: np.ndarray) -> list[tuple[int, int]]:
    """Active bursts around |a| peaks, delimited by quiet runs.

    From each peak the start (end) is found by walking outward until
    ``min_below`` consecutive samples are both below eps and labelled
    stationary (the label keeps the mid-stage zero crossing of a gentle
    stage from splitting its burst), then trimming sub-eps tails.
    Overlapping bursts are merged.
    """
    mag = np.abs(a)
    peaks, _ = find_peaks(mag, prominence=prominence, distance=min_spacing)
    below = mag < eps
    quiet = below & stationary
    n = len(a)
    bursts: list[tuple[int, int]] = []
    for p in peaks:
        run = 0
        start = 0
        i = p
        while i >= 0:
            run = run + 1 if quiet[i] else 0
            if run >= min_below:
                start = i + min_below
                break
            i -= 1
        run = 0
        end = n
        i = p
        while i < n:
            run = run + 1 if quiet[i] else 0
            if run >= min_below:
                end = i - min_below + 1
                break
            i += 1
        while start < end and below[start]:
            start += 1
        while end > start and below[end - 1]:
            end -= 1
        if end <= start:
            continue
        if bursts and start <= bursts[-1][1]:
            bursts[-1] = (bursts[-1][0], max(bursts[-1][1], end))
        else:
            bursts.append((start, end))
    return bursts


def _burst_direction(a: np.ndarray, start: int, end: int, dt: float) -> float:
    """Net displacement of a burst integrated from rest (sign only)."""
    seg = a[start:end]
    v = np.concatenate([[0.0], np.cumsum(0.5 * (seg[1:] + seg[:-1]) * dt)])
    return float(np.sum(v) * dt)


def detect_lt_points(accel_axial: SampledSeries,
                     timeline: MotionStateTimeline,
                     prominence: float | None = None,
                     noise_multiple: float = 6.0,
                     eps_multiple: float = 2.0,
                     min_below: int = 5,
                     min_spacing: float = 0.3,
                     min_motion_overlap: float = 0.5) -> list[LtCycle]:
    """Segment lifting-thrusting cycles on conditioned axial acceleration.

    ``accel_axial`` is insertion-positive (thrusting accelerates positive
    first).  The peak prominence and the quiet-run level default to
    multiples of the stationary noise floor (a robust std over the
    timeline's stationary samples), so a slow gentle stage is still found
    next to a fast one.  Bursts must overlap the timeline's motion
    intervals by at least ``min_motion_overlap`` of their span, otherwise
    the two signal paths disagree and InconsistentStates is raised.
    Bursts are classified thrust/lift by their net displacement direction
    and paired in strict thrust-lift alternation; incomplete trailing
    cycles are dropped.
    """
    a = accel_axial.values
    if a.ndim != 1:
        raise ConfigError("axial acceleration must be a scalar series")
    if float(np.std(a)) == 0.0:
        raise NoCyclesFound("acceleration is constant")
    motion = timeline.motion_mask()
    if len(motion) != len(a):
        raise ConfigError("timeline length does not match acceleration")
    quiet = a[~motion]
    if len(quiet) < 10:
        quiet = a
    noise_std = float(np.median(np.abs(quiet - np.median(quiet)))) * 1.4826
    if noise_std == 0.0:
        noise_std = float(np.std(a)) * 0.05
    prom = noise_multiple * noise_std if prominence is None else prominence
    eps = eps_multiple * noise_std
    spacing = max(int(round(min_spacing / accel_axial.dt)), 1)
    bursts = _find_bursts(a, prom, eps, min_below, spacing, ~motion)
    if not bursts:
        raise NoCyclesFound("no acceleration bursts above prominence")
    for start, end in bursts:
        overlap = float(np.mean(motion[start:end]))
        if overlap < min_motion_overlap:
            raise InconsistentStates(
                f"burst [{start}, {end}) lies {1 - overlap:.0%} outside "
                "motion intervals")
    kinds = ["thrust" if _burst_direction(a, s, e, accel_axial.dt) > 0
             else "lift" for s, e in bursts]
    cycles = []
    i = 0
    while i + 2 < len(bursts):
        if kinds[i] == "thrust" and kinds[i + 1] == "lift" \
                and kinds[i + 2] == "thrust":
            cycles.append(LtCycle(
                ts=int(bursts[i][0]), te=int(bursts[i][1]),
                ls=int(bursts[i + 1][0]), le=int(bursts[i + 1][1]),
                next_ts=int(bursts[i + 2][0])))
        i += 1
    if not cycles:
        raise NoCyclesFound("no complete thrust-lift-thrust sequences")
    return cycles


def detect_tr_points(angle: SampledSeries,
                     prominence: float | None = None,
                     min_spacing: float = 0.3) -> list[TrCycle]:
    """Segment twirling cycles from the unwrapped angle waveform.

    Angle peaks are left-twirl starts (angle decreases while twirling
    left), valleys are right-twirl starts; a cycle runs from one left
    start to the next with exactly one valley between.
    """
    theta = angle.values
    if theta.ndim != 1:
        raise ConfigError("angle must be a scalar series")
    span = float(np.quantile(theta, 0.98) - np.quantile(theta, 0.02))
    if span <= 0:
        raise NoCyclesFound("angle waveform has no swing")
    prom = 0.25 * span if prominence is None else prominence
    spacing = max(int(round(min_spacing / angle.dt)), 1)
    peaks, _ = find_peaks(theta, prominence=prom, distance=spacing)
    valleys, _ = find_peaks(-theta, prominence=prom, distance=spacing)
    if len(peaks) < 2 or len(valleys) < 1:
        raise NoCyclesFound("not enough angle extrema for a cycle")
    cycles = []
    for p0, p1 in zip(peaks[:-1], peaks[1:]):
        between = valleys[(valleys > p0) & (valleys < p1)]
        if len(between) == 1:
            cycles.append(TrCycle(left_start=int(p0),
                                  right_start=int(between[0]),
                                  next_left=int(p1)))
    if not cycles:
        raise NoCyclesFound("no peak-valley-peak sequences")
    return cycles


def twirl_frequency(cycles: list[TrCycle], dt: float) -> float:
    """Twirling rate from the mean cycle length, Hz."""
    if not cycles:
        raise EmptyInput("no cycles")
    return 1.0 / (float(np.mean([c.length for c in cycles])) * dt)


# ---------------------------------------------------------------------------
# Feature extraction


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def extract_lt_features(session: RecordingSession,
                        estimate: KinematicEstimate,
                        cycles: list[LtCycle]) -> CycleFeatureTable:
    """F1-F4 per thrust/lift stage of each cycle.

    The session's force channel should already be conditioned; the axial
    acceleration comes from the kinematic estimate.
    """
    if not cycles:
        raise EmptyInput("no cycles to extract features from")
    force = session.force.values
    accel = estimate.accel.values
    rows = []
    for k, cyc in enumerate(cycles):
        for stage_name, key in (("thrust", "S1"), ("lift", "S3")):
            s, e = cyc.stages[key]
            f_seg = force[s:e]
            a_seg = accel[s:e]
            rows.append(StageFeatures(
                cycle=k, stage=stage_name, start=s, end=e,
                features={
                    "F1": (e - s) / cyc.length,
                    "F2": float(np.max(np.abs(f_seg))),
                    "F3": _rms(f_seg),
                    "F4": _rms(a_seg),
                }))
    return CycleFeatureTable(kind="lifting_thrusting",
                             rows=_normalize_rows(rows))


def extract_tr_features(omega: SampledSeries,
                        cycles: list[TrCycle]) -> CycleFeatureTable:
    """F5-F6 per left/right twirling stage of each cycle."""
    if not cycles:
        raise EmptyInput("no cycles to extract features from")
    w = omega.values
    if w.ndim != 1:
        raise ConfigError("omega must be the scalar axial rate")
    rows = []
    for k, cyc in enumerate(cycles):
        for stage_name, key in (("left", "left_twirl"),
                                ("right", "right_twirl")):
            s, e = cyc.stages[key]
            rows.append(StageFeatures(
                cycle=k, stage=stage_name, start=s, end=e,
                features={
                    "F5": (e - s) / cyc.length,
                    "F6": _rms(w[s:e]),
                }))
    return CycleFeatureTable(kind="twirling_rotating",
                             rows=_normalize_rows(rows))
