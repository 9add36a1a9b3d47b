"""End-to-end processing: configuration, the simulate step, and the
condition -> attitude -> statefuse -> kinematics -> cycles chain.

Everything tunable lives in RunConfig so a run is reproducible from its
config (hashed into every output).  The same config drives simulation
and processing.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attitude import (AttitudeGains, AttitudeTrack, MahonyFilter,
                       Quaternion, attitude_from_accel, roll_angle_series)
from .condition import (NotchSpec, WaveletSpec, compensate_prestress,
                        lowpass_accel, notch_filter, wavelet_denoise)
from .core import (ForceCalibration, ManipulationType, RecordingSession,
                   SampledSeries, rmse)
from .cycles import (CycleFeatureTable, LtCycle, TrCycle, detect_lt_points,
                     detect_tr_points, extract_lt_features,
                     extract_tr_features, twirl_frequency)
from .errors import ConfigError, NoCyclesFound
from .kinematics import (KinematicEstimate, axial_projection,
                         naive_double_integrate, segmented_integrate)
from .simulate import (GroundTruthTrajectory, ImuNoiseModel, NeedleBody,
                       TissueLayer, default_layers, lifting_thrusting_profile,
                       simulate_lifting_thrusting, simulate_twirling,
                       synthesize_sensors, tip_and_friction_force,
                       twirling_profile)
from .statefuse import (FusionThresholds, MotionStateTimeline,
                        calibrate_thresholds, detect_states, _runs)

LT_KINDS = ("LTRF", "LTRD")
TR_KINDS = ("TRRF", "TRRD")


@dataclass
class RunConfig:
    """All tunables of the toolkit chain."""

    # manipulation profile
    kind: str = "LTRF"
    duration: float = 20.0
    period: float = 2.0
    stroke: float = 0.02            # m, lifting-thrusting depth swing
    sweep_deg: float = 90.0         # twirl amplitude per stage
    rest_depth: float = 0.015       # m
    lead_in: float = 2.0            # s of stillness before the first cycle
    cycle_jitter: float = 0.05      # relative per-stage duration jitter
    proportions: tuple | None = None
    # simulation
    sim_dt: float = 1e-3
    needle_mass: float = 1.3e-3
    needle_radius: float = 2.0e-4
    inertia_diag: tuple = (3.9e-7, 3.9e-7, 1.5e-9)
    tissue_layers: tuple | None = None   # ((mu, eta, lo, hi, k, c), ...)
    # sensor noise / synthesis
    seed: int = 0
    accel_vrw: tuple = (19.7, 28.1, 73.2)            # ug/sqrt(Hz)
    accel_bias_instability: tuple = (0.48, 0.39, 0.61)  # mg
    gyro_arw: tuple = (0.14, 0.14, 0.13)             # deg/sqrt(h)
    gyro_bias_instability: tuple = (2.72, 4.16, 4.78)   # deg/h
    bias_flat_tau: float = 1000.0
    hand_tremor_std: float = 0.01   # m/s^2, during interval stages
    force_noise_std: float = 0.005  # N
    mains_amplitude: float = 0.02   # N, 50 Hz interference
    vis_noise_std: float = 2e-4
    vis_scale: float = 1.0
    mount_tilt_deg: float = 0.0
    # force/accel conditioning
    prestress_window: float = 2.0
    notch_f0: float = 50.0
    notch_quality: float = 30.0
    wavelet_order: int = 5
    wavelet_levels: int = 4
    accel_bandwidth: float = 44.8
    # attitude
    kp: float = 2.0
    ki: float = 0.05
    init_window: float = 1.0
    # motion-state fusion
    fusion_prefix: float = 2.0
    fusion_scale: float = 5.0
    fusion_window: int = 5
    decision_threshold: float = 0.5
    hysteresis: float = 0.01
    min_state_duration: float = 0.2
    process_noise: float = 1e-2
    r_acc: float = 0.05
    r_vis: float = 0.02
    allow_imu_only: bool = False
    # segmented integration
    boundary_pad: float = 0.06      # s, timeline padding before integration
    zero_terminal_velocity: bool = True
    # cycle segmentation
    prominence: float | None = None
    noise_multiple: float = 6.0
    eps_multiple: float = 2.0
    min_below: int = 5
    min_spacing: float = 0.3
    min_motion_overlap: float = 0.5
    # statistics
    alpha: float = 0.05

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = {k: (tuple(v) if isinstance(v, list) else v)
                   for k, v in data.items()}
        return cls(**coerced)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    def body(self) -> NeedleBody:
        return NeedleBody(m=self.needle_mass,
                          inertia=np.diag(self.inertia_diag),
                          r=self.needle_radius)

    def layers(self) -> tuple[TissueLayer, ...]:
        if self.tissue_layers is None:
            return default_layers()
        return tuple(TissueLayer(mu=mu, eta=eta, depth_range=(lo, hi),
                                 stiffness=k, damping=c)
                     for mu, eta, lo, hi, k, c in self.tissue_layers)

    def noise_model(self, seed: int | None = None) -> ImuNoiseModel:
        return ImuNoiseModel(
            accel_vrw=self.accel_vrw,
            accel_bias_instability=self.accel_bias_instability,
            gyro_arw=self.gyro_arw,
            gyro_bias_instability=self.gyro_bias_instability,
            seed=self.seed if seed is None else seed,
            bias_flat_tau=self.bias_flat_tau)


def simulate_session(config: RunConfig, seed: int | None = None
                     ) -> tuple[RecordingSession, GroundTruthTrajectory]:
    """Simulate ground truth for config.kind and synthesize its sensors."""
    seed = config.seed if seed is None else seed
    kind = ManipulationType(config.kind)
    body = config.body()
    layers = config.layers()
    if kind.value in LT_KINDS:
        profile = lifting_thrusting_profile(
            kind, duration=config.duration, period=config.period,
            stroke=config.stroke, rest_depth=config.rest_depth,
            lead_in=config.lead_in, proportions=config.proportions,
            cycle_jitter=config.cycle_jitter, seed=seed)
        truth = simulate_lifting_thrusting(profile, body, layers,
                                           dt=config.sim_dt,
                                           duration=config.duration)
    else:
        profile = twirling_profile(
            kind, duration=config.duration, period=config.period,
            sweep=math.radians(config.sweep_deg), lead_in=config.lead_in,
            proportions=config.proportions,
            cycle_jitter=config.cycle_jitter, seed=seed)
        _, _, contacts = tip_and_friction_force(config.rest_depth, 0.0,
                                                layers)
        truth = simulate_twirling(profile, body, layers, contacts,
                                  dt=config.sim_dt,
                                  duration=config.duration)
    session = synthesize_sensors(
        truth, config.noise_model(seed), ForceCalibration(),
        hand_tremor_std=config.hand_tremor_std,
        force_noise_std=config.force_noise_std,
        mains_amplitude=config.mains_amplitude,
        vis_noise_std=config.vis_noise_std, vis_scale=config.vis_scale,
        mount_tilt_rad=math.radians(config.mount_tilt_deg), label=kind)
    return session, truth


def pad_timeline(timeline: MotionStateTimeline, pad: int
                 ) -> MotionStateTimeline:
    """Widen every motion interval by ``pad`` samples on both sides."""
    if pad <= 0:
        return timeline
    mask = timeline.motion_mask()
    n = len(mask)
    out = mask.copy()
    for s, e in timeline.motion_intervals():
        out[max(0, s - pad):min(n, e + pad)] = True
    intervals = tuple(("motion" if m else "stationary", s, e)
                      for m, s, e in _runs(out))
    return MotionStateTimeline(confidence=timeline.confidence,
                               intervals=intervals, mode=timeline.mode)


@dataclass(frozen=True)
class ProcessResult:
    """Everything the processing chain recovers from one session."""

    mode: str                                  # "lt" or "tr"
    force_conditioned: SampledSeries
    accel_filtered: SampledSeries
    track: AttitudeTrack
    roll: SampledSeries
    omega_axial: SampledSeries
    timeline: MotionStateTimeline
    axial_accel: SampledSeries
    estimate: KinematicEstimate
    naive: KinematicEstimate
    lt_cycles: list[LtCycle] = field(default_factory=list)
    tr_cycles: list[TrCycle] = field(default_factory=list)
    features: CycleFeatureTable | None = None
    twirl_rate_hz: float | None = None
    displacement_rmse: float | None = None
    naive_rmse: float | None = None


def _condition_force(session: RecordingSession,
                     config: RunConfig) -> SampledSeries:
    force = compensate_prestress(session.force, config.prestress_window)
    force = notch_filter(force, NotchSpec(f0=config.notch_f0,
                                          fs=session.force.rate,
                                          quality=config.notch_quality))
    return wavelet_denoise(force, WaveletSpec(order=config.wavelet_order,
                                              levels=config.wavelet_levels))


def process_session(session: RecordingSession, config: RunConfig,
                    truth: GroundTruthTrajectory | None = None,
                    mode: str = "auto") -> ProcessResult:
    """Run the full recovery chain over one session.

    ``mode`` is "lt", "tr", or "auto" (label if present, otherwise try
    lifting-thrusting first and fall back to twirling).
    """
    if mode not in ("auto", "lt", "tr"):
        raise ConfigError(f"unknown mode {mode!r}")
    force_c = _condition_force(session, config)
    accel_f = lowpass_accel(session.accel, config.accel_bandwidth)

    n_init = max(int(round(config.init_window / session.accel.dt)), 1)
    q0 = attitude_from_accel(session.accel.values[:n_init].mean(axis=0))
    mahony = MahonyFilter(AttitudeGains(kp=config.kp, ki=config.ki), q0=q0)
    track = mahony.run(session.gyro, accel_f)
    roll = roll_angle_series(track, q0)
    omega_axial = SampledSeries(
        session.gyro.t0, session.gyro.dt,
        session.gyro.values[:, 2] - track.bias[:, 2], "rad/s")

    thresholds = calibrate_thresholds(
        session, prefix=config.fusion_prefix, scale=config.fusion_scale,
        window=config.fusion_window,
        decision_threshold=config.decision_threshold,
        delta=config.hysteresis,
        min_state_duration=config.min_state_duration)
    timeline = detect_states(session, thresholds, q=config.process_noise,
                             r=np.diag([config.r_acc, config.r_vis]),
                             allow_imu_only=config.allow_imu_only)
    axial = axial_projection(accel_f, track, axis=(0.0, 0.0, -1.0))
    pad = int(round(config.boundary_pad / session.accel.dt))
    estimate = segmented_integrate(
        axial, pad_timeline(timeline, pad),
        zero_terminal_velocity=config.zero_terminal_velocity)
    naive = naive_double_integrate(axial)

    if mode == "auto" and session.label is not None:
        mode = "lt" if session.label.value in LT_KINDS else "tr"

    lt_cycles: list[LtCycle] = []
    tr_cycles: list[TrCycle] = []
    features = None
    twirl_rate = None
    resolved = mode
    if mode in ("lt", "auto"):
        try:
            lt_cycles = detect_lt_points(
                axial, timeline, prominence=config.prominence,
                noise_multiple=config.noise_multiple,
                eps_multiple=config.eps_multiple,
                min_below=config.min_below,
                min_spacing=config.min_spacing,
                min_motion_overlap=config.min_motion_overlap)
            resolved = "lt"
        except NoCyclesFound:
            if mode == "lt":
                raise
            resolved = "tr"
    if resolved == "lt":
        cond_session = dataclasses.replace(session, force=force_c)
        features = extract_lt_features(cond_session, estimate, lt_cycles)
    else:
        tr_cycles = detect_tr_points(roll,
                                     prominence=config.prominence,
                                     min_spacing=config.min_spacing)
        features = extract_tr_features(omega_axial, tr_cycles)
        twirl_rate = twirl_frequency(tr_cycles, roll.dt)

    d_rmse = n_rmse = None
    if truth is not None:
        n = len(session.accel)
        d_true = SampledSeries(0.0, truth.dt, truth.displacement.values[:n])
        d_rmse = rmse(estimate.displacement, d_true)
        n_rmse = rmse(naive.displacement, d_true)

    return ProcessResult(
        mode=resolved, force_conditioned=force_c, accel_filtered=accel_f,
        track=track, roll=roll, omega_axial=omega_axial, timeline=timeline,
        axial_accel=axial, estimate=estimate, naive=naive,
        lt_cycles=lt_cycles, tr_cycles=tr_cycles, features=features,
        twirl_rate_hz=twirl_rate, displacement_rmse=d_rmse,
        naive_rmse=n_rmse)
