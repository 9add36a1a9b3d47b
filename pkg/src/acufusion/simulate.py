"""Forward simulation of needle-tissue dynamics and sensor synthesis.

The translational channel integrates m*dv/dt = F_a - F_T - F_f along the
needle axis (depth positive downward, semi-implicit Euler); the rotational
channel integrates I*dw/dt + w x (I w) = T_a - T_f as a full 3-vector
equation.  Tissue reaction is a declared layered stand-in: a Kelvin-Voigt
spring+damper at the tip plus Coulomb and viscous drag along the pierced
shaft, with per-layer normal (grip) force stiffness * contact length.

Manipulation profiles carry a stage schedule and either a kinematic plan
(the applied force/torque is then constructed step by step so the
integrator reproduces the plan under its own discrete update) or explicit
applied force/torque functions of time.

Trajectories are integrated at a fine step (<= 1 ms) and emitted at the
100 Hz sensor rate; the emitted velocity/displacement (and angle) are the
exact trapezoidal integrals of the emitted acceleration (axial rate), so
discrete-consistency checks hold by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .core import (GRAVITY, IMU_RATE_HZ, VISUAL_RATE_HZ, ForceCalibration,
                   ManipulationType, RecordingSession, SampledSeries,
                   resample_cubic_spline)
from .errors import ConfigError

OUT_DT = 1.0 / IMU_RATE_HZ

STAGE_CODES = {
    "S1": 1, "S2": 2, "S3": 3, "S4": 4,
    "left_twirl": 5, "right_twirl": 6,
}
STAGE_NAMES = {v: k for k, v in STAGE_CODES.items()}
MOTION_CODES = frozenset((1, 3, 5, 6))
INTERVAL_CODES = frozenset((2, 4))


@dataclass(frozen=True)
class NeedleBody:
    """Rigid-body parameters of the instrumented needle."""

    m: float = 1.3e-3                      # kg, all sensors + needle
    inertia: np.ndarray = field(default_factory=lambda: np.diag(
        [3.9e-7, 3.9e-7, 1.5e-9]))         # kg m^2, body frame
    r: float = 2.0e-4                      # m, shaft radius

    def __post_init__(self):
        if not self.m > 0:
            raise ConfigError("needle mass must be positive")
        if not self.r > 0:
            raise ConfigError("needle radius must be positive")
        inertia = np.asarray(self.inertia, dtype=np.float64)
        if inertia.shape != (3, 3):
            raise ConfigError("inertia must be a 3x3 matrix")
        if not np.allclose(inertia, inertia.T):
            raise ConfigError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(inertia) <= 0):
            raise ConfigError("inertia must be positive definite")
        inertia = inertia.copy()
        inertia.setflags(write=False)
        object.__setattr__(self, "inertia", inertia)


@dataclass(frozen=True)
class TissueLayer:
    """One layer of the tissue stand-in.

    ``depth_range`` is measured from the skin surface; the deepest layer
    is treated as unbounded below.  ``stiffness``/``damping`` drive the
    tip spring+damper; the per-layer grip (normal) force on the shaft is
    stiffness * contact length.
    """

    mu: float                 # Coulomb friction coefficient
    eta: float                # Pa s, viscous drag coefficient
    depth_range: tuple[float, float]
    stiffness: float          # N/m
    damping: float            # N s/m

    def __post_init__(self):
        lo, hi = self.depth_range
        if not hi > lo:
            raise ConfigError("depth_range must be ordered")
        if self.mu < 0 or self.eta < 0 or self.stiffness < 0 or self.damping < 0:
            raise ConfigError("layer coefficients must be nonnegative")

    @property
    def thickness(self) -> float:
        return self.depth_range[1] - self.depth_range[0]


@dataclass(frozen=True)
class LayerContactState:
    """Per-layer contact: normal (grip) force and contacted shaft length."""

    normal_force: float   # N
    contact_length: float  # m

    def __post_init__(self):
        if self.normal_force < 0 or self.contact_length < 0:
            raise ConfigError("contact state entries must be nonnegative")


def default_layers() -> tuple[TissueLayer, ...]:
    """A three-layer skin / subcutaneous / muscle stand-in."""
    return (
        TissueLayer(mu=0.4, eta=8.0, depth_range=(0.0, 0.0015),
                    stiffness=400.0, damping=2.0),
        TissueLayer(mu=0.25, eta=4.0, depth_range=(0.0015, 0.006),
                    stiffness=120.0, damping=1.0),
        TissueLayer(mu=0.35, eta=6.0, depth_range=(0.006, 0.040),
                    stiffness=250.0, damping=1.5),
    )


def _layer_arrays(layers: Sequence[TissueLayer]):
    n = len(layers)
    mu = np.array([la.mu for la in layers])
    eta = np.array([la.eta for la in layers])
    top = np.array([la.depth_range[0] for la in layers])
    bottom = np.array([la.depth_range[1] for la in layers])
    stiffness = np.array([la.stiffness for la in layers])
    damping = np.array([la.damping for la in layers])
    if n == 0:
        return tuple(np.zeros(0) for _ in range(6))
    return mu, eta, top, bottom, stiffness, damping


def tip_and_friction_force(depth: float, velocity: float,
                           layers: Sequence[TissueLayer]
                           ) -> tuple[float, float, list[LayerContactState]]:
    """Tissue reaction at a given tip depth and axial speed.

    Returns (tip force, signed friction force, per-layer contacts).  The
    tip force comes from the layer containing the tip (stiffness *
    penetration + damping * velocity, clamped >= 0); friction sums Coulomb
    (mu * grip, opposing the motion direction) and viscous (eta * contact
    length * velocity) contributions over all pierced layers.
    """
    if depth < 0:
        raise ConfigError("depth must be nonnegative")
    contacts = [LayerContactState(0.0, 0.0) for _ in layers]
    if depth <= 0.0 or not layers:
        return 0.0, 0.0, contacts
    n = len(layers)
    tip = n - 1
    for j, layer in enumerate(layers):
        if depth < layer.depth_range[1]:
            tip = j
            break
    pen = max(0.0, depth - layers[tip].depth_range[0])
    ft = max(0.0, layers[tip].stiffness * pen + layers[tip].damping * velocity)
    coulomb = 0.0
    viscous = 0.0
    for j, layer in enumerate(layers):
        hi = min(depth, layer.depth_range[1])
        if j == n - 1 and depth > layer.depth_range[1]:
            hi = depth  # deepest layer extends downward
        contact = hi - layer.depth_range[0]
        if contact <= 0.0:
            continue
        grip = layer.stiffness * contact
        contacts[j] = LayerContactState(grip, contact)
        coulomb += layer.mu * grip
        viscous += layer.eta * contact
    sign = math.copysign(1.0, velocity) if velocity != 0.0 else 0.0
    ff = coulomb * sign + viscous * velocity
    return ft, ff, contacts


def friction_torque(omega: float, contacts: Sequence[LayerContactState],
                    layers: Sequence[TissueLayer], r: float) -> float:
    """Signed friction torque resisting axial rotation.

    Sum over layers of mu_i * F_i * r (signed opposite to omega) plus
    eta_i * omega * r^2 * L_i.  Positive return value resists positive
    omega (it enters the rotation equation with a minus sign).
    """
    if len(contacts) != len(layers):
        raise ConfigError("contacts and layers must align by index")
    sign = math.copysign(1.0, omega) if omega != 0.0 else 0.0
    total = 0.0
    for contact, layer in zip(contacts, layers):
        total += layer.mu * contact.normal_force * r * sign
        total += layer.eta * omega * r * r * contact.contact_length
    return total


# ---------------------------------------------------------------------------
# Manipulation profiles


def _smoothstep(u: np.ndarray) -> np.ndarray:
    # quintic smootherstep: zero velocity AND acceleration at stage edges,
    # so interval stages are exactly still in the emitted trajectory
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_deriv(u: np.ndarray) -> np.ndarray:
    return 30.0 * u * u * (1.0 - u) * (1.0 - u)


@dataclass(frozen=True)
class ManipulationProfile:
    """Stage schedule plus the drive for one simulated manipulation.

    Exactly one drive is used: a kinematic plan (``plan_levels`` gives the
    driven coordinate at each stage boundary, smoothstep-interpolated
    inside each stage) or an explicit ``applied_force`` /
    ``applied_torque`` callable of time.
    """

    stage_schedule: tuple[tuple[str, float], ...]
    plan_levels: np.ndarray | None = None      # len(schedule)+1 boundary values
    applied_force: Callable[[np.ndarray], np.ndarray] | None = None
    applied_torque: Callable[[np.ndarray], np.ndarray] | None = None
    rest_depth: float = 0.0

    def __post_init__(self):
        if not self.stage_schedule:
            raise ConfigError("stage schedule is empty")
        for name, dur in self.stage_schedule:
            if name not in STAGE_CODES:
                raise ConfigError(f"unknown stage name {name!r}")
            if not dur > 0:
                raise ConfigError("stage durations must be positive")
        if self.plan_levels is not None:
            levels = np.asarray(self.plan_levels, dtype=np.float64)
            if len(levels) != len(self.stage_schedule) + 1:
                raise ConfigError("plan_levels must have one entry per stage "
                                  "boundary (len(schedule)+1)")
            levels = levels.copy()
            levels.setflags(write=False)
            object.__setattr__(self, "plan_levels", levels)

    @property
    def total_duration(self) -> float:
        return float(sum(d for _, d in self.stage_schedule))

    def _boundaries(self) -> np.ndarray:
        return np.concatenate(
            [[0.0], np.cumsum([d for _, d in self.stage_schedule])])

    def stage_codes_at(self, t: np.ndarray) -> np.ndarray:
        """Stage code of each time instant (last stage extends beyond)."""
        bounds = self._boundaries()
        idx = np.clip(np.searchsorted(bounds, t, side="right") - 1,
                      0, len(self.stage_schedule) - 1)
        codes = np.array([STAGE_CODES[name] for name, _ in self.stage_schedule],
                         dtype=np.uint8)
        return codes[idx]

    def plan_at(self, t: np.ndarray) -> np.ndarray:
        """Planned coordinate (depth or angle) at the given instants."""
        if self.plan_levels is None:
            raise ConfigError("profile carries no kinematic plan")
        bounds = self._boundaries()
        idx = np.clip(np.searchsorted(bounds, t, side="right") - 1,
                      0, len(self.stage_schedule) - 1)
        t0 = bounds[idx]
        dur = bounds[idx + 1] - t0
        u = np.clip((t - t0) / dur, 0.0, 1.0)
        lo = self.plan_levels[idx]
        hi = self.plan_levels[idx + 1]
        return lo + (hi - lo) * _smoothstep(u)

    def plan_rate_at(self, t: np.ndarray) -> np.ndarray:
        """Time derivative of the planned coordinate."""
        if self.plan_levels is None:
            raise ConfigError("profile carries no kinematic plan")
        bounds = self._boundaries()
        idx = np.clip(np.searchsorted(bounds, t, side="right") - 1,
                      0, len(self.stage_schedule) - 1)
        t0 = bounds[idx]
        dur = bounds[idx + 1] - t0
        inside = (t >= bounds[0]) & (t <= bounds[-1])
        u = np.clip((t - t0) / dur, 0.0, 1.0)
        lo = self.plan_levels[idx]
        hi = self.plan_levels[idx + 1]
        return np.where(inside, (hi - lo) / dur * _smoothstep_deriv(u), 0.0)


_LT_PROPORTIONS = {
    # thrust, interval, lift, interval -- fractions of one cycle
    "LTRF": (0.25, 0.15, 0.48, 0.12),
    "LTRD": (0.52, 0.14, 0.17, 0.17),
}
_TR_PROPORTIONS = {
    # (first stage name, first fraction, second stage name, second fraction)
    "TRRF": ("left_twirl", 0.33, "right_twirl", 0.67),
    "TRRD": ("right_twirl", 0.24, "left_twirl", 0.76),
}


def _jitter_factors(rng: np.random.Generator | None, jitter: float,
                    count: int) -> np.ndarray:
    if rng is None or jitter <= 0:
        return np.ones(count)
    return np.clip(1.0 + jitter * rng.standard_normal(count), 0.3, 3.0)


def _snap_durations(durations: list[float], grid: float = OUT_DT
                    ) -> list[float]:
    """Snap cumulative stage boundaries onto the sensor grid.

    Off-grid stage corners would fall between 100 Hz samples and leave a
    phantom residual in the trapezoid-rebuilt ground-truth velocity during
    the holds; snapping keeps holds exactly still.
    """
    out = []
    prev = 0.0
    cum = 0.0
    for d in durations:
        cum += d
        snapped = round(cum / grid) * grid
        snapped = max(snapped, prev + grid)
        out.append(snapped - prev)
        prev = snapped
    return out


def lifting_thrusting_profile(kind: str | ManipulationType = "LTRF",
                              duration: float = 20.0,
                              period: float = 1.0,
                              stroke: float = 0.008,
                              rest_depth: float = 0.015,
                              lead_in: float = 2.0,
                              proportions: tuple[float, float, float, float] | None = None,
                              cycle_jitter: float = 0.0,
                              seed: int = 0) -> ManipulationProfile:
    """Build a lifting-thrusting plan profile.

    Each cycle: thrust (S1, depth increases by ``stroke``), interval (S2),
    lift (S3, back to rest depth), interval (S4).  ``cycle_jitter`` is a
    relative standard deviation applied per stage duration to mimic
    operator variability.  The schedule starts with a ``lead_in`` still
    stage (S4) and covers at least ``duration`` seconds.
    """
    kind = ManipulationType(kind) if not isinstance(kind, ManipulationType) else kind
    if proportions is None:
        if kind.value not in _LT_PROPORTIONS:
            raise ConfigError(f"{kind.value} is not a lifting-thrusting kind")
        proportions = _LT_PROPORTIONS[kind.value]
    if abs(sum(proportions) - 1.0) > 1e-9:
        raise ConfigError("stage proportions must sum to 1")
    if not (stroke > 0 and period > 0 and duration > 0 and lead_in >= 0):
        raise ConfigError("stroke, period and duration must be positive")
    rng = np.random.default_rng(seed) if cycle_jitter > 0 else None
    names: list[str] = []
    durations: list[float] = []
    levels = [rest_depth]
    if lead_in > 0:
        names.append("S4")
        durations.append(lead_in)
        levels.append(rest_depth)
    elapsed = lead_in
    stage_names = ("S1", "S2", "S3", "S4")
    stage_deltas = (stroke, 0.0, -stroke, 0.0)
    while True:
        factors = _jitter_factors(rng, cycle_jitter, 4)
        cycle_durs = [period * frac * f
                      for frac, f in zip(proportions, factors)]
        if elapsed + sum(cycle_durs) > duration + 1e-9:
            break
        for name, dur, delta in zip(stage_names, cycle_durs, stage_deltas):
            names.append(name)
            durations.append(dur)
            levels.append(levels[-1] + delta)
        elapsed += sum(cycle_durs)
    if duration - elapsed > 1e-9 or not names:
        # sessions end at rest, never mid-stage
        names.append("S4")
        durations.append(max(duration - elapsed, OUT_DT))
        levels.append(levels[-1])
    durations = _snap_durations(durations)
    return ManipulationProfile(stage_schedule=tuple(zip(names, durations)),
                               plan_levels=np.array(levels),
                               rest_depth=rest_depth)


def twirling_profile(kind: str | ManipulationType = "TRRF",
                     duration: float = 20.0,
                     period: float = 1.0,
                     sweep: float = math.pi / 2,
                     lead_in: float = 2.0,
                     proportions: tuple[float, float] | None = None,
                     cycle_jitter: float = 0.0,
                     seed: int = 0) -> ManipulationProfile:
    """Build a twirling-rotating plan profile.

    A cycle is one left-ward twirl (angle decreases by ``sweep``) and one
    right-ward twirl (angle increases by ``sweep``); reinforcement starts
    left-ward, reduction starts right-ward.  The lead-in holds still.
    """
    kind = ManipulationType(kind) if not isinstance(kind, ManipulationType) else kind
    if kind.value not in _TR_PROPORTIONS:
        raise ConfigError(f"{kind.value} is not a twirling-rotating kind")
    first_name, first_frac, second_name, second_frac = _TR_PROPORTIONS[kind.value]
    if proportions is not None:
        first_frac, second_frac = proportions
    if abs(first_frac + second_frac - 1.0) > 1e-9:
        raise ConfigError("stage proportions must sum to 1")
    if not (sweep > 0 and period > 0 and duration > 0 and lead_in >= 0):
        raise ConfigError("sweep, period and duration must be positive")
    rng = np.random.default_rng(seed) if cycle_jitter > 0 else None
    sign = {"left_twirl": -1.0, "right_twirl": 1.0}
    names: list[str] = []
    durations: list[float] = []
    levels = [0.0]
    if lead_in > 0:
        # a still lead-in labelled as an interval stage
        names.append("S4")
        durations.append(lead_in)
        levels.append(0.0)
    elapsed = lead_in
    while True:
        factors = _jitter_factors(rng, cycle_jitter, 2)
        cycle = [((first_name, first_frac), factors[0]),
                 ((second_name, second_frac), factors[1])]
        cycle_durs = [period * frac * f for (_, frac), f in cycle]
        if elapsed + sum(cycle_durs) > duration + 1e-9:
            break
        for ((name, _), _), dur in zip(cycle, cycle_durs):
            names.append(name)
            durations.append(dur)
            levels.append(levels[-1] + sign[name] * sweep)
        elapsed += sum(cycle_durs)
    if duration - elapsed > 1e-9 or not names:
        names.append("S4")
        durations.append(max(duration - elapsed, OUT_DT))
        levels.append(levels[-1])
    durations = _snap_durations(durations)
    return ManipulationProfile(stage_schedule=tuple(zip(names, durations)),
                               plan_levels=np.array(levels))


def constant_force_profile(force: float, duration: float,
                           stage: str = "S1",
                           rest_depth: float = 0.0) -> ManipulationProfile:
    """Explicit constant applied-force profile (no kinematic plan)."""
    return ManipulationProfile(
        stage_schedule=((stage, duration),),
        applied_force=lambda t: np.full_like(np.asarray(t, dtype=float), force),
        rest_depth=rest_depth)


def constant_torque_profile(torque: float, duration: float,
                            stage: str = "right_twirl") -> ManipulationProfile:
    """Explicit constant applied-torque profile (no kinematic plan)."""
    return ManipulationProfile(
        stage_schedule=((stage, duration),),
        applied_torque=lambda t: np.full_like(np.asarray(t, dtype=float), torque))


# ---------------------------------------------------------------------------
# Ground truth trajectories


@dataclass(frozen=True)
class ForceDecomposition:
    """Per-sample force/torque balance of the simulated trajectory."""

    f_a: np.ndarray
    f_t: np.ndarray
    f_f: np.ndarray
    t_a: np.ndarray
    t_f: np.ndarray


@dataclass(frozen=True)
class GroundTruthTrajectory:
    """Simulator output at the 100 Hz sensor clock (final instant included).

    Axial kinematics are depth-positive-down: displacement is depth change
    from the initial rest depth.  velocity/displacement are the exact
    trapezoidal integrals of accel, and angle of the axial omega.
    """

    accel: SampledSeries          # m/s^2, axial
    velocity: SampledSeries       # m/s, axial
    displacement: SampledSeries   # m, depth change from start
    omega: SampledSeries          # rad/s, 3-axis body rates
    angle: SampledSeries          # rad, unwrapped axial angle
    forces: ForceDecomposition
    stage_codes: np.ndarray       # uint8 per sample
    initial_depth: float = 0.0

    def __len__(self) -> int:
        return len(self.accel)

    @property
    def dt(self) -> float:
        return self.accel.dt

    def stage_intervals(self) -> list[tuple[str, int, int]]:
        """Maximal runs of equal stage code as (name, start, end_exclusive)."""
        codes = self.stage_codes
        out = []
        start = 0
        for i in range(1, len(codes) + 1):
            if i == len(codes) or codes[i] != codes[start]:
                out.append((STAGE_NAMES[int(codes[start])], start, i))
                start = i
        return out

    def motion_mask(self) -> np.ndarray:
        return np.isin(self.stage_codes, list(MOTION_CODES))

    def interval_mask(self) -> np.ndarray:
        return np.isin(self.stage_codes, list(INTERVAL_CODES))


def _trapezoid_cumulative(y: np.ndarray, dt: float, y0: float = 0.0) -> np.ndarray:
    out = np.empty_like(y)
    out[0] = y0
    if len(y) > 1:
        out[1:] = y0 + np.cumsum(0.5 * (y[1:] + y[:-1]) * dt)
    return out


def _sim_grid(dt: float, duration: float) -> tuple[int, int]:
    if not duration > 0:
        raise ConfigError("duration must be positive")
    if not 0 < dt <= 1e-3 + 1e-12:
        raise ConfigError("integration step must satisfy 0 < dt <= 1 ms")
    stride = OUT_DT / dt
    if abs(stride - round(stride)) > 1e-9:
        raise ConfigError("0.01 s must be an integer multiple of dt")
    n_periods = duration * IMU_RATE_HZ
    if abs(n_periods - round(n_periods)) > 1e-9:
        raise ConfigError("duration must be a multiple of 0.01 s")
    n_sim = int(round(duration / dt))
    return n_sim, int(round(stride))


def simulate_lifting_thrusting(profile: ManipulationProfile,
                               body: NeedleBody,
                               layers: Sequence[TissueLayer],
                               dt: float = 1e-3,
                               duration: float = 20.0) -> GroundTruthTrajectory:
    """Integrate the axial translation channel for one session.

    With a plan-carrying profile the applied force is constructed so the
    integrator tracks the planned depth; with an explicit force profile
    the given force is applied open loop.  Depth is clamped at skin entry
    (0): the needle cannot rise above the surface, and any upward speed is
    cancelled there.
    """
    n_sim, stride = _sim_grid(dt, duration)
    if profile.total_duration < duration - 1e-9:
        raise ConfigError("stage schedule does not cover the simulated span")
    t = dt * np.arange(n_sim + 1)
    arrays = _layer_arrays(layers)
    if profile.plan_levels is not None:
        d_plan = profile.plan_at(t)
        fa, a, v, d, ft, ff = _kernels.lt_track(
            np.ascontiguousarray(d_plan), body.m, *arrays, dt)
    elif profile.applied_force is not None:
        fa = np.ascontiguousarray(profile.applied_force(t), dtype=np.float64)
        a, v, d, ft, ff = _kernels.lt_replay(
            fa, body.m, *arrays, profile.rest_depth, 0.0, dt)
    else:
        raise ConfigError("profile has neither a plan nor an applied force")
    idx = np.arange(0, n_sim + 1, stride)
    accel = a[idx]
    d0 = d[0]
    velocity = _trapezoid_cumulative(accel, OUT_DT, v[0])
    displacement = _trapezoid_cumulative(velocity, OUT_DT, 0.0)
    codes = profile.stage_codes_at(t[idx])
    n_out = len(idx)
    zeros3 = np.zeros((n_out, 3))
    forces = ForceDecomposition(f_a=fa[idx], f_t=ft[idx], f_f=ff[idx],
                                t_a=np.zeros(n_out), t_f=np.zeros(n_out))
    return GroundTruthTrajectory(
        accel=SampledSeries(0.0, OUT_DT, accel, "m/s^2"),
        velocity=SampledSeries(0.0, OUT_DT, velocity, "m/s"),
        displacement=SampledSeries(0.0, OUT_DT, displacement, "m"),
        omega=SampledSeries(0.0, OUT_DT, zeros3, "rad/s"),
        angle=SampledSeries(0.0, OUT_DT, np.zeros(n_out), "rad"),
        forces=forces, stage_codes=codes, initial_depth=float(d0))


def simulate_twirling(profile: ManipulationProfile,
                      body: NeedleBody,
                      layers: Sequence[TissueLayer],
                      contacts: Sequence[LayerContactState],
                      dt: float = 1e-3,
                      duration: float = 20.0,
                      initial_omega: Sequence[float] = (0.0, 0.0, 0.0)
                      ) -> GroundTruthTrajectory:
    """Integrate the rotation channel for one session.

    ``contacts`` fix the shaft contact state (the needle is assumed held
    at constant depth while twirling); they set the Coulomb and viscous
    friction-torque coefficients of Eq.-of-motion friction.  Plan-carrying
    profiles track the planned angle rate; explicit profiles replay the
    given axial torque (note: with Coulomb friction and a small axial
    inertia, open-loop replay near zero rate is stiff and wants a small
    integration step).
    """
    n_sim, stride = _sim_grid(dt, duration)
    if profile.total_duration < duration - 1e-9:
        raise ConfigError("stage schedule does not cover the simulated span")
    if len(contacts) != len(layers):
        raise ConfigError("contacts and layers must align by index")
    t = dt * np.arange(n_sim + 1)
    coulomb = sum(layer.mu * c.normal_force * body.r
                  for layer, c in zip(layers, contacts))
    viscous = sum(layer.eta * body.r * body.r * c.contact_length
                  for layer, c in zip(layers, contacts))
    inertia = np.ascontiguousarray(body.inertia.reshape(-1))
    inv_inertia = np.ascontiguousarray(np.linalg.inv(body.inertia).reshape(-1))
    if profile.plan_levels is not None:
        w_plan = np.ascontiguousarray(profile.plan_rate_at(t))
        ta, w, tf = _kernels.rot_track(w_plan, inertia, inv_inertia,
                                       coulomb, viscous, dt)
        angle0 = float(profile.plan_levels[0])
    elif profile.applied_torque is not None:
        ta = np.ascontiguousarray(profile.applied_torque(t), dtype=np.float64)
        w0 = np.ascontiguousarray(initial_omega, dtype=np.float64)
        w, tf = _kernels.rot_replay(ta, inertia, inv_inertia, w0,
                                    coulomb, viscous, dt)
        angle0 = 0.0
    else:
        raise ConfigError("profile has neither a plan nor an applied torque")
    idx = np.arange(0, n_sim + 1, stride)
    omega = w[idx]
    angle = _trapezoid_cumulative(omega[:, 2], OUT_DT, angle0)
    codes = profile.stage_codes_at(t[idx])
    n_out = len(idx)
    forces = ForceDecomposition(f_a=np.zeros(n_out), f_t=np.zeros(n_out),
                                f_f=np.zeros(n_out), t_a=ta[idx], t_f=tf[idx])
    return GroundTruthTrajectory(
        accel=SampledSeries(0.0, OUT_DT, np.zeros(n_out), "m/s^2"),
        velocity=SampledSeries(0.0, OUT_DT, np.zeros(n_out), "m/s"),
        displacement=SampledSeries(0.0, OUT_DT, np.zeros(n_out), "m"),
        omega=SampledSeries(0.0, OUT_DT, omega, "rad/s"),
        angle=SampledSeries(0.0, OUT_DT, angle, "rad"),
        forces=forces, stage_codes=codes)


# ---------------------------------------------------------------------------
# Sensor synthesis


@dataclass(frozen=True)
class ImuNoiseModel:
    """Identified inertial noise coefficients (per axis) and the RNG seed.

    Defaults are the characterized values of the integrated IMU.  White
    noise density is applied per sample as density * sqrt(rate); bias
    instability is approximated by a first-order random walk whose Allan
    deviation matches the instability floor at ``bias_flat_tau`` seconds.
    """

    accel_vrw: tuple[float, float, float] = (19.7, 28.1, 73.2)   # ug/sqrt(Hz)
    accel_bias_instability: tuple[float, float, float] = (0.48, 0.39, 0.61)  # mg
    gyro_arw: tuple[float, float, float] = (0.14, 0.14, 0.13)    # deg/sqrt(h)
    gyro_bias_instability: tuple[float, float, float] = (2.72, 4.16, 4.78)  # deg/h
    seed: int = 0
    bias_flat_tau: float = 1000.0  # s

    def __post_init__(self):
        for name in ("accel_vrw", "accel_bias_instability",
                     "gyro_arw", "gyro_bias_instability"):
            vals = getattr(self, name)
            if len(vals) != 3 or any(v < 0 for v in vals):
                raise ConfigError(f"{name} must be three nonnegative values")

    def accel_white_sigma(self, rate: float) -> np.ndarray:
        """Per-sample accel white-noise std, m/s^2."""
        density = np.asarray(self.accel_vrw) * 1e-6 * GRAVITY  # (m/s^2)/sqrt(Hz)
        return density * math.sqrt(rate)

    def gyro_white_sigma(self, rate: float) -> np.ndarray:
        """Per-sample gyro white-noise std, rad/s."""
        density = np.asarray(self.gyro_arw) * (math.pi / 180.0) / 60.0
        return density * math.sqrt(rate)

    def accel_walk_sigma(self, dt: float) -> np.ndarray:
        """Per-step bias random-walk increment std, m/s^2."""
        b = np.asarray(self.accel_bias_instability) * 1e-3 * GRAVITY
        k = 0.664 * b * math.sqrt(3.0 / self.bias_flat_tau)
        return k * math.sqrt(dt)

    def gyro_walk_sigma(self, dt: float) -> np.ndarray:
        """Per-step bias random-walk increment std, rad/s."""
        b = np.asarray(self.gyro_bias_instability) * math.pi / 180.0 / 3600.0
        k = 0.664 * b * math.sqrt(3.0 / self.bias_flat_tau)
        return k * math.sqrt(dt)


def _rotation_matrices(tilt: float, angle: np.ndarray) -> np.ndarray:
    """Body-to-world rotations R_y(tilt) @ R_z(angle_i), shape (n, 3, 3)."""
    ca, sa = np.cos(angle), np.sin(angle)
    ct, st = math.cos(tilt), math.sin(tilt)
    n = len(angle)
    rz = np.zeros((n, 3, 3))
    rz[:, 0, 0] = ca
    rz[:, 0, 1] = -sa
    rz[:, 1, 0] = sa
    rz[:, 1, 1] = ca
    rz[:, 2, 2] = 1.0
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    return np.einsum("ij,njk->nik", ry, rz)


def synthesize_sensors(truth: GroundTruthTrajectory,
                       noise: ImuNoiseModel,
                       calib: ForceCalibration,
                       hand_tremor_std: float = 0.01,
                       *,
                       force_noise_std: float = 0.005,
                       mains_amplitude: float = 0.02,
                       mains_freq: float = 50.0,
                       vis_noise_std: float = 2e-4,
                       vis_scale: float = 1.0,
                       include_visual: bool = True,
                       mount_tilt_rad: float = 0.0,
                       label: ManipulationType | None = None
                       ) -> RecordingSession:
    """Turn a ground-truth trajectory into noisy sensor streams.

    The session drops the trajectory's final instant, giving exactly
    duration * 100 samples.  Accelerometer output is specific force in the
    body frame plus white noise at the random-walk density, a bias random
    walk, and white hand tremor injected during the interval stages; the
    gyroscope is analogous.  Force passes through the amplifier chain
    (sensitivity * excitation * gain), picks up mains interference and
    electronics noise, is quantized by a 12-bit converter spanning the
    signed full-scale output range, and is inverted back to newtons.  The
    visual channel is |axial velocity| at 30 Hz plus white noise.

    Deterministic for a fixed ``noise.seed``: one child stream per channel.
    """
    n = len(truth) - 1
    if n < 1:
        raise ConfigError("trajectory too short to synthesize a session")
    dt = truth.dt
    rate = 1.0 / dt
    t = dt * np.arange(n)
    ss = np.random.SeedSequence(noise.seed)
    rng_accel, rng_gyro, rng_tremor, rng_force, rng_vis = (
        np.random.default_rng(s) for s in ss.spawn(5))

    # true specific force and body rates
    rot = _rotation_matrices(mount_tilt_rad, truth.angle.values[:n])
    f_world = np.zeros((n, 3))
    f_world[:, 2] = GRAVITY - truth.accel.values[:n]
    f_body = np.einsum("nji,nj->ni", rot, f_world)  # R^T f_world
    gyro_true = truth.omega.values[:n]

    accel_sigma = noise.accel_white_sigma(rate)
    accel_walk = noise.accel_walk_sigma(dt)
    accel_meas = (f_body
                  + rng_accel.standard_normal((n, 3)) * accel_sigma
                  + np.cumsum(rng_accel.standard_normal((n, 3)) * accel_walk,
                              axis=0))
    gyro_sigma = noise.gyro_white_sigma(rate)
    gyro_walk = noise.gyro_walk_sigma(dt)
    gyro_meas = (gyro_true
                 + rng_gyro.standard_normal((n, 3)) * gyro_sigma
                 + np.cumsum(rng_gyro.standard_normal((n, 3)) * gyro_walk,
                             axis=0))
    if hand_tremor_std > 0:
        interval = np.isin(truth.stage_codes[:n], list(INTERVAL_CODES))
        tremor = rng_tremor.standard_normal((n, 3)) * hand_tremor_std
        accel_meas = accel_meas + tremor * interval[:, None]

    # force channel: noise referred to input, then the amplifier chain
    f_applied = truth.forces.f_a[:n].copy()
    if force_noise_std > 0:
        f_applied = f_applied + rng_force.standard_normal(n) * force_noise_std
    if mains_amplitude > 0:
        phase = rng_force.uniform(0.0, 2.0 * math.pi)
        f_applied = f_applied + mains_amplitude * np.sin(
            2.0 * math.pi * mains_freq * t + phase)
    vpn = calib.volts_per_newton
    volts = f_applied * vpn + calib.offset
    adc_span = 2.0 * calib.sensitivity * calib.excitation * calib.gain
    step = adc_span / 4096.0
    volts_q = calib.offset + np.round((volts - calib.offset) / step) * step
    force_meas = (volts_q - calib.offset) / vpn

    visual = None
    if include_visual:
        vis_dt = 1.0 / VISUAL_RATE_HZ
        n_vis = int(math.floor((n - 1) * dt / vis_dt)) + 1
        v_at_vis = resample_cubic_spline(truth.velocity, vis_dt,
                                         (0.0, (n_vis - 1) * vis_dt))
        flow = vis_scale * np.abs(v_at_vis.values[:n_vis])
        if vis_noise_std > 0:
            flow = flow + rng_vis.standard_normal(n_vis) * vis_noise_std
        visual = SampledSeries(0.0, vis_dt, np.maximum(flow, 0.0), "flow")

    return RecordingSession(
        force=SampledSeries(0.0, dt, force_meas, "N"),
        accel=SampledSeries(0.0, dt, accel_meas, "m/s^2"),
        gyro=SampledSeries(0.0, dt, gyro_meas, "rad/s"),
        visual=visual, label=label, calibration=calib)
