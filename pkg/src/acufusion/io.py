"""Session, trajectory, and report file formats.

A session on disk is a directory:

    imu.csv      force + 3-axis accel + 3-axis gyro at 100 Hz, one header
                 row with channel names and units, one row per sample
    visual.csv   optional 30 Hz flow-magnitude channel
    truth.csv    optional simulator ground truth
    meta.json    rates, start times, label, calibration, format version,
                 and the config hash of whatever produced the directory

Floats are written with 17 significant digits, so values round-trip
exactly and repeated runs with the same seed produce byte-identical
files.  All errors surface as IoError.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .core import (ForceCalibration, ManipulationType, RecordingSession,
                   SampledSeries)
from .errors import IoError
from .simulate import ForceDecomposition, GroundTruthTrajectory

FORMAT_VERSION = 1

_IMU_HEADER = ("force_N,accel_x_m_s2,accel_y_m_s2,accel_z_m_s2,"
               "gyro_x_rad_s,gyro_y_rad_s,gyro_z_rad_s")
_VIS_HEADER = "flow"
_TRUTH_HEADER = ("accel_m_s2,velocity_m_s,displacement_m,"
                 "omega_x_rad_s,omega_y_rad_s,omega_z_rad_s,angle_rad,"
                 "f_a_N,f_t_N,f_f_N,t_a_Nm,t_f_Nm,stage")


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _write_table(path: Path, header: str, columns: list[np.ndarray]):
    rows = len(columns[0])
    lines = [header]
    for i in range(rows):
        lines.append(",".join(_fmt(float(c[i])) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def _read_table(path: Path, expected_header: str) -> np.ndarray:
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    lines = text.strip().split("\n")
    if not lines or lines[0] != expected_header:
        raise IoError(f"{path}: unexpected header")
    try:
        data = np.array([[float(tok) for tok in line.split(",")]
                         for line in lines[1:]])
    except ValueError as exc:
        raise IoError(f"{path}: malformed row ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != expected_header.count(",") + 1:
        raise IoError(f"{path}: wrong column count")
    return data


def config_hash(config: dict) -> str:
    """Stable hash of a canonical-JSON configuration."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def dump_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"{path}: invalid JSON ({exc})") from exc


def write_session(directory: str | Path, session: RecordingSession,
                  truth: GroundTruthTrajectory | None = None,
                  cfg_hash: str = "", extra_meta: dict | None = None):
    """Write a session directory (imu.csv, visual.csv, truth.csv, meta.json)."""
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        _write_table(d / "imu.csv", _IMU_HEADER, [
            session.force.values,
            session.accel.values[:, 0], session.accel.values[:, 1],
            session.accel.values[:, 2],
            session.gyro.values[:, 0], session.gyro.values[:, 1],
            session.gyro.values[:, 2]])
        meta = {
            "format_version": FORMAT_VERSION,
            "imu": {"t0": session.force.t0, "dt": session.force.dt,
                    "samples": len(session.force)},
            "label": session.label.value if session.label else None,
            "calibration": {
                "sensitivity": session.calibration.sensitivity,
                "excitation": session.calibration.excitation,
                "gain": session.calibration.gain,
                "full_scale": session.calibration.full_scale,
                "offset": session.calibration.offset,
            },
            "config_hash": cfg_hash,
        }
        if session.visual is not None:
            _write_table(d / "visual.csv", _VIS_HEADER,
                         [session.visual.values])
            meta["visual"] = {"t0": session.visual.t0,
                              "dt": session.visual.dt,
                              "samples": len(session.visual)}
        if truth is not None:
            _write_table(d / "truth.csv", _TRUTH_HEADER, [
                truth.accel.values, truth.velocity.values,
                truth.displacement.values,
                truth.omega.values[:, 0], truth.omega.values[:, 1],
                truth.omega.values[:, 2], truth.angle.values,
                truth.forces.f_a, truth.forces.f_t, truth.forces.f_f,
                truth.forces.t_a, truth.forces.t_f,
                truth.stage_codes.astype(np.float64)])
            meta["truth"] = {"t0": truth.accel.t0, "dt": truth.accel.dt,
                             "samples": len(truth),
                             "initial_depth": truth.initial_depth}
        if extra_meta:
            meta.update(extra_meta)
        dump_json(d / "meta.json", meta)
    except OSError as exc:
        raise IoError(f"cannot write session to {d}: {exc}") from exc


def read_session(directory: str | Path
                 ) -> tuple[RecordingSession, dict]:
    """Read a session directory; returns (session, metadata)."""
    d = Path(directory)
    meta = load_json(d / "meta.json")
    if meta.get("format_version") != FORMAT_VERSION:
        raise IoError(f"{d}: unsupported format version "
                      f"{meta.get('format_version')!r}")
    imu_meta = meta.get("imu")
    if not imu_meta:
        raise IoError(f"{d}: metadata lacks the imu section")
    data = _read_table(d / "imu.csv", _IMU_HEADER)
    t0, dt = float(imu_meta["t0"]), float(imu_meta["dt"])
    calib = ForceCalibration(**meta.get("calibration", {}))
    label = meta.get("label")
    visual = None
    if (d / "visual.csv").exists():
        vis_meta = meta.get("visual")
        if not vis_meta:
            raise IoError(f"{d}: visual.csv present but not in metadata")
        vis = _read_table(d / "visual.csv", _VIS_HEADER)
        visual = SampledSeries(float(vis_meta["t0"]), float(vis_meta["dt"]),
                               vis[:, 0], "flow")
    session = RecordingSession(
        force=SampledSeries(t0, dt, data[:, 0], "N"),
        accel=SampledSeries(t0, dt, data[:, 1:4], "m/s^2"),
        gyro=SampledSeries(t0, dt, data[:, 4:7], "rad/s"),
        visual=visual,
        label=ManipulationType(label) if label else None,
        calibration=calib)
    return session, meta


def read_truth(directory: str | Path) -> GroundTruthTrajectory:
    """Read the ground-truth table of a simulated session directory."""
    d = Path(directory)
    meta = load_json(d / "meta.json")
    truth_meta = meta.get("truth")
    if not truth_meta:
        raise IoError(f"{d}: no ground truth stored")
    data = _read_table(d / "truth.csv", _TRUTH_HEADER)
    t0, dt = float(truth_meta["t0"]), float(truth_meta["dt"])
    forces = ForceDecomposition(f_a=data[:, 7], f_t=data[:, 8],
                                f_f=data[:, 9], t_a=data[:, 10],
                                t_f=data[:, 11])
    return GroundTruthTrajectory(
        accel=SampledSeries(t0, dt, data[:, 0], "m/s^2"),
        velocity=SampledSeries(t0, dt, data[:, 1], "m/s"),
        displacement=SampledSeries(t0, dt, data[:, 2], "m"),
        omega=SampledSeries(t0, dt, data[:, 3:6], "rad/s"),
        angle=SampledSeries(t0, dt, data[:, 6], "rad"),
        forces=forces,
        stage_codes=data[:, 12].astype(np.uint8),
        initial_depth=float(truth_meta.get("initial_depth", 0.0)))


def write_series_table(path: Path, series_map: dict[str, SampledSeries]):
    """Tall tidy table of named series: name,index,time,value."""
    lines = ["series,index,time_s,value"]
    for name in sorted(series_map):
        ser = series_map[name]
        values = ser.values
        if values.ndim != 1:
            raise IoError(f"series {name!r} is not scalar")
        t0, dt = ser.t0, ser.dt
        for i, v in enumerate(values):
            lines.append(f"{name},{i},{_fmt(t0 + i * dt)},{_fmt(float(v))}")
    path.write_text("\n".join(lines) + "\n")


def read_calibration_sweep(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a force_N,voltage_V sweep file."""
    data = _read_table(Path(path), "force_N,voltage_V")
    return data[:, 0], data[:, 1]


def write_calibration_sweep(path: str | Path, force: np.ndarray,
                            voltage: np.ndarray):
    _write_table(Path(path), "force_N,voltage_V",
                 [np.asarray(force, dtype=float),
                  np.asarray(voltage, dtype=float)])
