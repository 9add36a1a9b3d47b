"""Command-line front end.

Subcommands wire the library into reproducible batch runs:

    acufusion simulate  -o DIR [--config FILE] [--seed N]
    acufusion process   SESSION_DIR -o DIR [--config FILE] [--mode auto|lt|tr]
    acufusion compare   REPORT.json... -o DIR [--force]
    acufusion allan     SESSION_DIR --channel accel|gyro -o DIR
    acufusion calibrate SWEEP.csv -o DIR

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 no cycles
found, 5 degenerate statistics, 1 any other toolkit failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analyze, io
from .analyze import (CalibrationCurve, allan_deviation, fit_noise_coeffs,
                      mean_sd, nonlinearity_error, welch_anova)
from .errors import (ConfigError, DegenerateGroup, DegenerateInput, IoError,
                     NoCyclesFound, ToolkitError)
from .pipeline import ProcessResult, RunConfig, process_session, simulate_session

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NO_CYCLES = 4
EXIT_DEGENERATE = 5


def _load_config(path: str | None, seed: int | None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        cfg = RunConfig.from_dict(io.load_json(Path(path)))
    if seed is not None:
        cfg.seed = seed
    return cfg


def _report_payload(result: ProcessResult, cfg: RunConfig,
                    cfg_hash: str, meta: dict) -> dict:
    rows = []
    if result.features is not None:
        for r in result.features.rows:
            rows.append({"cycle": r.cycle, "stage": r.stage,
                         "start": r.start, "end": r.end,
                         "features": r.features,
                         "normalized": r.normalized})
    stats = {}
    if result.features is not None and result.features.rows:
        names = sorted(result.features.rows[0].features)
        for stage in result.features.stages():
            for name in names:
                vals = result.features.feature_values(name, stage)
                if len(vals) >= 2:
                    m, s = mean_sd(vals)
                else:
                    m, s = float(vals[0]), 0.0
                stats[f"{name}/{stage}"] = {
                    "mean": m, "sd": s, "count": int(len(vals)),
                    "operation": "analyze.mean_sd"}
    cycles = []
    for c in result.lt_cycles:
        cycles.append({"type": "lt", "ts": c.ts, "te": c.te,
                       "ls": c.ls, "le": c.le, "next_ts": c.next_ts})
    for c in result.tr_cycles:
        cycles.append({"type": "tr", "left_start": c.left_start,
                       "right_start": c.right_start,
                       "next_left": c.next_left})
    payload = {
        "format_version": io.FORMAT_VERSION,
        "config_hash": cfg_hash,
        "label": meta.get("label"),
        "mode": result.mode,
        "timeline": {
            "mode": result.timeline.mode,
            "intervals": [[state, int(s), int(e)]
                          for state, s, e in result.timeline.intervals],
            "operation": "statefuse.detect_states",
        },
        "cycles": cycles,
        "feature_rows": rows,
        "feature_stats": stats,
        "kind_of_features": (result.features.kind
                             if result.features else None),
        "twirl_rate_hz": result.twirl_rate_hz,
    }
    if result.displacement_rmse is not None:
        payload["displacement_rmse_m"] = {
            "segmented": result.displacement_rmse,
            "naive": result.naive_rmse,
            "operation": "core.rmse(kinematics.segmented_integrate | "
                         "kinematics.naive_double_integrate, truth)",
        }
    return payload


def _write_report(result: ProcessResult, cfg: RunConfig, cfg_hash: str,
                  meta: dict, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    io.dump_json(outdir / "report.json",
                 _report_payload(result, cfg, cfg_hash, meta))
    series = {
        "force_conditioned": result.force_conditioned,
        "axial_accel": result.axial_accel,
        "velocity": result.estimate.velocity,
        "displacement": result.estimate.displacement,
        "displacement_naive": result.naive.displacement,
        "angle": result.roll,
        "omega_axial": result.omega_axial,
        "confidence": result.timeline.confidence,
    }
    io.write_series_table(outdir / "series.csv", series)


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config, args.seed)
    cfg_hash = io.config_hash(cfg.to_dict())
    session, truth = simulate_session(cfg)
    io.write_session(args.output, session, truth=truth, cfg_hash=cfg_hash,
                     extra_meta={"seed": cfg.seed})
    print(f"wrote session to {args.output} (config {cfg_hash})")
    return 0


def cmd_process(args) -> int:
    cfg = _load_config(args.config, args.seed)
    cfg_hash = io.config_hash(cfg.to_dict())
    session, meta = io.read_session(args.session)
    truth = None
    if (Path(args.session) / "truth.csv").exists():
        truth = io.read_truth(args.session)
    result = process_session(session, cfg, truth=truth, mode=args.mode)
    _write_report(result, cfg, cfg_hash, meta, Path(args.output))
    n_cycles = len(result.lt_cycles) or len(result.tr_cycles)
    print(f"processed {args.session}: mode={result.mode}, "
          f"{n_cycles} cycles -> {args.output}")
    return 0


def cmd_compare(args) -> int:
    reports = [io.load_json(Path(p)) for p in args.reports]
    hashes = {r.get("config_hash") for r in reports}
    if len(hashes) > 1 and not args.force:
        raise ConfigError(
            f"reports carry different config hashes {sorted(hashes)}; "
            "rerun with --force to compare anyway")
    groups: dict[str, dict[str, list[float]]] = {}
    for rep, path in zip(reports, args.reports):
        label = rep.get("label") or Path(path).stem
        for row in rep.get("feature_rows", []):
            key = f"{label}/{row['stage']}"
            for name, value in row["features"].items():
                groups.setdefault(name, {}).setdefault(key, []).append(value)
    table = {}
    for name, by_group in sorted(groups.items()):
        if len(by_group) < 2:
            raise DegenerateGroup(
                f"feature {name} has fewer than two groups")
        arrays = [np.array(v) for v in by_group.values()]
        f_stat, p = welch_anova(arrays)
        table[name] = {
            "groups": {k: dict(zip(("mean", "sd"), mean_sd(v)))
                       for k, v in sorted(by_group.items())},
            "welch_F": f_stat,
            "p_value": p,
            "significant": bool(p < args.alpha),
            "operation": "analyze.welch_anova",
        }
    payload = {"format_version": io.FORMAT_VERSION,
               "alpha": args.alpha,
               "config_hashes": sorted(h for h in hashes if h is not None),
               "features": table}
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    io.dump_json(out / "compare.json", payload)
    for name, entry in table.items():
        flag = "*" if entry["significant"] else " "
        print(f"{name}{flag} F={entry['welch_F']:.3g} p={entry['p_value']:.3g}")
    return 0


def cmd_allan(args) -> int:
    session, _ = io.read_session(args.session)
    series = session.accel if args.channel == "accel" else session.gyro
    curve = allan_deviation(series)
    coeffs = fit_noise_coeffs(curve)
    if args.channel == "accel":
        rw = [analyze.accel_rw_to_ug_per_sqrt_hz(v)
              for v in coeffs.random_walk]
        bi = [analyze.accel_bias_to_mg(v) for v in coeffs.bias_instability]
        units = {"random_walk": "ug/sqrt(Hz)", "bias_instability": "mg"}
    else:
        rw = [analyze.gyro_rw_to_deg_per_sqrt_h(v)
              for v in coeffs.random_walk]
        bi = [analyze.gyro_bias_to_deg_per_h(v)
              for v in coeffs.bias_instability]
        units = {"random_walk": "deg/sqrt(h)", "bias_instability": "deg/h"}
    payload = {
        "format_version": io.FORMAT_VERSION,
        "channel": args.channel,
        "taus_s": [float(t) for t in curve.taus],
        "adev": np.asarray(curve.adev).tolist(),
        "random_walk": rw,
        "bias_instability": bi,
        "slope": [float(s) for s in coeffs.slope],
        "units": units,
        "operation": "analyze.allan_deviation + analyze.fit_noise_coeffs",
    }
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    io.dump_json(out / f"allan_{args.channel}.json", payload)
    print(f"{args.channel}: random walk {rw}, bias instability {bi}")
    return 0


def cmd_calibrate(args) -> int:
    force, voltage = io.read_calibration_sweep(args.sweep)
    curve = CalibrationCurve(applied_force=force, output_voltage=voltage,
                             repeats=args.repeats)
    err = nonlinearity_error(curve)
    payload = {"format_version": io.FORMAT_VERSION,
               "nonlinearity_fraction": err,
               "nonlinearity_percent": 100.0 * err,
               "points": int(len(force)),
               "operation": "analyze.nonlinearity_error"}
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    io.dump_json(out / "calibration.json", payload)
    print(f"nonlinearity: {100.0 * err:.3f}% of full scale")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acufusion",
        description="Needle manipulation simulation and sensor-fusion "
                    "parameter recovery")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="simulate a session to disk")
    p.add_argument("-o", "--output", required=True, help="session directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("process", parents=[common],
                       help="run the recovery chain on a session")
    p.add_argument("session", help="session directory")
    p.add_argument("-o", "--output", required=True, help="report directory")
    p.add_argument("--mode", choices=("auto", "lt", "tr"), default="auto")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("compare", parents=[common],
                       help="Welch ANOVA across reports")
    p.add_argument("reports", nargs="+", help="report.json files")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--force", action="store_true",
                   help="allow mixing different config hashes")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("allan", parents=[common],
                       help="Allan-deviation noise identification")
    p.add_argument("session", help="session directory")
    p.add_argument("--channel", choices=("accel", "gyro"), default="gyro")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_allan)

    p = sub.add_parser("calibrate", parents=[common],
                       help="nonlinearity from a calibration sweep")
    p.add_argument("sweep", help="force_N,voltage_V CSV file")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NoCyclesFound as exc:
        print(f"no cycles: {exc}", file=sys.stderr)
        return EXIT_NO_CYCLES
    except (DegenerateGroup, DegenerateInput) as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ToolkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
