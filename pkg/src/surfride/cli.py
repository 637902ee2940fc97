"""Command-line front end.

Every command writes a JSON document ``{"metadata": ..., "payload": ...}``
except ``sweep``, which writes a tab-separated table whose leading ``#``
lines carry the metadata. Exit codes: 0 success, 2 validation error,
3 no threshold / solver failure, 4 oracle failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import (
    CONFIG_PATH_ENV,
    ConfigError,
    RunConfig,
    find_config,
    load_config,
    read_samples,
    unit_factor,
)
from .core import FitError, ModelError, ThrustModel, fit_polynomial
from .dynamics import OracleError, SurgeModel, SurgeState, oracle_threshold, simulate, standard_grid, write_trajectory
from .hydro import assess_validity
from .melnikov import (
    MelnikovProblem,
    NoThresholdError,
    ThresholdReport,
    melnikov_residual,
    solve_threshold,
    work_balance,
)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_ORACLE = 0, 2, 3, 4

SWEEP_PARAMETERS = ("steepness", "wavelength", "n")


class UsageError(ValueError):
    pass


def metadata(command: str, config: Optional[RunConfig] = None, **extra) -> dict:
    meta = {"tool": "surfride", "version": __version__, "command": command}
    if config is not None:
        meta["config_sha256"] = config.digest()
    meta.update(extra)
    return meta


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def emit_json(doc: dict, path: Optional[str]) -> None:
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def threshold_report(config: RunConfig, wave=None) -> tuple[ThresholdReport, Optional[dict]]:
    """Resolve f, solve for n_cr and attach the validity assessment."""
    fk = None
    if wave is None:
        wave, fk = config.resolve_wave()
    problem = MelnikovProblem(config.ship, wave, config.resistance, config.thrust)
    kwargs = {}
    if config.thrust.degree != 2:
        if "rtol" in config.solver:
            kwargs["rtol"] = float(config.solver["rtol"])
        if "bracket" in config.solver:
            kwargs["bracket_hint"] = tuple(config.solver["bracket"])
    report = solve_threshold(problem, **kwargs)
    report.validity = assess_validity(config.ship, wave, config.mu_value())
    return report, None if fk is None else fk.to_dict()


def cmd_threshold(config: RunConfig, args) -> int:
    report, fk = threshold_report(config)
    payload = report.to_dict()
    if fk is not None:
        payload["froude_krylov"] = fk
    if config.fits:
        payload["fits"] = config.fits
    emit_json({"metadata": metadata("threshold", config), "payload": payload}, args.output)
    return EXIT_OK if report.has_threshold else EXIT_SOLVER


def _sweep_values(start: float, stop: float, count: int) -> list[float]:
    if count < 1:
        raise UsageError("sweep count must be at least 1")
    if count > 1 and start == stop:
        raise UsageError("sweep range is empty (start == stop)")
    if stop < start:
        raise UsageError("sweep range is empty (stop < start)")
    return [float(v) for v in np.linspace(start, stop, count)]


N_COLUMNS = ["index", "n", "residual", "work_balance", "status"]
WAVE_COLUMNS = [
    "index", "value", "n_cr", "n_cr_negative", "force", "mean_speed", "mean_speed_sq",
    "mean_resistance", "rtcond", "u_positive", "mean_speed_positive",
    "steepness_u_positive", "steepness_mean_speed", "status",
]


def _sweep_row(task) -> list:
    """One sweep point; failures go into the status column."""
    config, parameter, index, value = task
    if parameter == "n":
        try:
            wave, _ = config.resolve_wave()
            problem = MelnikovProblem(config.ship, wave, config.resistance, config.thrust)
            return [index, value, melnikov_residual(problem, value), work_balance(problem, value), "ok"]
        except (ModelError, ValueError) as exc:
            return [index, value, None, None, _status(exc)]
    row = [index, value] + [None] * (len(WAVE_COLUMNS) - 3)
    try:
        if parameter == "steepness":
            wave, _ = config.resolve_wave(height=value * config.wave.wavelength)
        else:
            steep = config.wave.height / config.wave.wavelength
            wave, _ = config.resolve_wave(wavelength=value, height=steep * value)
        report, _ = threshold_report(config, wave)
    except (ModelError, NoThresholdError, ValueError) as exc:
        return row + [_status(exc)]
    cert, val = report.certificate, report.validity
    row[2:] = [
        report.n_cr, report.n_cr_negative, report.force, report.mean_speed,
        report.mean_speed_sq, report.mean_resistance, cert.rtcond, cert.u_positive,
        cert.mean_speed_positive, val.steepness_u_positive, val.steepness_mean_speed,
    ]
    return row + ["ok" if report.has_threshold else "no-threshold"]


def _status(exc: Exception) -> str:
    if isinstance(exc, NoThresholdError):
        return "no-threshold"
    if isinstance(exc, ModelError):
        return "model-error"
    return "error"


def _cell(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def cmd_sweep(config: RunConfig, args) -> int:
    values = _sweep_values(args.start, args.stop, args.count)
    tasks = [(config, args.parameter, i, v) for i, v in enumerate(values)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    rows.sort(key=lambda r: r[0])
    columns = N_COLUMNS if args.parameter == "n" else WAVE_COLUMNS
    meta = metadata("sweep", config, parameter=args.parameter, start=args.start,
                    stop=args.stop, count=args.count)
    lines = ["# " + json.dumps(meta, sort_keys=True), "# " + "\t".join(columns)]
    lines += ["\t".join(_cell(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(config: RunConfig, args) -> int:
    report, fk = threshold_report(config)
    wave, _ = config.resolve_wave()
    opts = config.oracle
    grid = standard_grid(
        wave,
        int(opts.get("positions", 16)),
        int(opts.get("speeds", 9)),
        tuple(opts.get("speed_range", (-0.8, 0.4))),
    )
    payload = {"melnikov": report.to_dict()}
    if fk is not None:
        payload["froude_krylov"] = fk
    code = EXIT_OK
    try:
        result = oracle_threshold(
            config.ship, wave, config.resistance, config.thrust,
            n_range=tuple(opts["n_range"]) if "n_range" in opts else None,
            tolerance=opts.get("tolerance"),
            grid=grid,
            criteria=config.capture_criteria(),
        )
    except OracleError as exc:
        payload["oracle"] = {"error": str(exc), "grid_size": len(grid),
                             "criteria": config.capture_criteria().to_dict()}
        code = EXIT_ORACLE
    else:
        payload["oracle"] = result.to_dict()
        if report.n_cr is not None:
            payload["relative_difference"] = abs(report.n_cr - result.n_cr) / result.n_cr
        if args.trajectory:
            model = SurgeModel(config.ship, wave, config.resistance, config.thrust, result.bracket[1])
            crit = config.capture_criteria()
            start = grid[0] if args.xi is None else SurgeState(args.xi, args.xi_dot, wave.celerity)
            write_trajectory(args.trajectory, simulate(model, start, crit.horizon, crit.step))
            payload["trajectory"] = {"path": args.trajectory, "n": result.bracket[1],
                                     "xi0": start.xi, "xi_dot0": start.xi_dot}
    emit_json({"metadata": metadata("oracle", config), "payload": payload}, args.output)
    return code


def cmd_fit(args) -> int:
    samples = read_samples(args.samples, "samples")
    fx = unit_factor(args.x_unit, "speed", "--x-unit") if args.kind == "resistance" and args.x_unit else 1.0
    fy = unit_factor(args.y_unit, "force", "--y-unit") if args.kind == "resistance" and args.y_unit else 1.0
    samples = [(x * fx, y * fy) for x, y in samples]
    degree = args.degree if args.degree is not None else (5 if args.kind == "resistance" else 2)
    curve = fit_polynomial(samples, degree)
    payload = {
        "kind": args.kind,
        "degree": degree,
        "coefficients": list(curve.coefficients),
        "residual_rms": curve.residual_rms,
        "samples": len(samples),
    }
    if args.kind == "kt" and degree == 2:
        ThrustModel(curve.coefficients).check_quadratic_signs()
        payload["sign_check"] = {"kappa_0_positive": True, "kappa_2_negative": True}
    emit_json({"metadata": metadata("fit", samples_file=str(args.samples)), "payload": payload}, args.output)
    return EXIT_OK


def cmd_fk_force(config: RunConfig, args) -> int:
    if config.hull is None:
        raise ConfigError("hull: fk-force needs a hull section")
    from .hydro import froude_krylov_amplitude

    wave, _ = config.resolve_wave()
    fk = froude_krylov_amplitude(
        config.hull, wave, config.wave.mu,
        water_density=config.ship.water_density,
        ship_mass=config.ship.mass,
        refinement_check=True,
    )
    payload = fk.to_dict()
    payload["validity"] = assess_validity(config.ship, wave.with_force(fk.force), fk.mu).to_dict()
    emit_json({"metadata": metadata("fk-force", config), "payload": payload}, args.output)
    return EXIT_OK


def cmd_validate(config: RunConfig, args) -> int:
    payload = {"valid": True, "config": config.to_dict()}
    if config.fits:
        payload["fits"] = config.fits
    emit_json({"metadata": metadata("validate", config), "payload": payload}, args.output)
    return EXIT_OK


def _override(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write the result here instead of stdout")

    cfg = argparse.ArgumentParser(add_help=False, parents=[common])
    cfg.add_argument(
        "-c", "--config",
        help=f"JSON config; bare names are also searched in ${CONFIG_PATH_ENV}",
    )
    cfg.add_argument("--set", action="append", type=_override, default=[], metavar="KEY=VALUE",
                     help="override a config field, e.g. wave.height=2.5 (repeatable)")
    cfg.add_argument("--force-amplitude", type=float, help="explicit f in N")
    cfg.add_argument("--mu", help="'unity', 'sgisc' or a number")

    parser = argparse.ArgumentParser(prog="surfride", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"surfride {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("threshold", parents=[cfg], help="Melnikov threshold rate n_cr")
    p = sub.add_parser("sweep", parents=[cfg], help="tabulate over steepness, wavelength or n")
    p.add_argument("--parameter", choices=SWEEP_PARAMETERS, required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--count", type=int, default=11)
    p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("oracle", parents=[cfg], help="Melnikov threshold against the ODE capture oracle")
    p.add_argument("--trajectory", help="dump one trajectory at the oracle threshold")
    p.add_argument("--xi", type=float, help="trajectory start position (m)")
    p.add_argument("--xi-dot", type=float, default=0.0, help="trajectory start relative speed (m/s)")
    p = sub.add_parser("fit", parents=[common], help="least-squares fit of a sample file")
    p.add_argument("samples", help="two-column file: u R, or J K_T")
    p.add_argument("--kind", choices=("resistance", "kt"), required=True)
    p.add_argument("--degree", type=int)
    p.add_argument("--x-unit", help="speed unit of resistance samples")
    p.add_argument("--y-unit", help="force unit of resistance samples")
    sub.add_parser("fk-force", parents=[cfg], help="Froude-Krylov surge force from hull sections")
    sub.add_parser("validate", parents=[cfg], help="check a config and print it normalised")
    return parser


COMMANDS = {
    "threshold": cmd_threshold,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "fk-force": cmd_fk_force,
    "validate": cmd_validate,
}


def _load(args) -> RunConfig:
    overrides = dict(args.set)
    if args.force_amplitude is not None:
        overrides["wave.force_amplitude"] = args.force_amplitude
    if args.mu is not None:
        try:
            overrides["wave.mu"] = float(args.mu)
        except ValueError:
            overrides["wave.mu"] = args.mu
    return load_config(find_config(args.config), overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit":
            return cmd_fit(args)
        return COMMANDS[args.command](_load(args), args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConfigError, ModelError, FitError, OSError) as exc:
        print(f"surfride: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoThresholdError as exc:
        print(f"surfride: no threshold: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OracleError as exc:
        print(f"surfride: oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
