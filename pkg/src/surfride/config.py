"""JSON run configuration: parsing, unit conversion and validation.

Scalars are SI numbers or ``{"value": v, "unit": "..."}`` objects; sample
tables take a ``units`` block. Conversion to SI happens once, here.

Example::

    {
      "ship": {"mass": {"value": 420, "unit": "t"}, "added_mass": "auto",
               "wake_fraction": 0.15, "thrust_deduction": 0.2,
               "prop_diameter": 2.0, "water_density": 1025},
      "resistance": {"coefficients": [0, 500, 800, 0, 0, 2.5]},
      "propeller": {"kt_coefficients": [0.32, -0.24, -0.10]},
      "wave": {"wavelength": 34.5, "steepness": 0.05, "force_amplitude": "compute",
               "mu": "unity"},
      "hull": {"stations_file": "hull.txt", "block_coefficient": 0.6,
               "midship_coefficient": 0.9}
    }
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from .core import (
    GRAVITY,
    SEA_WATER_DENSITY,
    FitError,
    ModelError,
    PolynomialCurve,
    ShipPropulsion,
    ThrustModel,
    WaveCase,
    fit_polynomial,
)
from .dynamics import CaptureCriteria
from .hydro import HullSectionTable, froude_krylov_amplitude, read_station_file, resolve_mu

CONFIG_PATH_ENV = "SURFRIDE_CONFIG_PATH"
DEFAULT_CONFIG_NAME = "surfride.json"

UNITS = {
    "mass": {"kg": 1.0, "t": 1000.0},
    "length": {"m": 1.0, "ft": 0.3048},
    "speed": {"m/s": 1.0, "kn": 1852.0 / 3600.0, "km/h": 1.0 / 3.6},
    "force": {"N": 1.0, "kN": 1000.0, "MN": 1e6},
    "density": {"kg/m3": 1.0, "t/m3": 1000.0},
    "acceleration": {"m/s2": 1.0},
    "area": {"m2": 1.0, "ft2": 0.3048**2},
    "rate": {"1/s": 1.0, "rps": 1.0, "rpm": 1.0 / 60.0},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def convert(value: Any, kind: str, where: str) -> float:
    """A number in SI units from a bare number or a {value, unit} object."""
    if isinstance(value, dict):
        if "value" not in value:
            raise ConfigError(f"{where}: quantity object needs a 'value'")
        unit = value.get("unit", next(iter(UNITS[kind])))
        return float(_number(value["value"], where)) * unit_factor(unit, kind, where)
    return _number(value, where)


def unit_factor(unit: str, kind: str, where: str) -> float:
    try:
        return UNITS[kind][unit]
    except KeyError:
        known = ", ".join(UNITS[kind])
        raise ConfigError(f"{where}: unknown {kind} unit {unit!r} (known: {known})") from None


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    return value


def _require(block: dict, key: str, where: str) -> Any:
    if key not in block:
        raise ConfigError(f"{where}.{key}: required field missing")
    return block[key]


def _block(doc: dict, key: str, required: bool = True) -> Optional[dict]:
    if key not in doc:
        if required:
            raise ConfigError(f"{key}: required section missing")
        return None
    if not isinstance(doc[key], dict):
        raise ConfigError(f"{key}: must be an object")
    return doc[key]


def _resolve_path(path: str, base: Optional[Path], where: str) -> Path:
    p = Path(path)
    if not p.is_absolute() and base is not None:
        p = base / p
    if not p.is_file():
        raise ConfigError(f"{where}: file not found: {p}")
    return p


def read_samples(path, where: str = "samples_file") -> list[tuple[float, float]]:
    """Two-column numeric table; '#' comments and one header line allowed."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            try:
                values = [float(p) for p in parts]
            except ValueError:
                if rows:
                    raise ConfigError(f"{where}: {path}:{lineno}: non-numeric row {line!r}")
                continue
            if len(values) != 2:
                raise ConfigError(f"{where}: {path}:{lineno}: expected 2 columns, got {len(values)}")
            rows.append((values[0], values[1]))
    if not rows:
        raise ConfigError(f"{where}: {path} holds no samples")
    return rows


@dataclass
class WaveSpec:
    """Wave block before the force amplitude is resolved."""

    wavelength: float
    height: float
    force_amplitude: Optional[float]
    mu: Union[str, float] = "unity"
    gravity: float = GRAVITY

    @property
    def compute_force(self) -> bool:
        return self.force_amplitude is None


@dataclass
class RunConfig:
    """Everything a run needs, in SI units."""

    ship: ShipPropulsion
    resistance: PolynomialCurve
    thrust: ThrustModel
    wave: WaveSpec
    hull: Optional[HullSectionTable] = None
    solver: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict, compare=False)

    def resolve_wave(self, height: Optional[float] = None, wavelength: Optional[float] = None):
        """WaveCase with f resolved, plus the Froude-Krylov details if computed.

        ``height`` and ``wavelength`` override the configured values. An
        explicit f is scaled linearly with wave height.
        """
        lam = self.wave.wavelength if wavelength is None else wavelength
        h = self.wave.height if height is None else height
        base = WaveCase(lam, h, 0.0, self.wave.gravity)
        if self.wave.compute_force:
            fk = froude_krylov_amplitude(
                self.hull,
                base,
                self.wave.mu,
                water_density=self.ship.water_density,
                ship_mass=self.ship.mass,
                refinement_check=bool(self.solver.get("refinement_check", False)),
            )
            return base.with_force(fk.force), fk
        f = self.wave.force_amplitude
        if height is not None and self.wave.height > 0:
            f *= height / self.wave.height
        return base.with_force(f), None

    def mu_value(self) -> float:
        return resolve_mu(self.wave.mu, self.hull)

    def capture_criteria(self) -> CaptureCriteria:
        keys = CaptureCriteria.__dataclass_fields__
        return CaptureCriteria(**{k: v for k, v in self.oracle.items() if k in keys})

    def to_dict(self) -> dict:
        """Normalised SI document; parsing it gives back an equal config."""
        ship = self.ship
        out = {
            "ship": {
                "mass": ship.mass,
                "added_mass": "auto" if ship.added_mass_estimated else ship.added_mass,
                "wake_fraction": ship.wake_fraction,
                "thrust_deduction": ship.thrust_deduction,
                "prop_diameter": ship.prop_diameter,
                "water_density": ship.water_density,
            },
            "resistance": {"coefficients": list(self.resistance.coefficients)},
            "propeller": {"kt_coefficients": list(self.thrust.kappa)},
            "wave": {
                "wavelength": self.wave.wavelength,
                "height": self.wave.height,
                "force_amplitude": (
                    "compute" if self.wave.compute_force else self.wave.force_amplitude
                ),
                "mu": self.wave.mu,
                "gravity": self.wave.gravity,
            },
        }
        if self.hull is not None:
            out["hull"] = {
                "stations": [list(r) for r in zip(self.hull.x, self.hull.area, self.hull.draught)],
                "block_coefficient": self.hull.block_coefficient,
                "midship_coefficient": self.hull.midship_coefficient,
            }
        for key in ("solver", "oracle", "output"):
            if getattr(self, key):
                out[key] = copy.deepcopy(getattr(self, key))
        return out

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _parse_ship(block: dict) -> ShipPropulsion:
    w = "ship"
    mass = convert(_require(block, "mass", w), "mass", f"{w}.mass")
    added = block.get("added_mass", "auto")
    kwargs = dict(
        wake_fraction=_number(_require(block, "wake_fraction", w), f"{w}.wake_fraction"),
        thrust_deduction=_number(_require(block, "thrust_deduction", w), f"{w}.thrust_deduction"),
        prop_diameter=convert(_require(block, "prop_diameter", w), "length", f"{w}.prop_diameter"),
        water_density=convert(
            block.get("water_density", SEA_WATER_DENSITY), "density", f"{w}.water_density"
        ),
    )
    try:
        if added == "auto":
            return ShipPropulsion.with_estimated_added_mass(mass, **kwargs)
        return ShipPropulsion(mass=mass, added_mass=convert(added, "mass", f"{w}.added_mass"), **kwargs)
    except ModelError as exc:
        raise ConfigError(f"{w}: {exc}") from None


def _parse_curve(block: dict, where: str, coeff_key: str, kinds, default_degree, base):
    """Coefficients directly, or a least-squares fit of a sample table."""
    fit_info = None
    if coeff_key in block:
        coeffs = block[coeff_key]
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError(f"{where}.{coeff_key}: expected a non-empty list of numbers")
        coeffs = [_number(c, f"{where}.{coeff_key}[{i}]") for i, c in enumerate(coeffs)]
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        return coeffs, fit_info
    if "samples" in block:
        samples = block["samples"]
        if not isinstance(samples, list):
            raise ConfigError(f"{where}.samples: expected a list of [x, y] pairs")
        try:
            samples = [(float(a), float(b)) for a, b in samples]
        except (TypeError, ValueError):
            raise ConfigError(f"{where}.samples: expected a list of [x, y] pairs") from None
    elif "samples_file" in block:
        path = _resolve_path(block["samples_file"], base, f"{where}.samples_file")
        samples = read_samples(path, f"{where}.samples_file")
    else:
        raise ConfigError(f"{where}: give '{coeff_key}', 'samples' or 'samples_file'")
    units = block.get("units", {})
    fx = unit_factor(units.get("x", next(iter(UNITS[kinds[0]]))), kinds[0], f"{where}.units.x") if kinds[0] else 1.0
    fy = unit_factor(units.get("y", next(iter(UNITS[kinds[1]]))), kinds[1], f"{where}.units.y") if kinds[1] else 1.0
    samples = [(x * fx, y * fy) for x, y in samples]
    degree = block.get("degree", default_degree)
    if isinstance(degree, bool) or not isinstance(degree, int):
        raise ConfigError(f"{where}.degree: expected an integer")
    try:
        curve = fit_polynomial(samples, degree)
    except FitError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    fit_info = {"degree": degree, "residual_rms": curve.residual_rms, "samples": len(samples)}
    return list(curve.coefficients), fit_info


def _parse_wave(block: dict) -> WaveSpec:
    w = "wave"
    lam = convert(_require(block, "wavelength", w), "length", f"{w}.wavelength")
    if not lam > 0:
        raise ConfigError(f"{w}.wavelength: must be positive")
    if ("height" in block) == ("steepness" in block):
        raise ConfigError(f"{w}: give exactly one of 'height' and 'steepness'")
    if "height" in block:
        height = convert(block["height"], "length", f"{w}.height")
    else:
        height = _number(block["steepness"], f"{w}.steepness") * lam
    if height < 0:
        raise ConfigError(f"{w}.height: must be >= 0")
    fspec = _require(block, "force_amplitude", w)
    if fspec == "compute":
        force = None
    else:
        force = convert(fspec, "force", f"{w}.force_amplitude")
        if force < 0:
            raise ConfigError(f"{w}.force_amplitude: must be >= 0")
    mu = block.get("mu", "unity")
    if isinstance(mu, str):
        if mu not in ("unity", "sgisc"):
            raise ConfigError(f"{w}.mu: expected 'unity', 'sgisc' or a number, got {mu!r}")
    else:
        mu = _number(mu, f"{w}.mu")
        if not mu > 0:
            raise ConfigError(f"{w}.mu: must be positive")
    gravity = convert(block.get("gravity", GRAVITY), "acceleration", f"{w}.gravity")
    if not gravity > 0:
        raise ConfigError(f"{w}.gravity: must be positive")
    return WaveSpec(lam, height, force, mu, gravity)


def _parse_hull(block: dict, base: Optional[Path]) -> HullSectionTable:
    w = "hull"
    kwargs = {}
    for key in ("block_coefficient", "midship_coefficient"):
        if block.get(key) is not None:
            kwargs[key] = _number(block[key], f"{w}.{key}")
    try:
        if "stations" in block:
            rows = block["stations"]
            if not isinstance(rows, list) or not all(
                isinstance(r, list) and len(r) == 3 for r in rows
            ):
                raise ConfigError(f"{w}.stations: expected a list of [x, S, d] rows")
            units = block.get("units", {})
            fl = unit_factor(units.get("length", "m"), "length", f"{w}.units.length")
            fa = unit_factor(units.get("area", "m2"), "area", f"{w}.units.area")
            rows = [(_number(x, f"{w}.stations") * fl, _number(s, f"{w}.stations") * fa,
                     _number(d, f"{w}.stations") * fl) for x, s, d in rows]
            return HullSectionTable.from_rows(rows, **kwargs)
        if "stations_file" in block:
            path = _resolve_path(block["stations_file"], base, f"{w}.stations_file")
            return read_station_file(path, **kwargs)
    except ModelError as exc:
        raise ConfigError(f"{w}: {exc}") from None
    raise ConfigError(f"{w}: give 'stations' or 'stations_file'")


def parse_config(doc: dict, base_dir: Optional[Union[str, Path]] = None) -> RunConfig:
    """Validate a config document and convert it to a RunConfig.

    Every referenced file is read here, so a config that parses will not
    fail later on I/O.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    base = Path(base_dir) if base_dir is not None else None
    ship = _parse_ship(_block(doc, "ship"))

    res_block = _block(doc, "resistance")
    r_coeffs, r_fit = _parse_curve(res_block, "resistance", "coefficients", ("speed", "force"), 5, base)
    prop_block = _block(doc, "propeller")
    k_coeffs, k_fit = _parse_curve(prop_block, "propeller", "kt_coefficients", (None, None), 2, base)
    wave = _parse_wave(_block(doc, "wave"))
    hull_block = _block(doc, "hull", required=False)
    hull = _parse_hull(hull_block, base) if hull_block is not None else None

    if wave.compute_force and hull is None:
        raise ConfigError("wave.force_amplitude: 'compute' needs a hull section")
    if wave.mu == "sgisc" and (
        hull is None or hull.block_coefficient is None or hull.midship_coefficient is None
    ):
        raise ConfigError("wave.mu: 'sgisc' needs hull.block_coefficient and hull.midship_coefficient")
    try:
        resistance = PolynomialCurve(tuple(r_coeffs))
        thrust = ThrustModel(tuple(k_coeffs))
    except ModelError as exc:
        raise ConfigError(str(exc)) from None
    fits = {}
    if r_fit:
        fits["resistance"] = r_fit
    if k_fit:
        fits["propeller"] = k_fit

    sections = {}
    for key in ("solver", "oracle", "output"):
        block = _block(doc, key, required=False) or {}
        sections[key] = copy.deepcopy(block)
    crit_keys = set(CaptureCriteria.__dataclass_fields__)
    extra = {"tolerance", "n_range", "positions", "speeds", "speed_range"}
    unknown = set(sections["oracle"]) - crit_keys - extra
    if unknown:
        raise ConfigError(f"oracle: unknown option(s) {sorted(unknown)}")
    return RunConfig(ship, resistance, thrust, wave, hull, fits=fits, **sections)


def find_config(name: Optional[str]) -> Path:
    """Locate a config file, searching SURFRIDE_CONFIG_PATH for bare names."""
    target = name or DEFAULT_CONFIG_NAME
    p = Path(target)
    if p.is_file():
        return p
    if not p.is_absolute():
        for d in os.environ.get(CONFIG_PATH_ENV, "").split(os.pathsep):
            if d and (Path(d) / target).is_file():
                return Path(d) / target
    raise ConfigError(f"config file not found: {target}")


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    """Read, override and parse a JSON config file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    for key, value in (overrides or {}).items():
        set_path(doc, key, value)
    return parse_config(doc, base_dir=path.parent)


def set_path(doc: dict, dotted: str, value: Any) -> None:
    """doc['a']['b'] = value for dotted key 'a.b', creating objects as needed."""
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{dotted}: cannot override inside a non-object")
    node[keys[-1]] = value


__all__ = [
    "CONFIG_PATH_ENV",
    "ConfigError",
    "RunConfig",
    "WaveSpec",
    "convert",
    "find_config",
    "load_config",
    "parse_config",
    "read_samples",
    "set_path",
]
