"""Surf-riding threshold of a ship in following seas by Melnikov's method."""

import json
from importlib import resources

from .config import ConfigError, RunConfig, load_config, parse_config
from .core import (
    FitError,
    ModelError,
    PolynomialCurve,
    ShipPropulsion,
    ThrustModel,
    WaveCase,
    calm_water_resistance,
    effective_thrust,
    fit_polynomial,
)
from .dynamics import (
    CaptureCriteria,
    OracleError,
    SurgeModel,
    SurgeState,
    classify_capture,
    find_equilibria,
    oracle_threshold,
    simulate,
    standard_grid,
)
from .hydro import (
    HullSectionTable,
    assess_validity,
    diffraction_mu,
    froude_krylov_amplitude,
    steepness_limits,
)
from .melnikov import (
    MelnikovProblem,
    NoThresholdError,
    ThresholdReport,
    melnikov_residual,
    orbit_moment,
    solve_threshold,
    solve_threshold_general,
    solve_threshold_quadratic,
    speed_moment,
    uniqueness_certificate,
)

__version__ = "0.1.0"


def reference_config_document() -> dict:
    """The synthetic reference ship (quintic R, quadratic K_T, f = 0.05 (m+m_x) g)."""
    text = resources.files(__package__).joinpath("data/reference_ship.json").read_text()
    return json.loads(text)


def reference_config() -> RunConfig:
    return parse_config(reference_config_document())


__all__ = [
    "CaptureCriteria",
    "ConfigError",
    "FitError",
    "HullSectionTable",
    "MelnikovProblem",
    "ModelError",
    "NoThresholdError",
    "OracleError",
    "PolynomialCurve",
    "RunConfig",
    "ShipPropulsion",
    "SurgeModel",
    "SurgeState",
    "ThresholdReport",
    "ThrustModel",
    "WaveCase",
    "__version__",
    "assess_validity",
    "calm_water_resistance",
    "classify_capture",
    "diffraction_mu",
    "effective_thrust",
    "find_equilibria",
    "fit_polynomial",
    "froude_krylov_amplitude",
    "load_config",
    "melnikov_residual",
    "oracle_threshold",
    "orbit_moment",
    "parse_config",
    "reference_config",
    "reference_config_document",
    "simulate",
    "solve_threshold",
    "solve_threshold_general",
    "solve_threshold_quadratic",
    "speed_moment",
    "standard_grid",
    "steepness_limits",
    "uniqueness_certificate",
]
