"""Wave-induced surge force from hull sections, and wave-case validity.

The surge force amplitude is the Froude-Krylov force of a regular wave on
the submerged sections, with an optional diffraction correction mu:

    f = mu * pi rho g (H / lambda) * sqrt(F_c^2 + F_s^2)
    F_c = int S(x) sin(k x) exp(-k d(x) / 2) dx
    F_s = int S(x) cos(k x) exp(-k d(x) / 2) dx

x is measured along the ship from midship.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .core import SEA_WATER_DENSITY, ModelError, ShipPropulsion, WaveCase

# virtual-mass ratio (m + m_x)/m implied by m_x = 0.1 m
DEFAULT_VIRTUAL_MASS_RATIO = 1.1

MuMode = Union[str, float]


@dataclass(frozen=True)
class HullSectionTable:
    """Submerged sectional areas along the hull.

    Attributes:
        x: station positions from midship, strictly increasing (m)
        area: submerged sectional area S at each station (m^2)
        draught: local draught d at each station (m)
        block_coefficient: C_b
        midship_coefficient: C_m
    """

    x: tuple[float, ...]
    area: tuple[float, ...]
    draught: tuple[float, ...]
    block_coefficient: Optional[float] = None
    midship_coefficient: Optional[float] = None

    def __post_init__(self):
        for name in ("x", "area", "draught"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not self.x:
            raise ModelError("hull section table has no stations")
        if not len(self.x) == len(self.area) == len(self.draught):
            raise ModelError("x, area and draught columns differ in length")
        if len(self.x) < 2:
            raise ModelError("at least two stations are needed to integrate along the hull")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ModelError("station positions must be strictly increasing")
        if min(self.area) < 0 or min(self.draught) < 0:
            raise ModelError("sectional areas and draughts must be non-negative")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[float]], **kwargs) -> "HullSectionTable":
        rows = [tuple(map(float, r)) for r in rows]
        if not rows:
            raise ModelError("hull section table has no stations")
        x, s, d = zip(*rows)
        return cls(x, s, d, **kwargs)

    @property
    def length(self) -> float:
        return self.x[-1] - self.x[0]

    def volume(self) -> float:
        """Displaced volume int S dx (m^3), trapezoidal."""
        return float(np.trapezoid(self.area, self.x))

    def refined(self) -> "HullSectionTable":
        """Same hull with a midpoint station inserted in every interval."""
        x = np.asarray(self.x)
        xm = 0.5 * (x[1:] + x[:-1])
        xs = np.empty(2 * len(x) - 1)
        xs[0::2], xs[1::2] = x, xm
        return HullSectionTable(
            tuple(xs),
            tuple(np.interp(xs, x, self.area)),
            tuple(np.interp(xs, x, self.draught)),
            self.block_coefficient,
            self.midship_coefficient,
        )


def read_station_file(path, **kwargs) -> HullSectionTable:
    """Read whitespace or comma separated x, S, d columns.

    Lines starting with '#' are comments; a first non-numeric line is taken
    as the header. Values must be in m and m^2.
    """
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
                    raise ModelError(f"{path}:{lineno}: non-numeric station row {line!r}")
                continue
            if len(values) != 3:
                raise ModelError(f"{path}:{lineno}: expected 3 columns (x, S, d), got {len(values)}")
            rows.append(values)
    return HullSectionTable.from_rows(rows, **kwargs)


def _segment_weights(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """A = int_0^1 (1-t) e^{i theta t} dt and B = int_0^1 t e^{i theta t} dt."""
    theta = np.asarray(theta, dtype=float)
    A = np.empty(theta.shape, dtype=complex)
    B = np.empty(theta.shape, dtype=complex)
    small = np.abs(theta) < 0.05
    if np.any(small):
        it = 1j * theta[small]
        a = np.zeros(it.shape, dtype=complex)
        b = np.zeros(it.shape, dtype=complex)
        term = np.ones(it.shape, dtype=complex)
        for m in range(10):
            a += term / ((m + 1) * (m + 2))
            b += term / (m + 2)
            term = term * it / (m + 1)
        A[small], B[small] = a, b
    big = ~small
    if np.any(big):
        th = theta[big]
        e = np.exp(1j * th)
        b = e / (1j * th) + (e - 1.0) / th**2
        A[big] = (e - 1.0) / (1j * th) - b
        B[big] = b
    return A, B


def section_integrals(
    hull: HullSectionTable, wave_number: float, quadrature: str = "filon"
) -> tuple[float, float]:
    """(F_c, F_s) over the stations.

    ``filon`` treats S exp(-k d / 2) as linear between stations and
    integrates the sin/cos factor exactly, which is exact for prismatic
    segments whatever the station spacing. ``trapezoid`` is the plain
    composite rule on the full integrand.
    """
    x = np.asarray(hull.x)
    amp = np.asarray(hull.area) * np.exp(-0.5 * wave_number * np.asarray(hull.draught))
    if quadrature == "trapezoid":
        fc = np.trapezoid(amp * np.sin(wave_number * x), x)
        fs = np.trapezoid(amp * np.cos(wave_number * x), x)
        return float(fc), float(fs)
    if quadrature != "filon":
        raise ValueError(f"unknown quadrature {quadrature!r}")
    h = np.diff(x)
    A, B = _segment_weights(wave_number * h)
    z = np.sum(np.exp(1j * wave_number * x[:-1]) * h * (amp[:-1] * A + amp[1:] * B))
    # z = int amp e^{ikx} dx = F_s + i F_c
    return float(z.imag), float(z.real)


def diffraction_mu(block_coefficient: float, midship_coefficient: float) -> float:
    """Empirical diffraction correction of the surge force.

    Piecewise in C_m: 1.46 C_b - 0.05 below 0.86, (5.76 - 5.00 C_m) C_b - 0.05
    from 0.86 to 0.94, 1.06 C_b - 0.05 above 0.94; continuous at both joints.
    """
    cb, cm = block_coefficient, midship_coefficient
    if not 0 < cb <= 1:
        raise ModelError(f"block coefficient must lie in (0, 1], got {cb}")
    if not 0 < cm <= 1:
        raise ModelError(f"midship coefficient must lie in (0, 1], got {cm}")
    if cm < 0.86:
        return 1.46 * cb - 0.05
    if cm <= 0.94:
        return (5.76 - 5.00 * cm) * cb - 0.05
    return 1.06 * cb - 0.05


def resolve_mu(mode: MuMode, hull: Optional[HullSectionTable] = None) -> float:
    """mu from 'unity', 'sgisc' (empirical formula) or an explicit number."""
    if isinstance(mode, str):
        if mode == "unity":
            return 1.0
        if mode == "sgisc":
            if hull is None or hull.block_coefficient is None or hull.midship_coefficient is None:
                raise ModelError("mu = 'sgisc' needs the hull block and midship coefficients")
            return diffraction_mu(hull.block_coefficient, hull.midship_coefficient)
        raise ModelError(f"unknown mu mode {mode!r}; use 'unity', 'sgisc' or a number")
    mu = float(mode)
    if not mu > 0:
        raise ModelError(f"mu must be positive, got {mu}")
    return mu


@dataclass(frozen=True)
class FroudeKrylovResult:
    """Surge force amplitude with its ingredients and hull diagnostics."""

    force: float
    f_c: float
    f_s: float
    mu: float
    displacement_mass: float
    mass_mismatch: Optional[float]
    mass_consistent: Optional[bool]
    refinement_change: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def froude_krylov_amplitude(
    hull: HullSectionTable,
    wave: WaveCase,
    mu_mode: MuMode = "unity",
    *,
    water_density: float = SEA_WATER_DENSITY,
    ship_mass: Optional[float] = None,
    mass_tolerance: float = 0.02,
    quadrature: str = "filon",
    refinement_check: bool = False,
) -> FroudeKrylovResult:
    """Froude-Krylov surge force amplitude f of a regular wave.

    A displaced mass rho * int S dx differing from ``ship_mass`` by more
    than ``mass_tolerance`` is reported (``mass_consistent = False``), not
    raised; published section tables are often a few percent off.
    """
    k = wave.wave_number
    mu = resolve_mu(mu_mode, hull)
    fc, fs = section_integrals(hull, k, quadrature)
    scale = mu * math.pi * water_density * wave.gravity * wave.steepness
    force = scale * math.hypot(fc, fs)

    displaced = water_density * hull.volume()
    mismatch = consistent = None
    if ship_mass is not None:
        mismatch = (displaced - ship_mass) / ship_mass
        consistent = abs(mismatch) <= mass_tolerance

    change = None
    if refinement_check:
        fc2, fs2 = section_integrals(hull.refined(), k, quadrature)
        f2 = scale * math.hypot(fc2, fs2)
        change = abs(f2 - force) / force if force else 0.0
    return FroudeKrylovResult(force, fc, fs, mu, displaced, mismatch, consistent, change)


def steepness_limits(
    mu: float, virtual_mass_ratio: float = DEFAULT_VIRTUAL_MASS_RATIO
) -> tuple[float, float]:
    """Wave steepness below which the two force bounds are guaranteed.

    Bounding the section integrals by int S dx gives f < mu pi (H/lambda) m g;
    with m + m_x = r m this keeps f under (m + m_x) g / 4 when
    mu (4 pi / r) H/lambda < 1, and under (pi^2/16)(m + m_x) g when
    mu (16 / (r pi)) H/lambda < 1.
    """
    r = virtual_mass_ratio
    return r / (4.0 * math.pi * mu), r * math.pi / (16.0 * mu)


@dataclass(frozen=True)
class ValidityAssessment:
    """Force and steepness bounds for one wave case.

    ``u_positive_bound``: f < (m + m_x) g / 4, so u > 0 along the whole
    heteroclinic orbit and the mean resistance is surely positive.
    ``mean_speed_bound``: f < (pi^2/16)(m + m_x) g, i.e. E[u] > 0; this is
    also ``rtcond_proxy``, the practical stand-in for a positive mean
    resistance. The ``steepness_*`` flags are the hull-free versions of the
    same bounds.
    """

    steepness: float
    mu: float
    force: float
    u_positive_force_limit: float
    mean_speed_force_limit: float
    u_positive_bound: bool
    mean_speed_bound: bool
    rtcond_proxy: bool
    steepness_u_positive_limit: float
    steepness_mean_speed_limit: float
    steepness_u_positive: bool
    steepness_mean_speed: bool
    added_mass_estimated: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["steepness_u_positive_limit_inverse"] = 1.0 / self.steepness_u_positive_limit
        out["steepness_mean_speed_limit_inverse"] = 1.0 / self.steepness_mean_speed_limit
        return out


def assess_validity(
    ship: ShipPropulsion,
    wave: WaveCase,
    mu: float,
    virtual_mass_ratio: float = DEFAULT_VIRTUAL_MASS_RATIO,
) -> ValidityAssessment:
    """Evaluate both force bounds and their steepness proxies."""
    weight = ship.virtual_mass * wave.gravity
    u_lim, mean_lim = 0.25 * weight, (math.pi**2 / 16.0) * weight
    f = wave.force_amplitude
    s_u, s_mean = steepness_limits(mu, virtual_mass_ratio)
    steep = wave.steepness
    return ValidityAssessment(
        steepness=steep,
        mu=mu,
        force=f,
        u_positive_force_limit=u_lim,
        mean_speed_force_limit=mean_lim,
        u_positive_bound=f < u_lim,
        mean_speed_bound=f < mean_lim,
        rtcond_proxy=f < mean_lim,
        steepness_u_positive_limit=s_u,
        steepness_mean_speed_limit=s_mean,
        steepness_u_positive=steep < s_u,
        steepness_mean_speed=steep < s_mean,
        added_mass_estimated=ship.added_mass_estimated,
    )


__all__ = [
    "DEFAULT_VIRTUAL_MASS_RATIO",
    "FroudeKrylovResult",
    "HullSectionTable",
    "ValidityAssessment",
    "assess_validity",
    "diffraction_mu",
    "froude_krylov_amplitude",
    "read_station_file",
    "resolve_mu",
    "section_integrals",
    "steepness_limits",
]
