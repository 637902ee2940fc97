"""Ship, propulsion and wave models used by the surf-riding analysis.

Everything here is strict SI: kg, m, s, N, and propeller rate in rev/s.
Polynomial coefficients are stored in ascending order, ``c[i]`` multiplies
``x**i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

GRAVITY = 9.81
SEA_WATER_DENSITY = 1025.0

# Added mass in surge is roughly a tenth of the ship mass.
ADDED_MASS_RATIO = 0.1


class ModelError(ValueError):
    """A model invariant is violated (bad ship constants, bad K_T signs...)."""


class FitError(ValueError):
    """Least-squares fit could not be carried out."""


@dataclass(frozen=True)
class ShipPropulsion:
    """Mass and propulsion constants of a ship.

    Attributes:
        mass: ship mass m (kg)
        added_mass: surge added mass m_x (kg)
        wake_fraction: effective wake fraction w_p
        thrust_deduction: thrust deduction t_p
        prop_diameter: propeller diameter D (m)
        water_density: rho (kg/m^3)
        added_mass_estimated: True when m_x came from the 0.1*m heuristic
    """

    mass: float
    added_mass: float
    wake_fraction: float
    thrust_deduction: float
    prop_diameter: float
    water_density: float = SEA_WATER_DENSITY
    added_mass_estimated: bool = False

    def __post_init__(self):
        if not self.mass > 0:
            raise ModelError(f"mass must be positive, got {self.mass}")
        if not self.added_mass >= 0:
            raise ModelError(f"added_mass must be >= 0, got {self.added_mass}")
        if not self.prop_diameter > 0:
            raise ModelError(f"prop_diameter must be positive, got {self.prop_diameter}")
        if not self.water_density > 0:
            raise ModelError(f"water_density must be positive, got {self.water_density}")
        if not 0 <= self.wake_fraction < 1:
            raise ModelError(f"wake_fraction must lie in [0, 1), got {self.wake_fraction}")
        if not 0 <= self.thrust_deduction < 1:
            raise ModelError(
                f"thrust_deduction must lie in [0, 1), got {self.thrust_deduction}"
            )

    @classmethod
    def with_estimated_added_mass(cls, mass: float, **kwargs) -> "ShipPropulsion":
        """Build a ship whose added mass is taken as 0.1*m."""
        return cls(
            mass=mass,
            added_mass=ADDED_MASS_RATIO * mass,
            added_mass_estimated=True,
            **kwargs,
        )

    @property
    def virtual_mass(self) -> float:
        """m + m_x (kg)."""
        return self.mass + self.added_mass


@dataclass(frozen=True)
class PolynomialCurve:
    """Polynomial y(x) = sum c_i x^i with optional fit diagnostics."""

    coefficients: tuple[float, ...]
    residual_rms: float = field(default=0.0, compare=False)
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ModelError("a polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) > 1 and coeffs[-1] == 0.0 and not self.degenerate:
            raise ModelError(
                "leading coefficient is zero; trim the coefficients or flag the "
                "curve as degenerate"
            )

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return horner(self.coefficients, x)


def horner(coefficients: Sequence[float], x):
    """Evaluate an ascending-order polynomial; works on scalars and arrays."""
    acc = 0.0 * x
    for c in reversed(coefficients):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class ThrustModel:
    """Open-water K_T(J) polynomial.

    The kappa coefficients are the primary data; the tau coefficients of
    T_e = tau_0 n^2 + tau_1 n u + tau_2 u^2 are derived for a given ship.
    """

    kappa: tuple[float, ...]

    def __post_init__(self):
        kappa = tuple(float(c) for c in self.kappa)
        if not kappa:
            raise ModelError("thrust model needs at least kappa_0")
        object.__setattr__(self, "kappa", kappa)

    @property
    def degree(self) -> int:
        return len(self.kappa) - 1

    @property
    def is_quadratic(self) -> bool:
        return self.degree <= 2

    def check_quadratic_signs(self) -> None:
        """Raise unless kappa_0 > 0 and kappa_2 < 0 (quadratic K_T only).

        K_T must be positive at J = 0 (bollard pull), and the quadratic term
        has to carry the drop-off of K_T at large advance ratio.
        """
        if self.degree != 2:
            raise ModelError(f"expected a quadratic K_T, got degree {self.degree}")
        k0, _, k2 = self.kappa
        if not k0 > 0:
            raise ModelError(
                f"kappa_0 = {k0:g} must be positive: K_T has to be positive at J = 0"
            )
        if not k2 < 0:
            raise ModelError(
                f"kappa_2 = {k2:g} must be negative: it represents the K_T reduction "
                "at large J"
            )

    def coefficient(self, i: int, ship: ShipPropulsion) -> float:
        """kappa_i (1-t_p)(1-w_p)^i rho D^(4-i); multiplies n^(2-i) u^i."""
        if i >= len(self.kappa):
            return 0.0
        return (
            self.kappa[i]
            * (1.0 - ship.thrust_deduction)
            * (1.0 - ship.wake_fraction) ** i
            * ship.water_density
            * ship.prop_diameter ** (4 - i)
        )

    def taus(self, ship: ShipPropulsion) -> tuple[float, float, float]:
        """(tau_0, tau_1, tau_2) for this ship."""
        return tuple(self.coefficient(i, ship) for i in range(3))

    def kt(self, J):
        return horner(self.kappa, J)


@dataclass(frozen=True)
class WaveCase:
    """Regular deep-water wave with its surge-force amplitude."""

    wavelength: float
    height: float
    force_amplitude: float
    gravity: float = GRAVITY
    wave_number: float = field(init=False)
    celerity: float = field(init=False)

    def __post_init__(self):
        if not self.height >= 0:
            raise ModelError(f"wave height must be >= 0, got {self.height}")
        if not self.force_amplitude >= 0:
            raise ModelError(f"force amplitude must be >= 0, got {self.force_amplitude}")
        k, c = wave_kinematics(self.wavelength, self.gravity)
        object.__setattr__(self, "wave_number", k)
        object.__setattr__(self, "celerity", c)

    @property
    def steepness(self) -> float:
        return self.height / self.wavelength

    def with_force(self, force_amplitude: float) -> "WaveCase":
        return WaveCase(self.wavelength, self.height, force_amplitude, self.gravity)


def wave_kinematics(wavelength: float, gravity: float = GRAVITY) -> tuple[float, float]:
    """Wave number and deep-water celerity for a wavelength."""
    if not wavelength > 0:
        raise ModelError(f"wavelength must be positive, got {wavelength}")
    k = 2.0 * math.pi / wavelength
    return k, math.sqrt(gravity / k)


def calm_water_resistance(curve: PolynomialCurve, u):
    """R(u) by Horner evaluation."""
    return curve(u)


def effective_thrust(model: ThrustModel, ship: ShipPropulsion, u, n, *, allow_negative=False):
    """Effective thrust T_e(u; n) = (1 - t_p) rho n^2 D^4 K_T(J).

    Expanded term by term so that n = 0 is well defined for quadratic K_T
    (only tau_2 u^2 survives). Higher-order models carry n^(2-i) with
    negative powers and are rejected at n = 0.

    Args:
        model: K_T polynomial
        ship: propulsion constants
        u: forward speed (m/s), scalar or array
        n: propeller rate (rev/s)
        allow_negative: permit n < 0, used only by root diagnostics
    """
    if n < 0 and not allow_negative:
        raise ModelError(f"negative propeller rate {n} outside the physical model range")
    if n == 0 and model.degree > 2:
        raise ModelError("K_T of degree > 2 is singular at n = 0")
    total = 0.0 * u
    for i in range(len(model.kappa)):
        a = model.coefficient(i, ship)
        if a != 0.0:
            total = total + a * n ** (2 - i) * u**i
    return total


def fit_polynomial(
    samples: Iterable[tuple[float, float]],
    degree: int,
    *,
    max_condition: float = 1e14,
) -> PolynomialCurve:
    """Least-squares polynomial fit through the normal equations.

    The abscissae are scaled to [-1, 1] before forming A^T A, which keeps the
    conditioning sane for quintic resistance curves in m/s. The fit is
    refused if the scaled normal matrix has a condition number above
    ``max_condition``.
    """
    pts = np.asarray(list(samples), dtype=float)
    if degree < 0:
        raise FitError(f"degree must be >= 0, got {degree}")
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise FitError("samples must be (abscissa, ordinate) pairs")
    if len(pts) < degree + 1:
        raise FitError(f"{len(pts)} samples cannot determine a degree-{degree} polynomial")
    x, y = pts[:, 0], pts[:, 1]
    if degree > 0 and np.ptp(x) == 0:
        raise FitError("all abscissae are identical")
    if len(np.unique(x)) < degree + 1:
        raise FitError(f"need {degree + 1} distinct abscissae for degree {degree}")

    centre = 0.5 * (x.max() + x.min())
    half = 0.5 * np.ptp(x) or 1.0
    z = (x - centre) / half
    V = np.vander(z, degree + 1, increasing=True)
    normal = V.T @ V
    cond = np.linalg.cond(normal)
    if not np.isfinite(cond) or cond > max_condition:
        raise FitError(f"normal equations are rank deficient (condition {cond:.3g})")
    b = np.linalg.solve(normal, V.T @ y)

    # back from z = (x - centre)/half to powers of x
    coeffs = np.zeros(degree + 1)
    for j, bj in enumerate(b):
        for i in range(j + 1):
            coeffs[i] += bj * math.comb(j, i) * (-centre) ** (j - i) / half**j
    resid = y - horner(coeffs, x)
    rms = float(np.sqrt(np.mean(resid**2)))
    return PolynomialCurve(tuple(coeffs), residual_rms=rms, degenerate=coeffs[-1] == 0.0)
