"""Melnikov estimate of the surf-riding threshold propeller rate.

Along the unperturbed heteroclinic orbit of y'' + sin y = 0 the ship speed is

    u(y) = c_w - 2 s cos(y/2),    s = sqrt(f / (k (m + m_x))),

for y in (-pi, pi). The threshold rate n_cr balances the orbit averages of
effective thrust and calm-water resistance:

    E[T_e(u; n)] = E[R(u)],    E[g] = 1/(2 pi) * integral of g(u(y)) dy.

Both sides are polynomials in u, so everything reduces to the speed moments
E[u^i], which are closed-form in the orbit integrals
I_j = integral of cos(y/2)^j over [-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Optional

from .core import (
    ModelError,
    PolynomialCurve,
    ShipPropulsion,
    ThrustModel,
    WaveCase,
    effective_thrust,
)

LOWER_THRESHOLD_LABEL = "lower heteroclinic bifurcation (Melnikov estimate)"

_ORBIT_TABLE_SIZE = 13


class NoThresholdError(RuntimeError):
    """The balance equation has no root on the physical branch."""


class NonMonotonicResidualError(NoThresholdError):
    """Orbit-averaged thrust is not increasing in n where it should be."""


def _orbit_table(size: int) -> tuple[float, ...]:
    # Wallis recurrence I_j = I_{j-2} (j-1)/j, exact up to rounding of pi
    table = [2.0 * math.pi, 4.0]
    for j in range(2, size):
        table.append(table[j - 2] * (j - 1) / j)
    return tuple(table)


_ORBIT = _orbit_table(_ORBIT_TABLE_SIZE)


def orbit_moment(j: int) -> float:
    """I_j = 2 sqrt(pi) Gamma((j+1)/2) / Gamma((j+2)/2).

    Equal to the integral of cos(y/2)^j over [-pi, pi]; I_0 = 2 pi, I_1 = 4,
    I_2 = pi. Small j come from an exact half-integer table.
    """
    if j < 0:
        raise ValueError(f"orbit moment index must be >= 0, got {j}")
    if j < _ORBIT_TABLE_SIZE:
        return _ORBIT[j]
    return 2.0 * math.sqrt(math.pi) * math.exp(math.lgamma((j + 1) / 2) - math.lgamma((j + 2) / 2))


def orbit_speed_moment(celerity: float, scale: float, i: int) -> float:
    """E[u^i] for u = c_w - 2 s cos(y/2) by binomial expansion."""
    if i < 0:
        raise ValueError(f"moment order must be >= 0, got {i}")
    total = 0.0
    for j in range(i + 1):
        total += (
            math.comb(i, j) * celerity ** (i - j) * scale**j * (-2.0) ** j * orbit_moment(j)
        )
    return total / (2.0 * math.pi)


@dataclass(frozen=True)
class MelnikovProblem:
    """Fully assembled balance equation for one ship in one wave."""

    ship: ShipPropulsion
    wave: WaveCase
    resistance: PolynomialCurve
    thrust: ThrustModel

    def __post_init__(self):
        if not self.wave.force_amplitude > 0:
            raise ModelError("surge force amplitude f must be positive")

    @property
    def force(self) -> float:
        return self.wave.force_amplitude

    @property
    def celerity(self) -> float:
        return self.wave.celerity

    @cached_property
    def scale(self) -> float:
        """s = sqrt(f / (k (m + m_x))), the orbit speed amplitude / 2 (m/s)."""
        return math.sqrt(self.force / (self.wave.wave_number * self.ship.virtual_mass))

    @cached_property
    def moments(self) -> tuple[float, ...]:
        order = max(self.resistance.degree, self.thrust.degree, 2)
        return tuple(orbit_speed_moment(self.celerity, self.scale, i) for i in range(order + 1))

    @cached_property
    def mean_resistance(self) -> float:
        """E[R(u)] over the orbit (N)."""
        return sum(r * self.moments[i] for i, r in enumerate(self.resistance.coefficients))

    @cached_property
    def thrust_terms(self) -> tuple[float, ...]:
        """a_i with T_e = sum a_i n^(2-i) u^i (tau_0, tau_1, tau_2 for i <= 2)."""
        return tuple(self.thrust.coefficient(i, self.ship) for i in range(self.thrust.degree + 1))

    def mean_thrust(self, n: float) -> float:
        """E[T_e(u; n)] over the orbit (N)."""
        if n == 0 and self.thrust.degree > 2:
            raise ModelError("K_T of degree > 2 is singular at n = 0")
        return sum(a * n ** (2 - i) * self.moments[i] for i, a in enumerate(self.thrust_terms))

    def mean_thrust_slope(self, n: float) -> float:
        """d E[T_e] / dn."""
        return sum(
            (2 - i) * a * n ** (1 - i) * self.moments[i]
            for i, a in enumerate(self.thrust_terms)
            if i != 2
        )


def speed_moment(problem: MelnikovProblem, i: int) -> float:
    """E[u^i] along the heteroclinic orbit, (m/s)^i."""
    if i < len(problem.moments):
        return problem.moments[i]
    return orbit_speed_moment(problem.celerity, problem.scale, i)


def work_balance(problem: MelnikovProblem, n: float) -> float:
    """E[T_e(u; n)] - E[R(u)] in newtons; zero at the threshold."""
    return problem.mean_thrust(n) - problem.mean_resistance


def melnikov_residual(problem: MelnikovProblem, n: float) -> float:
    """Nondimensional Melnikov balance 2 pi (E[T_e] - E[R]) / f.

    Positive when thrust work along the orbit exceeds resistance work. Any
    real n is accepted; negative rates are only meaningful as diagnostics.
    """
    return 2.0 * math.pi * work_balance(problem, n) / problem.force


def resistance_thrust_coefficient(problem: MelnikovProblem, i: int, n: float) -> float:
    """c_i(n) = r_i - kappa_i (1-t_p)(1-w_p)^i rho D^(4-i) n^(2-i)."""
    r = problem.resistance.coefficients
    ri = r[i] if i < len(r) else 0.0
    a = problem.thrust_terms[i] if i < len(problem.thrust_terms) else 0.0
    return ri - (a * n ** (2 - i) if a else 0.0)


def melnikov_residual_cij(problem: MelnikovProblem, n: float) -> float:
    """The same balance assembled as a double sum over C_ij (-2)^j I_j.

    Left side 2 pi (T_e(c_w; n) - R(c_w)) / f minus
    sum_{i>=1} sum_{j=1..i} C_ij (-2)^j I_j with
    C_ij = c_i(n) binom(i, j) s^j c_w^(i-j) / f. The j = 0 terms of the
    binomial expansion are exactly T_e(c_w) - R(c_w).
    """
    f, cw, s = problem.force, problem.celerity, problem.scale
    order = max(problem.resistance.degree, problem.thrust.degree)
    te = effective_thrust(problem.thrust, problem.ship, cw, n, allow_negative=True)
    lhs = 2.0 * math.pi * (te - problem.resistance(cw)) / f
    rhs = 0.0
    for i in range(1, order + 1):
        ci = resistance_thrust_coefficient(problem, i, n)
        if ci == 0.0:
            continue
        for j in range(1, i + 1):
            cij = ci * math.comb(i, j) * s**j * cw ** (i - j) / f
            rhs += cij * (-2.0) ** j * orbit_moment(j)
    return lhs - rhs


def melnikov_residual_quadratic_kt(problem: MelnikovProblem, n: float) -> float:
    """Balance for quadratic K_T written with tau_1, tau_2 split out.

    The i = 1 term collapses to 8 (tau_1 n - r_1) / sqrt(f k (m + m_x)); the
    i = 2 term uses c_2 = r_2 - tau_2 with binom(2, j) and c_w^(2-j); the
    remaining i >= 3 terms carry the resistance alone.
    """
    if problem.thrust.degree > 2:
        raise ModelError("quadratic-K_T assembly needs K_T of degree <= 2")
    f, cw = problem.force, problem.celerity
    k, mm = problem.wave.wave_number, problem.ship.virtual_mass
    tau0, tau1, tau2 = problem.thrust.taus(problem.ship)
    r = list(problem.resistance.coefficients) + [0.0, 0.0, 0.0]

    te_cw = tau0 * n * n + tau1 * n * cw + tau2 * cw * cw
    lhs = 2.0 * math.pi * (te_cw - problem.resistance(cw)) / f

    rhs = 8.0 * (tau1 * n - r[1]) / math.sqrt(f * k * mm)
    for j in (1, 2):
        rhs += (
            (r[2] - tau2)
            * (fk_power(f, k, mm, j) / (f * k**j))
            * math.comb(2, j)
            * cw ** (2 - j)
            * (-2.0) ** j
            * orbit_moment(j)
        )
    for i in range(3, problem.resistance.degree + 1):
        for j in range(1, i + 1):
            rhs += (
                r[i]
                * (fk_power(f, k, mm, j) / (f * k**j))
                * math.comb(i, j)
                * cw ** (i - j)
                * (-2.0) ** j
                * orbit_moment(j)
            )
    return lhs - rhs


def fk_power(f: float, k: float, virtual_mass: float, j: int) -> float:
    """(f k)^(j/2) / (m + m_x)^(j/2)."""
    return (f * k / virtual_mass) ** (j / 2)


@dataclass(frozen=True)
class UniquenessCertificate:
    """Conditions under which the positive threshold is the unique one.

    Attributes:
        rtcond: E[R(u)] > tau_2 E[u^2]; the quadratic then has one positive
            and one negative root
        mean_resistance: E[R(u)] (N)
        tau2_mean_u2: tau_2 E[u^2] (N), None for non-quadratic K_T
        u_positive: f < (m + m_x) g / 4, i.e. u > 0 along the whole orbit
        mean_speed_positive: f < (pi^2/16)(m + m_x) g, i.e. E[u] > 0
        min_orbit_speed: c_w - 2 s (m/s)
        mean_speed: E[u] (m/s)
        force: f (N)
        u_positive_bound: (m + m_x) g / 4 (N)
        mean_speed_bound: (pi^2/16)(m + m_x) g (N)
    """

    rtcond: Optional[bool]
    mean_resistance: float
    tau2_mean_u2: Optional[float]
    u_positive: bool
    mean_speed_positive: bool
    min_orbit_speed: float
    mean_speed: float
    force: float
    u_positive_bound: float
    mean_speed_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def force_bounds(ship: ShipPropulsion, gravity: float) -> tuple[float, float]:
    """(f bound for u > 0 on the orbit, f bound for E[u] > 0)."""
    weight = ship.virtual_mass * gravity
    return 0.25 * weight, (math.pi**2 / 16.0) * weight


def uniqueness_certificate(problem: MelnikovProblem) -> UniquenessCertificate:
    """Evaluate the root-sign condition and the two force bounds."""
    u_bound, mean_bound = force_bounds(problem.ship, problem.wave.gravity)
    f = problem.force
    rtcond = tau2_eu2 = None
    if problem.thrust.degree <= 2:
        tau2 = problem.thrust.coefficient(2, problem.ship)
        tau2_eu2 = tau2 * problem.moments[2]
        rtcond = problem.mean_resistance > tau2_eu2
    return UniquenessCertificate(
        rtcond=rtcond,
        mean_resistance=problem.mean_resistance,
        tau2_mean_u2=tau2_eu2,
        u_positive=f < u_bound,
        mean_speed_positive=f < mean_bound,
        min_orbit_speed=problem.celerity - 2.0 * problem.scale,
        mean_speed=problem.moments[1],
        force=f,
        u_positive_bound=u_bound,
        mean_speed_bound=mean_bound,
    )


@dataclass
class ThresholdReport:
    """Result of a threshold solve with every intermediate quantity.

    ``n_cr`` is the physical (positive) threshold rate or None. The negative
    quadratic root, when present, is a diagnostic only: it would mean the
    propeller turning astern while the ship moves ahead.
    """

    n_cr: Optional[float]
    method: str
    rtcond_satisfied: Optional[bool]
    residual: Optional[float]
    n_cr_negative: Optional[float] = None
    discriminant: Optional[float] = None
    taus: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mean_speed: float = 0.0
    mean_speed_sq: float = 0.0
    mean_resistance: float = 0.0
    celerity: float = 0.0
    orbit_scale: float = 0.0
    force: float = 0.0
    label: str = LOWER_THRESHOLD_LABEL
    message: str = ""
    iterations: int = 0
    bracket: Optional[tuple[float, float]] = None
    certificate: Optional[UniquenessCertificate] = None
    validity: Optional[object] = None
    extra: dict = field(default_factory=dict)

    @property
    def has_threshold(self) -> bool:
        return self.n_cr is not None

    def to_dict(self) -> dict:
        out = {
            "n_cr": self.n_cr,
            "n_cr_rpm": None if self.n_cr is None else 60.0 * self.n_cr,
            "label": self.label,
            "method": self.method,
            "rtcond_satisfied": self.rtcond_satisfied,
            "residual": self.residual,
            "n_cr_negative": self.n_cr_negative,
            "n_cr_negative_physical": False,
            "discriminant": self.discriminant,
            "tau": list(self.taus),
            "mean_speed": self.mean_speed,
            "mean_speed_sq": self.mean_speed_sq,
            "mean_resistance": self.mean_resistance,
            "celerity": self.celerity,
            "orbit_scale": self.orbit_scale,
            "force_amplitude": self.force,
            "iterations": self.iterations,
            "bracket": None if self.bracket is None else list(self.bracket),
            "message": self.message,
        }
        if self.certificate is not None:
            out["uniqueness"] = self.certificate.to_dict()
        if self.validity is not None:
            out["validity"] = self.validity.to_dict()
        out.update(self.extra)
        return out


def _report_base(problem: MelnikovProblem, method: str) -> ThresholdReport:
    cert = uniqueness_certificate(problem)
    return ThresholdReport(
        n_cr=None,
        method=method,
        rtcond_satisfied=cert.rtcond,
        residual=None,
        taus=problem.thrust.taus(problem.ship),
        mean_speed=problem.moments[1],
        mean_speed_sq=problem.moments[2],
        mean_resistance=problem.mean_resistance,
        celerity=problem.celerity,
        orbit_scale=problem.scale,
        force=problem.force,
        certificate=cert,
    )


def solve_threshold_quadratic(problem: MelnikovProblem) -> ThresholdReport:
    """Closed-form threshold for quadratic K_T.

    Solves tau_0 n^2 + tau_1 E[u] n + (tau_2 E[u^2] - E[R]) = 0. When
    E[R] > tau_2 E[u^2] the constant term is negative, the roots straddle
    zero and the positive one is the threshold. Otherwise no root is
    reported as physical and ``message`` says why.
    """
    problem.thrust.check_quadratic_signs()
    tau0, tau1, tau2 = problem.thrust.taus(problem.ship)
    if not tau0 > 0:
        raise ModelError(f"tau_0 = {tau0:g} must be positive")
    report = _report_base(problem, "closed-form")

    a = tau0
    b = tau1 * problem.moments[1]
    c = tau2 * problem.moments[2] - problem.mean_resistance
    disc = b * b - 4.0 * a * c
    report.discriminant = disc

    if not report.rtcond_satisfied:
        report.message = (
            "E[R(u)] <= tau_2 E[u^2]: the quadratic has no root pair of opposite "
            "sign, so no unique physical threshold exists"
        )
        if disc >= 0:
            q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
            roots = sorted(r for r in (q / a, c / q if q else q / a))
            report.extra["roots"] = roots
        return report

    # c < 0 here, so q != 0 and the two roots have opposite signs
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1, r2 = q / a, c / q
    report.n_cr, report.n_cr_negative = max(r1, r2), min(r1, r2)
    report.residual = melnikov_residual(problem, report.n_cr)
    return report


def _physical_lower_bound(problem: MelnikovProblem) -> float:
    if problem.thrust.degree <= 2:
        tau0, tau1, _ = problem.thrust.taus(problem.ship)
        if tau0 > 0:
            return max(0.0, -tau1 * problem.moments[1] / (2.0 * tau0))
        return 0.0
    return 0.0


def solve_threshold_general(
    problem: MelnikovProblem,
    bracket_hint: Optional[tuple[float, float]] = None,
    *,
    rtol: float = 1e-12,
    newton_switch: float = 1e-6,
    max_expansions: int = 60,
) -> ThresholdReport:
    """Threshold for any K_T degree by bracketing, bisection and Newton polish.

    The lower end of the bracket is the larger of 0+ and the point where
    the orbit-averaged thrust stops decreasing; above it the residual must
    increase with n. The upper end doubles until the residual turns
    positive. Bisection narrows the bracket to ``newton_switch`` relative
    width, then safeguarded Newton steps finish to ``rtol``.

    Raises:
        NoThresholdError: residual stays negative up to the expansion cap,
            or is already non-negative at the lower end.
        NonMonotonicResidualError: a bisection midpoint falls outside the
            residual values at the bracket ends.
    """
    report = _report_base(problem, "bisection")
    cw, D = problem.celerity, problem.ship.prop_diameter
    n_scale = (1.0 - problem.ship.wake_fraction) * cw / D  # rate at J = 1

    def g(n):
        return melnikov_residual(problem, n)

    lo = _physical_lower_bound(problem)
    if bracket_hint is not None:
        lo = max(lo, float(bracket_hint[0]))
    if lo <= 0.0:
        lo = 1e-9 * n_scale
    g_lo = g(lo)
    if g_lo >= 0.0:
        raise NoThresholdError(
            f"residual is already non-negative ({g_lo:.3g}) at the lower bracket "
            f"n = {lo:.6g}; orbit thrust work should be negative at low n"
        )

    hi = max(2.0 * lo, n_scale if bracket_hint is None else float(bracket_hint[1]))
    g_hi = g(hi)
    expansions = 0
    while g_hi <= 0.0:
        if g_hi < g_lo:
            raise NonMonotonicResidualError(
                f"residual decreased from {g_lo:.6g} at n = {lo:.6g} to {g_hi:.6g} at "
                f"n = {hi:.6g}; orbit thrust must increase with n"
            )
        if expansions >= max_expansions:
            raise NoThresholdError(
                f"thrust never overcomes resistance up to n = {hi:.6g} 1/s"
            )
        lo, g_lo = hi, g_hi
        hi *= 2.0
        g_hi = g(hi)
        expansions += 1

    iterations = 0
    while hi - lo > newton_switch * hi:
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        iterations += 1
        if not g_lo <= g_mid <= g_hi:
            raise NonMonotonicResidualError(
                f"residual {g_mid:.6g} at n = {mid:.6g} lies outside [{g_lo:.6g}, "
                f"{g_hi:.6g}]; orbit thrust must increase with n"
            )
        if g_mid < 0.0:
            lo, g_lo = mid, g_mid
        elif g_mid > 0.0:
            hi, g_hi = mid, g_mid
        else:
            lo = hi = mid
            break

    scale = 2.0 * math.pi / problem.force
    n = 0.5 * (lo + hi)
    for _ in range(50):
        gn = g(n)
        iterations += 1
        if gn == 0.0:
            break
        if gn < 0.0:
            lo = n
        else:
            hi = n
        slope = scale * problem.mean_thrust_slope(n)
        step = gn / slope if slope > 0 else math.inf
        trial = n - step
        if not lo < trial < hi:
            trial = 0.5 * (lo + hi)
        done = abs(trial - n) <= rtol * abs(n) or hi - lo <= rtol * hi
        n = trial
        if done:
            break

    report.n_cr = n
    report.residual = g(n)
    report.iterations = iterations
    report.bracket = (lo, hi)
    return report


def solve_threshold(problem: MelnikovProblem, **kwargs) -> ThresholdReport:
    """Closed form for quadratic K_T, bracketing solver otherwise."""
    if problem.thrust.degree == 2:
        return solve_threshold_quadratic(problem)
    return solve_threshold_general(problem, **kwargs)


def residual_polynomial_roots(problem: MelnikovProblem) -> list[complex]:
    """All roots in n of tau_0 n^2 + tau_1 E[u] n + tau_2 E[u^2] - E[R]."""
    tau0, tau1, tau2 = problem.thrust.taus(problem.ship)
    a, b = tau0, tau1 * problem.moments[1]
    c = tau2 * problem.moments[2] - problem.mean_resistance
    disc = complex(b * b - 4 * a * c)
    return [(-b + disc**0.5) / (2 * a), (-b - disc**0.5) / (2 * a)]


__all__ = [
    "MelnikovProblem",
    "NoThresholdError",
    "NonMonotonicResidualError",
    "ThresholdReport",
    "UniquenessCertificate",
    "force_bounds",
    "melnikov_residual",
    "melnikov_residual_cij",
    "melnikov_residual_quadratic_kt",
    "orbit_moment",
    "orbit_speed_moment",
    "residual_polynomial_roots",
    "solve_threshold",
    "solve_threshold_general",
    "solve_threshold_quadratic",
    "speed_moment",
    "uniqueness_certificate",
    "work_balance",
]
