"""Surge dynamics in following seas and the capture-grid oracle.

The uncoupled surge equation is

    (m + m_x) xi'' = T_e(u; n) - R(u) - f sin(k xi),    u = c_w + xi'

with xi the position of the centre of gravity relative to a wave trough.
In y = k xi and tau = sqrt(f k / (m + m_x)) t it becomes

    y'' + sin y = (T_e(u; n) - R(u)) / f,    u = c_w + s y',

which is what the oracle integrates. The oracle estimates the lower
heteroclinic bifurcation as the smallest n at which every initial state of
a phase-plane grid ends up surf-riding.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import (
    ModelError,
    PolynomialCurve,
    ShipPropulsion,
    ThrustModel,
    WaveCase,
    effective_thrust,
    horner,
)


class OracleError(RuntimeError):
    """The capture-grid bisection could not locate the threshold."""


@dataclass(frozen=True)
class SurgeState:
    """Position relative to a wave trough and relative surge velocity."""

    xi: float
    xi_dot: float
    celerity: float

    @property
    def u(self) -> float:
        return self.celerity + self.xi_dot


@dataclass(frozen=True)
class EquilibriumPoint:
    """Surf-riding equilibrium (xi_SR, 0) and its linear stability."""

    xi: float
    kind: str
    branch: int
    eigenvalues: tuple[complex, complex]
    residual: float

    @property
    def is_saddle(self) -> bool:
        return self.kind == "saddle"

    @property
    def is_stable(self) -> bool:
        return self.kind == "stable"


@dataclass(frozen=True)
class SurgeModel:
    """Surge equation for fixed ship, wave, curves and propeller rate."""

    ship: ShipPropulsion
    wave: WaveCase
    resistance: PolynomialCurve
    thrust: ThrustModel
    n: float

    @property
    def virtual_mass(self) -> float:
        return self.ship.virtual_mass

    def net_force(self, u):
        """T_e(u; n) - R(u) in newtons."""
        return effective_thrust(self.thrust, self.ship, u, self.n) - self.resistance(u)

    def net_force_slope(self, u: float) -> float:
        """d(T_e - R)/du."""
        dt = sum(
            i * self.thrust.coefficient(i, self.ship) * self.n ** (2 - i) * u ** (i - 1)
            for i in range(1, self.thrust.degree + 1)
        )
        dr = sum(i * r * u ** (i - 1) for i, r in enumerate(self.resistance.coefficients) if i)
        return dt - dr

    def net_force_coefficients(self) -> np.ndarray:
        """Ascending coefficients of T_e - R as a polynomial in u."""
        order = max(self.thrust.degree, self.resistance.degree)
        p = np.zeros(order + 1)
        for i in range(self.thrust.degree + 1):
            a = self.thrust.coefficient(i, self.ship)
            if a:
                p[i] += a * self.n ** (2 - i)
        p[: self.resistance.degree + 1] -= self.resistance.coefficients
        return p

    def derivative(self, xi, xi_dot):
        """(xi', xi'') for scalar or array states."""
        u = self.wave.celerity + xi_dot
        acc = (
            self.net_force(u) - self.wave.force_amplitude * np.sin(self.wave.wave_number * xi)
        ) / self.virtual_mass
        return xi_dot, acc

    def energy(self, xi, xi_dot):
        """Kinetic plus wave potential energy, conserved when T_e = R = 0."""
        f, k = self.wave.force_amplitude, self.wave.wave_number
        return 0.5 * self.virtual_mass * xi_dot**2 - (f / k) * np.cos(k * xi)

    @property
    def time_scale(self) -> float:
        """Seconds per nondimensional time unit, 1 / sqrt(f k / (m + m_x))."""
        f = self.wave.force_amplitude
        if not f > 0:
            raise ModelError("nondimensional time needs f > 0")
        return 1.0 / math.sqrt(f * self.wave.wave_number / self.virtual_mass)

    @property
    def orbit_scale(self) -> float:
        """s = sqrt(f / (k (m + m_x))): relative speed per unit dy/dtau."""
        return math.sqrt(self.wave.force_amplitude / (self.wave.wave_number * self.virtual_mass))


def surge_derivative(
    state: SurgeState,
    ship: ShipPropulsion,
    wave: WaveCase,
    resistance: PolynomialCurve,
    thrust: ThrustModel,
    n: float,
) -> tuple[float, float]:
    """(xi', xi'') of the surge equation at one state."""
    model = SurgeModel(ship, wave, resistance, thrust, n)
    d_xi, d_xi_dot = model.derivative(state.xi, state.xi_dot)
    return float(d_xi), float(d_xi_dot)


def rk4_step(fun: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step for an autonomous system y' = fun(y)."""
    k1 = fun(y)
    k2 = fun(y + 0.5 * dt * k1)
    k3 = fun(y + 0.5 * dt * k2)
    k4 = fun(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate(
    model: SurgeModel,
    state: SurgeState,
    duration: float,
    step: float = 0.01,
) -> np.ndarray:
    """Fixed-step RK4 trajectory.

    ``duration`` and ``step`` are in nondimensional time units. Returns
    rows (t [s], xi [m], xi_dot [m/s], u [m/s]).
    """
    ts = model.time_scale
    dt = step * ts
    n_steps = int(round(duration / step))

    def fun(z):
        d = model.derivative(z[0], z[1])
        return np.array([d[0], d[1]])

    out = np.empty((n_steps + 1, 4))
    z = np.array([state.xi, state.xi_dot], dtype=float)
    cw = model.wave.celerity
    out[0] = (0.0, z[0], z[1], cw + z[1])
    for i in range(1, n_steps + 1):
        z = rk4_step(fun, z, dt)
        out[i] = (i * dt, z[0], z[1], cw + z[1])
    return out


def write_trajectory(path, trajectory: np.ndarray) -> None:
    """Dump a trajectory as whitespace-separated columns."""
    np.savetxt(
        path,
        trajectory,
        header="t[s] xi_G[m] xi_G_dot[m/s] u[m/s]",
        fmt="%.10e",
    )


def _classify_jacobian(eigs: np.ndarray, tol: float = 1e-12) -> str:
    re = eigs.real
    if np.all(np.abs(eigs.imag) <= tol * np.max(np.abs(eigs))) and re[0] * re[1] < 0:
        return "saddle"
    if np.all(re < 0):
        return "stable"
    if np.all(re > 0):
        return "unstable"
    return "center"


def find_equilibria(
    ship: ShipPropulsion,
    wave: WaveCase,
    resistance: PolynomialCurve,
    thrust: ThrustModel,
    n: float,
    branch: int = 0,
) -> list[EquilibriumPoint]:
    """Surf-riding equilibria within one wavelength.

    They exist when |T_e(c_w; n) - R(c_w)| <= f and satisfy
    sin(k xi) = (T_e(c_w; n) - R(c_w)) / f. The arcsin solution and its
    supplement -pi - arcsin(.) are returned, shifted by ``branch`` wavelengths,
    and classified from the eigenvalues of the linearised system.
    """
    model = SurgeModel(ship, wave, resistance, thrust, n)
    f, k, cw = wave.force_amplitude, wave.wave_number, wave.celerity
    if not f > 0:
        return []
    a = model.net_force(cw) / f
    if abs(a) > 1.0:
        return []
    y1 = math.asin(a)
    phases = [y1, -math.pi - y1]
    if a in (1.0, -1.0):
        phases = phases[:1]
    damping = model.net_force_slope(cw) / model.virtual_mass
    points = []
    for y in phases:
        y -= 2.0 * math.pi * branch
        jac = np.array([[0.0, 1.0], [-f * k * math.cos(y) / model.virtual_mass, damping]])
        eigs = np.linalg.eigvals(jac)
        xi = y / k
        _, acc = model.derivative(xi, 0.0)
        points.append(
            EquilibriumPoint(
                xi=xi,
                kind=_classify_jacobian(eigs),
                branch=branch,
                eigenvalues=(complex(eigs[0]), complex(eigs[1])),
                residual=float(acc) * model.virtual_mass / f,
            )
        )
    return points


@dataclass(frozen=True)
class CaptureCriteria:
    """Numerical labelling rules for the capture grid.

    Times are nondimensional. A point is captured once |u - c_w| and the
    distance to the stable equilibrium stay inside their bands for
    ``dwell`` units. It is surging once it has slipped back (or run ahead)
    at least ``min_cycles`` wavelengths and the relative speed at successive
    passes through a fixed wave phase agrees to ``cycle_tol`` * c_w, i.e. it
    has settled on a periodic surging motion.
    """

    speed_band: float = 0.01
    position_band: float = 0.02
    dwell: float = 5.0
    horizon: float = 200.0
    step: float = 0.02
    min_cycles: int = 2
    cycle_tol: float = 1e-7

    def to_dict(self) -> dict:
        return asdict(self)


CAPTURED, SURGING, UNDECIDED = "captured", "surging", "undecided"


@dataclass
class CaptureResult:
    """Labels for one capture-grid run."""

    n: float
    labels: list[str]
    fraction: float
    equilibria: list[EquilibriumPoint]
    steps: int
    decision_times: list[float] = field(default_factory=list)

    @property
    def counts(self) -> dict:
        return {lab: self.labels.count(lab) for lab in (CAPTURED, SURGING, UNDECIDED)}

    @property
    def all_captured(self) -> bool:
        return all(lab == CAPTURED for lab in self.labels)

    def summary(self) -> dict:
        return {"n": self.n, "fraction_captured": self.fraction, **self.counts}


def standard_grid(
    wave: WaveCase,
    positions: int = 16,
    speeds: int = 9,
    speed_range: tuple[float, float] = (-0.8, 0.4),
) -> list[SurgeState]:
    """Phase-plane grid over one wavelength and a band of relative speeds."""
    cw = wave.celerity
    xs = wave.wavelength * np.arange(positions) / positions
    vs = cw * np.linspace(speed_range[0], speed_range[1], speeds)
    return [SurgeState(float(x), float(v), cw) for v in vs for x in xs]


def _wrap(phase):
    return (phase + math.pi) % (2.0 * math.pi) - math.pi


def _section_speed(fun, start, end, edge, dt):
    """Speed where the step start -> end crosses y = edge.

    Cubic Hermite interpolation in time using the vector field at both
    ends; linear interpolation would add O(dt^2) jitter to the section map.
    """
    (y0, v0), (y1, v1) = start, end
    a0 = fun(np.array([y0, v0]))[1]
    a1 = fun(np.array([y1, v1]))[1]

    def basis(s):
        return (2 * s**3 - 3 * s**2 + 1, s**3 - 2 * s**2 + s, -2 * s**3 + 3 * s**2, s**3 - s**2)

    def dbasis(s):
        return (6 * s**2 - 6 * s, 3 * s**2 - 4 * s + 1, -6 * s**2 + 6 * s, 3 * s**2 - 2 * s)

    s = (edge - y0) / (y1 - y0)
    for _ in range(4):
        h = basis(s)
        d = dbasis(s)
        y = h[0] * y0 + h[1] * dt * v0 + h[2] * y1 + h[3] * dt * v1
        dy = d[0] * y0 + d[1] * dt * v0 + d[2] * y1 + d[3] * dt * v1
        if dy == 0:
            break
        s = min(1.0, max(0.0, s - (y - edge) / dy))
    h = basis(s)
    return h[0] * v0 + h[1] * dt * a0 + h[2] * v1 + h[3] * dt * a1


def classify_capture(
    ship: ShipPropulsion,
    wave: WaveCase,
    resistance: PolynomialCurve,
    thrust: ThrustModel,
    n: float,
    grid: Sequence[SurgeState],
    horizon: Optional[float] = None,
    criteria: CaptureCriteria = CaptureCriteria(),
) -> CaptureResult:
    """Integrate every grid state and label it captured, surging or undecided.

    All grid points are advanced together with one vectorised RK4 step in
    nondimensional variables; decided points drop out of the active set.
    """
    if not grid:
        raise ValueError("capture grid is empty")
    horizon = criteria.horizon if horizon is None else horizon
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")

    model = SurgeModel(ship, wave, resistance, thrust, n)
    f, k, cw = wave.force_amplitude, wave.wave_number, wave.celerity
    equilibria = find_equilibria(ship, wave, resistance, thrust, n)
    stable = [e for e in equilibria if e.is_stable]
    count = len(grid)

    if not stable:
        # without a stable equilibrium nothing can settle: the motion keeps cycling
        return CaptureResult(n, [SURGING] * count, 0.0, equilibria, 0, [0.0] * count)

    s = model.orbit_scale
    y_s = stable[0].xi * k
    # T_e - R as a polynomial in v = dy/dtau, scaled by 1/f
    p_u = model.net_force_coefficients()
    p_v = np.zeros_like(p_u)
    for i, pi in enumerate(p_u):
        for j in range(i + 1):
            p_v[j] += pi * math.comb(i, j) * cw ** (i - j) * s**j
    p_v /= f
    coeffs = tuple(p_v)

    y = np.array([g.xi * k for g in grid])
    v = np.array([g.xi_dot / s for g in grid])
    y0 = y.copy()
    labels = np.full(count, UNDECIDED, dtype=object)
    decided_at = np.full(count, np.nan)
    dwell = np.zeros(count)
    last_pass = np.full(count, np.nan)
    passes = np.zeros(count, dtype=int)
    active = np.arange(count)

    speed_band = criteria.speed_band * cw / s
    pos_band = 2.0 * math.pi * criteria.position_band
    cycle_tol = criteria.cycle_tol * cw / s
    dt = criteria.step
    n_steps = int(math.ceil(horizon / dt))

    def fun(z):
        yy, vv = z
        return np.array([vv, horner(coeffs, vv) - np.sin(yy)])

    steps = 0
    for step in range(1, n_steps + 1):
        if active.size == 0:
            break
        z = np.array([y[active], v[active]])
        z_new = rk4_step(fun, z, dt)
        steps += 1
        t = step * dt
        y_old = z[0]
        y_act, v_act = z_new
        y[active], v[active] = y_act, v_act

        inside = (np.abs(_wrap(y_act - y_s)) < pos_band) & (np.abs(v_act) < speed_band)
        dwell[active] = np.where(inside, dwell[active] + dt, 0.0)

        # passes through the stable-equilibrium phase, either direction
        c_old = np.floor((y_old - y_s) / (2.0 * math.pi))
        c_new = np.floor((y_act - y_s) / (2.0 * math.pi))
        for local in np.nonzero(c_new != c_old)[0]:
            idx = active[local]
            edge = y_s + 2.0 * math.pi * max(c_old[local], c_new[local])
            v_sec = _section_speed(
                fun, (y_old[local], z[1][local]), (y_act[local], v_act[local]), edge, dt
            )
            prev = last_pass[idx]
            passes[idx] += 1
            last_pass[idx] = v_sec
            slipped = abs(y_act[local] - y0[idx]) / (2.0 * math.pi)
            if (
                passes[idx] >= criteria.min_cycles
                and slipped >= criteria.min_cycles
                and v_sec * prev > 0
                and abs(v_sec) > speed_band
                and abs(v_sec - prev) < cycle_tol
            ):
                labels[idx] = SURGING
                decided_at[idx] = t

        captured = dwell[active] >= criteria.dwell - 0.5 * dt
        labels[active[captured]] = CAPTURED
        decided_at[active[captured]] = np.where(
            np.isnan(decided_at[active[captured]]), t, decided_at[active[captured]]
        )
        active = np.array([i for i in active if labels[i] == UNDECIDED], dtype=int)

    label_list = [str(lab) for lab in labels]
    fraction = label_list.count(CAPTURED) / count
    return CaptureResult(n, label_list, fraction, equilibria, steps, list(decided_at))


@dataclass
class OracleResult:
    """Capture-grid estimate of the lower surf-riding threshold."""

    n_cr: float
    bracket: tuple[float, float]
    evaluations: list[dict]
    criteria: CaptureCriteria
    grid_size: int
    integrator: str = "rk4-fixed"

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def to_dict(self) -> dict:
        return {
            "n_cr_oracle": self.n_cr,
            "n_cr_oracle_rpm": 60.0 * self.n_cr,
            "bracket": list(self.bracket),
            "bracket_width": self.width,
            "grid_size": self.grid_size,
            "integrator": {
                "method": self.integrator,
                "step": self.criteria.step,
                "horizon": self.criteria.horizon,
                "total_steps": sum(e["steps"] for e in self.evaluations),
                "capture_runs": len(self.evaluations),
            },
            "criteria": self.criteria.to_dict(),
            "evaluations": self.evaluations,
        }


def rate_for_net_force(
    ship: ShipPropulsion,
    wave: WaveCase,
    resistance: PolynomialCurve,
    thrust: ThrustModel,
    level: float,
    n_max: float = 1e4,
) -> float:
    """Smallest positive n with T_e(c_w; n) - R(c_w) = level * f."""
    cw, f = wave.celerity, wave.force_amplitude
    target = level * f + resistance(cw)

    def g(n):
        return effective_thrust(thrust, ship, cw, n) - target

    lo = 1e-9 * (1.0 - ship.wake_fraction) * cw / ship.prop_diameter
    hi = max(2.0 * lo, (1.0 - ship.wake_fraction) * cw / ship.prop_diameter)
    if g(lo) >= 0:
        return lo
    while g(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > n_max:
            raise OracleError(f"thrust at c_w never reaches R(c_w) + {level:g} f")
    return brentq(g, lo, hi, xtol=1e-14, rtol=1e-14)


def oracle_threshold(
    ship: ShipPropulsion,
    wave: WaveCase,
    resistance: PolynomialCurve,
    thrust: ThrustModel,
    n_range: Optional[tuple[float, float]] = None,
    tolerance: Optional[float] = None,
    *,
    grid: Optional[Sequence[SurgeState]] = None,
    criteria: CaptureCriteria = CaptureCriteria(),
    max_expansions: int = 6,
) -> OracleResult:
    """Bisect n between partial capture and capture of the whole grid.

    Without ``n_range`` the search starts below the rate at which the
    calm-water speed equals the celerity, no lower than the rate at which
    surf-riding equilibria first appear (T_e(c_w) - R(c_w) = -f). The bracket is
    widened if its ends do not discriminate. ``tolerance`` is the final
    bracket width in 1/s, by default 1e-4 of the upper end.
    """
    grid = standard_grid(wave) if grid is None else list(grid)
    if len(grid) < 2:
        raise OracleError("the capture grid needs at least two initial states to discriminate")

    evaluations: list[dict] = []

    def all_captured(n: float) -> bool:
        res = classify_capture(ship, wave, resistance, thrust, n, grid, criteria=criteria)
        evaluations.append({**res.summary(), "steps": res.steps})
        counts = res.counts
        if counts[UNDECIDED] and not counts[SURGING]:
            raise OracleError(
                f"{counts[UNDECIDED]} grid states undecided at n = {n:.6g} "
                f"({counts[CAPTURED]} captured); extend the horizon"
            )
        return res.all_captured

    if n_range is None:
        hi = rate_for_net_force(ship, wave, resistance, thrust, 0.0)
        lo = max(rate_for_net_force(ship, wave, resistance, thrust, -0.99), 0.8 * hi)
    else:
        lo, hi = map(float, n_range)
    if not 0 < lo < hi:
        raise OracleError(f"invalid rate range ({lo}, {hi})")

    for _ in range(max_expansions + 1):
        lo_cap = all_captured(lo)
        hi_cap = all_captured(hi)
        if not lo_cap and hi_cap:
            break
        if lo_cap:
            lo *= 0.8
        if not hi_cap:
            hi *= 1.25
    else:
        raise OracleError(
            f"no transition to global capture found in n = [{lo:.6g}, {hi:.6g}]"
        )

    tol = 1e-4 * hi if tolerance is None else tolerance
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if all_captured(mid):
            hi = mid
        else:
            lo = mid
    return OracleResult(0.5 * (lo + hi), (lo, hi), evaluations, criteria, len(grid))


__all__ = [
    "CAPTURED",
    "SURGING",
    "UNDECIDED",
    "CaptureCriteria",
    "CaptureResult",
    "EquilibriumPoint",
    "OracleError",
    "OracleResult",
    "SurgeModel",
    "SurgeState",
    "classify_capture",
    "find_equilibria",
    "oracle_threshold",
    "rate_for_net_force",
    "rk4_step",
    "simulate",
    "standard_grid",
    "surge_derivative",
    "write_trajectory",
]
