import math

import numpy as np
import pytest

from surfride import reference_config
from surfride.core import PolynomialCurve, ShipPropulsion, ThrustModel, WaveCase
from surfride.melnikov import MelnikovProblem


def random_problem(rng: np.random.Generator, kt_degree: int = 2) -> MelnikovProblem:
    """A physically plausible ship/wave/curve set.

    Resistance coefficients are non-negative and f stays below (m+m_x)g/4,
    so u > 0 on the orbit and E[R] > 0 > tau_2 E[u^2].
    """
    mass = 10 ** rng.uniform(5, 7)
    ship = ShipPropulsion.with_estimated_added_mass(
        mass,
        wake_fraction=rng.uniform(0.0, 0.35),
        thrust_deduction=rng.uniform(0.05, 0.3),
        prop_diameter=rng.uniform(1.0, 8.0),
    )
    lam = rng.uniform(30.0, 300.0)
    weight = ship.virtual_mass * 9.81
    wave = WaveCase(lam, lam / 20, rng.uniform(0.005, 0.2) * weight)
    cw = wave.celerity
    scale = 0.01 * mass * 9.81
    res = [0.0] + [rng.uniform(0.0, 1.0) * scale / cw**i for i in range(1, 6)]
    kappa = [rng.uniform(0.2, 0.6), rng.uniform(-0.5, 0.1), rng.uniform(-0.3, -0.01)]
    if kt_degree == 3:
        kappa.append(rng.uniform(-0.05, 0.0) or -0.01)
    return MelnikovProblem(ship, wave, PolynomialCurve(tuple(res)), ThrustModel(tuple(kappa)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ref_config():
    return reference_config()


@pytest.fixture
def ref_problem(ref_config):
    wave, _ = ref_config.resolve_wave()
    return MelnikovProblem(ref_config.ship, wave, ref_config.resistance, ref_config.thrust)


def orbit_speed(problem, y):
    return problem.celerity - 2.0 * problem.scale * np.cos(y / 2.0)


def quad_mean(fun):
    from scipy.integrate import quad

    val, _ = quad(fun, -math.pi, math.pi, epsabs=0, epsrel=1e-13, limit=200)
    return val / (2.0 * math.pi)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
