import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfride.core import ModelError, PolynomialCurve, ThrustModel, effective_thrust
from surfride.melnikov import (
    MelnikovProblem,
    NoThresholdError,
    force_bounds,
    melnikov_residual,
    melnikov_residual_cij,
    melnikov_residual_quadratic_kt,
    orbit_moment,
    orbit_speed_moment,
    residual_polynomial_roots,
    solve_threshold,
    solve_threshold_general,
    solve_threshold_quadratic,
    speed_moment,
    uniqueness_certificate,
    work_balance,
)

from conftest import orbit_speed, quad_mean, random_problem


@pytest.mark.parametrize("j", range(0, 18))
def test_orbit_moment_against_quadrature(j):
    from scipy.integrate import quad

    val, _ = quad(lambda y: math.cos(y / 2) ** j, -math.pi, math.pi, epsrel=1e-14)
    assert orbit_moment(j) == pytest.approx(val, rel=1e-12)


def test_orbit_moment_small_values():
    assert orbit_moment(0) == pytest.approx(2 * math.pi, rel=1e-15)
    assert orbit_moment(1) == 4.0
    assert orbit_moment(2) == pytest.approx(math.pi, rel=1e-15)
    with pytest.raises(ValueError):
        orbit_moment(-1)


def test_table_and_gamma_branch_agree():
    j = 12
    gamma = 2 * math.sqrt(math.pi) * math.gamma((j + 1) / 2) / math.gamma((j + 2) / 2)
    assert orbit_moment(j) == pytest.approx(gamma, rel=1e-13)


@pytest.mark.parametrize("i", range(0, 7))
def test_speed_moments_against_quadrature(ref_problem, i):
    expected = quad_mean(lambda y: orbit_speed(ref_problem, y) ** i)
    assert speed_moment(ref_problem, i) == pytest.approx(expected, rel=1e-11)


def test_residual_against_quadrature_cubic_kt(rng):
    p = random_problem(rng, kt_degree=3)
    n = 2.0
    te = lambda y: effective_thrust(p.thrust, p.ship, orbit_speed(p, y), n)
    expected = quad_mean(lambda y: te(y) - p.resistance(orbit_speed(p, y)))
    assert work_balance(p, n) == pytest.approx(expected, rel=1e-10)
    assert melnikov_residual(p, n) == pytest.approx(2 * math.pi * expected / p.force, rel=1e-10)


def test_residual_increases_with_rate_past_minimum(ref_problem):
    ns = np.linspace(1.0, 10.0, 50)
    g = [melnikov_residual(ref_problem, n) for n in ns]
    assert np.all(np.diff(g) > 0)


def test_force_must_be_positive(ref_problem):
    with pytest.raises(ModelError):
        MelnikovProblem(ref_problem.ship, ref_problem.wave.with_force(0.0),
                        ref_problem.resistance, ref_problem.thrust)


def test_quadratic_roots_and_residual(ref_problem):
    rep = solve_threshold_quadratic(ref_problem)
    assert rep.method == "closed-form"
    assert rep.n_cr > 0 > rep.n_cr_negative
    assert abs(melnikov_residual(ref_problem, rep.n_cr)) < 1e-12
    assert abs(melnikov_residual(ref_problem, rep.n_cr_negative)) < 1e-12
    roots = sorted(r.real for r in residual_polynomial_roots(ref_problem))
    assert roots == pytest.approx([rep.n_cr_negative, rep.n_cr], rel=1e-12)
    d = rep.to_dict()
    assert d["n_cr_rpm"] == pytest.approx(60 * rep.n_cr)
    assert d["n_cr_negative_physical"] is False
    assert "lower" in d["label"]


def test_rtcond_violation_reports_no_root(ref_problem):
    # negative resistance makes E[R] < tau_2 E[u^2]
    p = MelnikovProblem(ref_problem.ship, ref_problem.wave,
                        PolynomialCurve((0.0, -5000.0, -800.0)), ref_problem.thrust)
    rep = solve_threshold_quadratic(p)
    assert rep.rtcond_satisfied is False
    assert rep.n_cr is None and not rep.has_threshold
    assert "no unique physical threshold" in rep.message


def test_dispatch(ref_problem):
    assert solve_threshold(ref_problem).method == "closed-form"
    cubic = MelnikovProblem(ref_problem.ship, ref_problem.wave, ref_problem.resistance,
                            ThrustModel((0.32, -0.24, -0.10, -0.01)))
    rep = solve_threshold(cubic)
    assert rep.method == "bisection"
    assert abs(rep.residual) < 1e-10
    assert rep.bracket[0] <= rep.n_cr <= rep.bracket[1]


def test_general_solver_no_threshold(ref_problem):
    # thrust that decreases with rate never overcomes resistance
    p = MelnikovProblem(ref_problem.ship, ref_problem.wave, ref_problem.resistance,
                        ThrustModel((-0.1, -0.24, -0.10, -0.01)))
    with pytest.raises(NoThresholdError):
        solve_threshold_general(p, max_expansions=10)


def test_cij_and_quadratic_kt_forms(ref_problem):
    for n in (1.0, 3.0, 4.2652, 7.5):
        m = melnikov_residual(ref_problem, n)
        assert melnikov_residual_cij(ref_problem, n) == pytest.approx(m, rel=1e-12, abs=1e-12)
        assert melnikov_residual_quadratic_kt(ref_problem, n) == pytest.approx(m, rel=1e-12, abs=1e-12)


def test_force_bounds_and_certificate(ref_problem):
    u_bound, mean_bound = force_bounds(ref_problem.ship, 9.81)
    w = ref_problem.ship.virtual_mass * 9.81
    assert u_bound == pytest.approx(w / 4)
    assert mean_bound == pytest.approx(math.pi**2 / 16 * w)
    cert = uniqueness_certificate(ref_problem)
    assert cert.rtcond and cert.u_positive and cert.mean_speed_positive
    assert cert.min_orbit_speed > 0


@pytest.mark.parametrize("ratio,u_pos,mean_pos", [(0.2, True, True), (0.3, False, True), (0.7, False, False)])
def test_certificate_bounds_match_orbit(ref_problem, ratio, u_pos, mean_pos):
    f = ratio * ref_problem.ship.virtual_mass * 9.81
    p = MelnikovProblem(ref_problem.ship, ref_problem.wave.with_force(f),
                        ref_problem.resistance, ref_problem.thrust)
    cert = uniqueness_certificate(p)
    assert cert.u_positive is u_pos and (cert.min_orbit_speed > 0) is u_pos
    assert cert.mean_speed_positive is mean_pos and (cert.mean_speed > 0) is mean_pos


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 50.0), st.floats(0.0, 20.0))
def test_closed_form_moments(cw, s):
    eu = cw - 4.0 / math.pi * s
    eu2 = cw**2 - 8.0 / math.pi * cw * s + 2.0 * s**2
    assert orbit_speed_moment(cw, s, 1) == pytest.approx(eu, rel=1e-12, abs=1e-12 * cw)
    assert orbit_speed_moment(cw, s, 2) == pytest.approx(eu2, rel=1e-12, abs=1e-12 * cw**2)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_roots_straddle_zero_when_rtcond_holds(seed):
    p = random_problem(np.random.default_rng(seed))
    rep = solve_threshold_quadratic(p)
    assert rep.rtcond_satisfied
    assert rep.n_cr > 0 > rep.n_cr_negative


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_general_solver_matches_closed_form(seed):
    p = random_problem(np.random.default_rng(seed))
    a = solve_threshold_quadratic(p).n_cr
    b = solve_threshold_general(p).n_cr
    assert abs(a - b) / a < 1e-9
